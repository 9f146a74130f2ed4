#pragma once

#include <functional>
#include <string>
#include <vector>

#include "traitlens/probe.hpp"
#include "traitlens/types.hpp"

namespace traitlens {

/// Aggregated neuron importance of a linear probe: sum over classifier rows
/// of |W[y][j]| for each input coordinate j.
Vector neuron_weight_mass(const LayerProbe& probe);

/// For each fraction phi: share of total absolute weight mass captured by
/// the top round(phi * d) neurons (sorted descending, ties toward the lower
/// index). Fractions must lie in (0, 1]; an all-zero probe is rejected.
std::vector<double> weight_mass_fraction(const LayerProbe& probe,
                                         const std::vector<double>& fractions);

/// Selects the top round(phi * d) neurons per layer by aggregated |W|. The
/// resulting patch restricts every steering perturbation to the selected
/// coordinates (unscaled inside, zero outside). phi in [0, 1].
PatchSpec build_patch(const ProbeStack& stack, double phi);

struct ImportanceResult {
  std::vector<std::string> tokens;
  std::vector<double> scores;
  std::string method;  // "masking" | "surrogate"
  double mask_rate = 0.0;
  int rounds = 0;  // rounds (masking) or variants (surrogate)
  uint64_t seed = 0;
  int skipped = 0;  // judge failures (masking: rounds skipped)
};

/// Rating function over response text; may throw (treated as a judge
/// failure).
using RateFn = std::function<double(const std::string&)>;

/// Randomly masks round(mask_rate * n) tokens per round, re-rates, and
/// attributes the rating drop equally among the masked tokens. Scores are
/// the mean attributed drop per token over the rounds that masked it.
/// Mask choices are keyed on token content, so permuting distinct tokens
/// permutes the scores identically.
ImportanceResult masking_importance(const std::string& text, const RateFn& rate,
                                    double mask_rate = 0.15, int rounds = 100,
                                    uint64_t seed = 0);

/// Fits an L1-penalized linear surrogate of the judge's target-class
/// probability on binary keep-indicators over masked variants. The penalty
/// is picked from a fixed grid by validation error on a deterministic split;
/// scores are the fitted coefficients.
ImportanceResult surrogate_importance(const std::string& text,
                                      const RateFn& probability,
                                      int variants = 1000,
                                      double mask_rate = 0.15,
                                      uint64_t seed = 0);

/// Placeholder that replaces masked tokens.
extern const char* const kMaskToken;

struct Embedded2D {
  Matrix coords;  // n x 2
  std::vector<Index> labels;
};

/// Deterministic neighborhood-preserving 2-D embedding (exact t-SNE with
/// PCA initialization and a seeded symmetry-breaking jitter). Needs >= 3
/// points; used for plot emission, not asserted for geometry.
Embedded2D project_2d(const Matrix& points, const std::vector<Index>& labels,
                      uint64_t seed);

}  // namespace traitlens
