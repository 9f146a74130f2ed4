#include "traitlens/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "traitlens/detail/hash.hpp"
#include "traitlens/detail/rng.hpp"

namespace traitlens {

const char* const kMaskToken = "[MASK]";

namespace {

std::vector<std::string> split_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string w;
  while (is >> w) out.push_back(std::move(w));
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

// Neurons sorted by aggregated |weight| descending, ties toward the lower
// index.
std::vector<Index> sorted_neurons(const Vector& mass) {
  std::vector<Index> order(static_cast<size_t>(mass.size()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return mass[a] > mass[b]; });
  return order;
}

// Mask selection keyed on token content (not position): the positions whose
// keys are smallest get masked. Permuting distinct tokens permutes the
// selection with them.
std::vector<size_t> pick_masked(const std::vector<std::string>& tokens,
                                size_t num_mask, uint64_t stream_seed) {
  std::vector<uint64_t> occurrence(tokens.size(), 0);
  {
    std::unordered_map<std::string, uint64_t> seen;
    for (size_t i = 0; i < tokens.size(); ++i) {
      occurrence[i] = seen[tokens[i]]++;
    }
  }
  std::vector<std::pair<uint64_t, size_t>> keys(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    const uint64_t content = detail::fnv1a64(tokens[i]);
    keys[i] = {detail::mix_seed(stream_seed, content, occurrence[i]), i};
  }
  std::sort(keys.begin(), keys.end());
  std::vector<size_t> masked;
  masked.reserve(num_mask);
  for (size_t i = 0; i < num_mask && i < keys.size(); ++i) {
    masked.push_back(keys[i].second);
  }
  return masked;
}

struct LassoFit {
  double intercept = 0.0;
  Vector beta;
};

// Cyclic coordinate descent on
//   (1/2m)||y - b0 - X beta||^2 + penalty * sum |beta_j|
LassoFit fit_lasso(const Matrix& x, const Vector& y, double penalty) {
  const Index m = x.rows();
  const Index n = x.cols();
  LassoFit fit;
  fit.beta = Vector::Zero(n);
  fit.intercept = y.mean();
  Vector residual = y.array() - fit.intercept;

  Vector col_sq(n);
  for (Index j = 0; j < n; ++j) {
    col_sq[j] = x.col(j).squaredNorm() / static_cast<double>(m);
  }
  // A column with no variance is confounded with the intercept; pin it to 0.
  std::vector<bool> active(static_cast<size_t>(n), true);
  for (Index j = 0; j < n; ++j) {
    const double mean = x.col(j).mean();
    const double var = col_sq[j] - mean * mean;
    if (var < 1e-12) active[static_cast<size_t>(j)] = false;
  }

  for (int sweep = 0; sweep < 1000; ++sweep) {
    double max_delta = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (!active[static_cast<size_t>(j)] || col_sq[j] <= 0.0) continue;
      const double old = fit.beta[j];
      const double rho =
          x.col(j).dot(residual) / static_cast<double>(m) + col_sq[j] * old;
      double next = 0.0;
      if (rho > penalty) {
        next = (rho - penalty) / col_sq[j];
      } else if (rho < -penalty) {
        next = (rho + penalty) / col_sq[j];
      }
      if (next != old) {
        residual -= (next - old) * x.col(j);
        fit.beta[j] = next;
        max_delta = std::max(max_delta, std::abs(next - old));
      }
    }
    const double shift = residual.mean();
    if (shift != 0.0) {
      fit.intercept += shift;
      residual.array() -= shift;
      max_delta = std::max(max_delta, std::abs(shift));
    }
    if (max_delta < 1e-10) break;
  }
  return fit;
}

}  // namespace

Vector neuron_weight_mass(const LayerProbe& probe) {
  if (probe.family() != ProbeFamily::linear) {
    throw UnsupportedFamilyError("weight mass is defined for linear probes");
  }
  return probe.weights().cwiseAbs().colwise().sum().transpose();
}

std::vector<double> weight_mass_fraction(const LayerProbe& probe,
                                         const std::vector<double>& fractions) {
  const Vector mass = neuron_weight_mass(probe);
  const double total = mass.sum();
  if (total <= 0.0) {
    throw DegenerateProbeError("probe weights are all zero");
  }
  const auto order = sorted_neurons(mass);
  const Index d = mass.size();

  std::vector<double> out;
  out.reserve(fractions.size());
  for (double phi : fractions) {
    if (!(phi > 0.0 && phi <= 1.0)) {
      throw DomainError("weight-mass fractions must lie in (0,1]");
    }
    const auto m = static_cast<Index>(
        std::llround(phi * static_cast<double>(d)));
    double top = 0.0;
    for (Index i = 0; i < m && i < d; ++i) top += mass[order[static_cast<size_t>(i)]];
    out.push_back(top / total);
  }
  return out;
}

PatchSpec build_patch(const ProbeStack& stack, double phi) {
  if (!(phi >= 0.0 && phi <= 1.0)) {
    throw DomainError("patch fraction must lie in [0,1]");
  }
  stack.validate();
  PatchSpec patch;
  patch.phi = phi;
  for (const auto& probe : stack.probes) {
    const Vector mass = neuron_weight_mass(probe);
    const auto order = sorted_neurons(mass);
    const auto m = static_cast<size_t>(std::llround(
        phi * static_cast<double>(mass.size())));
    std::vector<Index> selected(order.begin(),
                                order.begin() + std::min(m, order.size()));
    std::sort(selected.begin(), selected.end());
    patch.selected.push_back(std::move(selected));
  }
  return patch;
}

ImportanceResult masking_importance(const std::string& text, const RateFn& rate,
                                    double mask_rate, int rounds,
                                    uint64_t seed) {
  const auto tokens = split_tokens(text);
  const size_t n = tokens.size();
  if (n < 2) throw InputError("masking importance needs at least 2 tokens");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) {
    throw DomainError("mask rate must lie in (0,1)");
  }
  if (rounds < 1) throw InputError("rounds must be >= 1");
  const size_t num_mask = std::clamp<size_t>(
      static_cast<size_t>(std::llround(mask_rate * static_cast<double>(n))), 1,
      n - 1);

  const double base = rate(text);
  std::vector<double> sums(n, 0.0);
  std::vector<int> counts(n, 0);
  int skipped = 0;
  for (int r = 0; r < rounds; ++r) {
    const auto masked = pick_masked(
        tokens, num_mask, detail::mix_seed(seed, 0x4D41534bULL, static_cast<uint64_t>(r)));
    auto variant = tokens;
    for (size_t i : masked) variant[i] = kMaskToken;
    double rated = 0.0;
    try {
      rated = rate(join_tokens(variant));
    } catch (const Error&) {
      ++skipped;
      continue;
    }
    const double drop = (base - rated) / static_cast<double>(masked.size());
    for (size_t i : masked) {
      sums[i] += drop;
      counts[i] += 1;
    }
  }

  ImportanceResult result;
  result.tokens = tokens;
  result.scores.resize(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    result.scores[i] = counts[i] > 0 ? sums[i] / counts[i] : 0.0;
  }
  result.method = "masking";
  result.mask_rate = mask_rate;
  result.rounds = rounds;
  result.seed = seed;
  result.skipped = skipped;
  return result;
}

ImportanceResult surrogate_importance(const std::string& text,
                                      const RateFn& probability, int variants,
                                      double mask_rate, uint64_t seed) {
  const auto tokens = split_tokens(text);
  const size_t n = tokens.size();
  if (n < 2) throw InputError("surrogate importance needs at least 2 tokens");
  if (!(mask_rate > 0.0 && mask_rate < 1.0)) {
    throw DomainError("mask rate must lie in (0,1)");
  }
  if (variants < 10) throw InputError("surrogate importance needs >= 10 variants");
  const size_t num_mask = std::clamp<size_t>(
      static_cast<size_t>(std::llround(mask_rate * static_cast<double>(n))), 1,
      n - 1);

  Matrix x(variants, static_cast<Index>(n));  // keep indicators
  Vector y(variants);
  int skipped = 0;
  for (int v = 0; v < variants; ++v) {
    bool done = false;
    for (int attempt = 0; attempt < 5 && !done; ++attempt) {
      const auto masked = pick_masked(
          tokens, num_mask,
          detail::mix_seed(seed, 0x53555252ULL, static_cast<uint64_t>(v),
                           static_cast<uint64_t>(attempt)));
      auto variant = tokens;
      x.row(v).setOnes();
      for (size_t i : masked) {
        variant[i] = kMaskToken;
        x(v, static_cast<Index>(i)) = 0.0;
      }
      try {
        y[v] = probability(join_tokens(variant));
        done = true;
      } catch (const Error&) {
        ++skipped;
      }
    }
    if (!done) {
      throw JudgeError("judge failed repeatedly while building variants");
    }
  }

  // Fixed penalty grid; deterministic 80/20 validation split picks the
  // strength, then the full set refits.
  const std::vector<double> grid = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2};
  const Index n_train = std::max<Index>(1, (variants * 4) / 5);
  const Index n_val = variants - n_train;
  double best_penalty = grid.front();
  double best_mse = std::numeric_limits<double>::infinity();
  if (n_val > 0) {
    const Matrix xt = x.topRows(n_train);
    const Vector yt = y.head(n_train);
    const Matrix xv = x.bottomRows(n_val);
    const Vector yv = y.tail(n_val);
    for (double penalty : grid) {
      const LassoFit fit = fit_lasso(xt, yt, penalty);
      const Vector pred = (xv * fit.beta).array() + fit.intercept;
      const double mse = (pred - yv).squaredNorm() / static_cast<double>(n_val);
      if (mse < best_mse - 1e-15) {
        best_mse = mse;
        best_penalty = penalty;
      }
    }
  }
  const LassoFit fit = fit_lasso(x, y, best_penalty);

  ImportanceResult result;
  result.tokens = tokens;
  result.scores.assign(fit.beta.data(), fit.beta.data() + fit.beta.size());
  result.method = "surrogate";
  result.mask_rate = mask_rate;
  result.rounds = variants;
  result.seed = seed;
  result.skipped = skipped;
  return result;
}

}  // namespace traitlens
