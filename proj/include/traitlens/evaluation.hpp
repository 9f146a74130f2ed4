#pragma once

#include <functional>
#include <memory>

#include "traitlens/probe.hpp"
#include "traitlens/runtime.hpp"
#include "traitlens/types.hpp"

namespace traitlens {

/// Judge contract: `classify` maps a response to a label index (for SR),
/// `rate` scores trait alignment on 1..5 (for PAE). Implementations must be
/// safe to call from parallel workers.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual std::string kind() const = 0;
  virtual Index classify(const std::string& text) = 0;
  virtual int rate(const std::string& text, Index target) = 0;
};

/// Deterministic word-count judge over the label lexicons: classify picks
/// the label with the most lexicon hits (ties toward the lowest index, zero
/// hits included), rate is 1 + min(4, hits of the target lexicon).
class LexiconJudge final : public Judge {
 public:
  explicit LexiconJudge(LabelSet labels);

  std::string kind() const override { return "lexicon"; }
  Index classify(const std::string& text) override;
  int rate(const std::string& text, Index target) override;

  /// Laplace-smoothed share of target-lexicon hits; a convenient
  /// deterministic stand-in for a classifier probability.
  double target_probability(const std::string& text, Index target) const;

  std::vector<Index> hit_counts(const std::string& text) const;

 private:
  LabelSet labels_;
};

std::unique_ptr<LexiconJudge> lexicon_judge(const LabelSet& labels);

struct SuccessRateResult {
  double value = 0.0;
  Index counted = 0;
  Index excluded = 0;
};

/// Fraction of traces whose response the judge classifies as `target`.
/// Judge failures exclude the sample and are counted, never imputed.
SuccessRateResult success_rate(const std::vector<GenerationTrace>& traces,
                               Judge& judge, Index target);

struct PaeResult {
  double value = 0.0;
  Index counted = 0;
  Index excluded = 0;
};

/// Mean post-minus-pre trait-alignment rating over pairs. `pre` and `post`
/// must be paired one-to-one by prompt (PairingError otherwise).
PaeResult pae(const std::vector<GenerationTrace>& pre,
              const std::vector<GenerationTrace>& post, Judge& judge,
              Index target);

/// Byte-exact rating prompt for a label. The three Big Five trait names used
/// in the reference experiments carry built-in persona adjective lists; any
/// other label must provide `persona`.
std::string render_pae_prompt(const Label& label, const std::string& response);

/// Parses a rating reply: exactly one digit, in 1..5. Throws JudgeError.
int parse_rating(const std::string& reply);

struct DirectionMatrixResult {
  std::vector<EvalReport> directions;  // k*(k-1) ordered pairs
  double average_sr = 0.0;
  double average_sr_unsteered = 0.0;
  double average_pae = 0.0;
  Index total_excluded = 0;

  // Wall-clock accounting for the timing report.
  double unsteered_seconds = 0.0;
  double steered_seconds = 0.0;
  Index unsteered_tokens = 0;
  Index steered_tokens = 0;
  Index responses = 0;
};

/// Runs every ordered direction (A -> B): prompts requesting A are generated
/// unedited and steered toward B, then judged. Directions run in parallel;
/// reports are assembled in direction order.
DirectionMatrixResult run_direction_matrix(const Runtime& runtime,
                                           const ProbeStack& stack,
                                           const LabelSet& labels,
                                           const std::vector<PromptSpec>& prompts,
                                           const SteeringConfig& base_config,
                                           Judge& judge);

}  // namespace traitlens
