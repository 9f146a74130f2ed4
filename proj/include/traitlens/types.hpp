#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "traitlens/errors.hpp"

namespace traitlens {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
// Activation storage precision. Dumps are little-endian float32 on disk, so
// records hold float32 end to end; analysis upcasts to double.
using MatrixF = Eigen::MatrixXf;
using VectorF = Eigen::VectorXf;

/// One trait label: a short id, the display name used in prompt rendering,
/// an optional lexicon (word list the test judge counts), and an optional
/// persona adjective list used by the rating prompt.
struct Label {
  std::string id;
  std::string name;
  std::vector<std::string> lexicon;
  std::string persona;
};

/// Ordered set of k >= 2 labels. Order is load-bearing: the target label and
/// all classifier rows are addressed by index into this set.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<Label> labels);

  Index size() const { return static_cast<Index>(labels_.size()); }
  const Label& at(Index i) const { return labels_.at(static_cast<size_t>(i)); }
  const std::vector<Label>& all() const { return labels_; }

  /// Resolves a label by id or display name; throws InputError if unknown.
  Index index_of(std::string_view id_or_name) const;
  bool contains(std::string_view id_or_name) const;

  /// True when every label carries a non-empty lexicon.
  bool has_lexicons() const;

 private:
  std::vector<Label> labels_;
};

/// A rendered context-instruction pair: which entity the question is about,
/// which label the instruction requests, and the final prompt text.
struct PromptSpec {
  std::string entity;
  Index label = 0;
  std::string rendered_text;
};

/// Per-layer final-token representations for one prompt. `layers` is L x d,
/// row l-1 holding the layer-l vector.
struct ActivationRecord {
  std::string id;
  Index label = 0;
  MatrixF layers;
};

enum class Split : uint8_t { train = 0, test = 1 };

/// Labeled per-layer representation matrices plus an optional train/test
/// assignment (empty until stratified_split has run).
struct ProbeDataset {
  LabelSet labels;
  std::vector<ActivationRecord> records;
  std::vector<Split> split;  // parallel to records when non-empty

  Index layer_count() const {
    return records.empty() ? 0 : records.front().layers.rows();
  }
  Index dim() const {
    return records.empty() ? 0 : records.front().layers.cols();
  }
  bool is_split() const { return split.size() == records.size() && !records.empty(); }

  Index count_in(Split s) const {
    Index n = 0;
    for (auto v : split) n += (v == s) ? 1 : 0;
    return n;
  }
};

/// Which neuron coordinates a steering edit is allowed to touch, per layer.
/// Built by interpret::build_patch from probe weight magnitudes.
struct PatchSpec {
  double phi = 1.0;
  std::vector<std::vector<Index>> selected;  // per layer, ascending indices
};

enum class HookMode : uint8_t {
  in_pass,   // edited layer-l state feeds layer l+1 within the same pass
  post_hoc,  // downstream layers see the unedited state; only the cache and
             // the readout consume the edit
};

/// Target, strength and extent of a steering run.
struct SteeringConfig {
  Index target = 0;
  double p_hat = 0.99;
  Index layer_lo = 1;
  Index layer_hi = 1;
  Index max_tokens = 64;
  bool skip_if_target = true;
  HookMode mode = HookMode::in_pass;
  std::optional<PatchSpec> patch;

  void validate(Index layer_count, Index label_count) const;
};

enum class SkipReason : uint8_t { none, already_target, outside_layer_range };

std::string_view to_string(SkipReason r);

/// One (token step, layer) steering decision.
struct EditRecord {
  Index step = 0;   // generated-token step t, 1-based
  Index layer = 0;  // 1-based
  bool applied = false;
  double pre_score = 0.0;
  double post_score = 0.0;
  double delta_norm = 0.0;
  SkipReason skip = SkipReason::none;
};

struct TraceTiming {
  double prompt_seconds = 0.0;
  double generate_seconds = 0.0;
};

/// Everything one generation produced: prompt, emitted tokens, per-step
/// per-layer edit records (steered runs only), timing, and judge verdicts
/// filled in by the evaluation module.
struct GenerationTrace {
  std::string prompt_text;
  std::vector<std::string> prompt_tokens;
  std::vector<int> token_ids;
  std::vector<std::string> tokens;
  std::vector<EditRecord> edits;
  TraceTiming timing;
  std::optional<Index> judged_label;
  std::optional<int> pae_pre;
  std::optional<int> pae_post;

  std::string response_text() const;
};

/// An ordered edit direction: prompts request `source`, steering aims at
/// `target`.
struct DirectionSpec {
  Index source = 0;
  Index target = 0;
};

struct EvalRow {
  std::string entity;
  Index judged_pre = -1;
  Index judged_post = -1;
  int pae_pre = 0;
  int pae_post = 0;
  bool excluded = false;
};

/// SR / PAE summary for one direction.
struct EvalReport {
  DirectionSpec direction;
  double sr = 0.0;            // steered responses judged as target
  double sr_unsteered = 0.0;  // unsteered responses judged as target
  double pae = 0.0;
  Index samples = 0;
  Index excluded = 0;
  std::vector<EvalRow> rows;
};

}  // namespace traitlens
