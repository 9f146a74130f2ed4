#pragma once

#include <memory>
#include <unordered_map>

#include "traitlens/runtime.hpp"

namespace traitlens {

/// Blueprint of the deterministic layered test model. Class-conditional
/// final-token states at layer l are Gaussian around centroids whose pairwise
/// distance is proportional to separation[l-1]; a linear readout ties each
/// label's trait coordinate to that label's token block, so steering effects
/// are observable in emitted tokens.
struct SyntheticRuntimeSpec {
  Index layers = 8;
  Index dim = 16;
  LabelSet labels;
  std::vector<double> separation;  // size = layers, s_l >= 0
  double noise_scale = 0.5;
  double sep_base = 1.0;  // centroid coordinate per unit of s_l

  Index block_size = 12;
  Index neutral_size = 24;
  /// Optional custom word lists, one per label. Words must be pairwise
  /// disjoint across labels (SpecError otherwise). When empty, blocks are
  /// generated from the label names.
  std::vector<std::vector<std::string>> block_words;

  double readout_gain = 4.0;
  double readout_jitter = 0.15;
  double neutral_level = 0.0;

  double attn_mix = 0.35;        // cached-state mean -> complement coords
  double mix_scale = 0.55;       // generic layer transform scale
  double complement_noise = 0.025;

  uint64_t seed = 1;

  /// Nondecreasing schedule ramping from 0 to `top` over L layers.
  static std::vector<double> ramp_schedule(Index layers, double top);

  void validate() const;
};

class SyntheticRuntime final : public Runtime {
 public:
  explicit SyntheticRuntime(SyntheticRuntimeSpec spec);

  RuntimeInfo info() const override;
  std::vector<std::string> tokenize(const std::string& text) const override;
  MatrixF capture(const std::vector<std::string>& tokens) const override;
  GenerationTrace generate(const std::string& prompt,
                           const GenerateOptions& options) const override;

  /// Per-step post-hook states and the final attention cache, for tests that
  /// assert hook propagation and cache consistency.
  struct GenerationDebug {
    std::vector<Matrix> step_states;  // one L x d matrix per generated step
    std::vector<Matrix> cache;        // per layer: d x positions
  };
  GenerationTrace generate_debug(const std::string& prompt,
                                 const GenerateOptions& options,
                                 GenerationDebug* debug) const;

  const SyntheticRuntimeSpec& spec() const { return spec_; }

  /// Orthonormal trait directions, d x k.
  const Matrix& trait_basis() const { return trait_basis_; }
  /// Class centroid of layer l (1-based) for label y.
  Vector centroid(Index layer, Index label) const;

  const std::vector<std::string>& block_word_list(Index label) const;
  /// Label owning a token id, or -1 for neutral / end-of-question tokens.
  Index block_of_token(int token_id) const;
  std::string word_of_token(int token_id) const;

  /// The spec's label set with each label's lexicon replaced by its token
  /// block, which is what a judge of this runtime's output must count.
  LabelSet judge_label_set() const;

 private:
  struct Pass;
  void process_token(Pass& pass, const std::string& word, Index step,
                     const LayerHook* hook, HookMode mode,
                     Matrix* states_out) const;
  Vector embedding(const std::string& word) const;
  int readout_argmax(const Vector& final_state, uint64_t prefix) const;
  std::string normalize_word(const std::string& raw) const;

  SyntheticRuntimeSpec spec_;
  Index k_ = 0;
  Matrix trait_basis_;       // d x k
  Matrix complement_basis_;  // d x (d-k)
  std::vector<double> alpha_;
  std::vector<Matrix> mix_;        // per layer: (d-k) x d
  std::vector<Matrix> attn_;       // per layer: (d-k) x d
  std::vector<Vector> layer_bias_; // per layer: d-k

  std::vector<std::vector<std::string>> blocks_;
  std::vector<std::string> vocab_;  // id -> word (blocks, neutral, eoq)
  std::unordered_map<std::string, int> word_to_id_;
  std::vector<Index> token_block_;  // id -> label or -1
  int eoq_id_ = 0;
};

/// Validates the spec and constructs the runtime.
std::shared_ptr<SyntheticRuntime> build_synthetic(SyntheticRuntimeSpec spec);

}  // namespace traitlens
