#pragma once

#include <string>
#include <vector>

#include "traitlens/types.hpp"

namespace traitlens {

enum class ProbeFamily : uint8_t { linear, mlp2 };

std::string_view to_string(ProbeFamily f);
ProbeFamily probe_family_from_string(std::string_view s);

struct ProbeMeta {
  double lambda = 0.0;
  double tolerance = 0.0;
  double residual = 0.0;  // gradient inf-norm at the accepted iterate
  int iterations = 0;
  uint64_t seed = 0;
};

/// A per-layer classifier over layer-l representations. Linear probes hold
/// the k x d weight matrix W (row y = w[y]) and bias vector b; the mlp2
/// family adds a hidden tanh stage of width 512.
class LayerProbe {
 public:
  LayerProbe() = default;

  static LayerProbe linear(Index layer, Matrix w, Vector bias, ProbeMeta meta);
  static LayerProbe mlp2(Index layer, Matrix w1, Vector b1, Matrix w2,
                         Vector b2, ProbeMeta meta);

  Index layer() const { return layer_; }
  ProbeFamily family() const { return family_; }
  Index label_count() const { return b_.size(); }
  Index dim() const {
    return family_ == ProbeFamily::linear ? weights_.cols() : w1_.cols();
  }
  const ProbeMeta& meta() const { return meta_; }

  /// Linear probes only: W (k x d) and b (k).
  const Matrix& weights() const { return weights_; }
  const Vector& bias() const { return b_; }
  /// mlp2 extras.
  const Matrix& hidden_weights() const { return w1_; }
  const Vector& hidden_bias() const { return b1_; }

  /// Per-class scores: affine scores w[y]·r + b[y] for linear, output-layer
  /// logits for mlp2.
  Vector scores(const Eigen::Ref<const Vector>& r) const;
  /// softmax(scores).
  Vector predictive(const Eigen::Ref<const Vector>& r) const;
  /// argmax over scores; ties break toward the lowest label index.
  Index predict(const Eigen::Ref<const Vector>& r) const;

 private:
  Index layer_ = 0;
  ProbeFamily family_ = ProbeFamily::linear;
  Matrix weights_;  // linear: k x d; mlp2: unused
  Vector b_;        // k (output bias for both families)
  Matrix w1_;       // mlp2: h x d
  Vector b1_;       // mlp2: h
  Matrix w2_;       // mlp2: k x h
  ProbeMeta meta_;
};

/// Index of the largest coefficient; ties break toward the lowest index.
Index argmax_lowest(const Eigen::Ref<const Vector>& v);

/// Numerically stable softmax.
Vector softmax(const Eigen::Ref<const Vector>& scores);

/// Trained probes for layers 1..L, plus provenance of the dataset they were
/// fitted on.
struct ProbeStack {
  std::vector<LayerProbe> probes;  // ascending, contiguous layers 1..L
  std::vector<std::string> label_names;
  std::string dataset_hash;

  Index layer_count() const { return static_cast<Index>(probes.size()); }
  const LayerProbe& at_layer(Index layer) const;  // 1-based
  void validate() const;
};

}  // namespace traitlens
