#include "traitlens/probe.hpp"

namespace traitlens {

std::string_view to_string(ProbeFamily f) {
  return f == ProbeFamily::linear ? "linear" : "mlp2";
}

ProbeFamily probe_family_from_string(std::string_view s) {
  if (s == "linear") return ProbeFamily::linear;
  if (s == "mlp2") return ProbeFamily::mlp2;
  throw ConfigError("unknown probe family: " + std::string(s));
}

LayerProbe LayerProbe::linear(Index layer, Matrix w, Vector bias,
                              ProbeMeta meta) {
  if (w.rows() != bias.size()) {
    throw InputError("probe weight rows must match bias length");
  }
  LayerProbe p;
  p.layer_ = layer;
  p.family_ = ProbeFamily::linear;
  p.weights_ = std::move(w);
  p.b_ = std::move(bias);
  p.meta_ = meta;
  return p;
}

LayerProbe LayerProbe::mlp2(Index layer, Matrix w1, Vector b1, Matrix w2,
                            Vector b2, ProbeMeta meta) {
  if (w1.rows() != b1.size() || w2.rows() != b2.size() ||
      w2.cols() != w1.rows()) {
    throw InputError("mlp2 probe shape mismatch");
  }
  LayerProbe p;
  p.layer_ = layer;
  p.family_ = ProbeFamily::mlp2;
  p.w1_ = std::move(w1);
  p.b1_ = std::move(b1);
  p.w2_ = std::move(w2);
  p.b_ = std::move(b2);
  p.meta_ = meta;
  return p;
}

Vector LayerProbe::scores(const Eigen::Ref<const Vector>& r) const {
  if (r.size() != dim()) {
    throw InputError("representation dimension mismatch: probe expects " +
                     std::to_string(dim()) + ", got " + std::to_string(r.size()));
  }
  if (family_ == ProbeFamily::linear) {
    return weights_ * r + b_;
  }
  const Vector h = ((w1_ * r + b1_).array().tanh()).matrix();
  return w2_ * h + b_;
}

Vector LayerProbe::predictive(const Eigen::Ref<const Vector>& r) const {
  return softmax(scores(r));
}

Index LayerProbe::predict(const Eigen::Ref<const Vector>& r) const {
  return argmax_lowest(scores(r));
}

Index argmax_lowest(const Eigen::Ref<const Vector>& v) {
  Index best = 0;
  for (Index i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;  // strict: ties keep the lower index
  }
  return best;
}

Vector softmax(const Eigen::Ref<const Vector>& scores) {
  const double m = scores.maxCoeff();
  Vector e = (scores.array() - m).exp();
  return e / e.sum();
}

const LayerProbe& ProbeStack::at_layer(Index layer) const {
  if (layer < 1 || layer > layer_count()) {
    throw InputError("layer " + std::to_string(layer) + " outside stack 1.." +
                     std::to_string(layer_count()));
  }
  return probes[static_cast<size_t>(layer - 1)];
}

void ProbeStack::validate() const {
  if (probes.empty()) throw FormatError("probe stack is empty");
  const Index k = probes.front().label_count();
  const Index d = probes.front().dim();
  const ProbeFamily fam = probes.front().family();
  for (size_t i = 0; i < probes.size(); ++i) {
    const auto& p = probes[i];
    if (p.layer() != static_cast<Index>(i + 1)) {
      throw FormatError("probe stack has a gap: expected layer " +
                        std::to_string(i + 1) + ", found " +
                        std::to_string(p.layer()));
    }
    if (p.label_count() != k || p.dim() != d || p.family() != fam) {
      throw FormatError("probe stack is not homogeneous in (k, d, family)");
    }
  }
  if (!label_names.empty() && static_cast<Index>(label_names.size()) != k) {
    throw FormatError("probe stack label names do not match k");
  }
}

}  // namespace traitlens
