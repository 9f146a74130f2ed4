#include "traitlens/steering.hpp"

#include <cmath>

namespace traitlens {

double logit(double p_hat) {
  if (!(p_hat > 0.0 && p_hat < 1.0)) {
    throw DomainError("p_hat must lie in (0,1), got " + std::to_string(p_hat));
  }
  return std::log(p_hat / (1.0 - p_hat));
}

Vector perturbation(const LayerProbe& probe, const Eigen::Ref<const Vector>& r,
                    Index target, double p_hat) {
  if (probe.family() != ProbeFamily::linear) {
    throw UnsupportedFamilyError(
        "the closed-form perturbation requires a linear probe");
  }
  if (target < 0 || target >= probe.label_count()) {
    throw InputError("target label out of range");
  }
  const double level = logit(p_hat);
  const auto w = probe.weights().row(target).transpose();
  const double norm = w.norm();
  if (norm < 1e-12) {
    throw DegenerateProbeError("target weight row has (near-)zero norm");
  }
  const double gap = level - probe.bias()[target] - w.dot(r);
  return (gap / norm) * (w / norm);
}

SteerOutcome steer_layer(const LayerProbe& probe,
                         const Eigen::Ref<const Vector>& r, Index target,
                         double p_hat, bool skip_if_target,
                         const std::vector<Index>* mask) {
  SteerOutcome out;
  out.record.layer = probe.layer();
  const Vector scores = probe.scores(r);
  out.record.pre_score = scores[target];

  if (skip_if_target && argmax_lowest(scores) == target) {
    out.state = r;
    out.record.applied = false;
    out.record.skip = SkipReason::already_target;
    out.record.post_score = out.record.pre_score;
    return out;
  }

  Vector delta = perturbation(probe, r, target, p_hat);
  if (mask != nullptr) {
    // Coordinate-restricted patch: keep the selected entries unscaled, zero
    // the rest. The level-set identity holds only for the full set.
    Vector masked = Vector::Zero(delta.size());
    for (Index j : *mask) masked[j] = delta[j];
    delta = std::move(masked);
  }
  out.state = r + delta;
  out.record.applied = true;
  out.record.skip = SkipReason::none;
  out.record.delta_norm = delta.norm();
  out.record.post_score =
      probe.weights().row(target).dot(out.state) + probe.bias()[target];
  return out;
}

GenerationTrace steered_generate(const Runtime& runtime,
                                 const ProbeStack& stack,
                                 const std::string& prompt,
                                 const SteeringConfig& config) {
  const RuntimeInfo info = runtime.info();
  stack.validate();
  if (stack.layer_count() != info.layers) {
    throw ConfigError("probe stack covers " + std::to_string(stack.layer_count()) +
                      " layers but the runtime has " + std::to_string(info.layers));
  }
  if (stack.probes.front().family() != ProbeFamily::linear) {
    throw UnsupportedFamilyError("steering requires linear probes");
  }
  if (stack.probes.front().dim() != info.dim) {
    throw ConfigError("probe dimension does not match the runtime");
  }
  config.validate(info.layers, stack.probes.front().label_count());

  std::vector<EditRecord> edits;
  LayerHook hook = [&](Index layer, Index step, const Vector& state) -> Vector {
    if (layer < config.layer_lo || layer > config.layer_hi) {
      EditRecord rec;
      rec.step = step;
      rec.layer = layer;
      rec.skip = SkipReason::outside_layer_range;
      edits.push_back(rec);
      return state;
    }
    const std::vector<Index>* mask = nullptr;
    if (config.patch) {
      mask = &config.patch->selected[static_cast<size_t>(layer - 1)];
    }
    SteerOutcome out = steer_layer(stack.at_layer(layer), state, config.target,
                                   config.p_hat, config.skip_if_target, mask);
    out.record.step = step;
    edits.push_back(out.record);
    return std::move(out.state);
  };

  GenerateOptions options;
  options.max_tokens = config.max_tokens;
  options.hook = &hook;
  options.mode = config.mode;
  GenerationTrace trace = runtime.generate(prompt, options);
  trace.edits = std::move(edits);
  return trace;
}

}  // namespace traitlens
