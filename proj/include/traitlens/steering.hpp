#pragma once

#include "traitlens/probe.hpp"
#include "traitlens/runtime.hpp"
#include "traitlens/types.hpp"

namespace traitlens {

/// Inverse sigmoid: log(p / (1-p)). Throws DomainError outside (0,1).
double logit(double p_hat);

/// Minimum-norm shift that places the representation exactly on the target
/// row's logit level set:
///   delta = ((logit(p_hat) - b[y] - w[y]·r) / ||w[y]||) * (w[y] / ||w[y]||)
/// so w[y]·(r + delta) + b[y] = logit(p_hat) and delta is parallel to w[y].
/// Linear probes only; a weight row below 1e-12 norm is rejected rather than
/// producing an unbounded shift.
Vector perturbation(const LayerProbe& probe, const Eigen::Ref<const Vector>& r,
                    Index target, double p_hat);

struct SteerOutcome {
  Vector state;
  EditRecord record;
};

/// One layer's editing decision. With skip_if_target set and the probe's
/// k-way argmax already equal to the target (ties toward the lowest index),
/// the state passes through bit-exactly. Otherwise the perturbation is
/// applied; when `mask` is given (activation patching) the shift is zeroed
/// outside the selected coordinates and applied unscaled inside them.
SteerOutcome steer_layer(const LayerProbe& probe,
                         const Eigen::Ref<const Vector>& r, Index target,
                         double p_hat, bool skip_if_target,
                         const std::vector<Index>* mask = nullptr);

/// Runs hook-mediated generation that applies steer_layer at every layer in
/// the configured range for every generated token. Prompt tokens are never
/// edited. The trace carries one EditRecord per (step, layer); layers outside
/// the range are recorded with skip reason outside-layer-range.
GenerationTrace steered_generate(const Runtime& runtime,
                                 const ProbeStack& stack,
                                 const std::string& prompt,
                                 const SteeringConfig& config);

}  // namespace traitlens
