#pragma once

#include <cstdint>
#include <vector>

#include "traitlens/probe.hpp"
#include "traitlens/types.hpp"

namespace traitlens {

enum class LogBase : uint8_t { natural, two };

/// Probe-fitting and entropy conventions. The null input is a zero-filled
/// vector of the layer dimension. Natural log is the default base: the
/// reported plateau magnitudes for balanced 3-label data sit at ln 3, which
/// base-2 entropies cannot produce.
struct VInfoConfig {
  LogBase base = LogBase::natural;
  double lambda = 1e-4;
  double tolerance = 1e-8;
  int max_iter = 200;
  ProbeFamily family = ProbeFamily::linear;
  Index mlp_hidden = 512;
  int mlp_iterations = 400;
  double mlp_learning_rate = 5e-3;
};

/// Content hash of a dataset (labels, record ids/labels, activation bytes).
/// Stable across runs that produce identical data.
uint64_t dataset_hash(const ProbeDataset& dataset);

/// Fits the configured probe family on the train split of one layer.
/// Deterministic given the seed (the linear family is convex and ignores it
/// beyond metadata).
LayerProbe train_layer_probe(const ProbeDataset& dataset, Index layer,
                             const VInfoConfig& config, uint64_t seed);

/// Mean negative log predictive probability of the true label over the test
/// split, in the configured base.
double conditional_v_entropy(const LayerProbe& probe,
                             const ProbeDataset& dataset,
                             LogBase base = LogBase::natural);

/// Fits the probe family on zero-filled inputs against the train labels
/// (learning the class priors) and evaluates on the test labels.
double null_v_entropy(const ProbeDataset& dataset, const VInfoConfig& config);

/// Fraction of test-split records whose predicted label matches.
double heldout_accuracy(const LayerProbe& probe, const ProbeDataset& dataset);

struct VInfoResult {
  double null_entropy = 0.0;
  std::vector<double> conditional;   // per layer
  std::vector<double> v_information; // null - conditional, reported raw
  std::vector<double> accuracy;      // heldout accuracy per layer
  bool has_negative = false;
  ProbeStack stack;
};

/// Trains probes for every layer (in parallel; assembly is order-independent
/// so results match serial execution) and assembles per-layer usable
/// information: I(layer l) = H_null - H(Y | R_l). Negative values are kept
/// raw and flagged, not clamped.
VInfoResult v_information(const ProbeDataset& dataset, const VInfoConfig& config,
                          uint64_t seed = 0);

/// Arithmetic mean over consecutive groups of g layers; a trailing partial
/// group averages over its actual size.
std::vector<double> layer_group_average(const std::vector<double>& values,
                                        Index group_size = 4);

}  // namespace traitlens
