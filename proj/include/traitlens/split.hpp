#pragma once

#include <cstdint>

#include "traitlens/types.hpp"

namespace traitlens {

/// Stratified train/test partition. Per label, round(ratio * n_label)
/// records go to train (so the realized fraction is within one record of
/// `ratio`), chosen by a seeded shuffle. Deterministic given the seed.
///
/// Preconditions: ratio in (0,1); every label present with >= 2 records.
ProbeDataset stratified_split(const LabelSet& labels,
                              std::vector<ActivationRecord> records,
                              double ratio, uint64_t seed);

}  // namespace traitlens
