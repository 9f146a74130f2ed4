#pragma once

#include <filesystem>
#include <optional>

#include "traitlens/probe.hpp"

namespace traitlens::workbench {

/// Serializes the stack to one JSON file. Weights round-trip at full
/// precision (shortest-round-trip decimal doubles).
void save_probes(const ProbeStack& stack, const std::filesystem::path& path);

struct LoadedProbes {
  ProbeStack stack;
  std::vector<std::string> warnings;
};

/// Loads and validates a probe store. A label-set mismatch or a missing
/// layer is a FormatError (listing the gaps); a provenance hash differing
/// from `expected_dataset_hash` only produces a warning.
LoadedProbes load_probes(const std::filesystem::path& path,
                         const LabelSet* expected_labels = nullptr,
                         const std::string* expected_dataset_hash = nullptr);

}  // namespace traitlens::workbench
