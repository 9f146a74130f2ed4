#pragma once

#include <filesystem>

#include "traitlens/types.hpp"

namespace traitlens::workbench {

/// Writes the dataset as an activation-dump directory: `manifest.json`
/// (labels, record metadata, per-file hashes, a 4-value cross-check vector)
/// plus one raw tensor file per layer of little-endian float32 values,
/// row-major, records in manifest order. Writes are atomic (temp file +
/// rename).
void save_dump(const ProbeDataset& dataset, const std::filesystem::path& dir);

/// Loads and verifies a dump: sizes against the manifest (FormatError),
/// per-file content hashes (CorruptionError naming the layer), and the
/// cross-check vector. The round-trip is bit-exact.
ProbeDataset load_dump(const std::filesystem::path& dir);

}  // namespace traitlens::workbench
