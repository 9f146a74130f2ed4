#pragma once

#include <filesystem>

#include "traitlens/types.hpp"

namespace traitlens::workbench {

/// App-style trace log: one JSON document per line, one line per generation.
void save_traces(const std::vector<GenerationTrace>& traces,
                 const std::filesystem::path& path);

std::vector<GenerationTrace> load_traces(const std::filesystem::path& path);

}  // namespace traitlens::workbench
