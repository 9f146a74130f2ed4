#pragma once

#include <filesystem>

#include "traitlens/interpret.hpp"

namespace traitlens::workbench {

/// 2-D scatter of an embedding, one color per label. SVG output keeps the
/// plot pipeline dependency-free and byte-deterministic.
void write_scatter_svg(const std::filesystem::path& path,
                       const Embedded2D& embedding,
                       const std::vector<std::string>& label_names,
                       const std::string& title);

/// Per-layer curve (layer index on x).
void write_curve_svg(const std::filesystem::path& path,
                     const std::vector<double>& values,
                     const std::string& title, const std::string& y_label);

/// Machine-readable companion of the scatter: x,y,label per row.
void write_coords_csv(const std::filesystem::path& path,
                      const Embedded2D& embedding,
                      const std::vector<std::string>& label_names);

}  // namespace traitlens::workbench
