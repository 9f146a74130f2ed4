#include "traitlens/workbench/plots.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace traitlens::workbench {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 480;
constexpr int kMargin = 48;

const char* const kPalette[] = {"#d1495b", "#00798c", "#edae49",
                                "#6a4c93", "#2e933c", "#8d5524"};
constexpr size_t kPaletteSize = sizeof(kPalette) / sizeof(kPalette[0]);

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open for writing: " + path.string());
  os << text;
}

struct Range {
  double lo = 0.0, hi = 1.0;
  double map(double v, double pix_lo, double pix_hi) const {
    const double span = hi - lo;
    const double t = span > 0.0 ? (v - lo) / span : 0.5;
    return pix_lo + t * (pix_hi - pix_lo);
  }
};

Range padded(double lo, double hi) {
  if (!(hi > lo)) return Range{lo - 1.0, hi + 1.0};
  const double pad = 0.05 * (hi - lo);
  return Range{lo - pad, hi + pad};
}

}  // namespace

void write_scatter_svg(const std::filesystem::path& path,
                       const Embedded2D& embedding,
                       const std::vector<std::string>& label_names,
                       const std::string& title) {
  const auto& coords = embedding.coords;
  Range xr = padded(coords.col(0).minCoeff(), coords.col(0).maxCoeff());
  Range yr = padded(coords.col(1).minCoeff(), coords.col(1).maxCoeff());

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kWidth) + "\" height=\"" + std::to_string(kHeight) +
         "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
         std::to_string(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + title + "</text>\n";

  for (Index i = 0; i < coords.rows(); ++i) {
    const double px = xr.map(coords(i, 0), kMargin, kWidth - kMargin);
    const double py = yr.map(coords(i, 1), kHeight - kMargin, kMargin);
    const size_t label = embedding.labels.empty()
                             ? 0
                             : static_cast<size_t>(embedding.labels[static_cast<size_t>(i)]);
    svg += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) +
           "\" r=\"3\" fill=\"" + kPalette[label % kPaletteSize] +
           "\" fill-opacity=\"0.75\"/>\n";
  }

  for (size_t y = 0; y < label_names.size(); ++y) {
    const int ly = 40 + static_cast<int>(y) * 18;
    svg += "<circle cx=\"" + std::to_string(kWidth - 150) + "\" cy=\"" +
           std::to_string(ly) + "\" r=\"4\" fill=\"" +
           kPalette[y % kPaletteSize] + "\"/>\n";
    svg += "<text x=\"" + std::to_string(kWidth - 140) + "\" y=\"" +
           std::to_string(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"12\">" + label_names[y] +
           "</text>\n";
  }
  svg += "</svg>\n";
  write_file(path, svg);
}

void write_curve_svg(const std::filesystem::path& path,
                     const std::vector<double>& values,
                     const std::string& title, const std::string& y_label) {
  if (values.empty()) throw InputError("curve plot needs at least one value");
  Range xr{1.0, static_cast<double>(values.size())};
  if (values.size() == 1) xr = Range{0.0, 2.0};
  const double vmin = *std::min_element(values.begin(), values.end());
  const double vmax = *std::max_element(values.begin(), values.end());
  Range yr = padded(std::min(0.0, vmin), std::max(vmax, 1e-9));

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(kWidth) + "\" height=\"" + std::to_string(kHeight) +
         "\" viewBox=\"0 0 " + std::to_string(kWidth) + " " +
         std::to_string(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + std::to_string(kWidth / 2) +
         "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"16\">" + title + "</text>\n";
  svg += "<text x=\"16\" y=\"" + std::to_string(kHeight / 2) +
         "\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 "
         "16 " + std::to_string(kHeight / 2) + ")\">" + y_label + "</text>\n";

  // axes
  svg += "<line x1=\"" + std::to_string(kMargin) + "\" y1=\"" +
         std::to_string(kHeight - kMargin) + "\" x2=\"" +
         std::to_string(kWidth - kMargin) + "\" y2=\"" +
         std::to_string(kHeight - kMargin) + "\" stroke=\"#888\"/>\n";
  svg += "<line x1=\"" + std::to_string(kMargin) + "\" y1=\"" +
         std::to_string(kMargin) + "\" x2=\"" + std::to_string(kMargin) +
         "\" y2=\"" + std::to_string(kHeight - kMargin) +
         "\" stroke=\"#888\"/>\n";

  std::string points;
  for (size_t i = 0; i < values.size(); ++i) {
    const double px = xr.map(static_cast<double>(i + 1), kMargin, kWidth - kMargin);
    const double py = yr.map(values[i], kHeight - kMargin, kMargin);
    points += num(px) + "," + num(py) + " ";
    svg += "<circle cx=\"" + num(px) + "\" cy=\"" + num(py) +
           "\" r=\"3\" fill=\"#00798c\"/>\n";
  }
  svg += "<polyline fill=\"none\" stroke=\"#00798c\" stroke-width=\"1.5\" "
         "points=\"" + points + "\"/>\n";
  svg += "</svg>\n";
  write_file(path, svg);
}

void write_coords_csv(const std::filesystem::path& path,
                      const Embedded2D& embedding,
                      const std::vector<std::string>& label_names) {
  std::string csv = "x,y,label\n";
  for (Index i = 0; i < embedding.coords.rows(); ++i) {
    const size_t label = embedding.labels.empty()
                             ? 0
                             : static_cast<size_t>(embedding.labels[static_cast<size_t>(i)]);
    const std::string name =
        label < label_names.size() ? label_names[label] : std::to_string(label);
    csv += num(embedding.coords(i, 0)) + "," + num(embedding.coords(i, 1)) +
           "," + name + "\n";
  }
  write_file(path, csv);
}

}  // namespace traitlens::workbench
