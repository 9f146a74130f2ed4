#include "traitlens/workbench/report.hpp"

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

namespace traitlens::workbench {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    os << text;
  }
  fs::rename(tmp, path);
}

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string host_name() {
  char buf[256] = {0};
  if (gethostname(buf, sizeof(buf) - 1) != 0) return "unknown";
  return buf;
}

}  // namespace

void emit_report(const ReportBundle& bundle, const fs::path& dir) {
  fs::create_directories(dir);

  ordered_json results;
  results["labels"] = bundle.label_names;

  // --- V-information table ---
  std::string vinfo_csv = "layer,v_information,conditional_entropy,accuracy\n";
  if (bundle.vinfo) {
    const auto& v = *bundle.vinfo;
    ordered_json vj;
    vj["null_entropy"] = v.null_entropy;
    vj["per_layer"] = ordered_json::array();
    for (size_t l = 0; l < v.v_information.size(); ++l) {
      vj["per_layer"].push_back(ordered_json{{"layer", l + 1},
                                             {"v_information", v.v_information[l]},
                                             {"conditional_entropy", v.conditional[l]},
                                             {"accuracy", v.accuracy[l]}});
      vinfo_csv += std::to_string(l + 1) + "," + fmt(v.v_information[l]) + "," +
                   fmt(v.conditional[l]) + "," + fmt(v.accuracy[l]) + "\n";
    }
    const auto grouped = layer_group_average(v.v_information, bundle.vinfo_group);
    vj["group_size"] = bundle.vinfo_group;
    vj["grouped"] = grouped;
    vj["has_negative"] = v.has_negative;
    results["v_information"] = std::move(vj);
    vinfo_csv += "\ngroup,first_layer,last_layer,v_information\n";
    for (size_t g = 0; g < grouped.size(); ++g) {
      const size_t lo = g * static_cast<size_t>(bundle.vinfo_group) + 1;
      const size_t hi = std::min(v.v_information.size(),
                                 lo + static_cast<size_t>(bundle.vinfo_group) - 1);
      vinfo_csv += std::to_string(g + 1) + "," + std::to_string(lo) + "," +
                   std::to_string(hi) + "," + fmt(grouped[g]) + "\n";
    }
  } else {
    results["v_information"] = "no data";
    vinfo_csv += "# no data\n";
  }

  // --- Direction matrix ---
  std::string dir_csv = "source,target,sr,sr_unsteered,pae,samples,excluded\n";
  if (bundle.directions) {
    const auto& m = *bundle.directions;
    ordered_json dj;
    dj["rows"] = ordered_json::array();
    auto name = [&](Index y) {
      return y >= 0 && static_cast<size_t>(y) < bundle.label_names.size()
                 ? bundle.label_names[static_cast<size_t>(y)]
                 : std::to_string(y);
    };
    for (const auto& r : m.directions) {
      dj["rows"].push_back(ordered_json{{"source", name(r.direction.source)},
                                        {"target", name(r.direction.target)},
                                        {"sr", r.sr},
                                        {"sr_unsteered", r.sr_unsteered},
                                        {"pae", r.pae},
                                        {"samples", r.samples},
                                        {"excluded", r.excluded}});
      dir_csv += name(r.direction.source) + "," + name(r.direction.target) + "," +
                 fmt(r.sr) + "," + fmt(r.sr_unsteered) + "," + fmt(r.pae) + "," +
                 std::to_string(r.samples) + "," + std::to_string(r.excluded) + "\n";
    }
    dj["average"] = ordered_json{{"sr", m.average_sr},
                                 {"sr_unsteered", m.average_sr_unsteered},
                                 {"pae", m.average_pae},
                                 {"excluded", m.total_excluded}};
    results["directions"] = std::move(dj);
    dir_csv += "average,," + fmt(m.average_sr) + "," +
               fmt(m.average_sr_unsteered) + "," + fmt(m.average_pae) + ",," +
               std::to_string(m.total_excluded) + "\n";
  } else {
    results["directions"] = "no data";
    dir_csv += "# no data\n";
  }

  if (!bundle.config_snapshot.is_null()) {
    results["config"] = bundle.config_snapshot;
  }

  ordered_json timing{
      {"probe_training_seconds", bundle.timing.probe_training_seconds},
      {"unsteered_per_token_seconds", bundle.timing.unsteered_per_token_seconds},
      {"steered_per_token_seconds", bundle.timing.steered_per_token_seconds},
      {"steered_unsteered_ratio", bundle.timing.steered_unsteered_ratio()},
      {"per_response_seconds", bundle.timing.per_response_seconds}};

  ordered_json report;
  report["results"] = std::move(results);
  report["provenance"] = ordered_json{
      {"created_at", iso_now()}, {"host", host_name()}, {"timing", timing}};

  write_text(dir / "report.json", report.dump(2) + "\n");
  write_text(dir / "vinfo.csv", vinfo_csv);
  write_text(dir / "directions.csv", dir_csv);

  // --- Human-readable summary ---
  std::string s;
  s += "traitlens report\n================\n\n";
  if (bundle.vinfo) {
    s += "Usable information per layer (null entropy " +
         fmt(bundle.vinfo->null_entropy) + "):\n";
    for (size_t l = 0; l < bundle.vinfo->v_information.size(); ++l) {
      s += "  layer " + std::to_string(l + 1) + ": " +
           fmt(bundle.vinfo->v_information[l]) + "  (accuracy " +
           fmt(bundle.vinfo->accuracy[l]) + ")\n";
    }
    if (bundle.vinfo->has_negative) {
      s += "  warning: negative values reported raw (probe fit worse than the prior)\n";
    }
  } else {
    s += "Usable information: no data\n";
  }
  s += "\n";
  if (bundle.directions) {
    s += "Edit directions (SR / PAE):\n";
    for (const auto& r : bundle.directions->directions) {
      const auto& names = bundle.label_names;
      const std::string a = static_cast<size_t>(r.direction.source) < names.size()
                                ? names[static_cast<size_t>(r.direction.source)]
                                : std::to_string(r.direction.source);
      const std::string b = static_cast<size_t>(r.direction.target) < names.size()
                                ? names[static_cast<size_t>(r.direction.target)]
                                : std::to_string(r.direction.target);
      s += "  " + a + " -> " + b + ": SR " + fmt(r.sr) + ", PAE " + fmt(r.pae) +
           " (unsteered SR " + fmt(r.sr_unsteered) + ")\n";
    }
    s += "  average: SR " + fmt(bundle.directions->average_sr) + ", PAE " +
         fmt(bundle.directions->average_pae) + "\n";
  } else {
    s += "Edit directions: no data\n";
  }
  s += "\nTiming (host measurement):\n";
  s += "  probe training: " + fmt(bundle.timing.probe_training_seconds) + " s\n";
  s += "  unsteered per token: " + fmt(bundle.timing.unsteered_per_token_seconds) + " s\n";
  s += "  steered per token: " + fmt(bundle.timing.steered_per_token_seconds) + " s\n";
  s += "  steered/unsteered ratio: " + fmt(bundle.timing.steered_unsteered_ratio()) + "\n";
  s += "  per response: " + fmt(bundle.timing.per_response_seconds) + " s\n";
  write_text(dir / "summary.txt", s);
}

std::string report_without_provenance(const fs::path& report_json) {
  std::ifstream is(report_json, std::ios::binary);
  if (!is) throw IoError("cannot open: " + report_json.string());
  ordered_json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("report is not valid JSON: " + std::string(e.what()));
  }
  doc.erase("provenance");
  return doc.dump(2);
}

}  // namespace traitlens::workbench
