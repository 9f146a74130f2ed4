#pragma once

#include <filesystem>
#include <optional>

#include <nlohmann/json.hpp>

#include "traitlens/evaluation.hpp"
#include "traitlens/probing.hpp"

namespace traitlens::workbench {

/// Wall-clock costs of the run. Lives in the provenance block: it is host
/// measurement, excluded from reproducibility comparison.
struct TimingReport {
  double probe_training_seconds = -1.0;
  double unsteered_per_token_seconds = -1.0;
  double steered_per_token_seconds = -1.0;
  double per_response_seconds = -1.0;

  double steered_unsteered_ratio() const {
    return unsteered_per_token_seconds > 0.0
               ? steered_per_token_seconds / unsteered_per_token_seconds
               : -1.0;
  }
};

struct ReportBundle {
  std::vector<std::string> label_names;
  std::optional<VInfoResult> vinfo;
  Index vinfo_group = 4;
  std::optional<DirectionMatrixResult> directions;
  TimingReport timing;
  nlohmann::ordered_json config_snapshot;
};

/// Writes report.json (a deterministic `results` object plus a `provenance`
/// block holding timestamps, host and timing), vinfo.csv, directions.csv and
/// summary.txt. Empty inputs still yield valid files with explicit "no data"
/// markers.
void emit_report(const ReportBundle& bundle, const std::filesystem::path& dir);

/// report.json with the provenance block removed, for byte comparison across
/// reruns.
std::string report_without_provenance(const std::filesystem::path& report_json);

}  // namespace traitlens::workbench
