#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "traitlens/probing.hpp"
#include "traitlens/synthetic.hpp"
#include "traitlens/types.hpp"

namespace traitlens::workbench {

struct EntitySpec {
  std::vector<std::string> list;
  std::string file;
  Index generate_count = 0;
  std::string prefix = "topic_";
};

struct JudgeSpec {
  std::string kind = "lexicon";  // lexicon | classifier | chat
  std::string base_url;
  std::string model = "judge-model";
  std::string path;
  std::string token_env = "TRAITLENS_JUDGE_TOKEN";
  double max_requests_per_second = 0.0;
  int retries = 2;
};

struct EvalSpec {
  Index prompts_per_direction = 12;
  Index max_tokens = 40;
};

/// One experiment end to end: runtime blueprint, labels, prompts, split,
/// probing, steering, judging and output location. All randomness flows from
/// the seeds recorded here.
struct ExperimentConfig {
  std::string runtime_kind = "synthetic";
  std::string adapter_id;  // reserved for out-of-tree adapters
  SyntheticRuntimeSpec runtime;
  std::string template_text;
  EntitySpec entities;
  double split_ratio = 0.7;
  uint64_t split_seed = 13;
  VInfoConfig vinfo;
  Index vinfo_group = 4;
  uint64_t probe_seed = 17;
  SteeringConfig steering;
  std::string steering_target;  // label id/name, resolved against the label set
  JudgeSpec judge;
  EvalSpec eval;
  std::string out_dir = "out";

  /// Resolves steering.target from steering_target and validates ranges.
  void finalize();
};

ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Deterministic snapshot embedded in reports (no timestamps).
nlohmann::ordered_json config_snapshot(const ExperimentConfig& config);

/// list | file | generated count, in that precedence.
std::vector<std::string> materialize_entities(const EntitySpec& spec);

}  // namespace traitlens::workbench
