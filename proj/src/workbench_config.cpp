#include "traitlens/workbench/config.hpp"

#include <cstdio>
#include <fstream>

#include "traitlens/prompt.hpp"

namespace traitlens::workbench {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

LabelSet labels_from_json(const json& j) {
  std::vector<Label> labels;
  for (const auto& lj : j) {
    Label l;
    l.id = lj.at("id").get<std::string>();
    l.name = lj.value("name", l.id);
    l.lexicon = lj.value("lexicon", std::vector<std::string>{});
    l.persona = lj.value("persona", std::string{});
    labels.push_back(std::move(l));
  }
  return LabelSet(std::move(labels));
}

std::vector<double> separation_from_json(const json& j, Index layers) {
  if (j.is_array()) return j.get<std::vector<double>>();
  if (j.is_object()) {
    if (j.contains("ramp_top")) {
      return SyntheticRuntimeSpec::ramp_schedule(layers, j.at("ramp_top").get<double>());
    }
    if (j.contains("uniform")) {
      return std::vector<double>(static_cast<size_t>(layers),
                                 j.at("uniform").get<double>());
    }
  }
  throw ConfigError("runtime.separation must be an array, {\"ramp_top\":x} or {\"uniform\":x}");
}

}  // namespace

void ExperimentConfig::finalize() {
  if (runtime_kind != "synthetic") {
    throw ConfigError("runtime kind '" + runtime_kind +
                      "' needs an out-of-tree adapter; this build ships the "
                      "synthetic runtime");
  }
  runtime.validate();
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) {
    throw ConfigError("split.ratio must lie in (0,1)");
  }
  if (template_text.empty()) {
    throw ConfigError("template must be non-empty");
  }
  if (steering.layer_hi == 0) {
    steering.layer_lo = 1;
    steering.layer_hi = runtime.layers;
  }
  if (!steering_target.empty()) {
    steering.target = runtime.labels.index_of(steering_target);
  }
  steering.validate(runtime.layers, runtime.labels.size());
  if (judge.kind != "lexicon" && judge.kind != "classifier" && judge.kind != "chat") {
    throw ConfigError("judge.kind must be lexicon, classifier or chat");
  }
  if (judge.kind != "lexicon" && judge.base_url.empty()) {
    throw ConfigError("judge.kind '" + judge.kind + "' needs judge.base_url");
  }
  if (eval.prompts_per_direction < 1 || eval.max_tokens < 1) {
    throw ConfigError("eval.prompts_per_direction and eval.max_tokens must be >= 1");
  }
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    const auto& rj = j.at("runtime");
    cfg.runtime_kind = rj.value("kind", std::string("synthetic"));
    cfg.adapter_id = rj.value("adapter_id", std::string{});
    cfg.runtime.layers = rj.value("layers", cfg.runtime.layers);
    cfg.runtime.dim = rj.value("dim", cfg.runtime.dim);
    cfg.runtime.seed = rj.value("seed", cfg.runtime.seed);
    cfg.runtime.noise_scale = rj.value("noise_scale", cfg.runtime.noise_scale);
    cfg.runtime.sep_base = rj.value("sep_base", cfg.runtime.sep_base);
    cfg.runtime.block_size = rj.value("block_size", cfg.runtime.block_size);
    cfg.runtime.neutral_size = rj.value("neutral_size", cfg.runtime.neutral_size);
    cfg.runtime.readout_gain = rj.value("readout_gain", cfg.runtime.readout_gain);
    cfg.runtime.readout_jitter = rj.value("readout_jitter", cfg.runtime.readout_jitter);
    cfg.runtime.neutral_level = rj.value("neutral_level", cfg.runtime.neutral_level);
    cfg.runtime.attn_mix = rj.value("attn_mix", cfg.runtime.attn_mix);
    cfg.runtime.mix_scale = rj.value("mix_scale", cfg.runtime.mix_scale);
    cfg.runtime.complement_noise =
        rj.value("complement_noise", cfg.runtime.complement_noise);

    cfg.runtime.labels = labels_from_json(j.at("labels"));
    cfg.runtime.separation = rj.contains("separation")
        ? separation_from_json(rj.at("separation"), cfg.runtime.layers)
        : SyntheticRuntimeSpec::ramp_schedule(cfg.runtime.layers, 4.0);

    cfg.template_text = j.value("template", std::string{});
    if (j.contains("entities")) {
      const auto& ej = j.at("entities");
      cfg.entities.list = ej.value("list", std::vector<std::string>{});
      cfg.entities.file = ej.value("file", std::string{});
      if (ej.contains("generate")) {
        cfg.entities.generate_count = ej.at("generate").value("count", Index{0});
        cfg.entities.prefix =
            ej.at("generate").value("prefix", cfg.entities.prefix);
      }
    }
    if (j.contains("split")) {
      cfg.split_ratio = j.at("split").value("ratio", cfg.split_ratio);
      cfg.split_seed = j.at("split").value("seed", cfg.split_seed);
    }
    if (j.contains("vinfo")) {
      const auto& vj = j.at("vinfo");
      const std::string base = vj.value("base", std::string("nat"));
      if (base == "nat" || base == "natural") {
        cfg.vinfo.base = LogBase::natural;
      } else if (base == "2" || base == "two") {
        cfg.vinfo.base = LogBase::two;
      } else {
        throw ConfigError("vinfo.base must be nat or 2");
      }
      cfg.vinfo.lambda = vj.value("lambda", cfg.vinfo.lambda);
      cfg.vinfo.tolerance = vj.value("tolerance", cfg.vinfo.tolerance);
      cfg.vinfo.max_iter = vj.value("max_iter", cfg.vinfo.max_iter);
      cfg.vinfo.family =
          probe_family_from_string(vj.value("family", std::string("linear")));
      cfg.vinfo.mlp_iterations = vj.value("mlp_iterations", cfg.vinfo.mlp_iterations);
      cfg.vinfo_group = vj.value("group_size", cfg.vinfo_group);
    }
    cfg.probe_seed = j.value("probe_seed", cfg.probe_seed);
    if (j.contains("steering")) {
      const auto& sj = j.at("steering");
      cfg.steering_target = sj.value("target", std::string{});
      cfg.steering.p_hat = sj.value("p_hat", cfg.steering.p_hat);
      if (sj.contains("layers")) {
        const auto& lj = sj.at("layers");
        cfg.steering.layer_lo = lj.at(0).get<Index>();
        cfg.steering.layer_hi = lj.at(1).get<Index>();
      } else {
        cfg.steering.layer_hi = 0;  // finalize() expands to all layers
      }
      cfg.steering.max_tokens = sj.value("max_tokens", cfg.steering.max_tokens);
      cfg.steering.skip_if_target =
          sj.value("skip_if_target", cfg.steering.skip_if_target);
      const std::string mode = sj.value("mode", std::string("in_pass"));
      if (mode == "in_pass") {
        cfg.steering.mode = HookMode::in_pass;
      } else if (mode == "post_hoc") {
        cfg.steering.mode = HookMode::post_hoc;
      } else {
        throw ConfigError("steering.mode must be in_pass or post_hoc");
      }
    } else {
      cfg.steering.layer_hi = 0;
    }
    if (j.contains("judge")) {
      const auto& jj = j.at("judge");
      cfg.judge.kind = jj.value("kind", cfg.judge.kind);
      cfg.judge.base_url = jj.value("base_url", cfg.judge.base_url);
      cfg.judge.model = jj.value("model", cfg.judge.model);
      cfg.judge.path = jj.value("path", cfg.judge.path);
      cfg.judge.token_env = jj.value("token_env", cfg.judge.token_env);
      cfg.judge.max_requests_per_second =
          jj.value("max_requests_per_second", cfg.judge.max_requests_per_second);
      cfg.judge.retries = jj.value("retries", cfg.judge.retries);
    }
    if (j.contains("eval")) {
      cfg.eval.prompts_per_direction =
          j.at("eval").value("prompts_per_direction", cfg.eval.prompts_per_direction);
      cfg.eval.max_tokens = j.at("eval").value("max_tokens", cfg.eval.max_tokens);
    }
    cfg.out_dir = j.value("out_dir", cfg.out_dir);
  } catch (const json::exception& e) {
    throw ConfigError("config is missing fields: " + std::string(e.what()));
  }
  if (cfg.template_text.empty()) {
    cfg.template_text = kDefaultPromptTemplate;
  }
  cfg.finalize();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config: " + path.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return config_from_json(j);
}

ordered_json config_snapshot(const ExperimentConfig& cfg) {
  ordered_json rt{{"kind", cfg.runtime_kind},
                  {"layers", cfg.runtime.layers},
                  {"dim", cfg.runtime.dim},
                  {"seed", cfg.runtime.seed},
                  {"noise_scale", cfg.runtime.noise_scale},
                  {"sep_base", cfg.runtime.sep_base},
                  {"separation", cfg.runtime.separation},
                  {"block_size", cfg.runtime.block_size},
                  {"neutral_size", cfg.runtime.neutral_size},
                  {"readout_gain", cfg.runtime.readout_gain},
                  {"readout_jitter", cfg.runtime.readout_jitter},
                  {"attn_mix", cfg.runtime.attn_mix},
                  {"mix_scale", cfg.runtime.mix_scale}};
  ordered_json labels = ordered_json::array();
  for (const auto& l : cfg.runtime.labels.all()) {
    labels.push_back(ordered_json{{"id", l.id}, {"name", l.name}});
  }
  ordered_json steering{
      {"target", cfg.steering.target},
      {"p_hat", cfg.steering.p_hat},
      {"layers", {cfg.steering.layer_lo, cfg.steering.layer_hi}},
      {"max_tokens", cfg.steering.max_tokens},
      {"skip_if_target", cfg.steering.skip_if_target},
      {"mode", cfg.steering.mode == HookMode::in_pass ? "in_pass" : "post_hoc"}};
  return ordered_json{
      {"runtime", rt},
      {"labels", labels},
      {"split", {{"ratio", cfg.split_ratio}, {"seed", cfg.split_seed}}},
      {"vinfo",
       {{"base", cfg.vinfo.base == LogBase::natural ? "nat" : "2"},
        {"lambda", cfg.vinfo.lambda},
        {"tolerance", cfg.vinfo.tolerance},
        {"family", std::string(to_string(cfg.vinfo.family))},
        {"group_size", cfg.vinfo_group}}},
      {"probe_seed", cfg.probe_seed},
      {"steering", steering},
      {"judge", {{"kind", cfg.judge.kind}}},
      {"eval",
       {{"prompts_per_direction", cfg.eval.prompts_per_direction},
        {"max_tokens", cfg.eval.max_tokens}}}};
}

std::vector<std::string> materialize_entities(const EntitySpec& spec) {
  if (!spec.list.empty()) return spec.list;
  if (!spec.file.empty()) {
    std::ifstream is(spec.file);
    if (!is) throw ConfigError("entities file does not exist: " + spec.file);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
        line.pop_back();
      }
      if (!line.empty()) out.push_back(line);
    }
    if (out.empty()) throw ConfigError("entities file is empty: " + spec.file);
    return out;
  }
  if (spec.generate_count > 0) {
    std::vector<std::string> out;
    out.reserve(static_cast<size_t>(spec.generate_count));
    for (Index i = 0; i < spec.generate_count; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%s%03lld", spec.prefix.c_str(),
                    static_cast<long long>(i));
      out.push_back(buf);
    }
    return out;
  }
  throw ConfigError("entities: provide a list, a file, or a generate count");
}

}  // namespace traitlens::workbench
