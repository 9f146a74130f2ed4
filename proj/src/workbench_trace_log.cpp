#include "traitlens/workbench/trace_log.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace traitlens::workbench {

namespace {

using nlohmann::ordered_json;

ordered_json trace_json(const GenerationTrace& t) {
  ordered_json edits = ordered_json::array();
  for (const auto& e : t.edits) {
    edits.push_back(ordered_json{{"step", e.step},
                                 {"layer", e.layer},
                                 {"applied", e.applied},
                                 {"pre_score", e.pre_score},
                                 {"post_score", e.post_score},
                                 {"delta_norm", e.delta_norm},
                                 {"skip", std::string(to_string(e.skip))}});
  }
  ordered_json j{{"prompt", t.prompt_text},
                 {"prompt_tokens", t.prompt_tokens},
                 {"token_ids", t.token_ids},
                 {"tokens", t.tokens},
                 {"edits", std::move(edits)},
                 {"timing",
                  {{"prompt_seconds", t.timing.prompt_seconds},
                   {"generate_seconds", t.timing.generate_seconds}}}};
  if (t.judged_label) j["judged_label"] = *t.judged_label;
  if (t.pae_pre) j["pae_pre"] = *t.pae_pre;
  if (t.pae_post) j["pae_post"] = *t.pae_post;
  return j;
}

SkipReason skip_from_string(const std::string& s) {
  if (s == "already-target") return SkipReason::already_target;
  if (s == "outside-layer-range") return SkipReason::outside_layer_range;
  return SkipReason::none;
}

}  // namespace

void save_traces(const std::vector<GenerationTrace>& traces,
                 const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open for writing: " + tmp.string());
    for (const auto& t : traces) os << trace_json(t).dump() << "\n";
  }
  std::filesystem::rename(tmp, path);
}

std::vector<GenerationTrace> load_traces(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open: " + path.string());
  std::vector<GenerationTrace> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      GenerationTrace t;
      t.prompt_text = j.at("prompt").get<std::string>();
      t.prompt_tokens = j.at("prompt_tokens").get<std::vector<std::string>>();
      t.token_ids = j.at("token_ids").get<std::vector<int>>();
      t.tokens = j.at("tokens").get<std::vector<std::string>>();
      for (const auto& ej : j.at("edits")) {
        EditRecord e;
        e.step = ej.at("step").get<Index>();
        e.layer = ej.at("layer").get<Index>();
        e.applied = ej.at("applied").get<bool>();
        e.pre_score = ej.at("pre_score").get<double>();
        e.post_score = ej.at("post_score").get<double>();
        e.delta_norm = ej.at("delta_norm").get<double>();
        e.skip = skip_from_string(ej.at("skip").get<std::string>());
        t.edits.push_back(e);
      }
      t.timing.prompt_seconds = j.at("timing").at("prompt_seconds").get<double>();
      t.timing.generate_seconds = j.at("timing").at("generate_seconds").get<double>();
      if (j.contains("judged_label")) t.judged_label = j.at("judged_label").get<Index>();
      if (j.contains("pae_pre")) t.pae_pre = j.at("pae_pre").get<int>();
      if (j.contains("pae_post")) t.pae_post = j.at("pae_post").get<int>();
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("trace log line " + std::to_string(line_no) +
                        " is malformed: " + e.what());
    }
  }
  return out;
}

}  // namespace traitlens::workbench
