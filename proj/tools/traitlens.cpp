// Command-line driver: extract activations, train probes, steer single
// generations, run the direction-matrix evaluation, interpretability
// analyses, and the runtime-adapter conformance suite.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "traitlens/conformance.hpp"
#include "traitlens/detail/rng.hpp"
#include "traitlens/evaluation.hpp"
#include "traitlens/http_judge.hpp"
#include "traitlens/interpret.hpp"
#include "traitlens/probing.hpp"
#include "traitlens/prompt.hpp"
#include "traitlens/split.hpp"
#include "traitlens/steering.hpp"
#include "traitlens/synthetic.hpp"
#include "traitlens/workbench/config.hpp"
#include "traitlens/workbench/dump.hpp"
#include "traitlens/workbench/plots.hpp"
#include "traitlens/workbench/probe_store.hpp"
#include "traitlens/workbench/report.hpp"
#include "traitlens/workbench/trace_log.hpp"

namespace {

namespace fs = std::filesystem;
using namespace traitlens;
using workbench::ExperimentConfig;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::string judge_kind;
  std::string layers;
  double p_hat = -1.0;
  int64_t seed = -1;
};

ExperimentConfig load_experiment(const GlobalArgs& g) {
  if (g.config_path.empty()) {
    throw ConfigError("--config is required for this subcommand");
  }
  ExperimentConfig cfg = workbench::load_config(g.config_path);
  if (g.seed >= 0) {
    const auto seed = static_cast<uint64_t>(g.seed);
    cfg.runtime.seed = detail::mix_seed(seed, 0x01);
    cfg.split_seed = detail::mix_seed(seed, 0x02);
    cfg.probe_seed = detail::mix_seed(seed, 0x03);
  }
  if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
  if (!g.judge_kind.empty()) cfg.judge.kind = g.judge_kind;
  if (g.p_hat >= 0.0) cfg.steering.p_hat = g.p_hat;
  if (!g.layers.empty()) {
    const auto colon = g.layers.find(':');
    try {
      if (colon == std::string::npos) throw std::invalid_argument("");
      cfg.steering.layer_lo = std::stoll(g.layers.substr(0, colon));
      cfg.steering.layer_hi = std::stoll(g.layers.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("--layers expects LO:HI, got '" + g.layers + "'");
    }
  }
  cfg.finalize();
  return cfg;
}

std::shared_ptr<SyntheticRuntime> runtime_of(const ExperimentConfig& cfg) {
  return build_synthetic(cfg.runtime);
}

LabelSet judging_labels(const ExperimentConfig& cfg,
                        const SyntheticRuntime& rt) {
  // Labels without explicit lexicons judge against the runtime's blocks.
  if (cfg.runtime.labels.has_lexicons()) return cfg.runtime.labels;
  return rt.judge_label_set();
}

std::unique_ptr<Judge> make_judge(const ExperimentConfig& cfg,
                                  const LabelSet& labels) {
  if (cfg.judge.kind == "lexicon") {
    return lexicon_judge(labels);
  }
  if (cfg.judge.kind == "chat") {
    ChatJudgeConfig jc;
    jc.base_url = cfg.judge.base_url;
    jc.model = cfg.judge.model;
    if (!cfg.judge.path.empty()) jc.path = cfg.judge.path;
    jc.token_env = cfg.judge.token_env;
    jc.max_requests_per_second = cfg.judge.max_requests_per_second;
    jc.retries = cfg.judge.retries;
    return make_chat_judge(labels, jc);
  }
  ClassifierJudgeConfig jc;
  jc.base_url = cfg.judge.base_url;
  if (!cfg.judge.path.empty()) jc.path = cfg.judge.path;
  jc.token_env = cfg.judge.token_env;
  jc.max_requests_per_second = cfg.judge.max_requests_per_second;
  jc.retries = cfg.judge.retries;
  return make_classifier_judge(labels, jc);
}

std::vector<PromptSpec> eval_prompts(const ExperimentConfig& cfg) {
  auto entities = workbench::materialize_entities(cfg.entities);
  const auto want = static_cast<size_t>(cfg.eval.prompts_per_direction);
  if (entities.size() > want) entities.resize(want);
  return render_prompt_grid(cfg.template_text, cfg.runtime.labels, entities);
}

int cmd_extract(const GlobalArgs& g) {
  ExperimentConfig cfg = load_experiment(g);
  auto rt = runtime_of(cfg);
  const auto entities = workbench::materialize_entities(cfg.entities);
  const auto prompts = render_prompt_grid(cfg.template_text, cfg.runtime.labels, entities);
  ProbeDataset ds = extract_probe_dataset(*rt, judging_labels(cfg, *rt), prompts);
  ds = stratified_split(ds.labels, std::move(ds.records), cfg.split_ratio,
                        cfg.split_seed);
  const fs::path dump_dir = fs::path(cfg.out_dir) / "dump";
  workbench::save_dump(ds, dump_dir);
  std::cout << "extracted " << ds.records.size() << " records ("
            << entities.size() << " entities x " << cfg.runtime.labels.size()
            << " labels, L=" << ds.layer_count() << ", d=" << ds.dim()
            << ") -> " << dump_dir.string() << "\n";
  return 0;
}

int cmd_probe(const GlobalArgs& g, const std::string& dump_arg) {
  ExperimentConfig cfg = load_experiment(g);
  const fs::path dump_dir =
      dump_arg.empty() ? fs::path(cfg.out_dir) / "dump" : fs::path(dump_arg);
  ProbeDataset ds = workbench::load_dump(dump_dir);

  const auto t0 = std::chrono::steady_clock::now();
  VInfoResult result = v_information(ds, cfg.vinfo, cfg.probe_seed);
  const auto t1 = std::chrono::steady_clock::now();

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  if (cfg.vinfo.family == ProbeFamily::linear) {
    workbench::save_probes(result.stack, out / "probes.json");
  }

  workbench::ReportBundle bundle;
  for (const auto& l : ds.labels.all()) bundle.label_names.push_back(l.name);
  bundle.vinfo = result;
  bundle.vinfo_group = cfg.vinfo_group;
  bundle.timing.probe_training_seconds =
      std::chrono::duration<double>(t1 - t0).count();
  bundle.config_snapshot = workbench::config_snapshot(cfg);
  workbench::emit_report(bundle, out);
  workbench::write_curve_svg(out / "vinfo.svg", result.v_information,
                             "Usable information by layer", "I(layer)");

  std::cout << "null entropy " << result.null_entropy << "\n";
  for (size_t l = 0; l < result.v_information.size(); ++l) {
    std::cout << "layer " << (l + 1) << ": I=" << result.v_information[l]
              << " acc=" << result.accuracy[l] << "\n";
  }
  if (result.has_negative) {
    std::cerr << "warning: negative usable information reported raw\n";
  }
  std::cout << "probes -> " << (out / "probes.json").string() << "\n";
  return 0;
}

int cmd_steer(const GlobalArgs& g, const std::string& probes_arg,
              const std::string& prompt_arg, const std::string& entity,
              const std::string& source_label, const std::string& target,
              int64_t max_tokens) {
  ExperimentConfig cfg = load_experiment(g);
  auto rt = runtime_of(cfg);
  const fs::path probes_path = probes_arg.empty()
                                   ? fs::path(cfg.out_dir) / "probes.json"
                                   : fs::path(probes_arg);
  auto loaded = workbench::load_probes(probes_path, &cfg.runtime.labels);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";

  std::string prompt = prompt_arg;
  if (prompt.empty()) {
    const std::string ent = entity.empty() ? "Murano" : entity;
    const Index src = source_label.empty()
                          ? (cfg.steering.target + 1) % cfg.runtime.labels.size()
                          : cfg.runtime.labels.index_of(source_label);
    prompt = render_prompt(cfg.template_text, cfg.runtime.labels, src, ent)
                 .rendered_text;
  }
  if (!target.empty()) {
    cfg.steering.target = cfg.runtime.labels.index_of(target);
  }
  if (max_tokens > 0) cfg.steering.max_tokens = max_tokens;
  cfg.steering.validate(cfg.runtime.layers, cfg.runtime.labels.size());

  GenerationTrace trace = steered_generate(*rt, loaded.stack, prompt, cfg.steering);

  Index applied = 0, skipped = 0;
  for (const auto& e : trace.edits) {
    applied += e.applied ? 1 : 0;
    skipped += e.skip == SkipReason::already_target ? 1 : 0;
  }
  std::cout << "prompt: " << prompt << "\n";
  std::cout << "steered toward "
            << cfg.runtime.labels.at(cfg.steering.target).name << " (p_hat "
            << cfg.steering.p_hat << ", layers " << cfg.steering.layer_lo << ":"
            << cfg.steering.layer_hi << ")\n";
  std::cout << "response: " << trace.response_text() << "\n";
  std::cout << "edits applied " << applied << ", skipped already-target "
            << skipped << ", tokens " << trace.tokens.size() << "\n";

  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  workbench::save_traces({trace}, out / "steer_trace.jsonl");
  std::cout << "trace -> " << (out / "steer_trace.jsonl").string() << "\n";
  return 0;
}

int cmd_eval(const GlobalArgs& g, const std::string& probes_arg) {
  ExperimentConfig cfg = load_experiment(g);
  auto rt = runtime_of(cfg);
  const fs::path probes_path = probes_arg.empty()
                                   ? fs::path(cfg.out_dir) / "probes.json"
                                   : fs::path(probes_arg);
  auto loaded = workbench::load_probes(probes_path, &cfg.runtime.labels);
  for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";

  const LabelSet labels = judging_labels(cfg, *rt);
  auto judge = make_judge(cfg, labels);
  SteeringConfig base = cfg.steering;
  base.max_tokens = cfg.eval.max_tokens;

  DirectionMatrixResult matrix = run_direction_matrix(
      *rt, loaded.stack, cfg.runtime.labels, eval_prompts(cfg), base, *judge);

  workbench::ReportBundle bundle;
  for (const auto& l : cfg.runtime.labels.all()) {
    bundle.label_names.push_back(l.name);
  }
  bundle.directions = matrix;
  bundle.config_snapshot = workbench::config_snapshot(cfg);
  if (matrix.unsteered_tokens > 0 && matrix.steered_tokens > 0) {
    bundle.timing.unsteered_per_token_seconds =
        matrix.unsteered_seconds / matrix.unsteered_tokens;
    bundle.timing.steered_per_token_seconds =
        matrix.steered_seconds / matrix.steered_tokens;
    bundle.timing.per_response_seconds =
        (matrix.unsteered_seconds + matrix.steered_seconds) /
        std::max<Index>(1, 2 * matrix.responses);
  }
  const fs::path out(cfg.out_dir);
  workbench::emit_report(bundle, out);

  for (const auto& r : matrix.directions) {
    std::cout << cfg.runtime.labels.at(r.direction.source).id << " -> "
              << cfg.runtime.labels.at(r.direction.target).id << ": SR " << r.sr
              << " PAE " << r.pae << " (unsteered SR " << r.sr_unsteered
              << ")\n";
  }
  std::cout << "average SR " << matrix.average_sr << " PAE "
            << matrix.average_pae << "\n";
  std::cout << "report -> " << (out / "report.json").string() << "\n";
  return 0;
}

int cmd_interpret(const GlobalArgs& g, const std::string& probes_arg,
                  const std::string& dump_arg, const std::string& mass_arg,
                  double patch_phi, const std::string& importance_method,
                  const std::string& text, const std::string& target,
                  int64_t project_layer) {
  ExperimentConfig cfg = load_experiment(g);
  const fs::path out(cfg.out_dir);
  fs::create_directories(out);
  bool did_anything = false;

  auto load_stack = [&]() {
    const fs::path probes_path = probes_arg.empty()
                                     ? fs::path(cfg.out_dir) / "probes.json"
                                     : fs::path(probes_arg);
    auto loaded = workbench::load_probes(probes_path, &cfg.runtime.labels);
    for (const auto& w : loaded.warnings) std::cerr << "warning: " << w << "\n";
    return std::move(loaded.stack);
  };

  if (!mass_arg.empty()) {
    std::vector<double> fractions;
    std::stringstream ss(mass_arg);
    std::string part;
    while (std::getline(ss, part, ',')) fractions.push_back(std::stod(part));
    const ProbeStack stack = load_stack();
    nlohmann::ordered_json doc;
    doc["fractions"] = fractions;
    doc["layers"] = nlohmann::ordered_json::array();
    for (const auto& probe : stack.probes) {
      const auto mass = weight_mass_fraction(probe, fractions);
      doc["layers"].push_back(
          nlohmann::ordered_json{{"layer", probe.layer()}, {"mass", mass}});
      std::cout << "layer " << probe.layer() << ":";
      for (size_t i = 0; i < fractions.size(); ++i) {
        std::cout << " top" << fractions[i] * 100 << "%=" << mass[i];
      }
      std::cout << "\n";
    }
    std::ofstream(out / "weight_mass.json") << doc.dump(2) << "\n";
    std::cout << "weight mass -> " << (out / "weight_mass.json").string() << "\n";
    did_anything = true;
  }

  if (patch_phi >= 0.0) {
    const ProbeStack stack = load_stack();
    const PatchSpec patch = build_patch(stack, patch_phi);
    nlohmann::ordered_json doc;
    doc["phi"] = patch.phi;
    doc["selected"] = patch.selected;
    std::ofstream(out / "patch.json") << doc.dump(2) << "\n";
    std::cout << "patch phi=" << patch_phi << " -> "
              << (out / "patch.json").string() << "\n";

    // Patched direction matrix next to the unpatched numbers.
    auto rt = runtime_of(cfg);
    const LabelSet labels = judging_labels(cfg, *rt);
    auto judge = make_judge(cfg, labels);
    SteeringConfig base = cfg.steering;
    base.max_tokens = cfg.eval.max_tokens;
    auto prompts = eval_prompts(cfg);
    const auto plain = run_direction_matrix(*rt, stack, cfg.runtime.labels,
                                            prompts, base, *judge);
    base.patch = patch;
    const auto patched = run_direction_matrix(*rt, stack, cfg.runtime.labels,
                                              prompts, base, *judge);
    std::cout << "average SR unpatched " << plain.average_sr << ", patched "
              << patched.average_sr << "\n";
    nlohmann::ordered_json cmp{{"phi", patch_phi},
                               {"sr_unpatched", plain.average_sr},
                               {"sr_patched", patched.average_sr},
                               {"pae_unpatched", plain.average_pae},
                               {"pae_patched", patched.average_pae}};
    std::ofstream(out / "patch_eval.json") << cmp.dump(2) << "\n";
    did_anything = true;
  }

  if (!importance_method.empty()) {
    if (text.empty()) {
      throw ConfigError("--text is required for importance analysis");
    }
    auto rt = runtime_of(cfg);
    const LabelSet labels = judging_labels(cfg, *rt);
    LexiconJudge judge(labels);
    const Index tgt = target.empty() ? cfg.steering.target
                                     : cfg.runtime.labels.index_of(target);
    ImportanceResult result;
    if (importance_method == "masking") {
      result = masking_importance(
          text,
          [&](const std::string& t) { return static_cast<double>(judge.rate(t, tgt)); },
          0.15, 100, cfg.probe_seed);
    } else if (importance_method == "surrogate") {
      result = surrogate_importance(
          text,
          [&](const std::string& t) { return judge.target_probability(t, tgt); },
          1000, 0.15, cfg.probe_seed);
    } else {
      throw ConfigError("--importance must be masking or surrogate");
    }
    nlohmann::ordered_json doc;
    doc["method"] = result.method;
    doc["tokens"] = result.tokens;
    doc["scores"] = result.scores;
    doc["mask_rate"] = result.mask_rate;
    doc["rounds"] = result.rounds;
    doc["seed"] = result.seed;
    doc["skipped"] = result.skipped;
    std::ofstream(out / "importance.json") << doc.dump(2) << "\n";
    std::cout << "importance (" << result.method << ") -> "
              << (out / "importance.json").string() << "\n";
    did_anything = true;
  }

  if (project_layer > 0) {
    const fs::path dump_dir =
        dump_arg.empty() ? fs::path(cfg.out_dir) / "dump" : fs::path(dump_arg);
    ProbeDataset ds = workbench::load_dump(dump_dir);
    if (project_layer > ds.layer_count()) {
      throw InputError("--project layer exceeds the dump's layer count");
    }
    Matrix points(static_cast<Index>(ds.records.size()), ds.dim());
    std::vector<Index> labels;
    for (size_t i = 0; i < ds.records.size(); ++i) {
      points.row(static_cast<Index>(i)) =
          ds.records[i].layers.row(project_layer - 1).cast<double>();
      labels.push_back(ds.records[i].label);
    }
    const Embedded2D emb = project_2d(points, labels, cfg.probe_seed);
    std::vector<std::string> names;
    for (const auto& l : ds.labels.all()) names.push_back(l.name);
    char stem[32];
    std::snprintf(stem, sizeof(stem), "embedding_layer_%02lld",
                  static_cast<long long>(project_layer));
    workbench::write_scatter_svg(out / (std::string(stem) + ".svg"), emb, names,
                                 "Final-token states, layer " +
                                     std::to_string(project_layer));
    workbench::write_coords_csv(out / (std::string(stem) + ".csv"), emb, names);
    std::cout << "projection -> " << (out / (std::string(stem) + ".svg")).string()
              << "\n";
    did_anything = true;
  }

  if (!did_anything) {
    throw ConfigError(
        "interpret: pass --weight-mass, --patch-phi, --importance or --project");
  }
  return 0;
}

int cmd_conformance(const GlobalArgs& g) {
  ExperimentConfig cfg = load_experiment(g);
  auto rt = runtime_of(cfg);
  const std::string prompt =
      render_prompt(cfg.template_text, cfg.runtime.labels, 0, "Murano")
          .rendered_text;
  const auto checks = run_conformance(*rt, prompt);
  for (const auto& c : checks) {
    std::cout << (c.passed ? "PASS" : "FAIL") << " " << c.name
              << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
  }
  return all_passed(checks) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layer-wise trait probing and activation steering workbench"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalArgs g;
  app.add_option("--config", g.config_path, "experiment config (JSON)");
  app.add_option("--out", g.out_dir, "output directory override");
  app.add_option("--seed", g.seed, "master seed override");
  app.add_option("--p-hat", g.p_hat, "steering target probability override");
  app.add_option("--layers", g.layers, "steering layer range LO:HI");
  app.add_option("--judge", g.judge_kind, "judge kind: lexicon|classifier|chat");

  auto* extract = app.add_subcommand("extract", "render prompts and dump activations");

  std::string dump_arg;
  auto* probe = app.add_subcommand("probe", "train probes and report usable information");
  probe->add_option("--dump", dump_arg, "activation dump directory");

  std::string probes_arg, prompt_arg, entity_arg, source_arg, target_arg;
  int64_t max_tokens = 0;
  auto* steer = app.add_subcommand("steer", "run one steered generation");
  steer->add_option("--probes", probes_arg, "probe store file");
  steer->add_option("--prompt", prompt_arg, "raw prompt text");
  steer->add_option("--entity", entity_arg, "entity for the prompt template");
  steer->add_option("--source", source_arg, "label the prompt requests");
  steer->add_option("--target", target_arg, "steering target label");
  steer->add_option("--max-tokens", max_tokens, "generation length");

  std::string eval_probes;
  auto* eval = app.add_subcommand("eval", "run the direction-matrix evaluation");
  eval->add_option("--probes", eval_probes, "probe store file");

  std::string i_probes, i_dump, mass_arg, importance_method, text_arg, i_target;
  double patch_phi = -1.0;
  int64_t project_layer = 0;
  auto* interpret = app.add_subcommand("interpret", "probe-weight and importance analyses");
  interpret->add_option("--probes", i_probes, "probe store file");
  interpret->add_option("--dump", i_dump, "activation dump directory");
  interpret->add_option("--weight-mass", mass_arg, "fractions, e.g. 0.01,0.05,0.1");
  interpret->add_option("--patch-phi", patch_phi, "activation-patch fraction");
  interpret->add_option("--importance", importance_method, "masking|surrogate");
  interpret->add_option("--text", text_arg, "response text to attribute");
  interpret->add_option("--target", i_target, "target label for importance");
  interpret->add_option("--project", project_layer, "2-D embedding of a layer");

  auto* conformance = app.add_subcommand("conformance", "runtime adapter contract suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (extract->parsed()) return cmd_extract(g);
    if (probe->parsed()) return cmd_probe(g, dump_arg);
    if (steer->parsed()) {
      return cmd_steer(g, probes_arg, prompt_arg, entity_arg, source_arg,
                       target_arg, max_tokens);
    }
    if (eval->parsed()) return cmd_eval(g, eval_probes);
    if (interpret->parsed()) {
      return cmd_interpret(g, i_probes, i_dump, mass_arg, patch_phi,
                           importance_method, text_arg, i_target, project_layer);
    }
    if (conformance->parsed()) return cmd_conformance(g);
  } catch (const Error& e) {
    std::cerr << "error[" << e.kind() << "]: " << e.what() << "\n";
    const auto& kind = e.kind();
    const bool usage = kind == "domain" || kind == "config" ||
                       kind == "template" || kind == "input" || kind == "spec";
    return usage ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
