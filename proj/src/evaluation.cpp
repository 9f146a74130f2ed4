#include "traitlens/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <future>
#include <set>
#include <sstream>

#include "traitlens/steering.hpp"

namespace traitlens {

namespace {

std::vector<std::string> judge_tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  std::string raw;
  while (is >> raw) {
    size_t b = 0, e = raw.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(raw[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(raw[e - 1]))) --e;
    std::string w;
    for (size_t i = b; i < e; ++i) {
      w += static_cast<char>(std::tolower(static_cast<unsigned char>(raw[i])));
    }
    if (!w.empty()) out.push_back(std::move(w));
  }
  return out;
}

const char* persona_for_builtin(const std::string& name) {
  if (name == "Extraversion") {
    return "friendly, extraverted, talkative, bold, assertive, active, "
           "energetic, adventurous and daring, cheerful";
  }
  if (name == "Agreeableness") {
    return "trustful, dishonest, honest, altruistic, generous, cooperative, "
           "humble, sympathetic, unselfish, agreeable";
  }
  if (name == "Neuroticism") {
    return "tense, nervous, anxious, angry, irritable, depressed, "
           "self-conscious, impulsive, discontented, emotionally unstable";
  }
  return nullptr;
}

}  // namespace

LexiconJudge::LexiconJudge(LabelSet labels) : labels_(std::move(labels)) {
  for (Index y = 0; y < labels_.size(); ++y) {
    if (labels_.at(y).lexicon.empty()) {
      throw ConfigError("lexicon judge needs a lexicon for label '" +
                        labels_.at(y).id + "'");
    }
  }
}

std::vector<Index> LexiconJudge::hit_counts(const std::string& text) const {
  std::vector<Index> hits(static_cast<size_t>(labels_.size()), 0);
  const auto words = judge_tokenize(text);
  for (Index y = 0; y < labels_.size(); ++y) {
    const auto& lex = labels_.at(y).lexicon;
    const std::set<std::string> lex_set(lex.begin(), lex.end());
    for (const auto& w : words) {
      if (lex_set.count(w)) ++hits[static_cast<size_t>(y)];
    }
  }
  return hits;
}

Index LexiconJudge::classify(const std::string& text) {
  const auto hits = hit_counts(text);
  Index best = 0;
  for (Index y = 1; y < labels_.size(); ++y) {
    if (hits[static_cast<size_t>(y)] > hits[static_cast<size_t>(best)]) best = y;
  }
  return best;
}

int LexiconJudge::rate(const std::string& text, Index target) {
  if (target < 0 || target >= labels_.size()) {
    throw InputError("rating target out of range");
  }
  const auto hits = hit_counts(text);
  return 1 + static_cast<int>(
                 std::min<Index>(4, hits[static_cast<size_t>(target)]));
}

double LexiconJudge::target_probability(const std::string& text,
                                        Index target) const {
  const auto hits = hit_counts(text);
  Index total = 0;
  for (Index h : hits) total += h;
  return (1.0 + static_cast<double>(hits[static_cast<size_t>(target)])) /
         (static_cast<double>(labels_.size()) + static_cast<double>(total));
}

std::unique_ptr<LexiconJudge> lexicon_judge(const LabelSet& labels) {
  return std::make_unique<LexiconJudge>(labels);
}

SuccessRateResult success_rate(const std::vector<GenerationTrace>& traces,
                               Judge& judge, Index target) {
  if (traces.empty()) throw InputError("success_rate needs at least one trace");
  SuccessRateResult result;
  Index hits = 0;
  for (const auto& trace : traces) {
    try {
      hits += judge.classify(trace.response_text()) == target ? 1 : 0;
      ++result.counted;
    } catch (const Error&) {
      ++result.excluded;
    }
  }
  if (result.counted == 0) {
    throw JudgeError("judge failed on every sample");
  }
  result.value = static_cast<double>(hits) / static_cast<double>(result.counted);
  return result;
}

PaeResult pae(const std::vector<GenerationTrace>& pre,
              const std::vector<GenerationTrace>& post, Judge& judge,
              Index target) {
  if (pre.size() != post.size()) {
    throw PairingError("pre/post trace lists differ in length");
  }
  if (pre.empty()) throw InputError("pae needs at least one pair");
  for (size_t i = 0; i < pre.size(); ++i) {
    if (pre[i].prompt_text != post[i].prompt_text) {
      throw PairingError("pre/post traces are not paired by prompt at index " +
                         std::to_string(i));
    }
  }
  PaeResult result;
  double sum = 0.0;
  for (size_t i = 0; i < pre.size(); ++i) {
    try {
      const int post_rating = judge.rate(post[i].response_text(), target);
      const int pre_rating = judge.rate(pre[i].response_text(), target);
      sum += post_rating - pre_rating;
      ++result.counted;
    } catch (const Error&) {
      ++result.excluded;
    }
  }
  if (result.counted == 0) throw JudgeError("judge failed on every pair");
  result.value = sum / static_cast<double>(result.counted);
  return result;
}

std::string render_pae_prompt(const Label& label, const std::string& response) {
  const char* builtin = persona_for_builtin(label.name);
  const std::string persona =
      !label.persona.empty() ? label.persona : (builtin ? builtin : "");
  if (persona.empty()) {
    throw ConfigError("label '" + label.name +
                      "' has no persona adjective list for rating prompts");
  }
  std::string out;
  out += "You are a helpful and respectful AI assistant. Respond to match "
         "this description.\n";
  out += "Persona Description: I can be described as a person with one or "
         "more adjectives in " + persona + ".\n";
  out += "Evaluating the opinion: " + response + "\n";
  out += "How accurately does the opinion match the description? Please rate "
         "on a scale of [1,2,3,4,5] (where 1 = `very inaccurate`, 2 = "
         "`moderately inaccurate`, 3 = `neither accurate nor inaccurate`, 4 = "
         "`moderately accurate`, and 5 = `very accurate`). Additionally, only "
         "output one number without other words:";
  return out;
}

int parse_rating(const std::string& reply) {
  int value = 0;
  int digits = 0;
  for (char c : reply) {
    if (std::isdigit(static_cast<unsigned char>(c))) {
      ++digits;
      value = c - '0';
    }
  }
  if (digits != 1 || value < 1 || value > 5) {
    throw JudgeError("could not parse a single 1-5 rating from reply: '" +
                     reply + "'");
  }
  return value;
}

DirectionMatrixResult run_direction_matrix(
    const Runtime& runtime, const ProbeStack& stack, const LabelSet& labels,
    const std::vector<PromptSpec>& prompts, const SteeringConfig& base_config,
    Judge& judge) {
  const Index k = labels.size();
  std::vector<std::vector<const PromptSpec*>> by_label(static_cast<size_t>(k));
  for (const auto& p : prompts) {
    if (p.label < 0 || p.label >= k) {
      throw InputError("prompt label outside the label set");
    }
    by_label[static_cast<size_t>(p.label)].push_back(&p);
  }
  for (Index y = 0; y < k; ++y) {
    if (by_label[static_cast<size_t>(y)].empty()) {
      throw InputError("no prompts for source label '" + labels.at(y).id + "'");
    }
  }

  std::vector<DirectionSpec> dirs;
  for (Index a = 0; a < k; ++a) {
    for (Index b = 0; b < k; ++b) {
      if (a != b) dirs.push_back({a, b});
    }
  }

  struct DirOutcome {
    EvalReport report;
    double unsteered_seconds = 0.0;
    double steered_seconds = 0.0;
    Index unsteered_tokens = 0;
    Index steered_tokens = 0;
  };

  auto eval_direction = [&](DirectionSpec dir) {
    DirOutcome out;
    out.report.direction = dir;
    const auto& sources = by_label[static_cast<size_t>(dir.source)];

    std::vector<GenerationTrace> pre, post;
    pre.reserve(sources.size());
    post.reserve(sources.size());
    SteeringConfig cfg = base_config;
    cfg.target = dir.target;
    GenerateOptions plain;
    plain.max_tokens = base_config.max_tokens;
    for (const auto* p : sources) {
      GenerationTrace u = runtime.generate(p->rendered_text, plain);
      out.unsteered_seconds += u.timing.generate_seconds;
      out.unsteered_tokens += static_cast<Index>(u.tokens.size());
      GenerationTrace s = steered_generate(runtime, stack, p->rendered_text, cfg);
      out.steered_seconds += s.timing.generate_seconds;
      out.steered_tokens += static_cast<Index>(s.tokens.size());
      pre.push_back(std::move(u));
      post.push_back(std::move(s));
    }

    Index sr_hits = 0, sr_unsteered_hits = 0;
    double pae_sum = 0.0;
    Index counted = 0;
    for (size_t i = 0; i < sources.size(); ++i) {
      EvalRow row;
      row.entity = sources[i]->entity;
      try {
        row.judged_post = judge.classify(post[i].response_text());
        row.judged_pre = judge.classify(pre[i].response_text());
        row.pae_post = judge.rate(post[i].response_text(), dir.target);
        row.pae_pre = judge.rate(pre[i].response_text(), dir.target);
        post[i].judged_label = row.judged_post;
        pre[i].judged_label = row.judged_pre;
        post[i].pae_post = row.pae_post;
        post[i].pae_pre = row.pae_pre;
        sr_hits += row.judged_post == dir.target ? 1 : 0;
        sr_unsteered_hits += row.judged_pre == dir.target ? 1 : 0;
        pae_sum += row.pae_post - row.pae_pre;
        ++counted;
      } catch (const Error&) {
        row.excluded = true;
        ++out.report.excluded;
      }
      out.report.rows.push_back(std::move(row));
    }
    out.report.samples = counted;
    if (counted > 0) {
      out.report.sr = static_cast<double>(sr_hits) / counted;
      out.report.sr_unsteered = static_cast<double>(sr_unsteered_hits) / counted;
      out.report.pae = pae_sum / counted;
    }
    return out;
  };

  std::vector<std::future<DirOutcome>> futures;
  futures.reserve(dirs.size());
  for (const auto dir : dirs) {
    futures.push_back(std::async(std::launch::async, eval_direction, dir));
  }

  DirectionMatrixResult result;
  for (auto& f : futures) {
    DirOutcome out = f.get();
    result.average_sr += out.report.sr;
    result.average_sr_unsteered += out.report.sr_unsteered;
    result.average_pae += out.report.pae;
    result.total_excluded += out.report.excluded;
    result.unsteered_seconds += out.unsteered_seconds;
    result.steered_seconds += out.steered_seconds;
    result.unsteered_tokens += out.unsteered_tokens;
    result.steered_tokens += out.steered_tokens;
    result.responses += out.report.samples;
    result.directions.push_back(std::move(out.report));
  }
  const auto n_dirs = static_cast<double>(result.directions.size());
  result.average_sr /= n_dirs;
  result.average_sr_unsteered /= n_dirs;
  result.average_pae /= n_dirs;
  return result;
}

}  // namespace traitlens
