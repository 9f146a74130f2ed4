#include "traitlens/conformance.hpp"

#include <set>
#include <sstream>

namespace traitlens {

namespace {

using Check = ConformanceCheck;

Check check(const std::string& name, bool ok, const std::string& detail = "") {
  return Check{name, ok, detail};
}

bool same_tokens(const GenerationTrace& a, const GenerationTrace& b) {
  return a.token_ids == b.token_ids && a.tokens == b.tokens;
}

}  // namespace

std::vector<ConformanceCheck> run_conformance(const Runtime& runtime,
                                              const std::string& sample_prompt,
                                              Index max_tokens) {
  std::vector<Check> checks;
  const RuntimeInfo info = runtime.info();
  checks.push_back(check("info-sane", info.layers >= 1 && info.dim >= 1,
                         "L=" + std::to_string(info.layers) +
                             " d=" + std::to_string(info.dim)));

  const auto tokens = runtime.tokenize(sample_prompt);
  checks.push_back(check("tokenize-nonempty", !tokens.empty(),
                         std::to_string(tokens.size()) + " tokens"));
  if (tokens.empty()) return checks;

  try {
    const MatrixF a = runtime.capture(tokens);
    const bool shape_ok = a.rows() == info.layers && a.cols() == info.dim;
    checks.push_back(check("capture-shape", shape_ok));
    const MatrixF b = runtime.capture(tokens);
    checks.push_back(check("capture-deterministic", a == b));
  } catch (const Error& e) {
    checks.push_back(check("capture-shape", false, e.what()));
  }

  try {
    runtime.capture({});
    checks.push_back(check("capture-empty-rejected", false, "no error raised"));
  } catch (const InputError&) {
    checks.push_back(check("capture-empty-rejected", true));
  } catch (const Error& e) {
    checks.push_back(check("capture-empty-rejected", false,
                           std::string("wrong error class: ") + e.kind()));
  }

  GenerateOptions plain;
  plain.max_tokens = max_tokens;
  const GenerationTrace base = runtime.generate(sample_prompt, plain);
  checks.push_back(check("generate-token-count",
                         static_cast<Index>(base.tokens.size()) == max_tokens));
  checks.push_back(
      check("generate-deterministic",
            same_tokens(base, runtime.generate(sample_prompt, plain))));

  LayerHook identity = [](Index, Index, const Vector& state) { return state; };
  for (HookMode mode : {HookMode::in_pass, HookMode::post_hoc}) {
    GenerateOptions opts;
    opts.max_tokens = max_tokens;
    opts.hook = &identity;
    opts.mode = mode;
    const char* name = mode == HookMode::in_pass
                           ? "identity-hook-bit-identical"
                           : "identity-hook-bit-identical-post-hoc";
    checks.push_back(
        check(name, same_tokens(base, runtime.generate(sample_prompt, opts))));
  }

  {
    LayerHook bad = [&](Index, Index, const Vector& state) {
      return Vector(Vector::Zero(state.size() + 1));
    };
    GenerateOptions opts;
    opts.max_tokens = 1;
    opts.hook = &bad;
    try {
      runtime.generate(sample_prompt, opts);
      checks.push_back(check("wrong-dim-hook-rejected", false, "no error raised"));
    } catch (const HookContractError&) {
      checks.push_back(check("wrong-dim-hook-rejected", true));
    } catch (const Error& e) {
      checks.push_back(check("wrong-dim-hook-rejected", false,
                             std::string("wrong error class: ") + e.kind()));
    }
  }

  {
    // Hook must fire once per layer in ascending order for every generated
    // step, and never during prompt encoding.
    std::vector<std::pair<Index, Index>> calls;  // (step, layer)
    LayerHook recorder = [&](Index layer, Index step, const Vector& state) {
      calls.emplace_back(step, layer);
      return state;
    };
    GenerateOptions opts;
    opts.max_tokens = max_tokens;
    opts.hook = &recorder;
    runtime.generate(sample_prompt, opts);
    bool order_ok =
        calls.size() == static_cast<size_t>(max_tokens * info.layers);
    size_t idx = 0;
    for (Index t = 1; t <= max_tokens && order_ok; ++t) {
      for (Index l = 1; l <= info.layers && order_ok; ++l, ++idx) {
        order_ok = calls[idx] == std::make_pair(t, l);
      }
    }
    std::ostringstream detail;
    detail << calls.size() << " calls";
    checks.push_back(check("hook-order", order_ok, detail.str()));
  }

  try {
    GenerateOptions opts;
    opts.max_tokens = 0;
    runtime.generate(sample_prompt, opts);
    checks.push_back(check("max-tokens-validated", false, "no error raised"));
  } catch (const InputError&) {
    checks.push_back(check("max-tokens-validated", true));
  } catch (const Error& e) {
    checks.push_back(check("max-tokens-validated", false,
                           std::string("wrong error class: ") + e.kind()));
  }

  return checks;
}

bool all_passed(const std::vector<ConformanceCheck>& checks) {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return !checks.empty();
}

}  // namespace traitlens
