#pragma once

#include <string>
#include <vector>

#include "traitlens/runtime.hpp"

namespace traitlens {

struct ConformanceCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runtime-adapter contract suite: shape and determinism of capture, hook
/// ordering and purity guarantees of generate, and the input-validation
/// behaviour every adapter must implement. `sample_prompt` must tokenize to
/// at least one token under the runtime.
std::vector<ConformanceCheck> run_conformance(const Runtime& runtime,
                                              const std::string& sample_prompt,
                                              Index max_tokens = 8);

bool all_passed(const std::vector<ConformanceCheck>& checks);

}  // namespace traitlens
