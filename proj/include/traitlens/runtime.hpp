#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "traitlens/types.hpp"

namespace traitlens {

struct RuntimeInfo {
  std::string id;
  Index layers = 0;
  Index dim = 0;
  std::string vocabulary;
};

/// Hook invoked during generation, once per layer in ascending order for
/// every generated-token step t (1-based). Returns the replacement state,
/// which downstream layers and the attention cache consume. Never invoked
/// while the prompt is being encoded. Must be pure given captured state.
using LayerHook =
    std::function<Vector(Index layer, Index step, const Vector& state)>;

struct GenerateOptions {
  Index max_tokens = 16;
  const LayerHook* hook = nullptr;
  HookMode mode = HookMode::in_pass;
};

/// The model-runtime contract adapters implement: tokenization, forward
/// capture of per-layer final-token states, and hook-mediated generation.
/// Implementations must be deterministic given their construction seed, and
/// `capture`/`generate` must be safe to call from parallel workers (all
/// per-call state local).
class Runtime {
 public:
  virtual ~Runtime() = default;

  virtual RuntimeInfo info() const = 0;

  virtual std::vector<std::string> tokenize(const std::string& text) const = 0;

  /// Per-layer hidden states of the final token: an L x d matrix, row l-1
  /// holding layer l. Throws InputError on an empty token sequence.
  virtual MatrixF capture(const std::vector<std::string>& tokens) const = 0;

  virtual GenerationTrace generate(const std::string& prompt,
                                   const GenerateOptions& options) const = 0;
};

/// capture() with the contract checks applied on behalf of the adapter.
MatrixF forward_capture(const Runtime& runtime,
                        const std::vector<std::string>& tokens);

/// Runs every prompt through the runtime and collects one ActivationRecord
/// per prompt (record label = prompt label). The returned dataset carries no
/// split; apply stratified_split before probing.
ProbeDataset extract_probe_dataset(const Runtime& runtime,
                                   const LabelSet& labels,
                                   const std::vector<PromptSpec>& prompts);

}  // namespace traitlens
