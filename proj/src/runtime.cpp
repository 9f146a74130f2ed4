#include "traitlens/runtime.hpp"

namespace traitlens {

MatrixF forward_capture(const Runtime& runtime,
                        const std::vector<std::string>& tokens) {
  if (tokens.empty()) {
    throw InputError("forward_capture requires a non-empty token sequence");
  }
  const auto info = runtime.info();
  MatrixF states = runtime.capture(tokens);
  if (states.rows() != info.layers || states.cols() != info.dim) {
    throw HookContractError("runtime returned capture of wrong shape");
  }
  return states;
}

ProbeDataset extract_probe_dataset(const Runtime& runtime,
                                   const LabelSet& labels,
                                   const std::vector<PromptSpec>& prompts) {
  ProbeDataset ds;
  ds.labels = labels;
  ds.records.reserve(prompts.size());
  for (const auto& prompt : prompts) {
    if (prompt.label < 0 || prompt.label >= labels.size()) {
      throw InputError("prompt '" + prompt.entity +
                       "' carries a label outside the shared label set");
    }
    ActivationRecord rec;
    rec.id = prompt.entity + "#" + labels.at(prompt.label).id;
    rec.label = prompt.label;
    rec.layers = forward_capture(runtime, runtime.tokenize(prompt.rendered_text));
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

}  // namespace traitlens
