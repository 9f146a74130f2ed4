#pragma once

#include <memory>
#include <string>

#include "traitlens/evaluation.hpp"

namespace traitlens {

/// Common knobs for the HTTP-backed judges. `token_env` names the
/// environment variable holding the bearer token; requests are throttled to
/// `max_requests_per_second` when positive.
struct HttpJudgeConfig {
  std::string base_url;  // e.g. http://127.0.0.1:8087
  int timeout_seconds = 30;
  double max_requests_per_second = 0.0;
  int retries = 2;
  std::string token_env = "TRAITLENS_JUDGE_TOKEN";
};

struct ChatJudgeConfig : HttpJudgeConfig {
  std::string model = "judge-model";
  std::string path = "/v1/chat/completions";
  double temperature = 0.0;  // deterministic decoding where the endpoint allows
};

struct ClassifierJudgeConfig : HttpJudgeConfig {
  std::string path = "/classify";
};

/// Chat-completion judge: `rate` sends the byte-exact rating prompt and
/// parses a single 1-5 integer; `classify` asks for one label name verbatim.
std::unique_ptr<Judge> make_chat_judge(const LabelSet& labels,
                                       const ChatJudgeConfig& config);

/// Classifier judge: POST {"text": ...} -> {"label": ...}. `rate` is not part
/// of this judge's contract and raises JudgeError (samples are excluded).
std::unique_ptr<Judge> make_classifier_judge(const LabelSet& labels,
                                             const ClassifierJudgeConfig& config);

}  // namespace traitlens
