#include "traitlens/http_judge.hpp"

#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace traitlens {

namespace {

using nlohmann::json;

class RateLimiter {
 public:
  explicit RateLimiter(double max_rps) : min_gap_(max_rps > 0.0 ? 1.0 / max_rps : 0.0) {}

  void acquire() {
    if (min_gap_ <= 0.0) return;
    std::unique_lock<std::mutex> lock(mu_);
    const auto now = std::chrono::steady_clock::now();
    const auto gap = std::chrono::duration<double>(min_gap_);
    if (last_.time_since_epoch().count() != 0 && now - last_ < gap) {
      const auto wait = gap - (now - last_);
      std::this_thread::sleep_for(wait);
    }
    last_ = std::chrono::steady_clock::now();
  }

 private:
  double min_gap_;
  std::mutex mu_;
  std::chrono::steady_clock::time_point last_;
};

std::string bearer_token(const std::string& env) {
  if (env.empty()) return {};
  const char* v = std::getenv(env.c_str());
  return v ? std::string(v) : std::string();
}

class HttpBase {
 protected:
  HttpBase(const HttpJudgeConfig& cfg)
      : client_(cfg.base_url), limiter_(cfg.max_requests_per_second),
        retries_(cfg.retries), token_(bearer_token(cfg.token_env)) {
    if (cfg.base_url.empty()) {
      throw ConfigError("http judge needs a base_url");
    }
    client_.set_connection_timeout(cfg.timeout_seconds);
    client_.set_read_timeout(cfg.timeout_seconds);
  }

  json post_json(const std::string& path, const json& body) {
    httplib::Headers headers;
    if (!token_.empty()) {
      headers.emplace("Authorization", "Bearer " + token_);
    }
    std::string last_error;
    for (int attempt = 0; attempt <= retries_; ++attempt) {
      limiter_.acquire();
      auto res = client_.Post(path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "connection failed";
        continue;
      }
      if (res->status != 200) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      try {
        return json::parse(res->body);
      } catch (const json::exception& e) {
        last_error = std::string("bad json: ") + e.what();
      }
    }
    throw JudgeError("judge endpoint failed after retries: " + last_error);
  }

  httplib::Client client_;
  RateLimiter limiter_;
  int retries_;
  std::string token_;
};

class ChatJudge final : public Judge, HttpBase {
 public:
  ChatJudge(LabelSet labels, const ChatJudgeConfig& cfg)
      : HttpBase(cfg), labels_(std::move(labels)), cfg_(cfg) {}

  std::string kind() const override { return "chat"; }

  Index classify(const std::string& text) override {
    std::string prompt = "Classify the personality trait of the following "
                         "response. Reply with exactly one of:";
    for (Index y = 0; y < labels_.size(); ++y) {
      prompt += (y == 0 ? " " : ", ") + labels_.at(y).name;
    }
    prompt += ".\n\nResponse: " + text + "\n\nLabel:";
    const std::string reply = chat(prompt);
    for (Index y = 0; y < labels_.size(); ++y) {
      if (reply.find(labels_.at(y).name) != std::string::npos ||
          reply.find(labels_.at(y).id) != std::string::npos) {
        return y;
      }
    }
    throw JudgeError("chat judge reply matched no label: '" + reply + "'");
  }

  int rate(const std::string& text, Index target) override {
    if (target < 0 || target >= labels_.size()) {
      throw InputError("rating target out of range");
    }
    const std::string prompt = render_pae_prompt(labels_.at(target), text);
    return parse_rating(chat(prompt));
  }

 private:
  std::string chat(const std::string& prompt) {
    json body = {
        {"model", cfg_.model},
        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", cfg_.temperature},
    };
    const json reply = post_json(cfg_.path, body);
    try {
      return reply.at("choices").at(0).at("message").at("content")
          .get<std::string>();
    } catch (const json::exception&) {
      throw JudgeError("chat reply missing choices[0].message.content");
    }
  }

  LabelSet labels_;
  ChatJudgeConfig cfg_;
};

class ClassifierJudge final : public Judge, HttpBase {
 public:
  ClassifierJudge(LabelSet labels, const ClassifierJudgeConfig& cfg)
      : HttpBase(cfg), labels_(std::move(labels)), cfg_(cfg) {}

  std::string kind() const override { return "classifier"; }

  Index classify(const std::string& text) override {
    const json reply = post_json(cfg_.path, json{{"text", text}});
    std::string label;
    try {
      label = reply.at("label").get<std::string>();
    } catch (const json::exception&) {
      throw JudgeError("classifier reply missing 'label'");
    }
    if (!labels_.contains(label)) {
      throw JudgeError("classifier returned unknown label '" + label + "'");
    }
    return labels_.index_of(label);
  }

  int rate(const std::string&, Index) override {
    throw JudgeError("classifier judge does not rate; use chat or lexicon");
  }

 private:
  LabelSet labels_;
  ClassifierJudgeConfig cfg_;
};

}  // namespace

std::unique_ptr<Judge> make_chat_judge(const LabelSet& labels,
                                       const ChatJudgeConfig& config) {
  return std::make_unique<ChatJudge>(labels, config);
}

std::unique_ptr<Judge> make_classifier_judge(
    const LabelSet& labels, const ClassifierJudgeConfig& config) {
  return std::make_unique<ClassifierJudge>(labels, config);
}

}  // namespace traitlens
