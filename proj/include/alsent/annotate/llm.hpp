#pragma once

#include <functional>
#include <string>

#include <json.hpp>

#include "alsent/annotate/annotator.hpp"

namespace alsent::annotate {

struct LlmConfig {
  std::string name;  // label for reports; defaults to model_name
  std::string endpoint_url = "https://openrouter.ai/api/v1/chat/completions";
  std::string model_name;
  double temperature = 0.0;
  int max_tokens = 15;
  std::string api_key_env = "OPENROUTER_API_KEY";
  int max_retries = 3;
  int parallelism = 4;
  int timeout_ms = 30000;
  // Wait before retry k (1-based) is backoff_ms * 2^(k-1).
  int backoff_ms = 500;

  void validate() const;
  static LlmConfig from_json(const nlohmann::json& j);
};

// {"model", "messages": [{"role": "user", "content"}], "temperature", "max_tokens"}
// in that key order. Integral temperatures are written as integers.
std::string build_request_body(const LlmConfig& config, const std::string& prompt);

// OpenAI-compatible chat-completions client. Each request gets up to
// 1 + max_retries attempts; transport errors, HTTP 429/5xx, malformed
// bodies and unparseable labels are retried. HTTP 401/403 or a missing
// key throws AuthError for the whole call.
class LlmAnnotator : public Annotator {
 public:
  explicit LlmAnnotator(LlmConfig config);
  Source source() const override { return Source::kLlm; }
  std::string name() const override { return config_.name.empty() ? config_.model_name : config_.name; }
  std::vector<AnnotationOutcome> annotate(const std::vector<AnnotationRequest>& requests) override;
  const LlmConfig& config() const { return config_; }

 private:
  AnnotationOutcome annotate_one(const AnnotationRequest& request, const std::string& api_key) const;

  LlmConfig config_;
};

}  // namespace alsent::annotate
