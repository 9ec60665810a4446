#include "alsent/annotate/llm.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

namespace alsent::annotate {

namespace {

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("SpecError", "endpoint_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class AuthError : public Error {
 public:
  explicit AuthError(const std::string& what) : Error("AuthError", what) {}
};

// Attempt result: either a response text or a failure, plus whether it is
// worth retrying.
struct Attempt {
  std::optional<std::string> content;
  AnnotationFailure failure;
  bool retryable = false;
};

}  // namespace

void LlmConfig::validate() const {
  if (model_name.empty()) throw Error("SpecError", "LLM config needs model_name");
  if (temperature != 0.0) throw Error("SpecError", "temperature must be 0");
  if (max_tokens < 1) throw Error("SpecError", "max_tokens must be positive");
  if (max_retries < 0 || parallelism < 1 || timeout_ms < 1 || backoff_ms < 0) {
    throw Error("SpecError", "max_retries, parallelism, timeout_ms or backoff_ms out of range");
  }
  split_url(endpoint_url);
}

LlmConfig LlmConfig::from_json(const nlohmann::json& j) {
  LlmConfig c;
  c.model_name = j.at("model_name").get<std::string>();
  c.name = j.value("name", c.model_name);
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.parallelism = j.value("parallelism", c.parallelism);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
  c.validate();
  return c;
}

std::string build_request_body(const LlmConfig& config, const std::string& prompt) {
  nlohmann::ordered_json body;
  body["model"] = config.model_name;
  body["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt}}});
  if (std::floor(config.temperature) == config.temperature) {
    body["temperature"] = static_cast<long>(config.temperature);
  } else {
    body["temperature"] = config.temperature;
  }
  body["max_tokens"] = config.max_tokens;
  return body.dump();
}

LlmAnnotator::LlmAnnotator(LlmConfig config) : config_(std::move(config)) { config_.validate(); }

AnnotationOutcome LlmAnnotator::annotate_one(const AnnotationRequest& request, const std::string& api_key) const {
  const Endpoint endpoint = split_url(config_.endpoint_url);
  httplib::Client client(endpoint.origin);
  const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const httplib::Headers headers{{"Authorization", "Bearer " + api_key}};
  const std::string body = build_request_body(config_, build_prompt(request));

  Attempt last;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.backoff_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(config_.backoff_ms) << (attempt - 1)));
    }
    const auto start = std::chrono::steady_clock::now();
    const httplib::Result res = client.Post(endpoint.path, headers, body, "application/json");
    const long latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count();
    last = Attempt{};
    last.failure.sample_id = request.sample_id;
    if (!res) {
      last.failure.code = "TransportError";
      last.failure.message = httplib::to_string(res.error());
      last.retryable = true;
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw AuthError("endpoint rejected the API key (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
      last.failure.code = "TransportError";
      last.failure.message = "HTTP " + std::to_string(res->status);
      last.retryable = res->status == 429 || res->status >= 500;
      if (!last.retryable) break;
      continue;
    }
    std::string content;
    try {
      const auto j = nlohmann::json::parse(res->body);
      content = j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      last.failure.code = "TransportError";
      last.failure.message = std::string("malformed completion body: ") + e.what();
      last.retryable = true;
      continue;
    }
    try {
      const std::string label = parse_label(content, request.label_set);
      return {AnnotationResult{request.sample_id, label, Source::kLlm, content, latency}, std::nullopt};
    } catch (const UnparseableResponse& e) {
      last.failure.code = e.code();
      last.failure.message = e.what();
      last.failure.raw_response = content;
      last.retryable = true;
    }
  }
  return {std::nullopt, last.failure};
}

std::vector<AnnotationOutcome> LlmAnnotator::annotate(const std::vector<AnnotationRequest>& requests) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') throw AuthError("environment variable " + config_.api_key_env + " is not set");
  const std::string api_key = key;

  std::vector<AnnotationOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;
  std::atomic<bool> stop{false};
  const auto worker = [&] {
    while (!stop) {
      const std::size_t i = next++;
      if (i >= requests.size()) return;
      try {
        out[i] = annotate_one(requests[i], api_key);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        stop = true;
      }
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(config_.parallelism), requests.size());
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  pool.clear();
  if (fatal) std::rethrow_exception(fatal);
  return out;
}

}  // namespace alsent::annotate
