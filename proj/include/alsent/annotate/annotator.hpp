#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "alsent/error.hpp"

namespace alsent::annotate {

enum class Source { kLlm, kHuman, kOracle };
// "llm", "human", "oracle".
std::string source_name(Source source);
Source parse_source(const std::string& name);

struct AnnotationRequest {
  std::string sample_id;
  // Original review text, before any preprocessing.
  std::string raw_text;
  std::vector<std::string> label_set;
};

struct AnnotationResult {
  std::string sample_id;
  std::string label;
  Source source = Source::kOracle;
  std::optional<std::string> raw_response;
  std::optional<long> latency_ms;
};

struct AnnotationFailure {
  std::string sample_id;
  std::string code;  // TransportError, UnparseableResponse, ...
  std::string message;
  std::optional<std::string> raw_response;
};

// Exactly one of result / failure is set.
struct AnnotationOutcome {
  std::optional<AnnotationResult> result;
  std::optional<AnnotationFailure> failure;

  bool ok() const { return result.has_value(); }
  const std::string& sample_id() const { return ok() ? result->sample_id : failure->sample_id; }
};

class UnparseableResponse : public Error {
 public:
  explicit UnparseableResponse(std::string raw)
      : Error("UnparseableResponse", "no unique label in response: \"" + raw + "\""), raw_(std::move(raw)) {}
  const std::string& raw_response() const { return raw_; }

 private:
  std::string raw_;
};

class Annotator {
 public:
  virtual ~Annotator() = default;
  virtual Source source() const = 0;
  virtual std::string name() const { return source_name(source()); }
  // One outcome per request, in request order. Whole-call failures (bad
  // credentials, cancellation, missing gold) are thrown.
  virtual std::vector<AnnotationOutcome> annotate(const std::vector<AnnotationRequest>& requests) = 0;
  // Called once the caller has durably stored the labels for these samples.
  virtual void commit(const std::vector<std::string>& /*sample_ids*/) {}
};

// The fixed instruction prompt, with [LABELS] = labels joined by ", ".
std::string build_prompt(const AnnotationRequest& request);

// Exact match, then case-insensitive after trimming whitespace and
// surrounding punctuation, then a unique label name contained in the
// response. Throws UnparseableResponse.
std::string parse_label(const std::string& raw_response, const std::vector<std::string>& label_set);

// Replays gold labels. Throws Error("MissingGold") for unknown ids.
class OracleAnnotator : public Annotator {
 public:
  explicit OracleAnnotator(std::map<std::string, std::string> gold) : gold_(std::move(gold)) {}
  Source source() const override { return Source::kOracle; }
  std::vector<AnnotationOutcome> annotate(const std::vector<AnnotationRequest>& requests) override;

 private:
  std::map<std::string, std::string> gold_;
};

}  // namespace alsent::annotate
