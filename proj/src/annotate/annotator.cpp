#include "alsent/annotate/annotator.hpp"

#include <algorithm>
#include <cctype>

namespace alsent::annotate {

namespace {

std::string lower_ascii(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

bool is_trimmable(unsigned char c) { return std::isspace(c) || std::ispunct(c); }

std::string trim_outer(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_trimmable(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_trimmable(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

std::string source_name(Source source) {
  switch (source) {
    case Source::kLlm:
      return "llm";
    case Source::kHuman:
      return "human";
    case Source::kOracle:
      return "oracle";
  }
  return "unknown";
}

Source parse_source(const std::string& name) {
  if (name == "llm") return Source::kLlm;
  if (name == "human") return Source::kHuman;
  if (name == "oracle") return Source::kOracle;
  throw Error("SpecError", "unknown annotation source '" + name + "'");
}

std::string build_prompt(const AnnotationRequest& request) {
  std::string labels;
  for (std::size_t i = 0; i < request.label_set.size(); ++i) {
    if (i > 0) labels += ", ";
    labels += request.label_set[i];
  }
  return "You will be given an Arabic review. Classify its sentiment as one of the following: " + labels +
         ".\nRespond with ONLY ONE label from this list. No explanation is needed.\n\nReview: \"" + request.raw_text +
         "\"";
}

std::string parse_label(const std::string& raw_response, const std::vector<std::string>& label_set) {
  for (const auto& label : label_set) {
    if (raw_response == label) return label;
  }
  const std::string cleaned = lower_ascii(trim_outer(raw_response));
  for (const auto& label : label_set) {
    if (cleaned == lower_ascii(label)) return label;
  }
  const std::string haystack = lower_ascii(raw_response);
  const std::string* found = nullptr;
  for (const auto& label : label_set) {
    if (haystack.find(lower_ascii(label)) != std::string::npos) {
      if (found != nullptr) throw UnparseableResponse(raw_response);
      found = &label;
    }
  }
  if (found == nullptr) throw UnparseableResponse(raw_response);
  return *found;
}

std::vector<AnnotationOutcome> OracleAnnotator::annotate(const std::vector<AnnotationRequest>& requests) {
  std::vector<AnnotationOutcome> out;
  out.reserve(requests.size());
  for (const auto& r : requests) {
    const auto it = gold_.find(r.sample_id);
    if (it == gold_.end()) throw Error("MissingGold", "no gold label for sample " + r.sample_id);
    out.push_back({AnnotationResult{r.sample_id, it->second, Source::kOracle, std::nullopt, std::nullopt}, std::nullopt});
  }
  return out;
}

}  // namespace alsent::annotate
