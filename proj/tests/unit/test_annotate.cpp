#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <map>
#include <mutex>
#include <thread>

#include "alsent/annotate/benchmark.hpp"
#include "alsent/annotate/llm.hpp"
#include "alsent/annotate/task_queue.hpp"
#include "support/mock_chat_server.hpp"

using namespace alsent;
using namespace alsent::annotate;

namespace {

const char* kKeyEnv = "ALSENT_TEST_API_KEY";

LlmConfig mock_config(const MockChatServer& server) {
  setenv(kKeyEnv, "test-key", 1);
  LlmConfig c;
  c.endpoint_url = server.url();
  c.model_name = "mock-model";
  c.api_key_env = kKeyEnv;
  c.max_retries = 3;
  c.parallelism = 2;
  c.timeout_ms = 5000;
  c.backoff_ms = 1;
  return c;
}

const std::vector<std::string> kBinary{"Positive", "Negative"};

std::filesystem::path temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "alsent_test_annotate";
  std::filesystem::create_directories(dir);
  const auto p = dir / name;
  std::filesystem::remove(p);
  return p;
}

text::Dataset balanced_dataset(std::size_t n) {
  text::Dataset d;
  d.name = "balanced";
  d.label_set = text::LabelSet({text::Label::kNegative, text::Label::kPositive});
  for (std::size_t i = 0; i < n; ++i) {
    d.samples.push_back({"s" + std::to_string(i), "نص " + std::to_string(i),
                         i % 2 == 0 ? text::Label::kPositive : text::Label::kNegative});
  }
  return d;
}

class FixedAnnotator : public Annotator {
 public:
  explicit FixedAnnotator(std::string label) : label_(std::move(label)) {}
  Source source() const override { return Source::kLlm; }
  std::string name() const override { return "fixed-" + label_; }
  std::vector<AnnotationOutcome> annotate(const std::vector<AnnotationRequest>& requests) override {
    std::vector<AnnotationOutcome> out;
    for (const auto& r : requests) out.push_back({AnnotationResult{r.sample_id, label_, Source::kLlm, label_, 0}, std::nullopt});
    return out;
  }

 private:
  std::string label_;
};

}  // namespace

TEST_CASE("prompt template is reproduced exactly") {
  const AnnotationRequest req{"1", "خدمة ممتازة", kBinary};
  CHECK(build_prompt(req) ==
        "You will be given an Arabic review. Classify its sentiment as one of the following: Positive, Negative.\n"
        "Respond with ONLY ONE label from this list. No explanation is needed.\n"
        "\n"
        "Review: \"خدمة ممتازة\"");
  CHECK(build_prompt({"2", "", kBinary}).ends_with("Review: \"\""));
  CHECK(build_prompt({"3", "x", {"Negative", "Neutral", "Positive"}})
            .find("following: Negative, Neutral, Positive.\n") != std::string::npos);
}

TEST_CASE("parse_label precedence") {
  CHECK(parse_label("Positive", kBinary) == "Positive");
  CHECK(parse_label(" negative.\n", kBinary) == "Negative");
  CHECK(parse_label("\"POSITIVE\"", kBinary) == "Positive");
  CHECK(parse_label("The sentiment is Negative", kBinary) == "Negative");
  CHECK_THROWS_AS(parse_label("Positive or Negative", kBinary), UnparseableResponse);
  CHECK_THROWS_AS(parse_label("", kBinary), UnparseableResponse);
  CHECK_THROWS_AS(parse_label("mixed", kBinary), UnparseableResponse);
  try {
    parse_label("no idea", kBinary);
    FAIL("expected throw");
  } catch (const UnparseableResponse& e) {
    CHECK(e.raw_response() == "no idea");
    CHECK(e.code() == "UnparseableResponse");
  }
}

TEST_CASE("request body is bit-exact and carries the bearer key") {
  std::mutex m;
  std::string body, auth, content_type;
  MockChatServer server([&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(m);
    body = req.body;
    auth = req.get_header_value("Authorization");
    content_type = req.get_header_value("Content-Type");
    MockChatServer::reply(res, "Negative");
  });
  LlmAnnotator llm(mock_config(server));
  const auto out = llm.annotate({{"r1", "خدمة ممتازة", kBinary}});
  REQUIRE(out.size() == 1);
  REQUIRE(out[0].ok());
  CHECK(out[0].result->label == "Negative");
  CHECK(out[0].result->source == Source::kLlm);
  CHECK(out[0].result->raw_response == "Negative");
  CHECK(body ==
        "{\"model\":\"mock-model\",\"messages\":[{\"role\":\"user\",\"content\":\"You will be given an Arabic review. "
        "Classify its sentiment as one of the following: Positive, Negative.\\nRespond with ONLY ONE label from this "
        "list. No explanation is needed.\\n\\nReview: \\\"خدمة ممتازة\\\"\"}],\"temperature\":0,\"max_tokens\":15}");
  CHECK(auth == "Bearer test-key");
  CHECK(content_type == "application/json");
}

TEST_CASE("retry then succeed, and exhaustion") {
  std::atomic<int> calls{0};
  SUBCASE("two 500s then success") {
    MockChatServer server([&](const httplib::Request&, httplib::Response& res) {
      if (++calls <= 2) {
        res.status = 500;
        return;
      }
      MockChatServer::reply(res, "Positive");
    });
    LlmAnnotator llm(mock_config(server));
    const auto out = llm.annotate({{"r1", "x", kBinary}});
    REQUIRE(out[0].ok());
    CHECK(out[0].result->label == "Positive");
    CHECK(calls == 3);
  }
  SUBCASE("always 500 fails after 1 + max_retries attempts") {
    MockChatServer server([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 503;
    });
    auto cfg = mock_config(server);
    cfg.max_retries = 2;
    LlmAnnotator llm(cfg);
    const auto out = llm.annotate({{"r1", "x", kBinary}});
    REQUIRE_FALSE(out[0].ok());
    CHECK(out[0].failure->code == "TransportError");
    CHECK(out[0].failure->sample_id == "r1");
    CHECK(calls == 3);
  }
  SUBCASE("unparseable output is retried then reported with the raw text") {
    MockChatServer server([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      MockChatServer::reply(res, "Positive or Negative");
    });
    LlmAnnotator llm(mock_config(server));
    const auto out = llm.annotate({{"r1", "x", kBinary}});
    REQUIRE_FALSE(out[0].ok());
    CHECK(out[0].failure->code == "UnparseableResponse");
    CHECK(out[0].failure->raw_response == "Positive or Negative");
    CHECK(calls == 4);
  }
  SUBCASE("malformed JSON then success") {
    MockChatServer server([&](const httplib::Request&, httplib::Response& res) {
      if (++calls == 1) {
        res.set_content("{not json", "application/json");
        return;
      }
      MockChatServer::reply(res, "negative");
    });
    LlmAnnotator llm(mock_config(server));
    const auto out = llm.annotate({{"r1", "x", kBinary}});
    REQUIRE(out[0].ok());
    CHECK(out[0].result->label == "Negative");
    CHECK(calls == 2);
  }
  SUBCASE("client error is not retried") {
    MockChatServer server([&](const httplib::Request&, httplib::Response& res) {
      ++calls;
      res.status = 400;
    });
    LlmAnnotator llm(mock_config(server));
    const auto out = llm.annotate({{"r1", "x", kBinary}});
    REQUIRE_FALSE(out[0].ok());
    CHECK(out[0].failure->code == "TransportError");
    CHECK(calls == 1);
  }
}

TEST_CASE("auth failures abort the call") {
  MockChatServer server([](const httplib::Request&, httplib::Response& res) { res.status = 401; });
  auto cfg = mock_config(server);
  LlmAnnotator rejected(cfg);
  try {
    rejected.annotate({{"r1", "x", kBinary}, {"r2", "y", kBinary}});
    FAIL("expected AuthError");
  } catch (const Error& e) {
    CHECK(e.code() == "AuthError");
  }
  cfg.api_key_env = "ALSENT_TEST_UNSET_KEY";
  unsetenv("ALSENT_TEST_UNSET_KEY");
  LlmAnnotator missing(cfg);
  try {
    missing.annotate({{"r1", "x", kBinary}});
    FAIL("expected AuthError");
  } catch (const Error& e) {
    CHECK(e.code() == "AuthError");
  }
}

TEST_CASE("config validation") {
  LlmConfig c;
  c.model_name = "m";
  CHECK_NOTHROW(c.validate());
  CHECK(c.max_tokens == 15);
  CHECK(c.temperature == 0.0);
  c.temperature = 0.7;
  CHECK_THROWS(c.validate());
  c.temperature = 0;
  c.endpoint_url = "localhost/v1";
  CHECK_THROWS(c.validate());
  const auto parsed = LlmConfig::from_json({{"model_name", "openai/gpt-4o"}, {"parallelism", 8}});
  CHECK(parsed.parallelism == 8);
  CHECK(parsed.name == "openai/gpt-4o");
  CHECK(build_request_body(parsed, "p") ==
        R"({"model":"openai/gpt-4o","messages":[{"role":"user","content":"p"}],"temperature":0,"max_tokens":15})");
}

TEST_CASE("label names round-trip through prompt and parser under an echoing mock") {
  // The mock answers with the review text, which the test sets to a label
  // name in assorted surface forms.
  MockChatServer server([](const httplib::Request& req, httplib::Response& res) {
    MockChatServer::reply(res, MockChatServer::review_of(req));
  });
  auto cfg = mock_config(server);
  cfg.parallelism = 4;
  LlmAnnotator llm(cfg);
  const std::vector<std::vector<std::string>> sets{
      {"Negative", "Positive"}, {"Negative", "Neutral", "Positive"}, {"Positive", "Negative"}};
  for (const auto& labels : sets) {
    std::vector<AnnotationRequest> reqs;
    std::vector<std::string> expected;
    for (const auto& l : labels) {
      std::string lower = l;
      for (auto& ch : lower) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      for (const std::string& form : {l, lower, " " + l + ".\n", "Label: " + l}) {
        reqs.push_back({"id" + std::to_string(reqs.size()), form, labels});
        expected.push_back(l);
      }
    }
    const auto out = llm.annotate(reqs);
    REQUIRE(out.size() == reqs.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
      REQUIRE(out[i].ok());
      CHECK(out[i].result->sample_id == reqs[i].sample_id);
      CHECK(out[i].result->label == expected[i]);
    }
  }
}

TEST_CASE("order and partition are preserved with bounded parallelism") {
  std::atomic<int> in_flight{0}, peak{0}, calls{0};
  MockChatServer server([&](const httplib::Request& req, httplib::Response& res) {
    const int now = ++in_flight;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    --in_flight;
    ++calls;
    const std::string review = MockChatServer::review_of(req);
    if (review.starts_with("bad")) {
      res.status = 500;
      return;
    }
    MockChatServer::reply(res, review);
  });
  auto cfg = mock_config(server);
  cfg.parallelism = 3;
  cfg.max_retries = 1;
  LlmAnnotator llm(cfg);
  std::vector<AnnotationRequest> reqs;
  for (int i = 0; i < 30; ++i) {
    const bool bad = i % 7 == 3;
    reqs.push_back({"s" + std::to_string(i), bad ? "bad" : (i % 2 ? "Positive" : "Negative"), kBinary});
  }
  const auto out = llm.annotate(reqs);
  REQUIRE(out.size() == reqs.size());
  int failures = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].sample_id() == reqs[i].sample_id);
    CHECK(out[i].ok() != out[i].failure.has_value());
    if (!out[i].ok()) {
      ++failures;
      CHECK(reqs[i].raw_text == "bad");
    } else {
      CHECK(out[i].result->label == reqs[i].raw_text);
    }
  }
  CHECK(failures == 4);
  CHECK(calls == 26 + 4 * 2);
  CHECK(peak <= 3);
}

TEST_CASE("oracle annotator") {
  OracleAnnotator oracle({{"a", "Positive"}, {"b", "Negative"}});
  CHECK(oracle.annotate({}).empty());
  const auto out = oracle.annotate({{"a", "t", kBinary}, {"b", "t", kBinary}});
  REQUIRE(out.size() == 2);
  CHECK(out[0].result->label == "Positive");
  CHECK(out[1].result->label == "Negative");
  CHECK(out[0].result->source == Source::kOracle);
  try {
    oracle.annotate({{"zzz", "t", kBinary}});
    FAIL("expected MissingGold");
  } catch (const Error& e) {
    CHECK(e.code() == "MissingGold");
  }
}

TEST_CASE("task queue resolve semantics and persistence") {
  const auto file = temp_path("queue.json");
  {
    TaskQueue q(file);
    const auto ids = q.enqueue({{"s1", "نص أول", kBinary}, {"s2", "نص ثاني", kBinary}});
    CHECK(ids == std::vector<std::string>{"task-1", "task-2"});
    CHECK(q.enqueue({{"s1", "نص أول", kBinary}}) == std::vector<std::string>{"task-1"});
    CHECK(q.pending().size() == 2);
    CHECK(q.resolve("task-9", "Positive") == ResolveStatus::kUnknownTask);
    CHECK(q.resolve("task-1", "Neutral") == ResolveStatus::kInvalidLabel);
    CHECK(q.pending().size() == 2);
    CHECK(q.resolve("task-1", "Positive") == ResolveStatus::kResolved);
    CHECK(q.resolve("task-1", "Negative") == ResolveStatus::kAlreadyResolved);
    CHECK(q.find("task-1")->label == "Positive");
  }
  {
    TaskQueue restarted(file);
    const auto pending = restarted.pending();
    REQUIRE(pending.size() == 1);
    CHECK(pending[0].task_id == "task-2");
    CHECK(pending[0].text == "نص ثاني");
    CHECK(restarted.find("task-1")->label == "Positive");
    restarted.acknowledge({"s1"});
    CHECK_FALSE(restarted.find("task-1").has_value());
    CHECK(restarted.enqueue({{"s3", "x", kBinary}}) == std::vector<std::string>{"task-3"});
  }
}

TEST_CASE("malformed queue file is rejected") {
  const auto file = temp_path("broken_queue.json");
  {
    std::ofstream(file) << "{\"schema_version\": 1, \"tasks\": 3";
  }
  try {
    TaskQueue q(file);
    FAIL("expected QueueError");
  } catch (const Error& e) {
    CHECK(e.code() == "QueueError");
  }
}

TEST_CASE("concurrent resolvers: each task resolved exactly once") {
  TaskQueue q;
  std::vector<AnnotationRequest> reqs;
  for (int i = 0; i < 50; ++i) reqs.push_back({"s" + std::to_string(i), "t", kBinary});
  const auto ids = q.enqueue(reqs);
  std::atomic<int> wins{0}, losses{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (const auto& id : ids) {
        if (q.resolve(id, "Positive") == ResolveStatus::kResolved) {
          ++wins;
        } else {
          ++losses;
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  CHECK(wins == 50);
  CHECK(losses == 150);
  CHECK(q.pending_count() == 0);
}

TEST_CASE("human annotator blocks until labels arrive and honours cancellation") {
  TaskQueue q;
  std::stop_source stop;
  HumanAnnotator human(q, stop.get_token());
  std::thread labeler([&] {
    while (q.pending_count() < 2) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    for (const Task& t : q.pending()) q.resolve(t.task_id, t.sample_id == "a" ? "Negative" : "Positive");
  });
  const auto out = human.annotate({{"a", "x", kBinary}, {"b", "y", kBinary}});
  labeler.join();
  REQUIRE(out.size() == 2);
  CHECK(out[0].result->label == "Negative");
  CHECK(out[1].result->label == "Positive");
  CHECK(out[0].result->source == Source::kHuman);
  human.commit({"a", "b"});
  CHECK(q.to_json()["tasks"].empty());

  std::thread canceller([&] {
    while (q.pending_count() < 1) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    stop.request_stop();
  });
  CHECK_THROWS_AS(human.annotate({{"c", "z", kBinary}}), Cancelled);
  canceller.join();
  CHECK(q.pending_count() == 1);
}

TEST_CASE("benchmark draws one sample set for every annotator") {
  const text::Dataset data = balanced_dataset(400);
  std::map<std::string, std::string> gold;
  for (const auto& s : data.samples) gold[s.id] = std::string(text::label_name(*s.gold_label));
  OracleAnnotator oracle(gold);
  FixedAnnotator always_negative("Negative");
  const auto report = benchmark_annotators(data, 200, {&oracle, &always_negative}, 7);
  REQUIRE(report.scores.size() == 2);
  CHECK(report.sample_ids.size() == 200);
  CHECK(std::set<std::string>(report.sample_ids.begin(), report.sample_ids.end()).size() == 200);
  CHECK(report.scores[0].accuracy == 1.0);

  // Count negatives in the drawn ids directly from the gold map.
  std::size_t negatives = 0;
  for (const auto& id : report.sample_ids) negatives += gold.at(id) == "Negative";
  CHECK(report.scores[1].correct == negatives);
  CHECK(report.scores[1].accuracy == doctest::Approx(negatives / 200.0));
  // Hypergeometric sd of the fraction is about 0.025; 4 sd bound.
  CHECK(std::abs(report.scores[1].accuracy - 0.5) < 0.1);

  const auto again = benchmark_annotators(data, 200, {&oracle, &always_negative}, 7);
  CHECK(benchmark_to_json(again).dump() == benchmark_to_json(report).dump());
  const auto other = benchmark_annotators(data, 200, {&oracle}, 8);
  CHECK(other.sample_ids != report.sample_ids);
  CHECK_THROWS(benchmark_annotators(data, 401, {&oracle}, 7));
}

TEST_CASE("benchmark records per-sample failures as wrong answers") {
  const text::Dataset data = balanced_dataset(20);
  MockChatServer server([](const httplib::Request& req, httplib::Response& res) {
    const std::string review = MockChatServer::review_of(req);
    MockChatServer::reply(res, review.ends_with("3") ? "Positive or Negative" : "Positive");
  });
  auto cfg = mock_config(server);
  cfg.max_retries = 0;
  LlmAnnotator llm(cfg);
  const auto report = benchmark_annotators(data, 20, {&llm}, 1);
  const auto& s = report.scores.at(0);
  // Ids s3 and s13 are unparseable; both have odd index, so gold Negative.
  CHECK(s.errors.size() == 2);
  CHECK(s.correct == 10);
  CHECK(s.accuracy == doctest::Approx(0.5));
  for (const auto& e : s.errors) CHECK(e.code == "UnparseableResponse");
}
