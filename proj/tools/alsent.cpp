// Command-line driver: dataset preparation, baseline and active-learning
// runs, annotator benchmarking, reports and the annotation service.

#include <CLI11.hpp>

#include <pthread.h>

#include <condition_variable>
#include <csignal>
#include <mutex>
#include <iostream>
#include <memory>
#include <optional>
#include <stop_token>
#include <thread>

#include <json.hpp>

#include "alsent/annotate/benchmark.hpp"
#include "alsent/annotate/llm.hpp"
#include "alsent/annotate/task_queue.hpp"
#include "alsent/io.hpp"
#include "alsent/orchestrator/experiment.hpp"
#include "alsent/orchestrator/report.hpp"
#include "alsent/orchestrator/service.hpp"
#include "alsent/orchestrator/synth.hpp"

using namespace alsent;
namespace orch = alsent::orchestrator;

namespace {

struct Common {
  std::string data_dir = "runs";
  std::string resources;
  std::uint64_t split_seed = 0;
  std::size_t vocab_size = text::kDefaultVocabSize;
};

text::Preprocessor preprocessor(const Common& common) {
  return common.resources.empty() ? text::Preprocessor::from_default_resources()
                                  : text::Preprocessor::from_directory(common.resources);
}

orch::PreparedData prepare(const Common& common, const std::string& dataset, std::uint64_t split_seed) {
  orch::PrepareOptions options;
  options.split.seed = split_seed;
  options.vocab_size = common.vocab_size;
  return orch::prepare_file(dataset, preprocessor(common), options);
}

void print(const nlohmann::ordered_json& j) { std::cout << j.dump() << std::endl; }

nlohmann::ordered_json summary(const orch::RunRecord& r) {
  nlohmann::ordered_json j;
  j["run_id"] = r.run_id;
  j["kind"] = orch::kind_name(r.kind);
  j["status"] = r.status;
  j["cycles"] = r.cycles.size();
  if (!r.cycles.empty()) {
    j["label_count"] = r.cycles.back().label_count;
    j["accuracy"] = models::round4(r.cycles.back().metrics.accuracy);
  }
  j["chosen_cycle"] = r.chosen_cycle ? nlohmann::ordered_json(*r.chosen_cycle) : nlohmann::ordered_json(nullptr);
  return j;
}

// SIGINT/SIGTERM request a stop instead of killing the process, so a human
// run can end with its record and queue intact.
std::stop_source install_stop_on_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  std::stop_source source;
  std::thread([set, source]() mutable {
    int sig = 0;
    sigwait(&set, &sig);
    source.request_stop();
  }).detach();
  return source;
}

std::vector<std::unique_ptr<annotate::Annotator>> benchmark_annotators_from(const nlohmann::json& cfg,
                                                                            const text::Dataset& dataset) {
  const nlohmann::json& entries = cfg.is_array() ? cfg : cfg.at("annotators");
  std::vector<std::unique_ptr<annotate::Annotator>> out;
  for (const auto& e : entries) {
    const std::string type = e.value("type", "llm");
    if (type == "oracle") {
      std::map<std::string, std::string> gold;
      for (const auto& s : dataset.samples) {
        if (s.gold_label) gold[s.id] = std::string(text::label_name(*s.gold_label));
      }
      out.push_back(std::make_unique<annotate::OracleAnnotator>(std::move(gold)));
    } else if (type == "llm") {
      out.push_back(std::make_unique<annotate::LlmAnnotator>(annotate::LlmConfig::from_json(e)));
    } else {
      throw Error("SpecError", "unknown annotator type '" + type + "'");
    }
  }
  if (out.empty()) throw Error("SpecError", "annotator config lists no annotators");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning sentiment workbench"};
  app.set_config("--config", "", "TOML/INI file with option values; sections name subcommands");
  app.require_subcommand(1);
  Common common;
  app.add_option("--data-dir", common.data_dir, "Run store directory")->capture_default_str();
  app.add_option("--resources", common.resources, "Directory with stopwords.txt and stem_rules.tsv");
  app.add_option("--split-seed", common.split_seed, "Seed of the 60/20/20 split")->capture_default_str();
  app.add_option("--vocab-size", common.vocab_size, "Vocabulary cap")->capture_default_str();

  auto* prep = app.add_subcommand("prep", "Preprocess, split and encode a dataset");
  std::string prep_in, prep_out;
  prep->add_option("dataset", prep_in, "CSV with id,text,label")->required();
  prep->add_option("--out", prep_out, "Output directory")->required();

  auto* baseline = app.add_subcommand("baseline", "Train on the full training split");
  std::string dataset;
  std::string arch = "lstm";
  std::uint64_t seed = 0;
  std::string run_id;
  baseline->add_option("--dataset", dataset)->required();
  baseline->add_option("--arch", arch)->check(CLI::IsMember({"rnn", "lstm", "gru"}, CLI::ignore_case))->capture_default_str();
  baseline->add_option("--seed", seed)->capture_default_str();
  baseline->add_option("--run-id", run_id, "Override the derived run id");

  auto* bench = app.add_subcommand("bench-llm", "Score annotators on one seeded draw");
  std::size_t bench_n = 200;
  std::string annotators_cfg, bench_out;
  bench->add_option("--dataset", dataset)->required();
  bench->add_option("--n", bench_n)->capture_default_str();
  bench->add_option("--annotators", annotators_cfg, "JSON list of annotator configs")->required();
  bench->add_option("--seed", seed)->capture_default_str();
  bench->add_option("--out", bench_out, "Also write the report here");

  auto* al = app.add_subcommand("al-run", "Active-learning run");
  std::string annotator = "oracle", target_from, llm_config, host = "127.0.0.1";
  orch::StoppingRule rule;
  std::optional<double> target_accuracy;
  int port = 8080;
  bool resume = false;
  al->add_option("--dataset", dataset)->required();
  al->add_option("--arch", arch)->check(CLI::IsMember({"rnn", "lstm", "gru"}, CLI::ignore_case))->capture_default_str();
  al->add_option("--annotator", annotator)->check(CLI::IsMember({"llm", "human", "oracle"}))->capture_default_str();
  al->add_option("--target-from", target_from, "Baseline run whose accuracy and split to use");
  al->add_option("--target-accuracy", target_accuracy, "Explicit target accuracy");
  al->add_option("--seed", seed)->capture_default_str();
  al->add_option("--max-cycles", rule.max_cycles)->capture_default_str();
  al->add_option("--batch-size", rule.batch_size)->capture_default_str();
  al->add_option("--seed-size", rule.seed_size)->capture_default_str();
  al->add_option("--llm-config", llm_config, "JSON LLM annotator config (annotator=llm)");
  al->add_option("--host", host, "Annotation service host (annotator=human)")->capture_default_str();
  al->add_option("--port", port, "Annotation service port (annotator=human)")->capture_default_str();
  al->add_flag("--resume", resume, "Continue an unfinished run with the same id");
  al->add_option("--run-id", run_id, "Override the derived run id");

  auto* report = app.add_subcommand("report", "Accuracy series of stored runs");
  std::vector<std::string> report_ids;
  std::string report_format = "json", report_out;
  report->add_option("run_ids", report_ids)->required();
  report->add_option("--format", report_format)->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  report->add_option("--out", report_out, "Write to a file instead of stdout");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API over the run store");
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--host", host)->capture_default_str();

  auto* synth = app.add_subcommand("synth", "Write the synthetic corpus");
  orch::SynthOptions synth_options;
  std::string synth_out;
  synth->add_option("--out", synth_out)->required();
  synth->add_option("--n", synth_options.samples)->capture_default_str();
  synth->add_option("--seed", synth_options.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << nlohmann::json{{"error", "UsageError"}, {"message", e.what()}}.dump() << std::endl;
    return 2;
  }

  try {
    const orch::RunStore store(common.data_dir);
    const models::Arch model_arch = models::parse_arch(arch);

    if (*prep) {
      const auto data = prepare(common, prep_in, common.split_seed);
      const std::filesystem::path out = prep_out;
      write_file_atomic(out / "prepared.json", orch::prepared_to_json(data).dump(2) + "\n");
      print({{"out", (out / "prepared.json").string()},
             {"train", data.train.size()},
             {"val", data.val.size()},
             {"test", data.test.size()},
             {"vocabulary", data.vocab.size()},
             {"test_sha256", data.test_sha256()}});
    } else if (*baseline) {
      const auto data = prepare(common, dataset, common.split_seed);
      const auto spec = models::ModelSpec::preset(model_arch, static_cast<int>(data.label_set.size()));
      const auto train = models::TrainConfig::preset(model_arch, seed);
      const std::string id = run_id.empty() ? orch::baseline_run_id(data.name, model_arch, seed) : run_id;
      print(summary(orch::run_baseline(data, spec, train, seed, id, &store)));
    } else if (*bench) {
      const std::string contents = read_file(dataset);
      const auto data = text::parse_dataset(contents, std::filesystem::path(dataset).stem().string());
      const auto owned = benchmark_annotators_from(nlohmann::json::parse(read_file(annotators_cfg)), data);
      std::vector<annotate::Annotator*> annotators;
      for (const auto& a : owned) annotators.push_back(a.get());
      const auto result = annotate::benchmark_to_json(annotate::benchmark_annotators(data, bench_n, annotators, seed));
      if (!bench_out.empty()) write_file_atomic(bench_out, result.dump(2) + "\n");
      print(result);
    } else if (*al) {
      std::optional<orch::RunRecord> base;
      std::uint64_t split_seed = common.split_seed;
      if (!target_from.empty()) {
        base = store.load(target_from);
        if (base->kind != orch::RunKind::kBaseline) throw Error("InvalidArgument", target_from + " is not a baseline run");
        split_seed = base->split.seed;
      }
      const auto data = prepare(common, dataset, split_seed);
      if (base) {
        rule.target_accuracy = base->cycles.at(0).metrics.accuracy;
        if (base->test_sha256 != data.test_sha256() || base->dataset_sha256 != data.content_sha256) {
          throw Error("TestSetMismatch", "dataset or test split differs from baseline " + target_from);
        }
      }
      if (target_accuracy) rule.target_accuracy = target_accuracy;
      const auto source = annotate::parse_source(annotator);
      const auto spec = models::ModelSpec::preset(model_arch, static_cast<int>(data.label_set.size()));
      const auto train = models::TrainConfig::preset(model_arch, seed);
      const std::string id = run_id.empty() ? orch::al_run_id(data.name, source, model_arch, seed) : run_id;

      std::stop_source stop = install_stop_on_signal();
      std::unique_ptr<annotate::Annotator> labeler;
      std::unique_ptr<annotate::TaskQueue> queue;
      std::unique_ptr<orch::Service> service;
      std::string annotator_name = annotate::source_name(source);
      if (source == annotate::Source::kOracle) {
        std::map<std::string, std::string> gold;
        for (const auto& s : data.train) gold[s.id] = data.label_names()[static_cast<std::size_t>(s.label)];
        labeler = std::make_unique<annotate::OracleAnnotator>(std::move(gold));
      } else if (source == annotate::Source::kLlm) {
        if (llm_config.empty()) throw Error("InvalidArgument", "--llm-config is required for annotator=llm");
        auto cfg = annotate::LlmConfig::from_json(nlohmann::json::parse(read_file(llm_config)));
        annotator_name = "llm:" + cfg.model_name;
        labeler = std::make_unique<annotate::LlmAnnotator>(std::move(cfg));
      } else {
        queue = std::make_unique<annotate::TaskQueue>(std::filesystem::path(common.data_dir) / "queue.json");
        labeler = std::make_unique<annotate::HumanAnnotator>(*queue, stop.get_token());
        service = std::make_unique<orch::Service>(store, queue.get());
        const int bound = service->start(host, port);
        std::cerr << nlohmann::json{{"service", "http://" + host + ":" + std::to_string(bound)}}.dump() << std::endl;
      }

      orch::RunRecord record;
      if (resume && store.exists(id)) {
        record = store.load(id);
        if (record.status == "complete") throw Error("InvalidArgument", "run " + id + " is already complete");
      } else {
        record = orch::new_al_record(id, data, spec, train, rule, seed, source, annotator_name);
        record.baseline_run_id = base ? std::optional<std::string>(base->run_id) : std::nullopt;
        store.save(record);
      }
      record = orch::run_active_learning(data, std::move(record), *labeler, &store, [](const orch::RunRecord& r) {
        std::cerr << summary(r).dump() << std::endl;
      });
      if (base) orch::check_same_test_set(*base, record);
      print(summary(record));
    } else if (*report) {
      const auto runs = orch::load_runs(store, report_ids);
      const std::string body = report_format == "csv" ? orch::report_csv(runs) : orch::report_json(runs).dump(2) + "\n";
      if (report_out.empty()) {
        std::cout << body;
      } else {
        write_file_atomic(report_out, body);
      }
    } else if (*serve) {
      annotate::TaskQueue queue(std::filesystem::path(common.data_dir) / "queue.json");
      orch::Service service(store, &queue);
      std::stop_source stop = install_stop_on_signal();
      const int bound = service.start(host, port);
      std::cerr << nlohmann::json{{"service", "http://" + host + ":" + std::to_string(bound)}}.dump() << std::endl;
      std::mutex m;
      std::condition_variable_any cv;
      std::unique_lock lock(m);
      cv.wait(lock, stop.get_token(), [] { return false; });
      service.stop();
    } else if (*synth) {
      const auto stopwords = preprocessor(common).stopwords();
      const auto data = orch::generate_synthetic(synth_options, stopwords);
      std::filesystem::path out = synth_out;
      if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
      text::write_dataset(out, data);
      print({{"out", synth_out}, {"samples", data.samples.size()}});
    }
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"error", e.code()}, {"message", e.what()}}.dump() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << nlohmann::json{{"error", "InternalError"}, {"message", e.what()}}.dump() << std::endl;
    return 1;
  }
  return 0;
}
