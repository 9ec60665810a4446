#pragma once

#include <condition_variable>
#include <filesystem>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include <json.hpp>

#include "alsent/annotate/annotator.hpp"

namespace alsent::annotate {

struct Task {
  std::string task_id;
  std::string sample_id;
  std::string text;
  std::vector<std::string> label_set;
  std::optional<std::string> label;  // set once resolved

  bool resolved() const { return label.has_value(); }
};

enum class ResolveStatus { kResolved, kUnknownTask, kAlreadyResolved, kInvalidLabel };

class Cancelled : public Error {
 public:
  explicit Cancelled(const std::string& what) : Error("Cancelled", what) {}
};

// Pending human-labeling tasks. Service handlers resolve tasks while the AL
// driver blocks in wait_for. With a backing file every mutation is written
// atomically, so pending and resolved-but-unconsumed tasks survive a restart.
class TaskQueue {
 public:
  TaskQueue() = default;
  // Loads the file when it exists. Throws Error("QueueError") if malformed.
  explicit TaskQueue(std::filesystem::path backing_file);

  // One task per request. A sample that already has a task (pending or
  // resolved and not yet acknowledged) keeps it. Returns the task ids.
  std::vector<std::string> enqueue(const std::vector<AnnotationRequest>& requests);

  std::vector<Task> pending() const;
  std::size_t pending_count() const;
  std::optional<Task> find(const std::string& task_id) const;

  // Atomic: exactly one caller resolves a given task.
  ResolveStatus resolve(const std::string& task_id, const std::string& label);

  // Blocks until every listed sample's task is resolved and returns their
  // labels in the given order. Throws Cancelled when `stop` fires first,
  // and Error("QueueError") for a sample without a task.
  std::vector<std::string> wait_for(const std::vector<std::string>& sample_ids, std::stop_token stop);

  // Forgets resolved tasks of these samples once their labels are stored
  // elsewhere.
  void acknowledge(const std::vector<std::string>& sample_ids);

  nlohmann::json to_json() const;

 private:
  void persist_locked() const;
  Task* by_sample_locked(const std::string& sample_id);

  mutable std::mutex mutex_;
  std::condition_variable_any changed_;
  std::filesystem::path file_;
  long next_id_ = 1;
  std::vector<Task> tasks_;
};

class HumanAnnotator : public Annotator {
 public:
  HumanAnnotator(TaskQueue& queue, std::stop_token stop) : queue_(queue), stop_(std::move(stop)) {}
  Source source() const override { return Source::kHuman; }
  std::vector<AnnotationOutcome> annotate(const std::vector<AnnotationRequest>& requests) override;
  void commit(const std::vector<std::string>& sample_ids) override { queue_.acknowledge(sample_ids); }

 private:
  TaskQueue& queue_;
  std::stop_token stop_;
};

}  // namespace alsent::annotate
