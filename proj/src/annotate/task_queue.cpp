#include "alsent/annotate/task_queue.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "alsent/io.hpp"

namespace alsent::annotate {

namespace {

constexpr int kQueueSchemaVersion = 1;

nlohmann::json task_to_json(const Task& t) {
  nlohmann::json j{{"task_id", t.task_id}, {"sample_id", t.sample_id}, {"text", t.text}, {"label_set", t.label_set}};
  j["label"] = t.label ? nlohmann::json(*t.label) : nlohmann::json(nullptr);
  return j;
}

}  // namespace

TaskQueue::TaskQueue(std::filesystem::path backing_file) : file_(std::move(backing_file)) {
  if (!std::filesystem::exists(file_)) return;
  try {
    const auto j = nlohmann::json::parse(read_file(file_));
    if (j.at("schema_version").get<int>() != kQueueSchemaVersion) {
      throw Error("QueueError", "unsupported queue schema_version in " + file_.string());
    }
    next_id_ = j.at("next_id").get<long>();
    for (const auto& tj : j.at("tasks")) {
      Task t;
      t.task_id = tj.at("task_id").get<std::string>();
      t.sample_id = tj.at("sample_id").get<std::string>();
      t.text = tj.at("text").get<std::string>();
      t.label_set = tj.at("label_set").get<std::vector<std::string>>();
      if (!tj.at("label").is_null()) t.label = tj.at("label").get<std::string>();
      tasks_.push_back(std::move(t));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error("QueueError", "malformed queue file " + file_.string() + ": " + e.what());
  }
}

nlohmann::json TaskQueue::to_json() const {
  std::lock_guard lock(mutex_);
  nlohmann::json tasks = nlohmann::json::array();
  for (const Task& t : tasks_) tasks.push_back(task_to_json(t));
  return {{"schema_version", kQueueSchemaVersion}, {"next_id", next_id_}, {"tasks", tasks}};
}

void TaskQueue::persist_locked() const {
  if (file_.empty()) return;
  nlohmann::json tasks = nlohmann::json::array();
  for (const Task& t : tasks_) tasks.push_back(task_to_json(t));
  const nlohmann::json doc{{"schema_version", kQueueSchemaVersion}, {"next_id", next_id_}, {"tasks", tasks}};
  write_file_atomic(file_, doc.dump(2) + "\n");
}

Task* TaskQueue::by_sample_locked(const std::string& sample_id) {
  const auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const Task& t) { return t.sample_id == sample_id; });
  return it == tasks_.end() ? nullptr : &*it;
}

std::vector<std::string> TaskQueue::enqueue(const std::vector<AnnotationRequest>& requests) {
  std::vector<std::string> ids;
  {
    std::lock_guard lock(mutex_);
    for (const AnnotationRequest& r : requests) {
      if (r.label_set.empty()) throw Error("LabelError", "empty label_set for sample " + r.sample_id);
      if (const Task* existing = by_sample_locked(r.sample_id)) {
        ids.push_back(existing->task_id);
        continue;
      }
      Task t{"task-" + std::to_string(next_id_++), r.sample_id, r.raw_text, r.label_set, std::nullopt};
      ids.push_back(t.task_id);
      tasks_.push_back(std::move(t));
    }
    persist_locked();
  }
  changed_.notify_all();
  return ids;
}

std::vector<Task> TaskQueue::pending() const {
  std::lock_guard lock(mutex_);
  std::vector<Task> out;
  for (const Task& t : tasks_) {
    if (!t.resolved()) out.push_back(t);
  }
  return out;
}

std::size_t TaskQueue::pending_count() const {
  std::lock_guard lock(mutex_);
  return static_cast<std::size_t>(std::count_if(tasks_.begin(), tasks_.end(), [](const Task& t) { return !t.resolved(); }));
}

std::optional<Task> TaskQueue::find(const std::string& task_id) const {
  std::lock_guard lock(mutex_);
  for (const Task& t : tasks_) {
    if (t.task_id == task_id) return t;
  }
  return std::nullopt;
}

ResolveStatus TaskQueue::resolve(const std::string& task_id, const std::string& label) {
  {
    std::lock_guard lock(mutex_);
    const auto it = std::find_if(tasks_.begin(), tasks_.end(), [&](const Task& t) { return t.task_id == task_id; });
    if (it == tasks_.end()) return ResolveStatus::kUnknownTask;
    if (it->resolved()) return ResolveStatus::kAlreadyResolved;
    if (std::find(it->label_set.begin(), it->label_set.end(), label) == it->label_set.end()) {
      return ResolveStatus::kInvalidLabel;
    }
    it->label = label;
    try {
      persist_locked();
    } catch (...) {
      it->label.reset();
      throw;
    }
  }
  changed_.notify_all();
  return ResolveStatus::kResolved;
}

std::vector<std::string> TaskQueue::wait_for(const std::vector<std::string>& sample_ids, std::stop_token stop) {
  std::unique_lock lock(mutex_);
  for (const std::string& id : sample_ids) {
    if (by_sample_locked(id) == nullptr) throw Error("QueueError", "no task for sample " + id);
  }
  const auto all_resolved = [&] {
    return std::all_of(sample_ids.begin(), sample_ids.end(),
                       [&](const std::string& id) { return by_sample_locked(id)->resolved(); });
  };
  if (!changed_.wait(lock, stop, all_resolved)) {
    throw Cancelled("run stopped with labeling tasks pending");
  }
  std::vector<std::string> labels;
  for (const std::string& id : sample_ids) labels.push_back(*by_sample_locked(id)->label);
  return labels;
}

void TaskQueue::acknowledge(const std::vector<std::string>& sample_ids) {
  std::lock_guard lock(mutex_);
  const std::set<std::string> done(sample_ids.begin(), sample_ids.end());
  std::erase_if(tasks_, [&](const Task& t) { return t.resolved() && done.count(t.sample_id) != 0; });
  persist_locked();
}

std::vector<AnnotationOutcome> HumanAnnotator::annotate(const std::vector<AnnotationRequest>& requests) {
  if (requests.empty()) return {};
  queue_.enqueue(requests);
  std::vector<std::string> ids;
  for (const auto& r : requests) ids.push_back(r.sample_id);
  const std::vector<std::string> labels = queue_.wait_for(ids, stop_);
  std::vector<AnnotationOutcome> out;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    out.push_back({AnnotationResult{ids[i], labels[i], Source::kHuman, std::nullopt, std::nullopt}, std::nullopt});
  }
  return out;
}

}  // namespace alsent::annotate
