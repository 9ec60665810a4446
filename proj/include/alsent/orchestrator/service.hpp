#pragma once

#include <memory>
#include <string>
#include <thread>

#include <json.hpp>

#include "alsent/annotate/task_queue.hpp"
#include "alsent/orchestrator/run_record.hpp"

namespace httplib {
class Server;
}

namespace alsent::orchestrator {

// {cycle, label_count, last_accuracy, pending_tasks} for a stored run.
nlohmann::ordered_json progress_json(const RunRecord& record, std::size_t pending_tasks);

// HTTP API over a run store and an optional task queue:
//   GET  /api/tasks                  pending tasks [{task_id, text, label_set}]
//   POST /api/tasks/{id}/label       {"label": "..."}; 200, 400, 404 or 422
//   GET  /api/run/{id}               the stored RunRecord
//   GET  /api/run/{id}/progress
//   GET  /api/report?runs=a,b        report document for the listed runs
// Errors are JSON bodies {"error": code, "message": text}.
class Service {
 public:
  Service(const RunStore& store, annotate::TaskQueue* queue);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port; throws Error("BindError").
  int start(const std::string& host, int port);
  // Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

 private:
  void install_routes();

  const RunStore& store_;
  annotate::TaskQueue* queue_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace alsent::orchestrator
