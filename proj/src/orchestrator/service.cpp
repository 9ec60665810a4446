#include "alsent/orchestrator/service.hpp"

#include <httplib.h>

#include <sstream>

#include "alsent/models/metrics.hpp"
#include "alsent/orchestrator/report.hpp"

namespace alsent::orchestrator {

namespace {

void send_json(httplib::Response& res, int status, const nlohmann::ordered_json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  send_json(res, status, {{"error", code}, {"message", message}});
}

int status_for(const std::string& code) {
  if (code == "UnknownRun" || code == "UnknownTask") return 404;
  if (code == "InvalidArgument") return 400;
  return 500;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

nlohmann::ordered_json progress_json(const RunRecord& record, std::size_t pending_tasks) {
  nlohmann::ordered_json j;
  if (record.cycles.empty()) {
    j["cycle"] = 0;
    j["label_count"] = record.seed_set.size();
    j["last_accuracy"] = nullptr;
  } else {
    const CycleRecord& last = record.cycles.back();
    j["cycle"] = last.cycle;
    j["label_count"] = last.label_count;
    j["last_accuracy"] = models::round4(last.metrics.accuracy);
  }
  j["pending_tasks"] = pending_tasks;
  return j;
}

Service::Service(const RunStore& store, annotate::TaskQueue* queue)
    : store_(store), queue_(queue), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
  server_->set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const Error& e) {
      send_error(res, status_for(e.code()), e.code(), e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  });

  server_->Get("/api/tasks", [this](const httplib::Request&, httplib::Response& res) {
    nlohmann::ordered_json tasks = nlohmann::ordered_json::array();
    if (queue_) {
      for (const annotate::Task& t : queue_->pending()) {
        tasks.push_back({{"task_id", t.task_id}, {"text", t.text}, {"label_set", t.label_set}});
      }
    }
    send_json(res, 200, tasks);
  });

  server_->Post("/api/tasks/:id/label", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      send_error(res, 400, "MalformedRequest", std::string("body is not JSON: ") + e.what());
      return;
    }
    if (!body.is_object() || !body.contains("label") || !body["label"].is_string()) {
      send_error(res, 400, "MalformedRequest", "body must be {\"label\": string}");
      return;
    }
    const std::string label = body["label"].get<std::string>();
    const auto status = queue_ ? queue_->resolve(id, label) : annotate::ResolveStatus::kUnknownTask;
    switch (status) {
      case annotate::ResolveStatus::kResolved:
        send_json(res, 200, {{"task_id", id}, {"label", label}, {"status", "resolved"}});
        return;
      case annotate::ResolveStatus::kUnknownTask:
        send_error(res, 404, "UnknownTask", "no task " + id);
        return;
      case annotate::ResolveStatus::kAlreadyResolved:
        send_error(res, 404, "AlreadyResolved", "task " + id + " is already labeled");
        return;
      case annotate::ResolveStatus::kInvalidLabel:
        send_error(res, 422, "InvalidLabel", "label '" + label + "' is not in the task's label set");
        return;
    }
  });

  server_->Get("/api/run/:id", [this](const httplib::Request& req, httplib::Response& res) {
    send_json(res, 200, record_to_json(store_.load(req.path_params.at("id"))));
  });

  server_->Get("/api/run/:id/progress", [this](const httplib::Request& req, httplib::Response& res) {
    const RunRecord record = store_.load(req.path_params.at("id"));
    send_json(res, 200, progress_json(record, queue_ ? queue_->pending_count() : 0));
  });

  server_->Get("/api/report", [this](const httplib::Request& req, httplib::Response& res) {
    const auto ids = split_commas(req.get_param_value("runs"));
    send_json(res, 200, report_json(load_runs(store_, ids)));
  });
}

int Service::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("BindError", "cannot bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void Service::run(const std::string& host, int port) {
  if (!server_->bind_to_port(host, port)) {
    throw Error("BindError", "cannot bind " + host + ":" + std::to_string(port));
  }
  server_->listen_after_bind();
}

void Service::stop() {
  server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace alsent::orchestrator
