#pragma once

// Session service over HTTP + JSON.
//
//   POST /api/sessions                        envelope -> 201 snapshot
//   GET  /api/sessions                        ids
//   GET  /api/sessions/{id}                   snapshot
//   POST /api/sessions/{id}/actions           action -> snapshot (409 when rejected)
//   GET  /api/sessions/{id}/events            server-sent events
//   GET  /api/sessions/{id}/transcript        transcript as JSON lines
//   GET  /api/sessions/{id}/artifacts/{path}  read-only session files
//
// Each session has one worker thread that executes actions in order; an
// approve also queues the simulation run on that worker, so the action
// returns while the run continues in the background.

#include "sphflow/orchestrator.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <atomic>
#include <condition_variable>
#include <deque>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

namespace sphflow {

/// Single-thread job queue.
class SerialWorker {
 public:
  SerialWorker() : thread_([this] { loop(); }) {}
  ~SerialWorker() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    thread_.join();
  }
  SerialWorker(const SerialWorker&) = delete;
  SerialWorker& operator=(const SerialWorker&) = delete;

  std::future<void> submit(std::function<void()> job) {
    auto task = std::make_shared<std::packaged_task<void()>>(std::move(job));
    auto fut = task->get_future();
    {
      std::lock_guard lock(mu_);
      jobs_.push_back([task] { (*task)(); });
    }
    cv_.notify_all();
    return fut;
  }

  /// Waits until every job submitted so far has finished.
  void drain() { submit([] {}).wait(); }

 private:
  void loop() {
    for (;;) {
      std::function<void()> job;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || !jobs_.empty(); });
        if (jobs_.empty()) return;
        job = std::move(jobs_.front());
        jobs_.pop_front();
      }
      job();
    }
  }

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::function<void()>> jobs_;
  bool stop_ = false;
  std::thread thread_;
};

using PlannerFactory = std::function<std::shared_ptr<PlannerInterface>()>;

class SessionManager {
 public:
  struct Entry {
    std::shared_ptr<Session> session;
    std::unique_ptr<SerialWorker> worker;
  };

  SessionManager(std::filesystem::path root, PlannerFactory planners, SessionConfig cfg = {},
                 std::shared_ptr<const ToolRegistry> registry = nullptr)
      : root_(std::move(root)),
        planners_(std::move(planners)),
        cfg_(cfg),
        registry_(registry ? std::move(registry) : std::make_shared<const ToolRegistry>(default_tool_registry())) {}

  /// Creates a session and runs start() on its worker.
  std::shared_ptr<Entry> create(const InputEnvelope& env) {
    if (env.empty()) throw std::invalid_argument("input envelope is empty");
    std::shared_ptr<Entry> e;
    {
      std::lock_guard lock(mu_);
      const auto id = "s" + std::to_string(++counter_);
      e = std::make_shared<Entry>();
      e->session = std::make_shared<Session>(id, root_ / id, planners_(), registry_, cfg_);
      e->worker = std::make_unique<SerialWorker>();
      sessions_[id] = e;
    }
    auto session = e->session;
    e->worker->submit([session, env] { session->start(env); }).get();
    return e;
  }

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::lock_guard lock(mu_);
    const auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  std::vector<std::string> ids() const {
    std::lock_guard lock(mu_);
    std::vector<std::string> out;
    for (const auto& [id, _] : sessions_) out.push_back(id);
    return out;
  }

  /// Runs an action JSON on the session's worker and waits for it. Actions:
  /// {"type": "message", "text"}, {"type": "direct_edit", "xml"},
  /// {"type": "approve"}, {"type": "restart", "envelope"?},
  /// {"type": "postproc", "text"}, {"type": "run"}, {"type": "close"}.
  /// Approve queues the run without waiting for it.
  void act(Entry& e, const nlohmann::json& action) {
    if (!action.is_object() || !action.contains("type") || !action["type"].is_string())
      throw std::invalid_argument("action needs a string 'type'");
    const std::string type = action["type"];
    auto s = e.session;
    auto text = [&](const char* key) {
      if (!action.contains(key) || !action[key].is_string())
        throw std::invalid_argument(type + " needs a string '" + key + "'");
      return action[key].get<std::string>();
    };
    std::function<void()> job;
    if (type == "message") {
      job = [s, t = text("text")] { s->hitl_turn(HitlAction::message(t)); };
    } else if (type == "direct_edit") {
      job = [s, x = text("xml")] { s->hitl_turn(HitlAction::direct_edit(x)); };
    } else if (type == "restart") {
      std::optional<InputEnvelope> env;
      if (action.contains("envelope")) env = InputEnvelope::from_json(action["envelope"]);
      job = [s, env] { s->hitl_turn(HitlAction::restart(env)); };
    } else if (type == "approve") {
      job = [s] { s->hitl_turn(HitlAction::approve()); };
    } else if (type == "postproc") {
      job = [s, t = text("text")] { s->postproc_request(t); };
    } else if (type == "run") {
      job = [s] { s->run_phase2(); };
    } else if (type == "close") {
      job = [s] { s->close(); };
    } else {
      throw std::invalid_argument("unknown action type '" + type + "'");
    }
    e.worker->submit(std::move(job)).get();
    if (type == "approve") e.worker->submit([s] { s->run_phase2(); });
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  PlannerFactory planners_;
  SessionConfig cfg_;
  std::shared_ptr<const ToolRegistry> registry_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  long long counter_ = 0;
};

inline std::string sse_frame(const Event& e) {
  return "id: " + std::to_string(e.seq) + "\nevent: " + e.type + "\ndata: " + e.to_json().dump() + "\n\n";
}

inline std::string content_type_for(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".json") return "application/json";
  if (ext == ".csv") return "text/csv";
  if (ext == ".xml") return "application/xml";
  if (ext == ".jsonl") return "application/x-ndjson";
  return "text/plain";
}

class Service {
 public:
  explicit Service(SessionManager& sessions) : sessions_(sessions) { routes(); }
  ~Service() { stop(); }

  httplib::Server& server() { return server_; }

  /// Binds to `port` (0 picks a free one) and returns the bound port.
  int bind(const std::string& host, int port) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }
  bool listen_after_bind() { return server_.listen_after_bind(); }

  void stop() {
    stopping_ = true;
    server_.stop();
  }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }
  static void send_error(httplib::Response& res, int status, const std::string& msg) {
    send_json(res, status, {{"error", msg}});
  }

  std::shared_ptr<SessionManager::Entry> lookup(const httplib::Request& req, httplib::Response& res) {
    auto e = sessions_.find(req.matches[1]);
    if (!e) send_error(res, 404, "no session '" + std::string(req.matches[1]) + "'");
    return e;
  }

  void routes() {
    server_.Post("/api/sessions", [this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded()) return send_error(res, 400, "body is not JSON");
      try {
        const auto env = InputEnvelope::from_json(body.contains("envelope") ? body["envelope"] : body);
        auto e = sessions_.create(env);
        send_json(res, 201, e->session->snapshot());
      } catch (const std::exception& ex) {
        send_error(res, 400, ex.what());
      }
    });

    server_.Get("/api/sessions", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"sessions", sessions_.ids()}});
    });

    server_.Get(R"(/api/sessions/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto e = lookup(req, res)) send_json(res, 200, e->session->snapshot());
    });

    server_.Post(R"(/api/sessions/([^/]+)/actions)", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = lookup(req, res);
      if (!e) return;
      const auto body = nlohmann::json::parse(req.body, nullptr, false);
      if (body.is_discarded()) return send_error(res, 400, "body is not JSON");
      try {
        sessions_.act(*e, body);
        send_json(res, 200, e->session->snapshot());
      } catch (const TransitionError& ex) {
        send_error(res, 409, ex.what());
      } catch (const std::exception& ex) {
        send_error(res, 400, ex.what());
      }
    });

    server_.Get(R"(/api/sessions/([^/]+)/transcript)", [this](const httplib::Request& req, httplib::Response& res) {
      if (auto e = lookup(req, res)) res.set_content(e->session->transcript_text(), "application/x-ndjson");
    });

    server_.Get(R"(/api/sessions/([^/]+)/artifacts/(.+))", [this](const httplib::Request& req,
                                                                 httplib::Response& res) {
      auto e = lookup(req, res);
      if (!e) return;
      const auto path = e->session->artifact_path(req.matches[2]);
      if (!path) return send_error(res, 404, "no artifact '" + std::string(req.matches[2]) + "'");
      res.set_content(read_text_file(*path), content_type_for(*path));
    });

    // Query "after" (or the Last-Event-ID header) resumes after that seq;
    // "follow=0" sends the backlog and ends. A followed stream ends once the
    // session is closed.
    server_.Get(R"(/api/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
      auto e = lookup(req, res);
      if (!e) return;
      long long after = 0;
      try {
        if (req.has_param("after")) after = std::stoll(req.get_param_value("after"));
        else if (req.has_header("Last-Event-ID")) after = std::stoll(req.get_header_value("Last-Event-ID"));
      } catch (const std::exception&) {
        return send_error(res, 400, "bad event cursor");
      }
      const bool follow = req.get_param_value("follow") != "0";
      auto session = e->session;
      auto cursor = std::make_shared<long long>(after);
      res.set_header("Cache-Control", "no-cache");
      res.set_chunked_content_provider("text/event-stream", [this, session, cursor, follow](std::size_t,
                                                                                           httplib::DataSink& sink) {
        for (const auto& ev : session->events_after(*cursor)) {
          const auto frame = sse_frame(ev);
          if (!sink.write(frame.data(), frame.size())) return false;
          *cursor = ev.seq;
        }
        const bool drained = session->events_after(*cursor).empty();
        if (drained && (!follow || session->phase() == Phase::closed || stopping_)) {
          sink.done();
          return true;
        }
        if (drained) session->wait_for_event(*cursor, std::chrono::milliseconds(200));
        return sink.is_writable();
      });
    });
  }

  SessionManager& sessions_;
  httplib::Server server_;
  std::atomic<bool> stopping_{false};
};

}  // namespace sphflow
