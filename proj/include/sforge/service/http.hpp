// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <condition_variable>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "sforge/map/render.hpp"
#include "sforge/service/session.hpp"

namespace sforge::service {

enum class JobState { Queued, Running, Done, Failed };

inline std::string_view job_state_name(JobState s) {
  switch (s) {
    case JobState::Queued: return "Queued";
    case JobState::Running: return "Running";
    case JobState::Done: return "Done";
    case JobState::Failed: return "Failed";
  }
  return "?";
}

struct Job {
  std::string id;
  std::string scenario;
  BlockKind block;
  JobState state = JobState::Queued;
  std::string error;
  std::vector<std::string> trace_ids;
};

inline nlohmann::json job_to_json(const Job& j) {
  nlohmann::json out = {{"id", j.id},      {"scenario", j.scenario},    {"block", j.block.name()},
                        {"state", job_state_name(j.state)}, {"trace_ids", j.trace_ids}};
  if (!j.error.empty()) out["error"] = j.error;
  return out;
}

inline int http_status_for(const std::string& code) {
  static const std::set<std::string> unprocessable = {"IllegalTransition", "SchemaError", "ReferenceError",
                                                      "UnknownElement",    "ArgsError",   "CycleError",
                                                      "DanglingEdge",      "BadRequest"};
  if (code == "NotFound") return 404;
  if (code == "NotReady" || code == "Conflict") return 409;
  if (unprocessable.count(code)) return 422;
  return 500;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

/// Review service: scenario store, generation jobs and the HTTP routes.
/// Jobs run on a bounded pool; every state change goes through a Session.
class Service {
 public:
  Service(fs::path store, GenerationDeps deps, Clock& clock, std::size_t workers = 2)
      : store_(std::move(store)), deps_(deps), clock_(clock), pool_(workers) {}

  ~Service() { pool_.shutdown(); }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  Session& session(const std::string& id) {
    std::lock_guard lock(mu_);
    return session_locked(id);
  }

  std::string create(const std::map<std::string, std::string>& files) {
    std::lock_guard lock(mu_);
    auto s = Session::create(store_, files, clock_);
    const auto id = s->scenario().id;
    sessions_[id] = std::move(s);
    return id;
  }

  /// Marks the block Generating and queues the rest of the work.
  std::string submit(const std::string& scenario, const BlockKind& k) {
    std::unique_lock lock(mu_);
    Session& s = session_locked(scenario);
    if (busy_.count({scenario, k})) throw Conflict("a job is already running for " + k.name());
    std::map<BlockKind, BlockState> snap;
    std::string feedback;
    const int generation = s.begin_generation(k, &snap, &feedback);
    const auto id = "job-" + std::to_string(++job_counter_);
    jobs_.emplace(id, Job{id, scenario, k, JobState::Queued, {}, {}});
    busy_.insert({scenario, k});
    last_job_[{scenario, k}] = id;
    lock.unlock();

    pool_.enqueue([this, id, &s, k, generation, snap = std::move(snap), feedback] {
      set_state(id, JobState::Running);
      JobState done = JobState::Done;
      std::string error;
      std::vector<std::string> traces;
      try {
        const auto out = s.finish_generation(k, generation, snap, feedback, deps_);
        traces = out.trace_ids;
        if (!out.ok) {
          done = JobState::Failed;
          error = out.reason + ": " + out.message;
        }
      } catch (const std::exception& e) {
        done = JobState::Failed;
        error = e.what();
        traces = s.trace_ids(k);
      }
      std::lock_guard g(mu_);
      auto& j = jobs_.at(id);
      j.state = done;
      j.error = error;
      j.trace_ids = traces;
      busy_.erase({j.scenario, j.block});
      cv_.notify_all();
    });
    return id;
  }

  Job job(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw NotFound("no job " + id);
    return it->second;
  }

  /// Blocks until the job leaves Queued/Running.
  Job wait(const std::string& id) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] {
      auto it = jobs_.find(id);
      return it == jobs_.end() || it->second.state == JobState::Done || it->second.state == JobState::Failed;
    });
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw NotFound("no job " + id);
    return it->second;
  }

  BlockState review(const std::string& scenario, const BlockKind& k, ReviewEvent e) {
    std::unique_lock lock(mu_);
    Session& s = session_locked(scenario);
    if (busy_.count({scenario, k})) throw Conflict("a job is running for " + k.name());
    lock.unlock();
    return s.apply(k, std::move(e));
  }

  nlohmann::json trace(const std::string& scenario, const BlockKind& k) {
    std::unique_lock lock(mu_);
    Session& s = session_locked(scenario);
    if (!s.scenario().blocks.count(k)) throw NotFound("no block " + k.name());
    nlohmann::json job = nullptr;
    if (auto it = last_job_.find({scenario, k}); it != last_job_.end()) job = it->second;
    lock.unlock();
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& id : s.trace_ids(k)) {
      const auto path = s.traces_dir() / (id + ".json");
      if (fs::exists(path)) traces.push_back(nlohmann::json::parse(read_file(path)));
    }
    return {{"block", k.name()}, {"job", job}, {"traces", traces}};
  }

  /// Registers every route on `server`.
  void install(httplib::Server& server) {
    using httplib::Request;
    using httplib::Response;

    server.Post("/scenarios", [this](const Request& req, Response& res) {
      handle(res, [&] {
        const auto body = parse_body(req);
        const auto& files = body.contains("files") ? body.at("files") : body;
        if (!files.is_object()) throw SchemaError("upload body must map file names to contents");
        std::map<std::string, std::string> m;
        for (const auto& [name, text] : files.items()) {
          if (!text.is_string()) throw SchemaError("file " + name + " must be a string");
          m.emplace(name, text.get<std::string>());
        }
        reply(res, 201, {{"id", create(m)}});
      });
    });

    server.Get(R"(/scenarios/([^/]+))", [this](const Request& req, Response& res) {
      handle(res, [&] { reply(res, 200, session(req.matches[1]).snapshot()); });
    });

    server.Get(R"(/scenarios/([^/]+)/blocks)", [this](const Request& req, Response& res) {
      handle(res, [&] { reply(res, 200, session(req.matches[1]).blocks_json()); });
    });

    server.Post(R"(/scenarios/([^/]+)/blocks/([^/]+)/generate)", [this](const Request& req, Response& res) {
      handle(res, [&] {
        const auto id = submit(req.matches[1], kind_of(req.matches[2]));
        reply(res, 202, {{"job", id}});
      });
    });

    server.Get(R"(/jobs/([^/]+))", [this](const Request& req, Response& res) {
      handle(res, [&] { reply(res, 200, job_to_json(job(req.matches[1]))); });
    });

    auto review_route = [this, &server](const std::string& verb, auto make_event) {
      server.Post(R"(/scenarios/([^/]+)/blocks/([^/]+)/)" + verb, [this, make_event](const Request& req, Response& res) {
        handle(res, [&] {
          const auto k = kind_of(req.matches[2]);
          const auto state = review(req.matches[1], k, make_event(req));
          reply(res, 200, {{"block", k.name()}, {"state", state_to_json(state)}});
        });
      });
    };
    review_route("approve", [](const Request&) { return ReviewEvent::approve(); });
    review_route("reject", [](const Request& req) {
      const auto body = parse_body(req);
      if (!body.contains("feedback") || !body["feedback"].is_string()) throw SchemaError("reject needs \"feedback\"");
      return ReviewEvent::reject(body["feedback"].get<std::string>());
    });
    review_route("edit", [](const Request& req) {
      const auto body = parse_body(req);
      if (!body.contains("content")) throw SchemaError("edit needs \"content\"");
      const auto& c = body["content"];
      return ReviewEvent::edit(c.is_string() ? c.get<std::string>() : c.dump(2) + "\n");
    });
    review_route("select-option", [](const Request& req) {
      const auto body = parse_body(req);
      if (!body.contains("index") || !body["index"].is_number_integer()) throw SchemaError("select-option needs \"index\"");
      return ReviewEvent::select_option(body["index"].get<int>());
    });

    server.Get(R"(/scenarios/([^/]+)/blocks/([^/]+)/trace)", [this](const Request& req, Response& res) {
      handle(res, [&] { reply(res, 200, trace(req.matches[1], kind_of(req.matches[2]))); });
    });

    server.Get(R"(/scenarios/([^/]+)/overlay)", [this](const Request& req, Response& res) {
      handle(res, [&] {
        Session& s = session(req.matches[1]);
        map::ElementSelector sel;
        auto param = [&](const char* key) {
          return req.has_param(key) ? split_list(req.get_param_value(key)) : std::vector<std::string>{};
        };
        sel.units = param("units");
        sel.areas = param("areas");
        sel.routes = param("routes");
        sel.obstacles = param("obstacles");
        sel.corridors = param("corridors");
        sel.lanes = param("lanes");
        res.status = 200;
        res.set_content(map::render_overlay(s.current_map(), sel), "image/svg+xml");
      });
    });

    server.Get(R"(/scenarios/([^/]+)/artifacts/([^/]+))", [this](const Request& req, Response& res) {
      handle(res, [&] {
        Session& s = session(req.matches[1]);
        res.status = 200;
        res.set_content(s.artifacts().get(req.matches[2]), "image/svg+xml");
      });
    });
  }

 private:
  Session& session_locked(const std::string& id) {
    if (auto it = sessions_.find(id); it != sessions_.end()) return *it->second;
    auto s = Session::open(store_, id, clock_);
    return *(sessions_[id] = std::move(s));
  }

  void set_state(const std::string& id, JobState st) {
    std::lock_guard lock(mu_);
    jobs_.at(id).state = st;
  }

  static BlockKind kind_of(const std::string& s) {
    try {
      return BlockKind::parse(s);
    } catch (const SchemaError& e) {
      throw NotFound(e.what());
    }
  }

  static nlohmann::json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return nlohmann::json::object();
    try {
      return nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error("BadRequest", std::string("body is not JSON: ") + e.what());
    }
  }

  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <class F>
  static void handle(httplib::Response& res, F&& f) {
    try {
      f();
    } catch (const Error& e) {
      reply(res, http_status_for(e.code()), {{"error", e.code()}, {"message", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", "Internal"}, {"message", e.what()}});
    }
  }

  fs::path store_;
  GenerationDeps deps_;
  Clock& clock_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
  std::map<std::string, Job> jobs_;
  std::set<std::pair<std::string, BlockKind>> busy_;
  std::map<std::pair<std::string, BlockKind>, std::string> last_job_;
  std::size_t job_counter_ = 0;
  httplib::ThreadPool pool_;
};

}  // namespace sforge::service
