// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "sforge/error.hpp"
#include "sforge/io.hpp"
#include "sforge/llm/gateway.hpp"

namespace sforge::llm {

/// Process-wide count of outbound connections attempted by live backends.
inline std::atomic<std::size_t>& live_connection_attempts() {
  static std::atomic<std::size_t> n{0};
  return n;
}

struct LiveConfig {
  std::string endpoint;  // e.g. https://api.openai.com/v1/chat/completions
  std::string api_key;
  std::chrono::seconds timeout{120};
  int retries = 2;
  std::chrono::milliseconds backoff{1000};  // doubled per retry
};

/// OpenAI-compatible chat-completions client.
class LiveBackend final : public Backend {
 public:
  explicit LiveBackend(LiveConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.endpoint.find("://");
    if (scheme_end == std::string::npos) throw PreconditionError("LLM_ENDPOINT must be an absolute URL");
    const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
    base_ = cfg_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
  }

  static nlohmann::json wire_body(const ChatRequest& r) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : r.messages) {
      if (m.attachments.empty()) {
        messages.push_back({{"role", m.role}, {"content", m.text}});
        continue;
      }
      nlohmann::json parts = nlohmann::json::array();
      parts.push_back({{"type", "text"}, {"text", m.text}});
      for (const auto& a : m.attachments)
        parts.push_back({{"type", "image_url"},
                         {"image_url", {{"url", "data:" + a.media_type + ";base64," + base64_encode(a.content)}}}});
      messages.push_back({{"role", m.role}, {"content", parts}});
    }
    return {{"model", r.model}, {"temperature", r.temperature}, {"messages", messages}};
  }

  std::string complete(const ChatRequest& request) override {
    const std::string body = wire_body(request).dump();
    auto delay = cfg_.backoff;
    for (int attempt = 0;; ++attempt) {
      try {
        return attempt_once(body);
      } catch (const TransportError& e) {
        const bool transient = e.kind() != TransportError::Kind::Status || e.status() == 429 || e.status() >= 500;
        if (!transient || attempt >= cfg_.retries) throw;
      }
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }

 private:
  std::string attempt_once(const std::string& body) {
    httplib::Client client(base_);
    const auto secs = static_cast<time_t>(cfg_.timeout.count());
    client.set_connection_timeout(secs, 0);
    client.set_read_timeout(secs, 0);
    client.set_write_timeout(secs, 0);
    httplib::Headers headers;
    if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
    live_connection_attempts().fetch_add(1);
    auto res = client.Post(path_, headers, body, "application/json");
    if (!res) {
      const auto err = res.error();
      if (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout || err == httplib::Error::Write)
        throw TransportError(TransportError::Kind::Timeout, "completion request timed out (" + httplib::to_string(err) + ")");
      throw TransportError(TransportError::Kind::Connection, "completion request failed: " + httplib::to_string(err));
    }
    if (res->status != 200)
      throw TransportError(TransportError::Kind::Status, "completion endpoint returned " + std::to_string(res->status),
                           res->status);
    try {
      auto j = nlohmann::json::parse(res->body);
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(TransportError::Kind::Status, std::string("malformed completion response: ") + e.what(), 200);
    }
  }

  LiveConfig cfg_;
  std::string base_;
  std::string path_;
};

enum class Mode { Live, Record, Replay, Scripted };

inline Mode parse_mode(std::string_view s) {
  if (s == "live") return Mode::Live;
  if (s == "record") return Mode::Record;
  if (s == "replay") return Mode::Replay;
  if (s == "scripted") return Mode::Scripted;
  throw PreconditionError("unknown gateway mode: " + std::string(s));
}

struct GatewayOptions {
  Mode mode = Mode::Replay;
  fs::path cassette;
  fs::path script;  // scripted queue; in record mode replaces the live upstream
  std::optional<LiveConfig> live;
};

/// Reads LLM_ENDPOINT / LLM_API_KEY for live and record modes.
inline LiveConfig live_config_from_env() {
  LiveConfig cfg;
  if (const char* e = std::getenv("LLM_ENDPOINT")) cfg.endpoint = e;
  if (const char* k = std::getenv("LLM_API_KEY")) cfg.api_key = k;
  if (cfg.endpoint.empty()) throw PreconditionError("LLM_ENDPOINT is not set");
  return cfg;
}

inline std::unique_ptr<Gateway> make_gateway(const GatewayOptions& opt, Clock& clock) {
  switch (opt.mode) {
    case Mode::Replay:
      if (opt.cassette.empty()) throw PreconditionError("replay mode needs a cassette");
      if (!fs::exists(opt.cassette)) throw PreconditionError("cassette not found: " + opt.cassette.string());
      return std::make_unique<Gateway>(std::make_unique<ReplayBackend>(Cassette(opt.cassette)));
    case Mode::Scripted:
      if (opt.script.empty()) throw PreconditionError("scripted mode needs a script");
      return std::make_unique<Gateway>(ScriptedBackend::from_file(opt.script));
    case Mode::Record: {
      if (opt.cassette.empty()) throw PreconditionError("record mode needs a cassette");
      std::unique_ptr<Backend> upstream;
      if (!opt.script.empty())
        upstream = ScriptedBackend::from_file(opt.script);
      else
        upstream = std::make_unique<LiveBackend>(opt.live ? *opt.live : live_config_from_env());
      return std::make_unique<Gateway>(std::make_unique<RecordingBackend>(std::move(upstream), opt.cassette, clock));
    }
    case Mode::Live:
      return std::make_unique<Gateway>(std::make_unique<LiveBackend>(opt.live ? *opt.live : live_config_from_env()));
  }
  throw PreconditionError("unknown gateway mode");
}

}  // namespace sforge::llm
