// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sforge/error.hpp"
#include "sforge/io.hpp"

namespace sforge::llm {

/// Image attached to a message; canonicalized by content hash.
struct Attachment {
  std::string media_type = "image/svg+xml";
  std::string content;
};

struct Message {
  std::string role;  // system | user | assistant
  std::string text;
  std::vector<Attachment> attachments;
};

struct ChatRequest {
  std::vector<Message> messages;
  std::string model = "gpt-4o";
  double temperature = 0.0;
};

/// Stable request bytes: sorted object keys, texts verbatim, attachments
/// replaced by their media type and sha256.
inline nlohmann::json canonical_json(const ChatRequest& r) {
  nlohmann::json messages = nlohmann::json::array();
  for (const auto& m : r.messages) {
    nlohmann::json atts = nlohmann::json::array();
    for (const auto& a : m.attachments) atts.push_back({{"media_type", a.media_type}, {"sha256", sha256_hex(a.content)}});
    nlohmann::json jm = {{"role", m.role}, {"text", m.text}};
    if (!atts.empty()) jm["attachments"] = atts;
    messages.push_back(std::move(jm));
  }
  return {{"messages", messages}, {"model", r.model}, {"temperature", r.temperature}};
}

inline std::string canonicalize(const ChatRequest& r) { return canonical_json(r).dump(); }

inline std::string request_key(const ChatRequest& r) { return sha256_hex(canonicalize(r)); }

/// Parses the JSON request shape accepted by `canonical_json`'s inverse;
/// attachment objects here carry inline `content`.
inline ChatRequest request_from_json(const nlohmann::json& j) {
  ChatRequest r;
  r.model = j.value("model", std::string("gpt-4o"));
  r.temperature = j.value("temperature", 0.0);
  for (const auto& jm : j.at("messages")) {
    Message m{jm.at("role").get<std::string>(), jm.at("text").get<std::string>(), {}};
    for (const auto& ja : jm.value("attachments", nlohmann::json::array()))
      m.attachments.push_back({ja.value("media_type", std::string("image/svg+xml")), ja.at("content").get<std::string>()});
    r.messages.push_back(std::move(m));
  }
  return r;
}

/// A completion source.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Preloaded response queue.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> responses) : queue_(responses.begin(), responses.end()) {}

  /// `{"responses": ["...", ...]}` or a bare JSON array of strings.
  static std::unique_ptr<ScriptedBackend> from_file(const fs::path& path) {
    auto j = nlohmann::json::parse(read_file(path));
    const auto& arr = j.is_array() ? j : j.at("responses");
    return std::make_unique<ScriptedBackend>(arr.get<std::vector<std::string>>());
  }

  std::string complete(const ChatRequest&) override {
    std::lock_guard lock(mu_);
    if (queue_.empty()) throw ScriptExhausted("scripted gateway has no responses left after " + std::to_string(served_));
    std::string r = std::move(queue_.front());
    queue_.pop_front();
    ++served_;
    return r;
  }

  std::size_t remaining() const {
    std::lock_guard lock(mu_);
    return queue_.size();
  }

 private:
  mutable std::mutex mu_;
  std::deque<std::string> queue_;
  std::size_t served_ = 0;
};

struct CassetteEntry {
  std::string key;
  nlohmann::json request;  // canonical form
  std::string response;
  std::string recorded_at;
};

inline nlohmann::json entry_to_json(const CassetteEntry& e) {
  return {{"key", e.key}, {"request", e.request}, {"response", e.response}, {"recorded_at", e.recorded_at}};
}

/// JSON-Lines file of recorded exchanges; at most one response per key.
class Cassette {
 public:
  Cassette() = default;
  explicit Cassette(fs::path path) : path_(std::move(path)) {
    if (!fs::exists(path_)) return;
    const std::string text = read_file(path_);
    std::size_t pos = 0, line_no = 0;
    while (pos < text.size()) {
      auto nl = text.find('\n', pos);
      std::string line = text.substr(pos, nl == std::string::npos ? std::string::npos : nl - pos);
      pos = nl == std::string::npos ? text.size() : nl + 1;
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(path_.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      CassetteEntry e{j.at("key").get<std::string>(), j.at("request"), j.at("response").get<std::string>(),
                      j.value("recorded_at", std::string{})};
      if (sha256_hex(e.request.dump()) != e.key)
        throw SchemaError(path_.string() + ":" + std::to_string(line_no) + ": key does not match request");
      if (auto it = entries_.find(e.key); it != entries_.end() && it->second.response != e.response)
        throw CassetteConflict(path_.string() + ": two responses recorded for key " + e.key);
      entries_[e.key] = std::move(e);
    }
  }

  const CassetteEntry* find(const std::string& key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::size_t size() const { return entries_.size(); }
  const fs::path& path() const { return path_; }

  /// Appends unless the same (key, response) is already present; a different
  /// response for an existing key is a CassetteConflict.
  void record(CassetteEntry e) {
    if (auto it = entries_.find(e.key); it != entries_.end()) {
      if (it->second.response != e.response)
        throw CassetteConflict("re-recording key " + e.key + " with a different response");
      return;
    }
    if (!path_.empty()) append_line(path_, entry_to_json(e).dump());
    entries_[e.key] = std::move(e);
  }

 private:
  fs::path path_;
  std::map<std::string, CassetteEntry> entries_;
};

class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(Cassette cassette) : cassette_(std::move(cassette)) {}

  std::string complete(const ChatRequest& request) override {
    const auto key = request_key(request);
    if (const auto* e = cassette_.find(key)) return e->response;
    throw ReplayMiss("no recorded response for request " + key);
  }

 private:
  const Cassette cassette_;
};

/// Forwards to an upstream backend and records every exchange.
class RecordingBackend final : public Backend {
 public:
  RecordingBackend(std::unique_ptr<Backend> upstream, fs::path cassette_path, Clock& clock)
      : upstream_(std::move(upstream)), cassette_(std::move(cassette_path)), clock_(clock) {}

  std::string complete(const ChatRequest& request) override {
    if (request.temperature != 0.0) throw PreconditionError("record mode requires temperature 0");
    std::string response = upstream_->complete(request);
    std::lock_guard lock(mu_);
    const auto canonical = canonical_json(request);
    cassette_.record({sha256_hex(canonical.dump()), canonical, response, clock_.now()});
    return response;
  }

  const Cassette& cassette() const { return cassette_; }

 private:
  std::unique_ptr<Backend> upstream_;
  std::mutex mu_;
  Cassette cassette_;
  Clock& clock_;
};

/// Uniform completion interface used by every agent.
class Gateway {
 public:
  explicit Gateway(std::unique_ptr<Backend> backend) : backend_(std::move(backend)) {}

  std::string complete(const ChatRequest& request) {
    if (request.messages.empty()) throw PreconditionError("chat request needs at least one message");
    {
      std::lock_guard lock(mu_);
      ++calls_;
    }
    return backend_->complete(request);
  }

  std::size_t calls() const {
    std::lock_guard lock(mu_);
    return calls_;
  }

  Backend& backend() { return *backend_; }

 private:
  std::unique_ptr<Backend> backend_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

}  // namespace sforge::llm
