// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "sforge/error.hpp"
#include "sforge/io.hpp"

namespace sforge::agents {

/// Result of one helper dispatch, consumed both by the orchestrator prompt
/// and by tests.
struct Observation {
  std::string text;
  std::optional<std::string> image_ref;  // sha256 of an SVG in the artifact store
  nlohmann::json payload;                // null when absent
  bool error = false;
  std::string reason;  // set iff error

  static Observation failure(std::string reason, std::string text) {
    Observation o;
    o.error = true;
    o.reason = std::move(reason);
    o.text = std::move(text);
    return o;
  }

  friend bool operator==(const Observation&, const Observation&) = default;
};

inline nlohmann::json observation_to_json(const Observation& o) {
  nlohmann::json j = {{"text", o.text}, {"error", o.error}};
  if (o.image_ref) j["image_ref"] = *o.image_ref;
  if (!o.payload.is_null()) j["payload"] = o.payload;
  if (o.error) j["reason"] = o.reason;
  return j;
}

inline Observation observation_from_json(const nlohmann::json& j) {
  Observation o;
  o.text = j.at("text").get<std::string>();
  o.error = j.value("error", false);
  if (j.contains("image_ref")) o.image_ref = j.at("image_ref").get<std::string>();
  if (j.contains("payload")) o.payload = j.at("payload");
  o.reason = j.value("reason", std::string{});
  return o;
}

/// Content-addressed SVG store: `<dir>/<sha256>.svg`.
class ArtifactStore {
 public:
  explicit ArtifactStore(fs::path dir) : dir_(std::move(dir)) {}

  /// Idempotent; returns the content hash.
  std::string put(const std::string& svg) {
    const auto id = sha256_hex(svg);
    std::lock_guard lock(mu_);
    const auto path = path_of(id);
    if (!fs::exists(path)) write_file_atomic(path, svg);
    return id;
  }

  bool contains(const std::string& id) const { return valid_id(id) && fs::exists(path_of(id)); }

  std::string get(const std::string& id) const {
    if (!contains(id)) throw NotFound("no artifact " + id);
    return read_file(path_of(id));
  }

  const fs::path& dir() const { return dir_; }

  static bool valid_id(const std::string& id) {
    if (id.size() != 64) return false;
    for (char c : id)
      if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
    return true;
  }

 private:
  fs::path path_of(const std::string& id) const { return dir_ / (id + ".svg"); }

  fs::path dir_;
  std::mutex mu_;
};

}  // namespace sforge::agents
