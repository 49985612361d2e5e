// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sforge {

/// Base of every failure the engine reports. `code()` is a stable short name
/// used in CLI output, HTTP error bodies and trace records.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define SFORGE_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                       \
   public:                                                          \
    explicit Name(const std::string& what) : Error(#Name, what) {}  \
  }

// scenario-model
SFORGE_DEFINE_ERROR(SchemaError);
SFORGE_DEFINE_ERROR(ReferenceError);
SFORGE_DEFINE_ERROR(IllegalTransition);
SFORGE_DEFINE_ERROR(PreconditionError);

// dependency-graph
SFORGE_DEFINE_ERROR(DanglingEdge);

// map-engine
SFORGE_DEFINE_ERROR(EmptyGraph);
SFORGE_DEFINE_ERROR(Unreachable);
SFORGE_DEFINE_ERROR(AmbiguousGeometry);
SFORGE_DEFINE_ERROR(UnknownElement);

// retrieval
SFORGE_DEFINE_ERROR(ParseError);

// llm-gateway
SFORGE_DEFINE_ERROR(ReplayMiss);
SFORGE_DEFINE_ERROR(ScriptExhausted);
SFORGE_DEFINE_ERROR(CassetteConflict);

// agents
SFORGE_DEFINE_ERROR(UnknownTool);
SFORGE_DEFINE_ERROR(ArgsError);

// orchestrator
SFORGE_DEFINE_ERROR(FormatError);
SFORGE_DEFINE_ERROR(TimelineInvalid);

// review-service
SFORGE_DEFINE_ERROR(StorageError);
SFORGE_DEFINE_ERROR(NotReady);
SFORGE_DEFINE_ERROR(Conflict);
SFORGE_DEFINE_ERROR(NotFound);

#undef SFORGE_DEFINE_ERROR

class CycleError : public Error {
 public:
  explicit CycleError(std::vector<std::string> cycle)
      : Error("CycleError", describe(cycle)), cycle_(std::move(cycle)) {}

  /// Node names along one offending cycle; the first node is repeated last.
  const std::vector<std::string>& cycle() const noexcept { return cycle_; }

 private:
  static std::string describe(const std::vector<std::string>& cycle) {
    std::string s = "dependency cycle: ";
    for (std::size_t i = 0; i < cycle.size(); ++i) {
      if (i) s += " -> ";
      s += cycle[i];
    }
    return s;
  }
  std::vector<std::string> cycle_;
};

/// Network-level failure of a live completion call.
class TransportError : public Error {
 public:
  enum class Kind { Timeout, Connection, Status };

  TransportError(Kind kind, const std::string& what, int status = 0)
      : Error("TransportError", what), kind_(kind), status_(status) {}

  Kind kind() const noexcept { return kind_; }
  int status() const noexcept { return status_; }

  /// Short reason used in error observations.
  std::string reason() const {
    switch (kind_) {
      case Kind::Timeout: return "timeout";
      case Kind::Connection: return "connection";
      case Kind::Status: return "http " + std::to_string(status_);
    }
    return "transport";
  }

 private:
  Kind kind_;
  int status_;
};

/// Scheme-of-maneuver draft that failed the unit/phase-line coverage check.
class CoverageError : public Error {
 public:
  CoverageError(std::vector<std::string> missing, std::string draft)
      : Error("CoverageError", describe(missing)),
        missing_(std::move(missing)),
        draft_(std::move(draft)) {}

  const std::vector<std::string>& missing() const noexcept { return missing_; }
  const std::string& draft() const noexcept { return draft_; }

 private:
  static std::string describe(const std::vector<std::string>& missing) {
    std::string s = "draft does not mention:";
    for (const auto& m : missing) s += " " + m;
    return s;
  }
  std::vector<std::string> missing_;
  std::string draft_;
};

}  // namespace sforge
