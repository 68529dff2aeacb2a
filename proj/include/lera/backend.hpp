#pragma once

// Model-backend abstraction shared by the scripted rule engine, the fault
// injection wrapper and the HTTP chat client.

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lera/observe.hpp"

namespace lera {

enum class Step { look, explain, replan };

inline std::string_view to_string(Step s) {
  switch (s) {
    case Step::look: return "look";
    case Step::explain: return "explain";
    case Step::replan: return "replan";
  }
  return "?";
}

/// Every system prompt starts with this marker so a backend can tell which
/// pipeline stage is calling, e.g. "[[lera:step=look]]".
inline std::string step_marker(Step s) { return "[[lera:step=" + std::string(to_string(s)) + "]]"; }

inline std::optional<Step> step_of(std::string_view system_text) {
  for (Step s : {Step::look, Step::explain, Step::replan})
    if (system_text.find(step_marker(s)) != std::string_view::npos) return s;
  return std::nullopt;
}

struct DecodeOptions {
  static constexpr double temperature = 0.0;
  int max_tokens = 1024;
};

struct BackendRequest {
  std::string system_text;
  std::string user_text;
  std::optional<Observation> attachment;
  DecodeOptions decode;
};

/// The backend could not produce a response (network, HTTP status, bad body).
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;

  /// Returns the model's text for one request. Throws TransportError.
  virtual std::string complete(const BackendRequest& request) = 0;
};

enum class Fault { ok, malformed_plan, transport_error, empty };

inline std::string_view to_string(Fault f) {
  switch (f) {
    case Fault::ok: return "ok";
    case Fault::malformed_plan: return "malformed_plan";
    case Fault::transport_error: return "transport_error";
    case Fault::empty: return "empty";
  }
  return "?";
}

inline std::optional<Fault> fault_from_string(std::string_view s) {
  for (Fault f : {Fault::ok, Fault::malformed_plan, Fault::transport_error, Fault::empty})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

inline constexpr std::string_view kMalformedPlanText =
    "Sure! Here is the plan:\nfly(the block over there)";

/// Wraps another backend and overrides its behaviour call by call. The
/// schedule is consumed in order; once exhausted every call passes through.
class FaultyBackend : public Backend {
 public:
  FaultyBackend(std::shared_ptr<Backend> inner, std::vector<Fault> schedule)
      : inner_(std::move(inner)), schedule_(std::move(schedule)) {}

  std::string complete(const BackendRequest& request) override {
    Fault fault = Fault::ok;
    {
      std::lock_guard lock(mutex_);
      if (next_ < schedule_.size()) fault = schedule_[next_];
      ++next_;
    }
    switch (fault) {
      case Fault::ok: return inner_->complete(request);
      case Fault::malformed_plan: return std::string(kMalformedPlanText);
      case Fault::transport_error: throw TransportError("injected transport error");
      case Fault::empty: return "";
    }
    return "";
  }

  std::size_t calls() const {
    std::lock_guard lock(mutex_);
    return next_;
  }

 private:
  std::shared_ptr<Backend> inner_;
  std::vector<Fault> schedule_;
  mutable std::mutex mutex_;
  std::size_t next_ = 0;
};

}  // namespace lera
