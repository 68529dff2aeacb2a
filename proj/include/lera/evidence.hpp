#pragma once

// Error reports E_t produced by the subtask checker: the failed action plus one
// observable symptom. Rejections deliberately carry no reason.

#include <optional>
#include <string>
#include <string_view>

#include "lera/plan.hpp"

namespace lera::evidence {

inline constexpr std::string_view kRejected = " could not be executed";
inline constexpr std::string_view kMayHaveFailed = ": action may have failed";
inline constexpr std::string_view kGripperEmpty = " completed but gripper is empty";
inline constexpr std::string_view kNotAtPrefix = " completed but ";
inline constexpr std::string_view kNotAtInfix = " is not at ";

inline std::string rejected(const Action& a) { return to_string(a) + std::string(kRejected); }

inline std::string dropped_on_pick(const Action& a) {
  return to_string(a) + std::string(kGripperEmpty);
}

inline std::string dropped_on_place(const Action& a, const ObjectId& object) {
  return to_string(a) + std::string(kNotAtPrefix) + object.name + std::string(kNotAtInfix) +
         a.target().name;
}

inline std::string effect_missing(const Action& a) {
  return to_string(a) + " completed but its effect is not observed";
}

/// Evidence a flipped checker invents for an action that actually succeeded.
inline std::string fabricated(const Action& a) { return to_string(a) + std::string(kMayHaveFailed); }

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline bool is_rejection(std::string_view e) { return ends_with(e, kRejected); }

/// The object a drop report says fell, if the report is one.
inline std::optional<ObjectId> dropped_object(std::string_view e) {
  if (ends_with(e, kGripperEmpty)) {
    const auto open = e.find('('), close = e.find(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
      return std::nullopt;
    std::string_view arg = e.substr(open + 1, close - open - 1);
    if (!is_object_token(arg)) return std::nullopt;
    return ObjectId(std::string(arg));
  }
  const auto p = e.find(kNotAtPrefix);
  const auto q = e.find(kNotAtInfix);
  if (p == std::string_view::npos || q == std::string_view::npos || q < p) return std::nullopt;
  std::string_view obj = e.substr(p + kNotAtPrefix.size(), q - p - kNotAtPrefix.size());
  if (!is_object_token(obj)) return std::nullopt;
  return ObjectId(std::string(obj));
}

}  // namespace lera::evidence
