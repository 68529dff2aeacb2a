#pragma once

// Plan data model and the line-oriented plan grammar:
//
//   plan    := line*            (blank lines ignored)
//   line    := [prefix] verb "(" id ["," id] ")"
//   prefix  := digits ("." | ")") whitespace+
//   id      := [a-z][a-z0-9_]*
//
// A plan with no actions is written as the single line "<done>".

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace lera {

enum class Family { tabletop, household };

inline std::string_view to_string(Family f) {
  return f == Family::tabletop ? "tabletop" : "household";
}

inline std::optional<Family> family_from_string(std::string_view s) {
  if (s == "tabletop") return Family::tabletop;
  if (s == "household") return Family::household;
  return std::nullopt;
}

inline bool is_object_token(std::string_view s) {
  if (s.empty() || s.front() < 'a' || s.front() > 'z') return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

struct ObjectId {
  std::string name;

  ObjectId() = default;
  ObjectId(std::string n) : name(std::move(n)) {}
  ObjectId(const char* n) : name(n) {}

  auto operator<=>(const ObjectId&) const = default;
};

enum class Verb { locate, pick, place, go_to, open, close, put, toggle_on, toggle_off };

inline constexpr Verb kAllVerbs[] = {Verb::locate, Verb::pick,      Verb::place,
                                     Verb::go_to,  Verb::open,      Verb::close,
                                     Verb::put,    Verb::toggle_on, Verb::toggle_off};

inline std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::locate: return "locate";
    case Verb::pick: return "pick";
    case Verb::place: return "place";
    case Verb::go_to: return "goto";
    case Verb::open: return "open";
    case Verb::close: return "close";
    case Verb::put: return "put";
    case Verb::toggle_on: return "toggle_on";
    case Verb::toggle_off: return "toggle_off";
  }
  return "?";
}

inline std::optional<Verb> verb_from_string(std::string_view s) {
  for (Verb v : kAllVerbs)
    if (to_string(v) == s) return v;
  return std::nullopt;
}

inline std::size_t arity(Verb v) { return v == Verb::put ? 2 : 1; }

inline std::set<Verb> family_verbs(Family f) {
  if (f == Family::tabletop) return {Verb::locate, Verb::pick, Verb::place};
  return {Verb::go_to, Verb::pick, Verb::open, Verb::close,
          Verb::put, Verb::toggle_on, Verb::toggle_off};
}

/// The navigation verb of a family: locate on the tabletop, goto in the house.
inline Verb find_verb(Family f) { return f == Family::tabletop ? Verb::locate : Verb::go_to; }

struct Action {
  Verb verb = Verb::locate;
  std::vector<ObjectId> args;

  static Action make(Verb v, ObjectId a) { return Action{v, {std::move(a)}}; }
  static Action make(Verb v, ObjectId a, ObjectId b) {
    return Action{v, {std::move(a), std::move(b)}};
  }

  /// The object the action is directed at: the destination for put, otherwise the only argument.
  const ObjectId& target() const { return args.back(); }

  bool operator==(const Action&) const = default;
};

inline std::string to_string(const Action& a) {
  std::string out(to_string(a.verb));
  out += '(';
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (i) out += ", ";
    out += a.args[i].name;
  }
  out += ')';
  return out;
}

inline constexpr std::size_t kMaxPlanLength = 64;
inline constexpr std::string_view kDoneMarker = "<done>";

struct Plan {
  std::vector<Action> actions;
  std::size_t cursor = 0;

  bool done() const { return cursor >= actions.size(); }
  const Action& current() const { return actions.at(cursor); }
  std::size_t size() const { return actions.size(); }

  bool operator==(const Plan&) const = default;
};

struct PlanError {
  std::size_t line = 1;  // 1-based
  std::string reason;

  std::string message() const { return "line " + std::to_string(line) + ": " + reason; }
};

using PlanParse = std::variant<Plan, PlanError>;

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

// Strips one "12. " or "3) " prefix.
inline std::string_view strip_numbering(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
  if (i == 0 || i >= s.size() || (s[i] != '.' && s[i] != ')')) return s;
  std::size_t j = i + 1;
  if (j >= s.size() || !std::isspace(static_cast<unsigned char>(s[j]))) return s;
  return trim(s.substr(j));
}

// Returns an error reason, or nullopt with `out` filled.
inline std::optional<std::string> parse_action_line(std::string_view s, Action& out) {
  const std::size_t open = s.find('(');
  if (open == std::string_view::npos) return "expected verb(args), got \"" + std::string(s) + "\"";
  if (s.back() != ')') return "missing closing parenthesis";
  const std::string_view verb_text = trim(s.substr(0, open));
  const auto verb = verb_from_string(verb_text);
  if (!verb) return "unknown verb \"" + std::string(verb_text) + "\"";
  std::string_view inner = s.substr(open + 1, s.size() - open - 2);
  if (inner.find_first_of("()") != std::string_view::npos) return "nested parentheses";
  std::vector<ObjectId> args;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = inner.find(',', start);
    std::string_view token =
        trim(inner.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                 : comma - start));
    if (!is_object_token(token)) return "malformed object token \"" + std::string(token) + "\"";
    args.emplace_back(std::string(token));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (args.size() != arity(*verb))
    return std::string(to_string(*verb)) + " takes " + std::to_string(arity(*verb)) +
           " argument(s), got " + std::to_string(args.size());
  out = Action{*verb, std::move(args)};
  return std::nullopt;
}

}  // namespace detail

/// Parses model or file text into a Plan (cursor 0). Errors name the offending line.
inline PlanParse parse_plan(std::string_view text) {
  const auto lines = detail::split_lines(text);
  Plan plan;
  bool saw_done = false;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string_view line = detail::trim(lines[i]);
    if (line.empty()) continue;
    const std::size_t lineno = i + 1;
    if (line == kDoneMarker) {
      if (saw_done || !plan.actions.empty()) return PlanError{lineno, "unexpected <done> marker"};
      saw_done = true;
      continue;
    }
    if (saw_done) return PlanError{lineno, "action after <done> marker"};
    line = detail::strip_numbering(line);
    Action action;
    if (auto err = detail::parse_action_line(line, action)) return PlanError{lineno, *err};
    if (plan.actions.size() == kMaxPlanLength)
      return PlanError{lineno, "plan longer than " + std::to_string(kMaxPlanLength) + " actions"};
    plan.actions.push_back(std::move(action));
  }
  if (plan.actions.empty() && !saw_done) return PlanError{1, "empty plan"};
  return plan;
}

/// Canonical text of the unexecuted suffix, one action per line.
inline std::string serialize_plan(const Plan& plan) {
  if (plan.done()) return std::string(kDoneMarker) + "\n";
  std::string out;
  for (std::size_t i = plan.cursor; i < plan.actions.size(); ++i) {
    out += to_string(plan.actions[i]);
    out += '\n';
  }
  return out;
}

inline Plan remaining(const Plan& plan) {
  Plan rest;
  if (plan.cursor < plan.actions.size())
    rest.actions.assign(plan.actions.begin() + static_cast<std::ptrdiff_t>(plan.cursor),
                        plan.actions.end());
  return rest;
}

struct Vocabulary {
  Family family = Family::tabletop;
  std::set<Verb> verbs;
  std::set<ObjectId> objects;
};

struct ValidationError {
  std::size_t action_index = 0;
  std::string reason;

  std::string message() const {
    return "action " + std::to_string(action_index + 1) + ": " + reason;
  }
};

inline std::optional<ValidationError> validate(const Plan& plan, const Vocabulary& vocab) {
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const Action& a = plan.actions[i];
    if (!vocab.verbs.contains(a.verb))
      return ValidationError{i, "verb \"" + std::string(to_string(a.verb)) +
                                    "\" is not available in the " +
                                    std::string(to_string(vocab.family)) + " family"};
    for (const ObjectId& id : a.args)
      if (!vocab.objects.contains(id))
        return ValidationError{i, "unknown object \"" + id.name + "\""};
  }
  return std::nullopt;
}

}  // namespace lera
