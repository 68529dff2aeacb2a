#pragma once

// Deterministic rule engine standing in for a vision-language model. It reads
// the ground-truth snapshot attached to Look (and one-shot Replan) requests,
// classifies the failure, and rewrites the remaining plan with a fixed recipe:
//
//   dropped object     -> find it, pick it again, then resume
//   closed door        -> insert open() before the blocked step
//   running appliance  -> insert toggle_off() before toggle_on()
//   open door          -> insert close() before toggle_on()
//   not at the target  -> insert locate()/goto()
//   effect already holds, or no discrepancy -> drop the failed step
//   unknown            -> keep the plan unchanged

#include <sstream>
#include <string>
#include <string_view>

#include "lera/backend.hpp"
#include "lera/evidence.hpp"
#include "lera/observe.hpp"
#include "lera/prompts.hpp"

namespace lera {

struct Diagnosis {
  enum class Kind { dropped, closed, running, open_door, not_located, already, none, unknown };

  Kind kind = Kind::unknown;
  ObjectId object;
  std::optional<int> cell;

  bool operator==(const Diagnosis&) const = default;
};

inline std::string_view to_string(Diagnosis::Kind k) {
  using K = Diagnosis::Kind;
  switch (k) {
    case K::dropped: return "dropped";
    case K::closed: return "closed";
    case K::running: return "running";
    case K::open_door: return "open_door";
    case K::not_located: return "not_located";
    case K::already: return "already";
    case K::none: return "none";
    case K::unknown: return "unknown";
  }
  return "?";
}

namespace scripted {

inline constexpr std::string_view kNoDiscrepancy = "No discrepancy found.";

inline bool has_object(Diagnosis::Kind k) {
  using K = Diagnosis::Kind;
  return k != K::already && k != K::none && k != K::unknown;
}

/// "Discrepancy: dropped red_block" style line (also used with "Recipe:").
inline std::string diagnosis_line(std::string_view prefix, const Diagnosis& d) {
  std::string s = std::string(prefix) + std::string(to_string(d.kind));
  if (has_object(d.kind)) s += " " + d.object.name;
  return s;
}

/// Finds a "Discrepancy:"/"Recipe:" line or the no-discrepancy sentence in free text.
inline std::optional<Diagnosis> find_diagnosis(std::string_view text) {
  for (std::string_view raw : detail::split_lines(text)) {
    std::string_view line = detail::trim(raw);
    if (line.find(kNoDiscrepancy) != std::string_view::npos) return Diagnosis{Diagnosis::Kind::none};
    for (std::string_view prefix : {std::string_view("Discrepancy:"), std::string_view("Recipe:")}) {
      if (line.substr(0, prefix.size()) != prefix) continue;
      std::istringstream in{std::string(line.substr(prefix.size()))};
      std::string kind, object;
      in >> kind >> object;
      for (auto k : {Diagnosis::Kind::dropped, Diagnosis::Kind::closed, Diagnosis::Kind::running,
                     Diagnosis::Kind::open_door, Diagnosis::Kind::not_located,
                     Diagnosis::Kind::already, Diagnosis::Kind::none, Diagnosis::Kind::unknown}) {
        if (to_string(k) != kind) continue;
        if (has_object(k) && !is_object_token(object)) return Diagnosis{Diagnosis::Kind::unknown};
        Diagnosis d{k, has_object(k) ? ObjectId(object) : ObjectId(), std::nullopt};
        return d;
      }
      return Diagnosis{Diagnosis::Kind::unknown};
    }
  }
  return std::nullopt;
}

/// Compares the scene against the failed action's expected effect.
inline Diagnosis diagnose(const Scene& scene, const Action& failed, std::string_view report) {
  using K = Diagnosis::Kind;
  const ObjectId& x = failed.args.front();
  const ObjectId& target = failed.target();
  if (!scene.has(x) || !scene.has(target)) return {K::unknown};
  const bool located = scene.located_target == target;
  const Diagnosis achieved{evidence::is_rejection(report) ? K::already : K::none};
  auto dropped = [&](const ObjectId& o) {
    return Diagnosis{K::dropped, o, scene.ground_cell(o)};
  };
  auto lying = [&](const ObjectId& o) {
    return scene.has(o) && scene.at(o).place.site == Placement::Site::table &&
           scene.last_drop == o;
  };
  const auto& flags = scene.at(target).flags;

  switch (failed.verb) {
    case Verb::locate:
    case Verb::go_to:
      return located ? achieved : Diagnosis{K::unknown};
    case Verb::pick:
      if (scene.gripper_holding == x) return achieved;
      if (!scene.gripper_holding && lying(x)) return dropped(x);
      if (!located) return {K::not_located, x};
      return {K::unknown};
    case Verb::place:
      if (scene.gripper_holding) return located ? Diagnosis{K::unknown} : Diagnosis{K::not_located, x};
      if (scene.last_drop && lying(*scene.last_drop)) return dropped(*scene.last_drop);
      return achieved;
    case Verb::put:
      if (scene.gripper_holding != x && is_inside(scene, x, target)) return achieved;
      if (flags.open && !*flags.open) return {K::closed, target};
      if (!scene.gripper_holding && lying(x)) return dropped(x);
      if (!located) return {K::not_located, target};
      return {K::unknown};
    case Verb::open:
    case Verb::close:
      if (flags.open && *flags.open == (failed.verb == Verb::open)) return achieved;
      if (!located) return {K::not_located, x};
      return {K::unknown};
    case Verb::toggle_on:
      if (flags.powered && *flags.powered && contents_processed(scene, x)) return achieved;
      if (flags.powered && *flags.powered) return {K::running, x};
      if (flags.open && *flags.open) return {K::open_door, x};
      if (!located) return {K::not_located, x};
      return {K::unknown};
    case Verb::toggle_off:
      if (flags.powered && !*flags.powered) return achieved;
      if (!located) return {K::not_located, x};
      return {K::unknown};
  }
  return {K::unknown};
}

/// What can be concluded from the error report alone (no scene access).
inline Diagnosis diagnose_from_report(std::string_view report) {
  if (auto o = evidence::dropped_object(report)) return {Diagnosis::Kind::dropped, *o};
  return {Diagnosis::Kind::unknown};
}

inline Family infer_family(const Plan& plan) {
  for (const Action& a : plan.actions) {
    if (a.verb == Verb::locate || a.verb == Verb::place) return Family::tabletop;
    if (a.verb != Verb::pick) return Family::household;
  }
  return Family::tabletop;
}

/// Rewrites the remaining plan (whose first action is the failed one).
inline Plan apply_recipe(const Diagnosis& d, const Plan& remaining_plan) {
  using K = Diagnosis::Kind;
  const auto& p = remaining_plan.actions;
  if (p.empty()) return remaining_plan;
  const Verb find = find_verb(infer_family(remaining_plan));
  std::vector<Action> out;
  auto tail_from = [&](std::size_t i) { out.insert(out.end(), p.begin() + static_cast<long>(i), p.end()); };
  switch (d.kind) {
    case K::dropped:
      out.push_back(Action::make(find, d.object));
      out.push_back(Action::make(Verb::pick, d.object));
      if (p.front() == Action::make(Verb::pick, d.object)) {
        tail_from(1);
      } else {
        out.push_back(Action::make(find, p.front().target()));
        tail_from(0);
      }
      break;
    case K::closed:
      out.push_back(Action::make(Verb::open, d.object));
      tail_from(0);
      break;
    case K::running:
      out.push_back(Action::make(Verb::toggle_off, d.object));
      tail_from(0);
      break;
    case K::open_door:
      out.push_back(Action::make(Verb::close, d.object));
      tail_from(0);
      break;
    case K::not_located:
      out.push_back(Action::make(find, d.object));
      tail_from(0);
      break;
    case K::already:
    case K::none:
      tail_from(1);
      break;
    case K::unknown:
      tail_from(0);
      break;
  }
  if (out.size() > kMaxPlanLength) out.resize(kMaxPlanLength);
  return Plan{std::move(out), 0};
}

inline std::string look_text(const Scene& scene, const Action& failed, const Diagnosis& d) {
  using K = Diagnosis::Kind;
  const std::string a = to_string(failed);
  std::string body;
  switch (d.kind) {
    case K::dropped:
      body = "The gripper is empty. " + d.object.name + " lies on the table" +
             (d.cell ? " at cell " + std::to_string(*d.cell) : std::string()) +
             "; it fell from the gripper during " + a + ".";
      break;
    case K::closed: body = d.object.name + " is closed, so nothing can be put inside it."; break;
    case K::running:
      body = d.object.name + " is already switched on, so it cannot be started; its contents are "
             "not processed.";
      break;
    case K::open_door:
      body = "The door of " + d.object.name + " is open; it must be closed before switching on.";
      break;
    case K::not_located: body = "The robot is not at " + d.object.name + "."; break;
    case K::already: body = "The intended result of " + a + " already holds, so the step is redundant."; break;
    case K::none: body = "The scene matches the expected result of " + a + "."; break;
    case K::unknown: body = "The cause of the failure of " + a + " is not visible."; break;
  }
  body += scene.gripper_holding ? " The gripper holds " + scene.gripper_holding->name + "." : "";
  body += "\n";
  body += d.kind == K::none ? std::string(kNoDiscrepancy) : diagnosis_line("Discrepancy: ", d);
  return body;
}

inline std::string explain_text(const Diagnosis& d, const Plan& remaining_plan) {
  using K = Diagnosis::Kind;
  std::string why;
  switch (d.kind) {
    case K::dropped: why = d.object.name + " fell from the gripper; find it and pick it up again before continuing."; break;
    case K::closed: why = d.object.name + " must be opened before anything can be put inside."; break;
    case K::running: why = d.object.name + " is already running; switch it off so it can be started with the new contents."; break;
    case K::open_door: why = d.object.name + " has to be closed before it can be switched on."; break;
    case K::not_located: why = "the robot has to move to " + d.object.name + " first."; break;
    case K::already: why = "the failed step is redundant because its result already holds; skip it."; break;
    case K::none: why = "no error actually occurred; continue with the original plan."; break;
    case K::unknown: why = "the error report does not reveal the cause; keep the current plan."; break;
  }
  const Plan next = apply_recipe(d, remaining_plan);
  std::string out = "Error: " + why + "\n" + diagnosis_line("Recipe: ", d) + "\nProposed plan:\n";
  if (next.actions.empty()) out += "(nothing left to do)\n";
  for (std::size_t i = 0; i < next.actions.size(); ++i) {
    const Action& a = next.actions[i];
    std::string reason = "continue the plan";
    if (i == 0 && d.kind != K::none && d.kind != K::already && d.kind != K::unknown)
      reason = "resolve the failure";
    out += std::to_string(i + 1) + ". " + to_string(a) + " - " + reason + "\n";
  }
  return out;
}

/// Text between "<tag>" and "</tag>" lines, if present.
inline std::optional<std::string> section(std::string_view text, std::string_view tag) {
  const std::string open = "<" + std::string(tag) + ">", close = "</" + std::string(tag) + ">";
  const auto a = text.find(open);
  if (a == std::string_view::npos) return std::nullopt;
  const auto start = a + open.size();
  const auto b = text.find(close, start);
  if (b == std::string_view::npos) return std::nullopt;
  return std::string(detail::trim(text.substr(start, b - start)));
}

/// Value of a "Label: value" line.
inline std::optional<std::string> labelled(std::string_view text, std::string_view label) {
  for (std::string_view line : detail::split_lines(text)) {
    line = detail::trim(line);
    if (line.substr(0, label.size()) == label) return std::string(detail::trim(line.substr(label.size())));
  }
  return std::nullopt;
}

inline std::optional<Action> parse_single_action(std::string_view text) {
  auto parsed = parse_plan(text);
  if (auto* p = std::get_if<Plan>(&parsed); p && p->actions.size() == 1) return p->actions.front();
  return std::nullopt;
}

}  // namespace scripted

/// Rule-engine backend. Stateless, so one instance can serve concurrent episodes.
class ScriptedBackend : public Backend {
 public:
  std::string complete(const BackendRequest& request) override {
    const auto step = step_of(request.system_text);
    if (!step) return "I cannot tell which stage is asking.";
    switch (*step) {
      case Step::look: return look(request);
      case Step::explain: return explain(request);
      case Step::replan: return replan(request);
    }
    return "";
  }

 private:
  static std::string look(const BackendRequest& r) {
    using namespace scripted;
    const auto failed = parse_single_action(labelled(r.user_text, "Failed action:").value_or(""));
    const std::string report = labelled(r.user_text, "Error report:").value_or("");
    if (!failed || !r.attachment)
      return "The observation is not usable.\n" + diagnosis_line("Discrepancy: ", {});
    const Scene scene = parse_snapshot(r.attachment->snapshot);
    return look_text(scene, *failed, diagnose(scene, *failed, report));
  }

  static std::string explain(const BackendRequest& r) {
    using namespace scripted;
    const std::string analysis = section(r.user_text, "analysis").value_or("");
    const auto parsed = parse_plan(section(r.user_text, "plan").value_or(""));
    const Plan plan = std::holds_alternative<Plan>(parsed) ? std::get<Plan>(parsed) : Plan{};
    const Diagnosis d = find_diagnosis(analysis).value_or(diagnose_from_report(analysis));
    return explain_text(d, plan);
  }

  static std::string replan(const BackendRequest& r) {
    using namespace scripted;
    const std::string plan_text = section(r.user_text, "plan").value_or("");
    const auto parsed = parse_plan(plan_text);
    if (!std::holds_alternative<Plan>(parsed)) return plan_text;
    const Plan& plan = std::get<Plan>(parsed);
    std::optional<Diagnosis> d = find_diagnosis(section(r.user_text, "reasoning").value_or(""));
    const std::string report = labelled(r.user_text, "Error report:").value_or("");
    if (!d && r.attachment && !plan.actions.empty())
      d = diagnose(parse_snapshot(r.attachment->snapshot), plan.actions.front(), report);
    if (!d) d = diagnose_from_report(report);
    return serialize_plan(apply_recipe(d.value_or(Diagnosis{}), plan));
  }
};

}  // namespace lera
