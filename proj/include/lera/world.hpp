#pragma once

// Ground-truth world model for the tabletop and household scenario families:
// scene state, the precondition/effect table, stochastic drops, goal checks and
// start-of-episode state perturbations.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "lera/plan.hpp"
#include "lera/rng.hpp"

namespace lera {

/// A task definition that cannot be loaded (bad perturbation, inconsistent scene).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Kind { block, bowl, container, item, appliance };
enum class Color { red, green, blue, yellow, none };
enum class Flag { open, powered, clean, hot };

inline std::string_view to_string(Kind k) {
  switch (k) {
    case Kind::block: return "block";
    case Kind::bowl: return "bowl";
    case Kind::container: return "container";
    case Kind::item: return "item";
    case Kind::appliance: return "appliance";
  }
  return "?";
}

inline std::string_view to_string(Color c) {
  switch (c) {
    case Color::red: return "red";
    case Color::green: return "green";
    case Color::blue: return "blue";
    case Color::yellow: return "yellow";
    case Color::none: return "none";
  }
  return "?";
}

inline std::string_view to_string(Flag f) {
  switch (f) {
    case Flag::open: return "open";
    case Flag::powered: return "powered";
    case Flag::clean: return "clean";
    case Flag::hot: return "hot";
  }
  return "?";
}

inline std::optional<Kind> kind_from_string(std::string_view s) {
  for (Kind k : {Kind::block, Kind::bowl, Kind::container, Kind::item, Kind::appliance})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

inline std::optional<Color> color_from_string(std::string_view s) {
  for (Color c : {Color::red, Color::green, Color::blue, Color::yellow, Color::none})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

inline std::optional<Flag> flag_from_string(std::string_view s) {
  for (Flag f : {Flag::open, Flag::powered, Flag::clean, Flag::hot})
    if (to_string(f) == s) return f;
  return std::nullopt;
}

struct ObjectDescriptor {
  ObjectId id;
  Kind kind = Kind::block;
  Color color = Color::none;

  bool operator==(const ObjectDescriptor&) const = default;
};

struct StateFlags {
  std::optional<bool> open;
  std::optional<bool> powered;
  std::optional<bool> clean;
  std::optional<bool> hot;

  std::optional<bool>& get(Flag f) {
    switch (f) {
      case Flag::open: return open;
      case Flag::powered: return powered;
      case Flag::clean: return clean;
      case Flag::hot: return hot;
    }
    return open;
  }
  const std::optional<bool>& get(Flag f) const { return const_cast<StateFlags*>(this)->get(f); }

  /// Flags present for a kind, all false.
  static StateFlags defaults_for(Kind k) {
    StateFlags s;
    if (k == Kind::container || k == Kind::appliance) s.open = false;
    if (k == Kind::appliance) s.powered = false;
    if (k == Kind::item) {
      s.clean = false;
      s.hot = false;
    }
    return s;
  }

  bool operator==(const StateFlags&) const = default;
};

struct Placement {
  enum class Site { table, in, on, held };

  Site site = Site::table;
  int cell = 0;     // table only
  ObjectId target;  // in / on only

  static Placement table(int c) { return {Site::table, c, {}}; }
  static Placement in(ObjectId t) { return {Site::in, 0, std::move(t)}; }
  static Placement on(ObjectId t) { return {Site::on, 0, std::move(t)}; }
  static Placement held() { return {Site::held, 0, {}}; }

  bool operator==(const Placement&) const = default;
};

struct ObjectState {
  ObjectDescriptor desc;
  StateFlags flags;
  Placement place;

  bool operator==(const ObjectState&) const = default;
};

inline constexpr int kTableCells = 16;
inline constexpr int kTableColumns = 4;

struct Scene {
  Family family = Family::tabletop;
  std::map<ObjectId, ObjectState> objects;
  std::optional<ObjectId> gripper_holding;
  std::optional<ObjectId> located_target;
  std::optional<ObjectId> last_drop;  // object currently lying where it fell
  int table_cells = kTableCells;
  int step_counter = 0;

  bool operator==(const Scene&) const = default;

  bool has(const ObjectId& id) const { return objects.contains(id); }
  const ObjectState& at(const ObjectId& id) const { return objects.at(id); }
  ObjectState& at(const ObjectId& id) { return objects.at(id); }

  void add(ObjectDescriptor desc, Placement place) {
    StateFlags flags = StateFlags::defaults_for(desc.kind);
    ObjectId id = desc.id;
    objects[id] = ObjectState{std::move(desc), flags, std::move(place)};
  }

  /// Objects directly in or on `id`.
  std::vector<ObjectId> supported_by(const ObjectId& id) const {
    std::vector<ObjectId> out;
    for (const auto& [oid, st] : objects)
      if ((st.place.site == Placement::Site::in || st.place.site == Placement::Site::on) &&
          st.place.target == id)
        out.push_back(oid);
    return out;
  }

  bool has_on_top(const ObjectId& id) const {
    return std::any_of(objects.begin(), objects.end(), [&](const auto& kv) {
      return kv.second.place.site == Placement::Site::on && kv.second.place.target == id;
    });
  }

  /// Table cell of the free-standing object carrying `id`, if any.
  std::optional<int> ground_cell(ObjectId id) const {
    for (int depth = 0; depth <= static_cast<int>(objects.size()); ++depth) {
      const Placement& p = at(id).place;
      if (p.site == Placement::Site::table) return p.cell;
      if (p.site == Placement::Site::held) return std::nullopt;
      id = p.target;
    }
    return std::nullopt;
  }

  std::vector<int> free_cells() const {
    std::vector<bool> used(static_cast<std::size_t>(table_cells), false);
    for (const auto& [id, st] : objects)
      if (st.place.site == Placement::Site::table && st.place.cell >= 0 &&
          st.place.cell < table_cells)
        used[static_cast<std::size_t>(st.place.cell)] = true;
    std::vector<int> out;
    for (int c = 0; c < table_cells; ++c)
      if (!used[static_cast<std::size_t>(c)]) out.push_back(c);
    return out;
  }
};

/// The flag a running appliance sets on its contents.
inline std::optional<Flag> appliance_effect(const ObjectId& id) {
  if (id.name.find("dishwasher") != std::string::npos ||
      id.name.find("washer") != std::string::npos)
    return Flag::clean;
  if (id.name.find("microwave") != std::string::npos || id.name.find("oven") != std::string::npos ||
      id.name.find("stove") != std::string::npos)
    return Flag::hot;
  return std::nullopt;
}

/// True when every item inside appliance `id` carries the appliance's effect flag.
inline bool contents_processed(const Scene& scene, const ObjectId& id) {
  const auto effect = appliance_effect(id);
  if (!effect) return true;
  for (const ObjectId& o : scene.supported_by(id)) {
    const auto& flag = scene.at(o).flags.get(*effect);
    if (flag && !*flag) return false;
  }
  return true;
}

struct GoalCondition {
  enum class Type { on, in, flag };

  Type type = Type::in;
  ObjectId a;
  ObjectId b;                // on / in
  Flag flag = Flag::open;    // flag only
  bool value = true;         // flag only

  static GoalCondition on(ObjectId a, ObjectId b) { return {Type::on, std::move(a), std::move(b)}; }
  static GoalCondition in(ObjectId a, ObjectId b) { return {Type::in, std::move(a), std::move(b)}; }
  static GoalCondition flag_is(ObjectId a, Flag f, bool v) {
    return {Type::flag, std::move(a), {}, f, v};
  }

  bool operator==(const GoalCondition&) const = default;
};

inline std::string to_string(const GoalCondition& g) {
  switch (g.type) {
    case GoalCondition::Type::on: return "on(" + g.a.name + ", " + g.b.name + ")";
    case GoalCondition::Type::in: return "in(" + g.a.name + ", " + g.b.name + ")";
    case GoalCondition::Type::flag:
      return std::string(to_string(g.flag)) + "(" + g.a.name + ") = " + (g.value ? "true" : "false");
  }
  return "?";
}

/// `a` is inside `b`, directly or by standing on a stack that is.
inline bool is_inside(const Scene& scene, ObjectId a, const ObjectId& b) {
  for (std::size_t hops = 0; hops <= scene.objects.size(); ++hops) {
    if (!scene.has(a)) return false;
    const Placement& p = scene.at(a).place;
    if (p.site == Placement::Site::in) return p.target == b;
    if (p.site != Placement::Site::on) return false;
    a = p.target;
  }
  return false;
}

inline bool holds(const Scene& scene, const GoalCondition& g) {
  if (!scene.has(g.a)) return false;
  const ObjectState& st = scene.at(g.a);
  switch (g.type) {
    case GoalCondition::Type::on:
      return st.place.site == Placement::Site::on && st.place.target == g.b;
    case GoalCondition::Type::in:
      return is_inside(scene, g.a, g.b);
    case GoalCondition::Type::flag: {
      const auto& f = st.flags.get(g.flag);
      return f && *f == g.value;
    }
  }
  return false;
}

struct GoalCount {
  int satisfied = 0;
  int total = 0;

  bool all() const { return satisfied == total; }
  bool operator==(const GoalCount&) const = default;
};

inline GoalCount check_goals(const Scene& scene, const std::vector<GoalCondition>& goals) {
  GoalCount c{0, static_cast<int>(goals.size())};
  for (const auto& g : goals)
    if (holds(scene, g)) ++c.satisfied;
  return c;
}

struct Perturbation {
  ObjectId target;
  Flag flag = Flag::open;
  bool value = true;

  bool operator==(const Perturbation&) const = default;
};

/// Applies start-of-episode state changes. Throws ConfigError on a bad definition.
inline Scene perturb(Scene scene, const std::vector<Perturbation>& perturbations) {
  if (scene.step_counter != 0) throw ConfigError("perturbations apply only at t = 0");
  std::set<std::pair<ObjectId, Flag>> seen;
  for (const auto& p : perturbations) {
    if (!scene.has(p.target)) throw ConfigError("perturbation names unknown object " + p.target.name);
    if (!seen.insert({p.target, p.flag}).second)
      throw ConfigError("duplicate perturbation of " + p.target.name + "." +
                        std::string(to_string(p.flag)));
    auto& flag = scene.at(p.target).flags.get(p.flag);
    if (!flag)
      throw ConfigError(p.target.name + " has no " + std::string(to_string(p.flag)) + " flag");
    flag = p.value;
  }
  return scene;
}

struct FailureModel {
  double p_drop = 0.0;
  // When non-empty, the i-th pick/place drops iff drop_schedule[i] (false past
  // the end) instead of sampling p_drop. Used to place a drop at an exact moment.
  std::vector<bool> drop_schedule;
};

/// The two random streams the executor consumes: whether a pick/place drops,
/// and where a dropped object lands.
struct DropStreams {
  Rng decide;
  Rng destination;

  std::size_t decisions = 0;

  static DropStreams from_seed(std::uint64_t seed) {
    return {Rng::stream(seed, "drop"), Rng::stream(seed, "drop-destination")};
  }

  /// One drop decision. Always consumes exactly one draw from `decide`.
  bool should_drop(const FailureModel& f) {
    const bool sampled = decide.bernoulli(f.p_drop);
    const std::size_t i = decisions++;
    if (f.drop_schedule.empty()) return sampled;
    return i < f.drop_schedule.size() && f.drop_schedule[i];
  }
};

struct ActionOutcome {
  enum class Status { executed, executed_with_drop, rejected_precondition };

  Status status = Status::executed;
  std::optional<Placement> drop_destination;
  std::string message;

  bool operator==(const ActionOutcome&) const = default;
};

inline std::string_view to_string(ActionOutcome::Status s) {
  switch (s) {
    case ActionOutcome::Status::executed: return "executed";
    case ActionOutcome::Status::executed_with_drop: return "executed_with_drop";
    case ActionOutcome::Status::rejected_precondition: return "rejected_precondition";
  }
  return "?";
}

inline std::optional<ActionOutcome::Status> status_from_string(std::string_view s) {
  using S = ActionOutcome::Status;
  for (S st : {S::executed, S::executed_with_drop, S::rejected_precondition})
    if (to_string(st) == s) return st;
  return std::nullopt;
}

namespace detail {

inline ActionOutcome reject(std::string why) {
  return {ActionOutcome::Status::rejected_precondition, std::nullopt, std::move(why)};
}

inline bool is_pickable(Kind k) { return k == Kind::block || k == Kind::item; }

// Relocates the object in the gripper (or being lifted) to a random free cell.
inline std::optional<Placement> drop_object(Scene& scene, const ObjectId& id, Rng& destination) {
  ObjectState& st = scene.at(id);
  const Placement before = st.place;
  st.place = Placement::held();  // lifted: its own cell counts as free
  const auto cells = scene.free_cells();
  if (cells.empty()) {
    st.place = before;
    return std::nullopt;
  }
  st.place = Placement::table(cells[destination.index(cells.size())]);
  if (scene.gripper_holding == id) scene.gripper_holding.reset();
  scene.last_drop = id;
  return st.place;
}

}  // namespace detail

/// Executes one action against the scene under the precondition/effect table.
/// Rejected actions leave the scene untouched.
inline ActionOutcome apply_action(Scene& scene, const Action& action, const FailureModel& failure,
                                  DropStreams& rng) {
  using detail::reject;
  using Site = Placement::Site;

  if (!family_verbs(scene.family).contains(action.verb))
    return reject(std::string(to_string(action.verb)) + " is not supported in the " +
                  std::string(to_string(scene.family)) + " family");
  if (action.args.size() != arity(action.verb)) return reject("wrong number of arguments");
  for (const auto& id : action.args)
    if (!scene.has(id)) return reject("no such object");

  const ObjectId& x = action.args.front();
  const ObjectId& target = action.target();
  const bool located = scene.located_target == target;
  ActionOutcome ok{ActionOutcome::Status::executed, std::nullopt, "ok"};

  auto maybe_drop = [&](const ObjectId& id) -> std::optional<ActionOutcome> {
    if (!rng.should_drop(failure)) return std::nullopt;
    auto where = detail::drop_object(scene, id, rng.destination);
    if (!where) return std::nullopt;
    ++scene.step_counter;
    return ActionOutcome{ActionOutcome::Status::executed_with_drop, where,
                         id.name + " fell to cell " + std::to_string(where->cell)};
  };

  switch (action.verb) {
    case Verb::locate:
    case Verb::go_to:
      scene.located_target = x;
      break;

    case Verb::pick: {
      const ObjectState& st = scene.at(x);
      if (scene.gripper_holding) return reject("gripper is not empty");
      if (!located) return reject(x.name + " is not located");
      if (!detail::is_pickable(st.desc.kind)) return reject(x.name + " cannot be picked");
      if (scene.has_on_top(x)) return reject("something is stacked on " + x.name);
      if (st.place.site == Site::in) {
        const auto& open = scene.at(st.place.target).flags.open;
        if (open && !*open) return reject(st.place.target.name + " is closed");
      }
      if (auto dropped = maybe_drop(x)) return *dropped;
      scene.at(x).place = Placement::held();
      scene.gripper_holding = x;
      if (scene.last_drop == x) scene.last_drop.reset();
      break;
    }

    case Verb::place: {
      if (!scene.gripper_holding) return reject("gripper is empty");
      if (!located) return reject(x.name + " is not located");
      const ObjectId held = *scene.gripper_holding;
      if (held == x) return reject("cannot place an object on itself");
      const ObjectState& dest = scene.at(x);
      if (dest.desc.kind == Kind::block) {
        if (dest.place.site == Site::held) return reject(x.name + " is held");
        if (scene.has_on_top(x)) return reject(x.name + " is not clear");
        if (dest.place.site == Site::on) return reject("towers are at most two blocks tall");
      } else if (dest.desc.kind != Kind::bowl) {
        return reject(x.name + " cannot hold objects");
      }
      if (auto dropped = maybe_drop(held)) return *dropped;
      scene.at(held).place =
          dest.desc.kind == Kind::block ? Placement::on(x) : Placement::in(x);
      scene.gripper_holding.reset();
      break;
    }

    case Verb::open:
    case Verb::close: {
      auto& open = scene.at(x).flags.open;
      if (!open) return reject(x.name + " cannot be opened or closed");
      if (!located) return reject(x.name + " is not located");
      const bool want = action.verb == Verb::open;
      if (*open == want) return reject(x.name + (want ? " is already open" : " is already closed"));
      open = want;
      break;
    }

    case Verb::put: {
      const ObjectId& dest = action.args[1];
      if (scene.gripper_holding != x) return reject("not holding " + x.name);
      if (!located) return reject(dest.name + " is not located");
      const ObjectState& d = scene.at(dest);
      if (d.desc.kind != Kind::container && d.desc.kind != Kind::appliance)
        return reject(dest.name + " cannot hold objects");
      if (d.flags.open && !*d.flags.open) return reject(dest.name + " is closed");
      scene.at(x).place = Placement::in(dest);
      scene.gripper_holding.reset();
      break;
    }

    case Verb::toggle_on:
    case Verb::toggle_off: {
      ObjectState& st = scene.at(x);
      if (st.desc.kind != Kind::appliance) return reject(x.name + " is not an appliance");
      if (!located) return reject(x.name + " is not located");
      if (action.verb == Verb::toggle_off) {
        if (!*st.flags.powered) return reject(x.name + " is already off");
        st.flags.powered = false;
        break;
      }
      if (*st.flags.open) return reject(x.name + " is open");
      if (*st.flags.powered) return reject(x.name + " is already on");
      st.flags.powered = true;
      if (auto effect = appliance_effect(x))
        for (const ObjectId& o : scene.supported_by(x)) {
          auto& f = scene.at(o).flags.get(*effect);
          if (f) f = true;
        }
      break;
    }
  }
  ++scene.step_counter;
  return ok;
}

/// Whether the declared effect of `action` is visible in `post`.
/// `pre` supplies what the gripper held before a place.
inline bool effect_holds(const Scene& pre, const Action& action, const Scene& post) {
  const ObjectId& x = action.args.front();
  if (!post.has(x) || !post.has(action.target())) return false;
  switch (action.verb) {
    case Verb::locate:
    case Verb::go_to:
      return post.located_target == x;
    case Verb::pick:
      return post.gripper_holding == x;
    case Verb::place: {
      if (!pre.gripper_holding || post.gripper_holding) return false;
      const Placement& p = post.at(*pre.gripper_holding).place;
      return (p.site == Placement::Site::in || p.site == Placement::Site::on) && p.target == x;
    }
    case Verb::open:
      return post.at(x).flags.open.value_or(false);
    case Verb::close:
      return !post.at(x).flags.open.value_or(true);
    case Verb::put:
      return post.gripper_holding != x && is_inside(post, x, action.args[1]);
    case Verb::toggle_on:
      return post.at(x).flags.powered.value_or(false) && contents_processed(post, x);
    case Verb::toggle_off:
      return !post.at(x).flags.powered.value_or(true);
  }
  return false;
}

/// Moves every free-standing object to a random distinct cell.
inline void shuffle_layout(Scene& scene, Rng& rng) {
  std::vector<int> cells(static_cast<std::size_t>(scene.table_cells));
  std::iota(cells.begin(), cells.end(), 0);
  for (std::size_t i = cells.size(); i > 1; --i) std::swap(cells[i - 1], cells[rng.index(i)]);
  std::size_t next = 0;
  for (auto& [id, st] : scene.objects)
    if (st.place.site == Placement::Site::table) st.place.cell = cells.at(next++);
}

}  // namespace lera
