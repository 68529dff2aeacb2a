#pragma once

// Built-in task catalog: ten tabletop pick/place tasks of graduated length and
// six household tasks (two each for heating, refrigerating and washing), each
// with a blocking changed-object-state perturbation.

#include <string>
#include <utility>
#include <vector>

#include "lera/world.hpp"

namespace lera {

struct TaskSpec {
  std::string id;
  Family family = Family::tabletop;
  std::string instruction;
  Plan gt_plan;
  std::vector<GoalCondition> goals;
  std::vector<Perturbation> perturbations;
  FailureModel failure;
  Scene initial_scene;

  Vocabulary vocabulary() const {
    Vocabulary v{family, family_verbs(family), {}};
    for (const auto& [id, st] : initial_scene.objects) v.objects.insert(id);
    return v;
  }
};

inline constexpr double kDefaultDropProbability = 0.2;

namespace detail {

inline Scene tabletop_scene() {
  Scene s;
  s.family = Family::tabletop;
  int cell = 0;
  for (auto [name, color] : {std::pair{"red", Color::red}, {"green", Color::green},
                             {"blue", Color::blue}, {"yellow", Color::yellow}}) {
    s.add({std::string(name) + "_block", Kind::block, color}, Placement::table(cell));
    s.add({std::string(name) + "_bowl", Kind::bowl, color}, Placement::table(cell + 8));
    ++cell;
  }
  return s;
}

inline TaskSpec tabletop_task(int number, std::string instruction,
                              std::vector<std::pair<ObjectId, ObjectId>> moves,
                              std::vector<GoalCondition> goals) {
  TaskSpec t;
  t.id = (number < 10 ? "tabletop_0" : "tabletop_") + std::to_string(number);
  t.family = Family::tabletop;
  t.instruction = std::move(instruction);
  for (auto& [block, dest] : moves) {
    t.gt_plan.actions.push_back(Action::make(Verb::locate, block));
    t.gt_plan.actions.push_back(Action::make(Verb::pick, block));
    t.gt_plan.actions.push_back(Action::make(Verb::locate, dest));
    t.gt_plan.actions.push_back(Action::make(Verb::place, dest));
  }
  t.goals = std::move(goals);
  t.failure.p_drop = kDefaultDropProbability;
  t.initial_scene = tabletop_scene();
  return t;
}

struct HouseholdSetup {
  bool microwave_open = false;
  bool fridge_open = false;
  bool dishwasher_open = false;
};

inline Scene household_scene(const HouseholdSetup& setup) {
  Scene s;
  s.family = Family::household;
  s.add({"microwave", Kind::appliance, Color::none}, Placement::table(0));
  s.add({"fridge", Kind::container, Color::none}, Placement::table(1));
  s.add({"dishwasher", Kind::appliance, Color::none}, Placement::table(2));
  int cell = 4;
  for (const char* item : {"pizza", "mug", "apple", "milk", "plate", "cup"})
    s.add({item, Kind::item, Color::none}, Placement::table(cell++));
  s.at("microwave").flags.open = setup.microwave_open;
  s.at("fridge").flags.open = setup.fridge_open;
  s.at("dishwasher").flags.open = setup.dishwasher_open;
  for (const char* item : {"pizza", "mug", "apple", "milk"}) s.at(item).flags.clean = true;
  return s;
}

inline TaskSpec household_task(std::string id, std::string instruction, HouseholdSetup setup,
                               std::vector<Action> plan, std::vector<GoalCondition> goals,
                               std::vector<Perturbation> perturbations) {
  TaskSpec t;
  t.id = std::move(id);
  t.family = Family::household;
  t.instruction = std::move(instruction);
  t.gt_plan.actions = std::move(plan);
  t.goals = std::move(goals);
  t.perturbations = std::move(perturbations);
  t.failure.p_drop = 0.0;
  t.initial_scene = household_scene(setup);
  return t;
}

// GT plan for "carry item into appliance/container and run it".
inline std::vector<Action> carry_plan(const ObjectId& item, const ObjectId& dest, bool open_first,
                                      bool close_after, bool run_after) {
  std::vector<Action> p{Action::make(Verb::go_to, item), Action::make(Verb::pick, item),
                        Action::make(Verb::go_to, dest)};
  if (open_first) p.push_back(Action::make(Verb::open, dest));
  p.push_back(Action::make(Verb::put, item, dest));
  if (close_after) p.push_back(Action::make(Verb::close, dest));
  if (run_after) p.push_back(Action::make(Verb::toggle_on, dest));
  return p;
}

// The library invariant: the GT plan validates and, on the unperturbed scene
// without drops, reaches every goal.
inline void check_task(const TaskSpec& t) {
  if (auto err = validate(t.gt_plan, t.vocabulary()))
    throw ConfigError(t.id + ": ground-truth plan invalid: " + err->message());
  Scene scene = t.initial_scene;
  DropStreams rng = DropStreams::from_seed(0);
  for (const Action& a : t.gt_plan.actions) {
    const auto outcome = apply_action(scene, a, FailureModel{0.0}, rng);
    if (outcome.status != ActionOutcome::Status::executed)
      throw ConfigError(t.id + ": ground-truth action " + to_string(a) + " failed: " +
                        outcome.message);
  }
  if (!check_goals(scene, t.goals).all())
    throw ConfigError(t.id + ": ground-truth plan does not reach the goals");
  (void)perturb(t.initial_scene, t.perturbations);
}

inline std::vector<TaskSpec> build_library() {
  using G = GoalCondition;
  std::vector<TaskSpec> lib;
  lib.push_back(tabletop_task(1, "Place red block in red bowl", {{"red_block", "red_bowl"}},
                              {G::in("red_block", "red_bowl")}));
  lib.push_back(tabletop_task(2, "Place blue block in green bowl", {{"blue_block", "green_bowl"}},
                              {G::in("blue_block", "green_bowl")}));
  lib.push_back(tabletop_task(3, "Stack yellow block on green block",
                              {{"yellow_block", "green_block"}},
                              {G::on("yellow_block", "green_block")}));
  lib.push_back(tabletop_task(4, "Place red block in red bowl and blue block in blue bowl",
                              {{"red_block", "red_bowl"}, {"blue_block", "blue_bowl"}},
                              {G::in("red_block", "red_bowl"), G::in("blue_block", "blue_bowl")}));
  lib.push_back(tabletop_task(5, "Put blue block on red block and both in yellow bowl",
                              {{"red_block", "yellow_bowl"}, {"blue_block", "red_block"}},
                              {G::in("red_block", "yellow_bowl"), G::on("blue_block", "red_block"),
                               G::in("blue_block", "yellow_bowl")}));
  lib.push_back(tabletop_task(
      6, "Place red, green and yellow blocks in the bowls of the same color",
      {{"red_block", "red_bowl"}, {"green_block", "green_bowl"}, {"yellow_block", "yellow_bowl"}},
      {G::in("red_block", "red_bowl"), G::in("green_block", "green_bowl"),
       G::in("yellow_block", "yellow_bowl")}));
  lib.push_back(tabletop_task(
      7, "Put red, green and blue blocks in the yellow bowl",
      {{"red_block", "yellow_bowl"}, {"green_block", "yellow_bowl"}, {"blue_block", "yellow_bowl"}},
      {G::in("red_block", "yellow_bowl"), G::in("green_block", "yellow_bowl"),
       G::in("blue_block", "yellow_bowl")}));
  lib.push_back(tabletop_task(
      8, "Place yellow block in red bowl, stack green block on it and put blue block in blue bowl",
      {{"yellow_block", "red_bowl"}, {"green_block", "yellow_block"}, {"blue_block", "blue_bowl"}},
      {G::in("yellow_block", "red_bowl"), G::on("green_block", "yellow_block"),
       G::in("blue_block", "blue_bowl")}));
  lib.push_back(tabletop_task(9, "Place every block in the bowl of the same color",
                              {{"red_block", "red_bowl"},
                               {"green_block", "green_bowl"},
                               {"blue_block", "blue_bowl"},
                               {"yellow_block", "yellow_bowl"}},
                              {G::in("red_block", "red_bowl"), G::in("green_block", "green_bowl"),
                               G::in("blue_block", "blue_bowl"),
                               G::in("yellow_block", "yellow_bowl")}));
  lib.push_back(tabletop_task(10, "Build two towers in bowls: blue on red, yellow on green",
                              {{"red_block", "red_bowl"},
                               {"blue_block", "red_block"},
                               {"green_block", "green_bowl"},
                               {"yellow_block", "green_block"}},
                              {G::in("red_block", "red_bowl"), G::on("blue_block", "red_block"),
                               G::in("green_block", "green_bowl"),
                               G::on("yellow_block", "green_block")}));

  // Running appliances block toggle_on; closed doors block put.
  lib.push_back(household_task(
      "household_heat_1", "Heat a slice of pizza in the microwave", {},
      carry_plan("pizza", "microwave", true, true, true),
      {G::in("pizza", "microwave"), G::flag_is("pizza", Flag::hot, true),
       G::flag_is("microwave", Flag::open, false)},
      {{"microwave", Flag::powered, true}}));
  lib.push_back(household_task(
      "household_heat_2", "Warm the mug in the microwave", {.microwave_open = true},
      carry_plan("mug", "microwave", false, true, true),
      {G::in("mug", "microwave"), G::flag_is("mug", Flag::hot, true),
       G::flag_is("microwave", Flag::open, false)},
      {{"microwave", Flag::open, false}}));
  lib.push_back(household_task(
      "household_fridge_1", "Put the apple in the refrigerator", {.fridge_open = true},
      carry_plan("apple", "fridge", false, true, false),
      {G::in("apple", "fridge"), G::flag_is("fridge", Flag::open, false)},
      {{"fridge", Flag::open, false}}));
  lib.push_back(household_task(
      "household_fridge_2", "Put the milk in the refrigerator", {.fridge_open = true},
      carry_plan("milk", "fridge", false, true, false),
      {G::in("milk", "fridge"), G::flag_is("fridge", Flag::open, false)},
      {{"fridge", Flag::open, false}}));
  lib.push_back(household_task(
      "household_wash_1", "Wash the plate in the dishwasher", {},
      carry_plan("plate", "dishwasher", true, true, true),
      {G::in("plate", "dishwasher"), G::flag_is("plate", Flag::clean, true)},
      {{"dishwasher", Flag::powered, true}}));
  lib.push_back(household_task(
      "household_wash_2", "Wash the cup in the dishwasher", {.dishwasher_open = true},
      carry_plan("cup", "dishwasher", false, true, true),
      {G::in("cup", "dishwasher"), G::flag_is("cup", Flag::clean, true)},
      {{"dishwasher", Flag::open, false}}));

  for (const auto& t : lib) check_task(t);
  return lib;
}

}  // namespace detail

/// The fixed built-in catalog (10 tabletop + 6 household tasks).
inline const std::vector<TaskSpec>& task_library() {
  static const std::vector<TaskSpec> lib = detail::build_library();
  return lib;
}

inline const TaskSpec* find_task(std::string_view id) {
  for (const auto& t : task_library())
    if (t.id == id) return &t;
  return nullptr;
}

}  // namespace lera
