#include <gtest/gtest.h>

#include "lera/observe.hpp"
#include "lera/tasks.hpp"

using namespace lera;

namespace {

Scene tabletop() { return find_task("tabletop_01")->initial_scene; }
Scene household() { return find_task("household_heat_1")->initial_scene; }

ActionOutcome run(Scene& s, const Action& a, double p_drop = 0.0, std::uint64_t seed = 1) {
  DropStreams rng = DropStreams::from_seed(seed);
  return apply_action(s, a, FailureModel{p_drop}, rng);
}

int held_count(const Scene& s) {
  int n = 0;
  for (const auto& [id, st] : s.objects) n += st.place.site == Placement::Site::held;
  return n;
}

}  // namespace

TEST(ApplyAction, PickWithoutFailure) {
  Scene s = tabletop();
  s.located_target = ObjectId("red_block");
  const auto out = run(s, Action::make(Verb::pick, "red_block"));
  EXPECT_EQ(out.status, ActionOutcome::Status::executed);
  EXPECT_EQ(s.gripper_holding, ObjectId("red_block"));
  EXPECT_EQ(s.at("red_block").place.site, Placement::Site::held);
  EXPECT_EQ(s.step_counter, 1);
}

TEST(ApplyAction, OpenAlreadyOpenMicrowaveIsRejected) {
  Scene s = perturb(household(), {{"microwave", Flag::open, true}});
  s.located_target = ObjectId("microwave");
  const Scene before = s;
  const auto out = run(s, Action::make(Verb::open, "microwave"));
  EXPECT_EQ(out.status, ActionOutcome::Status::rejected_precondition);
  EXPECT_EQ(render_snapshot(s), render_snapshot(before));
}

TEST(ApplyAction, ForcedDropReplaysSeedSevenDestination) {
  Scene s = tabletop();
  s.located_target = ObjectId("red_block");
  const auto out = run(s, Action::make(Verb::pick, "red_block"), 1.0, 7);
  ASSERT_EQ(out.status, ActionOutcome::Status::executed_with_drop);
  EXPECT_FALSE(s.gripper_holding.has_value());

  // Independent replay: free cells of the initial scene with red_block lifted,
  // then the first draw of the seed-7 destination stream.
  std::vector<int> free;
  const Scene initial = tabletop();
  for (int c = 0; c < kTableCells; ++c) {
    bool used = false;
    for (const auto& [id, st] : initial.objects)
      used |= id != ObjectId("red_block") && st.place.site == Placement::Site::table && st.place.cell == c;
    if (!used) free.push_back(c);
  }
  Rng dest = Rng::stream(7, "drop-destination");
  const int expected = free[dest.index(free.size())];
  ASSERT_TRUE(out.drop_destination.has_value());
  EXPECT_EQ(*out.drop_destination, Placement::table(expected));
  EXPECT_EQ(s.at("red_block").place, Placement::table(expected));
  EXPECT_EQ(s.last_drop, ObjectId("red_block"));
}

TEST(ApplyAction, UnknownObjectAndForeignVerbAreRejected) {
  Scene s = tabletop();
  auto out = run(s, Action::make(Verb::locate, "purple_block"));
  EXPECT_EQ(out.status, ActionOutcome::Status::rejected_precondition);
  EXPECT_EQ(out.message, "no such object");
  out = run(s, Action::make(Verb::open, "red_bowl"));
  EXPECT_EQ(out.status, ActionOutcome::Status::rejected_precondition);
  EXPECT_EQ(s, tabletop());
}

TEST(ApplyAction, PreconditionTable) {
  using S = ActionOutcome::Status;
  Scene s = tabletop();
  EXPECT_EQ(run(s, Action::make(Verb::pick, "red_block")).status, S::rejected_precondition);  // not located
  EXPECT_EQ(run(s, Action::make(Verb::place, "red_bowl")).status, S::rejected_precondition);  // empty gripper
  EXPECT_EQ(run(s, Action::make(Verb::locate, "red_block")).status, S::executed);
  EXPECT_EQ(run(s, Action::make(Verb::pick, "red_block")).status, S::executed);
  EXPECT_EQ(run(s, Action::make(Verb::place, "red_bowl")).status, S::rejected_precondition);  // not located
  EXPECT_EQ(run(s, Action::make(Verb::locate, "green_block")).status, S::executed);
  EXPECT_EQ(run(s, Action::make(Verb::pick, "green_block")).status, S::rejected_precondition);  // full gripper
  EXPECT_EQ(run(s, Action::make(Verb::place, "green_block")).status, S::executed);
  EXPECT_EQ(s.at("red_block").place, Placement::on("green_block"));
  // Towers are at most two blocks tall, and a covered block cannot be picked.
  EXPECT_EQ(run(s, Action::make(Verb::pick, "green_block")).status, S::rejected_precondition);

  Scene h = household();
  EXPECT_EQ(run(h, Action::make(Verb::go_to, "pizza")).status, S::executed);
  EXPECT_EQ(run(h, Action::make(Verb::pick, "pizza")).status, S::executed);
  EXPECT_EQ(run(h, Action::make(Verb::go_to, "microwave")).status, S::executed);
  EXPECT_EQ(run(h, Action::make(Verb::put, "pizza", "microwave")).status, S::rejected_precondition);  // closed
  EXPECT_EQ(run(h, Action::make(Verb::close, "microwave")).status, S::rejected_precondition);
  EXPECT_EQ(run(h, Action::make(Verb::open, "microwave")).status, S::executed);
  EXPECT_EQ(run(h, Action::make(Verb::toggle_on, "microwave")).status, S::rejected_precondition);  // open
  EXPECT_EQ(run(h, Action::make(Verb::put, "pizza", "microwave")).status, S::executed);
  EXPECT_EQ(run(h, Action::make(Verb::close, "microwave")).status, S::executed);
  EXPECT_EQ(run(h, Action::make(Verb::toggle_on, "microwave")).status, S::executed);
  EXPECT_EQ(h.at("pizza").flags.hot, true);
  EXPECT_EQ(run(h, Action::make(Verb::toggle_on, "microwave")).status, S::rejected_precondition);  // running
  EXPECT_EQ(run(h, Action::make(Verb::toggle_off, "microwave")).status, S::executed);
  EXPECT_EQ(run(h, Action::make(Verb::toggle_off, "microwave")).status, S::rejected_precondition);
}

TEST(ApplyAction, RejectionsNeverMutateTheScene) {
  // Exhaustive over every action on every object in both families' initial scenes.
  for (const char* id : {"tabletop_01", "household_heat_1"}) {
    const Scene base = find_task(id)->initial_scene;
    std::vector<ObjectId> objects;
    for (const auto& [oid, st] : base.objects) objects.push_back(oid);
    for (Verb v : kAllVerbs)
      for (const auto& a : objects)
        for (const auto& b : objects) {
          if (arity(v) == 1 && b != objects.front()) continue;
          Action act = arity(v) == 1 ? Action::make(v, a) : Action::make(v, a, b);
          for (const auto& located : objects) {
            Scene s = base;
            s.located_target = located;
            const std::string before = render_snapshot(s);
            const auto out = run(s, act);
            if (out.status == ActionOutcome::Status::rejected_precondition) {
              ASSERT_EQ(render_snapshot(s), before) << to_string(act);
            }
          }
        }
  }
}

TEST(ApplyAction, SingleHeldInvariantUnderRandomActions) {
  const Scene base = tabletop();
  std::vector<ObjectId> objects;
  for (const auto& [oid, st] : base.objects) objects.push_back(oid);
  const Verb verbs[] = {Verb::locate, Verb::pick, Verb::place};
  Rng pick(5);
  for (int episode = 0; episode < 200; ++episode) {
    Scene s = base;
    DropStreams rng = DropStreams::from_seed(static_cast<std::uint64_t>(episode));
    for (int step = 0; step < 60; ++step) {
      const Action a = Action::make(verbs[pick.index(3)], objects[pick.index(objects.size())]);
      apply_action(s, a, FailureModel{0.3}, rng);
      ASSERT_LE(held_count(s), 1);
      if (s.gripper_holding) {
        ASSERT_EQ(s.at(*s.gripper_holding).place.site, Placement::Site::held);
      } else {
        ASSERT_EQ(held_count(s), 0);
      }
    }
  }
}

TEST(ApplyAction, DropFrequencyWithinThreeSigma) {
  const int n = 10000;
  int drops = 0;
  for (int i = 0; i < n; ++i) {
    Scene s = tabletop();
    s.located_target = ObjectId("red_block");
    drops += run(s, Action::make(Verb::pick, "red_block"), 0.2, static_cast<std::uint64_t>(i)).status ==
             ActionOutcome::Status::executed_with_drop;
  }
  EXPECT_NEAR(static_cast<double>(drops) / n, 0.2, 0.012);
}

TEST(ApplyAction, DeterministicForEqualSeeds) {
  const Plan& plan = find_task("tabletop_10")->gt_plan;
  Scene a = tabletop(), b = tabletop();
  DropStreams ra = DropStreams::from_seed(99), rb = DropStreams::from_seed(99);
  for (const Action& act : plan.actions)
    EXPECT_EQ(apply_action(a, act, FailureModel{0.4}, ra), apply_action(b, act, FailureModel{0.4}, rb));
  EXPECT_EQ(a, b);
}

TEST(ApplyAction, DroppedObjectLandsOnAFreeTableCell) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Scene s = tabletop();
    run(s, Action::make(Verb::locate, "red_block"));
    run(s, Action::make(Verb::pick, "red_block"));
    run(s, Action::make(Verb::locate, "blue_bowl"));
    const auto out = run(s, Action::make(Verb::place, "blue_bowl"), 1.0, seed);
    ASSERT_EQ(out.status, ActionOutcome::Status::executed_with_drop);
    const auto& p = s.at("red_block").place;
    ASSERT_EQ(p.site, Placement::Site::table);
    for (const auto& [id, st] : s.objects) {
      if (id != ObjectId("red_block") && st.place.site == Placement::Site::table) {
        ASSERT_NE(st.place.cell, p.cell);
      }
    }
  }
}

TEST(CheckGoals, Examples) {
  Scene s = tabletop();
  s.at("red_block").place = Placement::in("red_bowl");
  EXPECT_EQ(check_goals(s, {GoalCondition::in("red_block", "red_bowl")}), (GoalCount{1, 1}));

  const TaskSpec& towers = *find_task("tabletop_10");
  Scene t = towers.initial_scene;
  t.at("red_block").place = Placement::in("red_bowl");
  t.at("green_block").place = Placement::in("green_bowl");
  EXPECT_EQ(check_goals(t, towers.goals), (GoalCount{2, 4}));
  EXPECT_EQ(check_goals(t, towers.goals), check_goals(t, towers.goals));

  Scene h = tabletop();
  h.at("red_block").place = Placement::held();
  h.gripper_holding = ObjectId("red_block");
  EXPECT_EQ(check_goals(h, {GoalCondition::in("red_block", "red_bowl"),
                            GoalCondition::on("red_block", "green_block")}),
            (GoalCount{0, 2}));
}

TEST(CheckGoals, StackInBowlCountsAsInside) {
  Scene s = tabletop();
  s.at("red_block").place = Placement::in("yellow_bowl");
  s.at("blue_block").place = Placement::on("red_block");
  EXPECT_TRUE(holds(s, GoalCondition::in("blue_block", "yellow_bowl")));
  EXPECT_FALSE(holds(s, GoalCondition::in("blue_block", "red_bowl")));
}

TEST(Perturb, Examples) {
  const Scene base = household();
  const Scene opened = perturb(base, {{"microwave", Flag::open, true}});
  EXPECT_EQ(opened.at("microwave").flags.open, true);
  Scene expected = base;
  expected.at("microwave").flags.open = true;
  EXPECT_EQ(opened, expected);
  EXPECT_EQ(perturb(base, {}), base);
  EXPECT_THROW(perturb(base, {{"fridge", Flag::open, true}, {"fridge", Flag::open, true}}), ConfigError);
  EXPECT_THROW(perturb(base, {{"pizza", Flag::open, true}}), ConfigError);
  EXPECT_THROW(perturb(base, {{"oven", Flag::open, true}}), ConfigError);
  Scene later = base;
  later.step_counter = 1;
  EXPECT_THROW(perturb(later, {{"microwave", Flag::open, true}}), ConfigError);
}

TEST(EffectHolds, MatchesExecutedEffects) {
  Scene s = tabletop();
  for (const Action& a : find_task("tabletop_05")->gt_plan.actions) {
    const Scene pre = s;
    ASSERT_EQ(run(s, a).status, ActionOutcome::Status::executed) << to_string(a);
    EXPECT_TRUE(effect_holds(pre, a, s)) << to_string(a);
  }
  Scene h = find_task("household_wash_1")->initial_scene;
  for (const Action& a : find_task("household_wash_1")->gt_plan.actions) {
    const Scene pre = h;
    ASSERT_EQ(run(h, a).status, ActionOutcome::Status::executed) << to_string(a);
    EXPECT_TRUE(effect_holds(pre, a, h)) << to_string(a);
  }
}

TEST(ShuffleLayout, KeepsCellsDistinctAndIsSeeded) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Scene a = tabletop(), b = tabletop();
    Rng ra = Rng::stream(seed, "layout"), rb = Rng::stream(seed, "layout");
    shuffle_layout(a, ra);
    shuffle_layout(b, rb);
    EXPECT_EQ(a, b);
    std::set<int> cells;
    for (const auto& [id, st] : a.objects) cells.insert(st.place.cell);
    EXPECT_EQ(cells.size(), a.objects.size());
  }
}
