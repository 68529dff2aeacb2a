#include <gtest/gtest.h>

#include "lera/tasks.hpp"

using namespace lera;

TEST(TaskLibrary, SixteenTasks) {
  const auto& lib = task_library();
  ASSERT_EQ(lib.size(), 16u);
  int tabletop = 0, household = 0;
  for (const auto& t : lib) (t.family == Family::tabletop ? tabletop : household)++;
  EXPECT_EQ(tabletop, 10);
  EXPECT_EQ(household, 6);
}

TEST(TaskLibrary, FirstTabletopTask) {
  const TaskSpec& t = *find_task("tabletop_01");
  EXPECT_EQ(t.instruction, "Place red block in red bowl");
  const Plan expected{{Action::make(Verb::locate, "red_block"), Action::make(Verb::pick, "red_block"),
                       Action::make(Verb::locate, "red_bowl"), Action::make(Verb::place, "red_bowl")},
                      0};
  EXPECT_EQ(t.gt_plan, expected);
  EXPECT_DOUBLE_EQ(t.failure.p_drop, kDefaultDropProbability);
}

TEST(TaskLibrary, TwoTowerTask) {
  const TaskSpec& t = *find_task("tabletop_10");
  EXPECT_EQ(t.instruction, "Build two towers in bowls: blue on red, yellow on green");
  EXPECT_EQ(t.gt_plan.size(), 16u);  // 4 block moves, each locate/pick/locate/place
  EXPECT_EQ(t.goals.size(), 4u);
  EXPECT_EQ(t.gt_plan.size(), 4 * find_task("tabletop_01")->gt_plan.size());
}

TEST(TaskLibrary, GraduatedLengths) {
  std::size_t prev = 0;
  for (const auto& t : task_library()) {
    if (t.family != Family::tabletop) continue;
    EXPECT_GE(t.gt_plan.size(), prev) << t.id;
    EXPECT_GE(t.gt_plan.size(), 4u);
    EXPECT_LE(t.gt_plan.size(), 16u);
    prev = t.gt_plan.size();
  }
}

TEST(TaskLibrary, EveryGroundTruthPlanValidatesAndReachesGoals) {
  for (const auto& t : task_library()) {
    EXPECT_FALSE(validate(t.gt_plan, t.vocabulary()).has_value()) << t.id;
    Scene s = t.initial_scene;
    DropStreams rng = DropStreams::from_seed(0);
    for (const Action& a : t.gt_plan.actions)
      ASSERT_EQ(apply_action(s, a, FailureModel{0.0}, rng).status, ActionOutcome::Status::executed)
          << t.id << " " << to_string(a);
    EXPECT_TRUE(check_goals(s, t.goals).all()) << t.id;
  }
}

TEST(TaskLibrary, HouseholdPerturbationsBlockTheGroundTruthPlan) {
  for (const auto& t : task_library()) {
    if (t.family != Family::household) continue;
    EXPECT_EQ(t.perturbations.size(), 1u) << t.id;
    EXPECT_DOUBLE_EQ(t.failure.p_drop, 0.0);
    Scene s = perturb(t.initial_scene, t.perturbations);
    DropStreams rng = DropStreams::from_seed(0);
    int rejected = 0;
    for (const Action& a : t.gt_plan.actions)
      rejected += apply_action(s, a, FailureModel{0.0}, rng).status ==
                  ActionOutcome::Status::rejected_precondition;
    EXPECT_GE(rejected, 1) << t.id;
    EXPECT_FALSE(check_goals(s, t.goals).all()) << t.id;
  }
}

TEST(TaskLibrary, HouseholdTaskTypes) {
  int heat = 0, fridge = 0, wash = 0;
  for (const auto& t : task_library()) {
    heat += t.id.rfind("household_heat", 0) == 0;
    fridge += t.id.rfind("household_fridge", 0) == 0;
    wash += t.id.rfind("household_wash", 0) == 0;
  }
  EXPECT_EQ(heat, 2);
  EXPECT_EQ(fridge, 2);
  EXPECT_EQ(wash, 2);
  EXPECT_EQ(find_task("nope"), nullptr);
}
