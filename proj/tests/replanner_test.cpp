#include <gtest/gtest.h>

#include <set>

#include "lera/agent.hpp"
#include "lera/scripted.hpp"

using namespace lera;

namespace {

const ReplanVariant kAll[] = {ReplanVariant::LERa, ReplanVariant::LRa, ReplanVariant::ERa,
                              ReplanVariant::Ra, ReplanVariant::OneShotBaseline};

// tabletop_10 after a drop on the first pick: an 15-step remaining plan.
ReplanRequest drop_request() {
  const TaskSpec& t = *find_task("tabletop_10");
  Scene s = t.initial_scene;
  DropStreams rng = DropStreams::from_seed(3);
  apply_action(s, t.gt_plan.actions[0], FailureModel{0.0}, rng);
  const Action pick = t.gt_plan.actions[1];
  apply_action(s, pick, FailureModel{1.0}, rng);
  Plan p = t.gt_plan;
  p.cursor = 1;
  return {t.instruction, observe_all(s), evidence::dropped_on_pick(pick), pick, remaining(p), t.vocabulary()};
}

// household_heat_1 with the microwave left running, failing at toggle_on.
ReplanRequest running_request() {
  const TaskSpec& t = *find_task("household_heat_1");
  Scene s = perturb(t.initial_scene, t.perturbations);
  DropStreams rng = DropStreams::from_seed(0);
  for (std::size_t i = 0; i < 6; ++i) apply_action(s, t.gt_plan.actions[i], FailureModel{0.0}, rng);
  Plan p = t.gt_plan;
  p.cursor = 6;
  const Action a = p.current();
  return {t.instruction, observe_all(s), evidence::rejected(a), a, remaining(p), t.vocabulary()};
}

std::shared_ptr<Backend> scripted_backend() { return std::make_shared<ScriptedBackend>(); }

}  // namespace

TEST(RunVariant, CallCountMatchesArity) {
  const auto req = drop_request();
  ScriptedBackend backend;
  for (auto v : kAll) {
    const ReplanResult r = run_variant(v, backend, req);
    EXPECT_TRUE(r.parsed_ok) << to_string(v);
    EXPECT_EQ(r.calls_made, arity(v)) << to_string(v);
    EXPECT_EQ(static_cast<int>(r.prompts.size()), r.calls_made);
    EXPECT_EQ(r.look_text.has_value(), v == ReplanVariant::LERa || v == ReplanVariant::LRa);
    EXPECT_EQ(r.explain_text.has_value(), v == ReplanVariant::LERa || v == ReplanVariant::ERa);
  }
  EXPECT_EQ(arity(ReplanVariant::LERa), 3);
  EXPECT_EQ(arity(ReplanVariant::LRa), 2);
  EXPECT_EQ(arity(ReplanVariant::ERa), 2);
  EXPECT_EQ(arity(ReplanVariant::Ra), 1);
  EXPECT_EQ(arity(ReplanVariant::OneShotBaseline), 1);
}

TEST(RunVariant, InformationConfinement) {
  const auto req = drop_request();
  ScriptedBackend backend;
  for (auto v : kAll) {
    const ReplanResult r = run_variant(v, backend, req);
    for (const auto& p : r.prompts) {
      const bool may_see = (p.step == Step::look) || v == ReplanVariant::OneShotBaseline;
      EXPECT_EQ(p.observation_attached, may_see) << to_string(v) << " " << to_string(p.step);
      const std::string all = p.system_text + p.user_text;
      EXPECT_EQ(all.find(kSnapshotHeader), std::string::npos);
      EXPECT_EQ(all.find(req.observation.text), std::string::npos);
      EXPECT_EQ(all.find("table cell"), std::string::npos) << to_string(v);
    }
  }
}

TEST(RunVariant, LookPromptShowsExactlyOnePlanStep) {
  const auto req = drop_request();
  ASSERT_GE(req.remaining_plan.size(), 8u);
  ScriptedBackend backend;
  const ReplanResult r = run_variant(ReplanVariant::LERa, backend, req);
  const PromptRecord& lp = r.prompts.at(0);
  ASSERT_EQ(lp.step, Step::look);
  EXPECT_TRUE(lp.observation_attached);
  std::set<std::string> shown;
  for (const Action& a : req.remaining_plan.actions)
    if (lp.user_text.find(to_string(a)) != std::string::npos) shown.insert(to_string(a));
  EXPECT_EQ(shown, (std::set<std::string>{"pick(red_block)"})) << lp.user_text;
}

TEST(RunVariant, RestoreOriginalOnFalsePositive) {
  const TaskSpec& t = *find_task("tabletop_02");
  Scene s = t.initial_scene;
  DropStreams rng = DropStreams::from_seed(0);
  apply_action(s, t.gt_plan.actions[0], FailureModel{0.0}, rng);
  apply_action(s, t.gt_plan.actions[1], FailureModel{0.0}, rng);
  Plan p = t.gt_plan;
  p.cursor = 1;
  const ReplanRequest req{t.instruction, observe_all(s), evidence::fabricated(p.current()), p.current(),
                          remaining(p), t.vocabulary()};
  ScriptedBackend backend;
  const ReplanResult r = run_variant(ReplanVariant::LERa, backend, req);
  ASSERT_TRUE(r.parsed_ok);
  Plan continuation = req.remaining_plan;
  continuation.actions.erase(continuation.actions.begin());
  EXPECT_EQ(*r.plan, continuation);
  EXPECT_NE(r.look_text->find("No discrepancy found."), std::string::npos);
}

TEST(RunVariant, MalformedOutputTriggersOneRetryWithError) {
  const auto req = drop_request();
  FaultyBackend once(scripted_backend(), {Fault::ok, Fault::ok, Fault::malformed_plan});
  const ReplanResult r = run_variant(ReplanVariant::LERa, once, req);
  EXPECT_TRUE(r.parsed_ok);
  EXPECT_EQ(r.calls_made, 4);
  ASSERT_EQ(r.prompts.size(), 4u);
  EXPECT_EQ(r.prompts[3].step, Step::replan);
  EXPECT_NE(r.prompts[3].user_text.find("line 1: expected verb(args)"), std::string::npos);
  EXPECT_EQ(r.prompts[3].user_text.rfind(r.prompts[2].user_text, 0), 0u);

  FaultyBackend twice(scripted_backend(), {Fault::malformed_plan, Fault::malformed_plan});
  const ReplanResult bad = run_variant(ReplanVariant::Ra, twice, req);
  EXPECT_FALSE(bad.parsed_ok);
  EXPECT_FALSE(bad.plan.has_value());
  EXPECT_EQ(bad.calls_made, 2);
  EXPECT_NE(bad.failure_reason.find("Sure! Here is the plan:"), std::string::npos);
}

TEST(RunVariant, EmptyResponseIsRetried) {
  const auto req = drop_request();
  FaultyBackend b(scripted_backend(), {Fault::empty});
  const ReplanResult r = run_variant(ReplanVariant::Ra, b, req);
  EXPECT_TRUE(r.parsed_ok);
  EXPECT_EQ(r.calls_made, 2);
}

TEST(RunVariant, TransportFailures) {
  const auto req = drop_request();
  FaultyBackend one(scripted_backend(), {Fault::transport_error});
  const ReplanResult r1 = run_variant(ReplanVariant::LERa, one, req);
  EXPECT_TRUE(r1.parsed_ok);
  EXPECT_EQ(r1.calls_made, 4);

  FaultyBackend two(scripted_backend(), {Fault::ok, Fault::transport_error, Fault::transport_error});
  const ReplanResult r2 = run_variant(ReplanVariant::LERa, two, req);
  EXPECT_FALSE(r2.parsed_ok);
  EXPECT_EQ(r2.calls_made, 3);
  EXPECT_NE(r2.failure_reason.find("transport"), std::string::npos);
}

class FixedBackend : public Backend {
 public:
  explicit FixedBackend(std::string text) : text_(std::move(text)) {}
  std::string complete(const BackendRequest&) override { return text_; }

 private:
  std::string text_;
};

TEST(RunVariant, InvalidPlansNeverLeak) {
  const auto req = drop_request();
  for (const char* text : {"pick(purple_block)", "open(red_bowl)", "locate(red_block", "Sure thing!"}) {
    FixedBackend b(text);
    const ReplanResult r = run_variant(ReplanVariant::Ra, b, req);
    EXPECT_FALSE(r.parsed_ok) << text;
    EXPECT_FALSE(r.plan.has_value());
    EXPECT_EQ(r.calls_made, 2);
  }
  FixedBackend fenced("```\nlocate(red_block)\npick(red_block)\n```");
  const ReplanResult ok = run_variant(ReplanVariant::Ra, fenced, req);
  ASSERT_TRUE(ok.parsed_ok);
  EXPECT_EQ(ok.plan->size(), 2u);
}

TEST(RunVariant, RaHasNoSceneInformationForStatePerturbations) {
  const auto req = running_request();
  ScriptedBackend backend;
  const ReplanResult ra = run_variant(ReplanVariant::Ra, backend, req);
  ASSERT_TRUE(ra.parsed_ok);
  EXPECT_EQ(*ra.plan, req.remaining_plan);
  const ReplanResult era = run_variant(ReplanVariant::ERa, backend, req);
  EXPECT_EQ(*era.plan, req.remaining_plan);
  const ReplanResult lra = run_variant(ReplanVariant::LRa, backend, req);
  EXPECT_EQ(lra.plan->actions.front(), Action::make(Verb::toggle_off, "microwave"));
  const ReplanResult base = run_variant(ReplanVariant::OneShotBaseline, backend, req);
  EXPECT_EQ(base.plan->actions.front(), Action::make(Verb::toggle_off, "microwave"));
}

TEST(RunVariant, ExplainMentionsDroppedObjectWithJustifications) {
  const auto req = drop_request();
  ScriptedBackend backend;
  const std::string l = look(backend, req);
  const std::string e = explain(backend, req, l);
  EXPECT_NE(e.find("red_block"), std::string::npos);
  EXPECT_NE(e.find("1. locate(red_block) - "), std::string::npos) << e;
  EXPECT_NE(e.find("2. pick(red_block) - "), std::string::npos) << e;
}

TEST(RunVariant, VariantNamesRoundTrip) {
  for (auto v : kAll) EXPECT_EQ(variant_from_string(to_string(v)), v);
  EXPECT_FALSE(variant_from_string("LERA").has_value());
}
