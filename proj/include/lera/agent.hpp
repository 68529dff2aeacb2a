#pragma once

// Episode runtime: the planner serves the ground-truth plan, the executor
// applies actions to the scene, the checker judges each action (optionally
// with flip noise), and failures either trigger the replanner or are skipped.

#include <exception>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lera/evidence.hpp"
#include "lera/replanner.hpp"
#include "lera/tasks.hpp"

namespace lera {

struct CheckerConfig {
  double p_flip = 0.0;  // 0 is the oracle checker
};

struct CheckerVerdict {
  bool passed = true;
  std::string evidence;

  bool operator==(const CheckerVerdict&) const = default;
};

inline constexpr std::string_view kPassedEvidence = "ok";

inline bool ground_truth_verdict(const Scene& pre, const Action& action, const ActionOutcome& outcome,
                                 const Scene& post) {
  return outcome.status == ActionOutcome::Status::executed && effect_holds(pre, action, post);
}

/// Judges one executed action. Draws exactly one value from `flips`.
inline CheckerVerdict checker_verify(const Scene& pre, const Action& action,
                                     const ActionOutcome& outcome, const Scene& post,
                                     const CheckerConfig& cfg, Rng& flips) {
  const bool truth = ground_truth_verdict(pre, action, outcome, post);
  const bool flip = flips.bernoulli(cfg.p_flip);
  const bool passed = truth != flip;
  if (passed) return {true, std::string(kPassedEvidence)};
  if (truth) return {false, evidence::fabricated(action)};
  switch (outcome.status) {
    case ActionOutcome::Status::rejected_precondition: return {false, evidence::rejected(action)};
    case ActionOutcome::Status::executed_with_drop:
      if (action.verb == Verb::place && pre.gripper_holding)
        return {false, evidence::dropped_on_place(action, *pre.gripper_holding)};
      return {false, evidence::dropped_on_pick(action)};
    case ActionOutcome::Status::executed: break;
  }
  return {false, evidence::effect_missing(action)};
}

struct AgentConfig {
  std::string label = "Oracle";
  std::optional<ReplanVariant> replanner;
  CheckerConfig checker;
  int max_actions = 50;
  int max_replans = 25;
  std::optional<double> p_drop;  // overrides the task's failure model
  bool apply_perturbations = true;
};

struct ActionEvent {
  Action action;
  ActionOutcome outcome;
  CheckerVerdict verdict;
  bool ground_truth = false;

  bool operator==(const ActionEvent&) const = default;
};

struct ReplanEvent {
  Action trigger;
  std::string evidence;
  ReplanVariant variant = ReplanVariant::LERa;
  Plan plan_before;  // remaining plan handed to the replanner
  std::optional<std::string> look_text;
  std::optional<std::string> explain_text;
  std::string raw_replan_text;
  std::optional<Plan> adopted;
  bool parsed_ok = false;
  bool success = false;
  int calls_made = 0;
  std::vector<PromptRecord> prompts;
  std::string failure_reason;

  bool operator==(const ReplanEvent&) const = default;
};

using TraceEvent = std::variant<ActionEvent, ReplanEvent>;

struct EpisodeTrace {
  std::string task_id;
  std::string agent_label;
  std::uint64_t seed = 0;
  std::vector<TraceEvent> events;
  GoalCount final_goals;
  bool success = false;
  bool budget_exhausted = false;
  std::string error;  // non-empty if the episode aborted internally

  std::size_t replan_count() const {
    std::size_t n = 0;
    for (const auto& e : events) n += std::holds_alternative<ReplanEvent>(e);
    return n;
  }
  std::size_t successful_replans() const {
    std::size_t n = 0;
    for (const auto& e : events)
      if (const auto* r = std::get_if<ReplanEvent>(&e)) n += r->success;
    return n;
  }

  bool operator==(const EpisodeTrace&) const = default;
};

/// Judges the replan at `events[index]` from the events after it: a parsed
/// plan succeeds when its first action passes ground truth; an empty plan
/// succeeds when the goals already hold.
inline bool replan_success(const std::vector<TraceEvent>& events, std::size_t index,
                           bool goals_satisfied) {
  const auto& r = std::get<ReplanEvent>(events.at(index));
  if (!r.parsed_ok || !r.adopted) return false;
  if (r.adopted->actions.empty()) return goals_satisfied;
  if (index + 1 < events.size())
    if (const auto* next = std::get_if<ActionEvent>(&events[index + 1]))
      return next->ground_truth;
  return false;
}

/// The scene an episode starts from: layout shuffled by the episode seed,
/// then the task's perturbations applied.
inline Scene episode_start_scene(const TaskSpec& task, std::uint64_t seed, bool apply_perturbations) {
  Scene scene = task.initial_scene;
  Rng layout = Rng::stream(seed, "layout");
  shuffle_layout(scene, layout);
  if (apply_perturbations) scene = perturb(std::move(scene), task.perturbations);
  return scene;
}

namespace detail {

inline void run_loop(const TaskSpec& task, const AgentConfig& agent, Backend* backend,
                     std::uint64_t seed, EpisodeTrace& trace, Scene& scene) {
  scene = episode_start_scene(task, seed, agent.apply_perturbations);
  FailureModel failure = task.failure;
  if (agent.p_drop) failure.p_drop = *agent.p_drop;
  DropStreams drops = DropStreams::from_seed(seed);
  Rng flips = Rng::stream(seed, "flip");
  const Vocabulary vocab = task.vocabulary();

  Plan plan = task.gt_plan;
  int actions = 0, replans = 0;
  std::optional<std::size_t> pending;  // replan awaiting its first action

  while (!plan.done() && !check_goals(scene, task.goals).all()) {
    if (actions >= agent.max_actions) {
      trace.budget_exhausted = true;
      break;
    }
    const Action action = plan.current();
    const Scene pre = scene;
    ActionOutcome outcome = apply_action(scene, action, failure, drops);
    ++actions;
    CheckerVerdict verdict = checker_verify(pre, action, outcome, scene, agent.checker, flips);
    const bool truth = ground_truth_verdict(pre, action, outcome, scene);
    trace.events.push_back(ActionEvent{action, std::move(outcome), verdict, truth});
    if (pending) {
      std::get<ReplanEvent>(trace.events[*pending]).success = truth;
      pending.reset();
    }

    if (verdict.passed || !agent.replanner) {
      ++plan.cursor;
      continue;
    }
    if (!backend) throw std::logic_error("replanner configured without a backend");
    if (replans >= agent.max_replans) {
      trace.budget_exhausted = true;
      break;
    }
    ++replans;
    ReplanRequest req{task.instruction, observe_all(scene), verdict.evidence, action,
                      remaining(plan), vocab};
    ReplanResult res = run_variant(*agent.replanner, *backend, req);
    ReplanEvent ev{action,           verdict.evidence,  *agent.replanner,
                   req.remaining_plan, res.look_text,   res.explain_text,
                   res.raw_replan_text, res.plan,       res.parsed_ok,
                   false,            res.calls_made,    std::move(res.prompts),
                   res.failure_reason};
    trace.events.push_back(std::move(ev));
    if (res.parsed_ok) {
      plan = *res.plan;
      plan.cursor = 0;
      if (plan.done())
        std::get<ReplanEvent>(trace.events.back()).success = check_goals(scene, task.goals).all();
      else
        pending = trace.events.size() - 1;
    } else {
      ++plan.cursor;
    }
  }
}

}  // namespace detail

/// Runs one episode. Internal errors are recorded in the trace, never thrown.
inline EpisodeTrace run_episode(const TaskSpec& task, const AgentConfig& agent, Backend* backend,
                                std::uint64_t seed) {
  EpisodeTrace trace;
  trace.task_id = task.id;
  trace.agent_label = agent.label;
  trace.seed = seed;
  Scene scene = task.initial_scene;
  try {
    detail::run_loop(task, agent, backend, seed, trace, scene);
    trace.final_goals = check_goals(scene, task.goals);
  } catch (const std::exception& e) {
    trace.error = e.what();
    trace.final_goals = check_goals(scene, task.goals);
  }
  trace.success = trace.error.empty() && trace.final_goals.all() && !trace.budget_exhausted;
  return trace;
}

}  // namespace lera
