#pragma once

// Look -> Explain -> Replan pipeline and its ablations. Each stage is one
// backend call; only the final call is retried, once, with the parse or
// validation error appended. A transport failure may also consume that retry.

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lera/backend.hpp"
#include "lera/prompts.hpp"

namespace lera {

enum class ReplanVariant { LERa, LRa, ERa, Ra, OneShotBaseline };

inline std::string_view to_string(ReplanVariant v) {
  switch (v) {
    case ReplanVariant::LERa: return "LERa";
    case ReplanVariant::LRa: return "LRa";
    case ReplanVariant::ERa: return "ERa";
    case ReplanVariant::Ra: return "Ra";
    case ReplanVariant::OneShotBaseline: return "OneShotBaseline";
  }
  return "?";
}

inline std::optional<ReplanVariant> variant_from_string(std::string_view s) {
  for (auto v : {ReplanVariant::LERa, ReplanVariant::LRa, ReplanVariant::ERa, ReplanVariant::Ra,
                 ReplanVariant::OneShotBaseline})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

/// Number of model calls a variant makes when nothing needs retrying.
inline int arity(ReplanVariant v) {
  switch (v) {
    case ReplanVariant::LERa: return 3;
    case ReplanVariant::LRa:
    case ReplanVariant::ERa: return 2;
    case ReplanVariant::Ra:
    case ReplanVariant::OneShotBaseline: return 1;
  }
  return 0;
}

struct ReplanRequest {
  std::string instruction;
  Observation observation;
  std::string evidence;
  Action failed_action;
  Plan remaining_plan;  // starts with failed_action, cursor 0
  Vocabulary vocab;
};

/// A rendered prompt exactly as sent to the backend.
struct PromptRecord {
  Step step = Step::replan;
  std::string system_text;
  std::string user_text;
  bool observation_attached = false;

  bool operator==(const PromptRecord&) const = default;
};

struct ReplanResult {
  std::optional<std::string> look_text;
  std::optional<std::string> explain_text;
  std::string raw_replan_text;
  std::optional<Plan> plan;
  bool parsed_ok = false;
  int calls_made = 0;
  std::vector<PromptRecord> prompts;
  std::string failure_reason;  // empty when parsed_ok
};

namespace detail {

inline std::string first_step(const ReplanRequest& r) {
  return r.remaining_plan.actions.empty() ? std::string(kDoneMarker)
                                          : to_string(r.remaining_plan.actions.front());
}

inline std::string strip_trailing_newline(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  return s;
}

inline std::map<std::string, std::string> slot_values(const ReplanRequest& r) {
  return {{"instruction", r.instruction},
          {"first_plan_step", first_step(r)},
          {"plan", strip_trailing_newline(serialize_plan(r.remaining_plan))},
          {"look_output", ""},
          {"explain_output", ""},
          {"action_vocabulary", action_vocabulary(r.vocab.family)},
          {"few_shots", few_shot_examples(r.vocab.family)},
          {"evidence", r.evidence}};
}

/// Drops markdown code fences a chat model may wrap around its plan.
inline std::string strip_code_fences(std::string_view text) {
  std::string out;
  for (std::string_view line : split_lines(text)) {
    if (trim(line).substr(0, 3) == "```") continue;
    out.append(line);
    out.push_back('\n');
  }
  return out;
}

/// Parses and validates model output; returns the plan or an error message.
inline std::variant<Plan, std::string> interpret(std::string_view raw, const Vocabulary& vocab) {
  auto parsed = parse_plan(strip_code_fences(raw));
  if (auto* err = std::get_if<PlanError>(&parsed)) return "parse error at " + err->message();
  Plan plan = std::get<Plan>(std::move(parsed));
  if (auto err = validate(plan, vocab)) return "invalid plan at " + err->message();
  return plan;
}

class Session {
 public:
  Session(Backend& backend, ReplanResult& result) : backend_(backend), result_(result) {}

  std::string call(Step step, const PromptTemplate& tmpl, const std::map<std::string, std::string>& slots,
                   const std::optional<Observation>& attachment) {
    BackendRequest req{render_template(tmpl.system, slots), render_template(tmpl.user, slots),
                       attachment, {}};
    return send(step, std::move(req));
  }

  std::string send(Step step, BackendRequest req) {
    while (true) {
      result_.prompts.push_back({step, req.system_text, req.user_text, req.attachment.has_value()});
      ++result_.calls_made;
      try {
        return backend_.complete(req);
      } catch (const TransportError&) {
        if (!take_retry()) throw;
      }
    }
  }

  bool take_retry() {
    if (retried_) return false;
    retried_ = true;
    return true;
  }

 private:
  Backend& backend_;
  ReplanResult& result_;
  bool retried_ = false;
};

inline std::string retry_note(const std::string& error) {
  return "\n\nYour previous answer could not be used (" + error +
         "). Answer again with one action per line and nothing else.";
}

}  // namespace detail

inline std::string look(Backend& backend, const ReplanRequest& request,
                        const PromptBundle& prompts = builtin_prompts()) {
  ReplanResult scratch;
  detail::Session s(backend, scratch);
  return s.call(Step::look, prompts.look, detail::slot_values(request), request.observation);
}

/// Without `look_text` (ERa) the analysis slot carries the error report instead.
inline std::string explain(Backend& backend, const ReplanRequest& request,
                           const std::optional<std::string>& look_text,
                           const PromptBundle& prompts = builtin_prompts()) {
  ReplanResult scratch;
  detail::Session s(backend, scratch);
  auto slots = detail::slot_values(request);
  slots["look_output"] = look_text.value_or(request.evidence);
  return s.call(Step::explain, prompts.explain, slots, std::nullopt);
}

inline ReplanResult run_variant(ReplanVariant variant, Backend& backend,
                                const ReplanRequest& request,
                                const PromptBundle& prompts = builtin_prompts()) {
  ReplanResult result;
  detail::Session session(backend, result);
  auto slots = detail::slot_values(request);
  try {
    if (variant == ReplanVariant::LERa || variant == ReplanVariant::LRa)
      result.look_text = session.call(Step::look, prompts.look, slots, request.observation);
    if (variant == ReplanVariant::LERa || variant == ReplanVariant::ERa) {
      slots["look_output"] = result.look_text.value_or(request.evidence);
      result.explain_text = session.call(Step::explain, prompts.explain, slots, std::nullopt);
    }
    slots["explain_output"] = result.explain_text ? *result.explain_text
                                                  : result.look_text.value_or("");
    const bool attach = variant == ReplanVariant::OneShotBaseline;
    BackendRequest req{render_template(prompts.replan.system, slots),
                       render_template(prompts.replan.user, slots),
                       attach ? std::optional<Observation>(request.observation) : std::nullopt,
                       {}};
    const std::string base_user = req.user_text;
    while (true) {
      result.raw_replan_text = session.send(Step::replan, req);
      auto outcome = detail::interpret(result.raw_replan_text, request.vocab);
      if (auto* plan = std::get_if<Plan>(&outcome)) {
        result.plan = std::move(*plan);
        result.parsed_ok = true;
        result.failure_reason.clear();
        return result;
      }
      result.failure_reason = std::get<std::string>(outcome);
      if (!session.take_retry()) return result;
      req.user_text = base_user + detail::retry_note(result.failure_reason);
    }
  } catch (const TransportError& e) {
    result.failure_reason = std::string("transport error: ") + e.what();
  } catch (const TemplateError& e) {
    result.failure_reason = std::string("template error: ") + e.what();
  }
  result.plan.reset();
  result.parsed_ok = false;
  return result;
}

}  // namespace lera
