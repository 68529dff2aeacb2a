#pragma once

// Trace log: one JSON object per line. Each episode contributes a "begin"
// line, one line per action or replan event, and an "end" line; every line
// carries the episode key so a log can be re-sorted after parallel runs.

#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lera/agent.hpp"

namespace lera {

class TraceError : public std::runtime_error {
 public:
  TraceError(std::size_t line, const std::string& why)
      : std::runtime_error("trace line " + std::to_string(line) + ": " + why), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

using ojson = nlohmann::ordered_json;

inline ojson opt_text(const std::optional<std::string>& s) { return s ? ojson(*s) : ojson(nullptr); }

inline ojson plan_json(const Plan& p) {
  ojson a = ojson::array();
  for (const Action& x : p.actions) a.push_back(to_string(x));
  return a;
}

inline Action action_of(const std::string& text) {
  Action a;
  if (auto err = parse_action_line(text, a)) throw std::runtime_error("bad action \"" + text + "\": " + *err);
  return a;
}

inline Plan plan_of(const ojson& j) {
  Plan p;
  for (const auto& x : j) p.actions.push_back(action_of(x.get<std::string>()));
  return p;
}

inline std::optional<std::string> text_of(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<std::string>();
}

inline ojson placement_json(const std::optional<Placement>& p) {
  if (!p) return nullptr;
  switch (p->site) {
    case Placement::Site::table: return ojson{{"table", p->cell}};
    case Placement::Site::in: return ojson{{"in", p->target.name}};
    case Placement::Site::on: return ojson{{"on", p->target.name}};
    case Placement::Site::held: return ojson{{"held", true}};
  }
  return nullptr;
}

inline std::optional<Placement> placement_of(const ojson& j) {
  if (j.is_null()) return std::nullopt;
  if (j.contains("table")) return Placement::table(j.at("table").get<int>());
  if (j.contains("in")) return Placement::in(j.at("in").get<std::string>());
  if (j.contains("on")) return Placement::on(j.at("on").get<std::string>());
  if (j.contains("held")) return Placement::held();
  throw std::runtime_error("bad placement");
}

}  // namespace detail

/// Serializes one episode as JSON lines keyed by `episode`.
inline std::string serialize_trace(const EpisodeTrace& t, std::size_t episode) {
  using detail::ojson;
  std::string out;
  auto emit = [&](ojson j) {
    out += j.dump();
    out += '\n';
  };
  emit({{"episode", episode},
        {"type", "begin"},
        {"task", t.task_id},
        {"agent", t.agent_label},
        {"seed", t.seed}});
  for (const auto& e : t.events) {
    if (const auto* a = std::get_if<ActionEvent>(&e)) {
      emit({{"episode", episode},
            {"type", "action"},
            {"action", to_string(a->action)},
            {"status", to_string(a->outcome.status)},
            {"drop_destination", detail::placement_json(a->outcome.drop_destination)},
            {"message", a->outcome.message},
            {"passed", a->verdict.passed},
            {"evidence", a->verdict.evidence},
            {"ground_truth", a->ground_truth}});
      continue;
    }
    const auto& r = std::get<ReplanEvent>(e);
    ojson prompts = ojson::array();
    for (const auto& p : r.prompts)
      prompts.push_back({{"step", to_string(p.step)},
                         {"system", p.system_text},
                         {"user", p.user_text},
                         {"observation", p.observation_attached}});
    emit({{"episode", episode},
          {"type", "replan"},
          {"trigger", to_string(r.trigger)},
          {"evidence", r.evidence},
          {"variant", to_string(r.variant)},
          {"plan_before", detail::plan_json(r.plan_before)},
          {"look", detail::opt_text(r.look_text)},
          {"explain", detail::opt_text(r.explain_text)},
          {"raw_replan", r.raw_replan_text},
          {"adopted", r.adopted ? detail::plan_json(*r.adopted) : ojson(nullptr)},
          {"parsed_ok", r.parsed_ok},
          {"success", r.success},
          {"calls", r.calls_made},
          {"failure_reason", r.failure_reason},
          {"prompts", prompts}});
  }
  emit({{"episode", episode},
        {"type", "end"},
        {"satisfied", t.final_goals.satisfied},
        {"total", t.final_goals.total},
        {"success", t.success},
        {"budget_exhausted", t.budget_exhausted},
        {"error", t.error}});
  return out;
}

struct KeyedTrace {
  std::size_t episode = 0;
  EpisodeTrace trace;
};

/// Parses a trace log. Episodes are returned ordered by their episode key.
/// Throws TraceError naming the first malformed line.
inline std::vector<KeyedTrace> parse_traces(std::string_view text) {
  using detail::ojson;
  std::map<std::size_t, EpisodeTrace> open, done;
  const auto lines = detail::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t n = i + 1;
    if (detail::trim(lines[i]).empty()) continue;
    try {
      const ojson j = ojson::parse(lines[i]);
      const auto ep = j.at("episode").get<std::size_t>();
      const auto type = j.at("type").get<std::string>();
      if (type == "begin") {
        if (open.contains(ep) || done.contains(ep)) throw std::runtime_error("duplicate episode");
        EpisodeTrace t;
        t.task_id = j.at("task").get<std::string>();
        t.agent_label = j.at("agent").get<std::string>();
        t.seed = j.at("seed").get<std::uint64_t>();
        open[ep] = std::move(t);
        continue;
      }
      auto it = open.find(ep);
      if (it == open.end()) throw std::runtime_error("event for an episode that has not begun");
      EpisodeTrace& t = it->second;
      if (type == "action") {
        ActionEvent a;
        a.action = detail::action_of(j.at("action").get<std::string>());
        auto st = status_from_string(j.at("status").get<std::string>());
        if (!st) throw std::runtime_error("unknown status");
        a.outcome.status = *st;
        a.outcome.drop_destination = detail::placement_of(j.at("drop_destination"));
        a.outcome.message = j.at("message").get<std::string>();
        a.verdict.passed = j.at("passed").get<bool>();
        a.verdict.evidence = j.at("evidence").get<std::string>();
        a.ground_truth = j.at("ground_truth").get<bool>();
        t.events.push_back(std::move(a));
      } else if (type == "replan") {
        ReplanEvent r;
        r.trigger = detail::action_of(j.at("trigger").get<std::string>());
        r.evidence = j.at("evidence").get<std::string>();
        auto v = variant_from_string(j.at("variant").get<std::string>());
        if (!v) throw std::runtime_error("unknown variant");
        r.variant = *v;
        r.plan_before = detail::plan_of(j.at("plan_before"));
        r.look_text = detail::text_of(j.at("look"));
        r.explain_text = detail::text_of(j.at("explain"));
        r.raw_replan_text = j.at("raw_replan").get<std::string>();
        if (!j.at("adopted").is_null()) r.adopted = detail::plan_of(j.at("adopted"));
        r.parsed_ok = j.at("parsed_ok").get<bool>();
        r.success = j.at("success").get<bool>();
        r.calls_made = j.at("calls").get<int>();
        r.failure_reason = j.at("failure_reason").get<std::string>();
        for (const auto& p : j.at("prompts")) {
          auto step = p.at("step").get<std::string>();
          PromptRecord rec;
          rec.step = step == "look" ? Step::look : step == "explain" ? Step::explain : Step::replan;
          rec.system_text = p.at("system").get<std::string>();
          rec.user_text = p.at("user").get<std::string>();
          rec.observation_attached = p.at("observation").get<bool>();
          r.prompts.push_back(std::move(rec));
        }
        t.events.push_back(std::move(r));
      } else if (type == "end") {
        t.final_goals = {j.at("satisfied").get<int>(), j.at("total").get<int>()};
        t.success = j.at("success").get<bool>();
        t.budget_exhausted = j.at("budget_exhausted").get<bool>();
        t.error = j.at("error").get<std::string>();
        done[ep] = std::move(t);
        open.erase(it);
      } else {
        throw std::runtime_error("unknown event type \"" + type + "\"");
      }
    } catch (const TraceError&) {
      throw;
    } catch (const std::exception& e) {
      throw TraceError(n, e.what());
    }
  }
  if (!open.empty()) throw TraceError(lines.size(), "episode " + std::to_string(open.begin()->first) + " has no end line");
  std::vector<KeyedTrace> out;
  for (auto& [ep, t] : done) out.push_back({ep, std::move(t)});
  return out;
}

namespace detail {

inline std::string indent(std::string_view text, std::string_view pad) {
  std::string out;
  for (std::string_view line : split_lines(text)) {
    out.append(pad);
    out.append(line);
    out.push_back('\n');
  }
  return out;
}

}  // namespace detail

/// Human-readable timeline of one episode.
inline std::string render_transcript(const EpisodeTrace& t) {
  std::ostringstream out;
  out << "task " << t.task_id << ", agent " << t.agent_label << ", seed " << t.seed << '\n';
  std::size_t step = 0;
  for (const auto& e : t.events) {
    if (const auto* a = std::get_if<ActionEvent>(&e)) {
      out << ++step << ". " << to_string(a->action) << "  [" << to_string(a->outcome.status) << "] "
          << (a->verdict.passed ? "passed" : "failed") << " (truth: "
          << (a->ground_truth ? "pass" : "fail") << ")";
      if (!a->verdict.passed) out << " - " << a->verdict.evidence;
      out << '\n';
      continue;
    }
    const auto& r = std::get<ReplanEvent>(e);
    out << "   replan (" << to_string(r.variant) << ", " << r.calls_made << " model calls) after "
        << to_string(r.trigger) << ": " << (r.success ? "successful" : "unsuccessful") << '\n';
    if (r.look_text) out << "   L:\n" << detail::indent(*r.look_text, "     ");
    if (r.explain_text) out << "   E:\n" << detail::indent(*r.explain_text, "     ");
    out << "   P':\n" << detail::indent(r.raw_replan_text, "     ");
    if (!r.parsed_ok) out << "   not adopted: " << r.failure_reason << '\n';
  }
  if (t.replan_count() == 0) out << "no replanning events\n";
  out << "goals " << t.final_goals.satisfied << "/" << t.final_goals.total << ", "
      << (t.success ? "success" : "failure");
  if (t.budget_exhausted) out << " (budget exhausted)";
  if (!t.error.empty()) out << " (error: " << t.error << ")";
  out << '\n';
  return out.str();
}

}  // namespace lera
