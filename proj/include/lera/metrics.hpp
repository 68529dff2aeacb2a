#pragma once

// SR, GCS and SRep over episode traces, and report tables with one row per
// agent. Metrics are fractions in [0, 1]; reports show them x100 with two
// decimals.

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lera/agent.hpp"

namespace lera {

class MetricError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline double success_rate(const std::vector<EpisodeTrace>& traces) {
  if (traces.empty()) throw MetricError("success rate of an empty trace set");
  std::size_t ok = 0;
  for (const auto& t : traces) ok += t.success;
  return static_cast<double>(ok) / static_cast<double>(traces.size());
}

inline double goal_condition_success(const std::vector<EpisodeTrace>& traces) {
  if (traces.empty()) throw MetricError("goal-condition success of an empty trace set");
  double sum = 0.0;
  for (const auto& t : traces) {
    if (t.final_goals.total <= 0) throw MetricError("trace of " + t.task_id + " has no goals");
    sum += static_cast<double>(t.final_goals.satisfied) / t.final_goals.total;
  }
  return sum / static_cast<double>(traces.size());
}

/// Mean per-episode fraction of successful replans, over episodes that
/// replanned at least once. Empty when no episode replanned.
inline std::optional<double> replanning_success(const std::vector<EpisodeTrace>& traces) {
  double sum = 0.0;
  std::size_t episodes = 0;
  for (const auto& t : traces) {
    const std::size_t n = t.replan_count();
    if (n == 0) continue;
    sum += static_cast<double>(t.successful_replans()) / static_cast<double>(n);
    ++episodes;
  }
  if (episodes == 0) return std::nullopt;
  return sum / static_cast<double>(episodes);
}

struct AgentRow {
  std::string label;
  double sr = 0.0;
  double gcs = 0.0;
  std::optional<double> srep;
  std::size_t episodes = 0;
  std::size_t replans = 0;
};

struct SuiteResult {
  std::string suite_id;
  std::vector<AgentRow> rows;
  std::string fingerprint;
};

inline AgentRow summarize(const std::string& label, const std::vector<EpisodeTrace>& traces) {
  AgentRow row{label, success_rate(traces), goal_condition_success(traces),
               replanning_success(traces), traces.size(), 0};
  for (const auto& t : traces) row.replans += t.replan_count();
  return row;
}

/// Groups traces by agent label; rows follow `labels` order.
inline std::vector<AgentRow> summarize_by_agent(const std::vector<EpisodeTrace>& traces,
                                                const std::vector<std::string>& labels) {
  std::map<std::string, std::vector<EpisodeTrace>> groups;
  for (const auto& t : traces) groups[t.agent_label].push_back(t);
  std::vector<AgentRow> rows;
  for (const auto& label : labels)
    if (auto it = groups.find(label); it != groups.end()) rows.push_back(summarize(label, it->second));
  return rows;
}

enum class ReportFormat { csv, markdown, json };

inline constexpr std::string_view kUndefinedMetric = "—";

/// x100 with two decimals, e.g. 0.19 -> "19.00".
inline std::string percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", value * 100.0);
  return buf;
}

inline std::string percent(const std::optional<double>& value) {
  return value ? percent(*value) : std::string(kUndefinedMetric);
}

inline std::string emit_report(const SuiteResult& suite, ReportFormat format) {
  std::ostringstream out;
  switch (format) {
    case ReportFormat::csv:
      out << "agent,SR,GCR,SRep,episodes,replans\n";
      for (const auto& r : suite.rows)
        out << r.label << ',' << percent(r.sr) << ',' << percent(r.gcs) << ',' << percent(r.srep)
            << ',' << r.episodes << ',' << r.replans << '\n';
      out << "# fingerprint " << suite.fingerprint << '\n';
      break;
    case ReportFormat::markdown:
      out << "# " << suite.suite_id << "\n\n";
      out << "| Agent | SR | GCR | SRep | Episodes | Replans |\n";
      out << "|---|---:|---:|---:|---:|---:|\n";
      for (const auto& r : suite.rows)
        out << "| " << r.label << " | " << percent(r.sr) << " | " << percent(r.gcs) << " | "
            << percent(r.srep) << " | " << r.episodes << " | " << r.replans << " |\n";
      out << "\nFingerprint: `" << suite.fingerprint << "`\n";
      break;
    case ReportFormat::json: {
      nlohmann::ordered_json j;
      j["suite"] = suite.suite_id;
      j["rows"] = nlohmann::ordered_json::array();
      for (const auto& r : suite.rows)
        j["rows"].push_back({{"agent", r.label},
                             {"SR", percent(r.sr)},
                             {"GCR", percent(r.gcs)},
                             {"SRep", r.srep ? nlohmann::ordered_json(percent(r.srep))
                                             : nlohmann::ordered_json(nullptr)},
                             {"episodes", r.episodes},
                             {"replans", r.replans}});
      j["fingerprint"] = suite.fingerprint;
      out << j.dump(2) << '\n';
      break;
    }
  }
  return out.str();
}

}  // namespace lera
