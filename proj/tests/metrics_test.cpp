#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "lera/metrics.hpp"

using namespace lera;

namespace {

EpisodeTrace episode(bool success, int satisfied, int total, std::vector<bool> replans = {}) {
  EpisodeTrace t;
  t.task_id = "synthetic";
  t.agent_label = "A";
  t.success = success;
  t.final_goals = {satisfied, total};
  for (bool ok : replans) {
    ReplanEvent r;
    r.success = ok;
    t.events.push_back(ActionEvent{});
    t.events.push_back(std::move(r));
  }
  return t;
}

EpisodeTrace with_replans(int successful, int total) {
  std::vector<bool> r(static_cast<std::size_t>(total), false);
  std::fill_n(r.begin(), successful, true);
  return episode(false, 0, 1, r);
}

// Naive recounts: walk raw events, no helpers from the library.
struct Naive {
  double sr, gcs;
  std::optional<double> srep;
};

Naive recount(const std::vector<EpisodeTrace>& traces) {
  double succ = 0, gcs = 0, srep_sum = 0;
  int srep_n = 0;
  for (const auto& t : traces) {
    if (t.success) succ += 1;
    gcs += static_cast<double>(t.final_goals.satisfied) / t.final_goals.total;
    int ok = 0, all = 0;
    for (const auto& e : t.events)
      if (e.index() == 1) {
        ++all;
        if (std::get<1>(e).success) ++ok;
      }
    if (all > 0) {
      srep_sum += static_cast<double>(ok) / all;
      ++srep_n;
    }
  }
  const double n = static_cast<double>(traces.size());
  return {succ / n, gcs / n, srep_n ? std::optional<double>(srep_sum / srep_n) : std::nullopt};
}

std::vector<EpisodeTrace> random_set(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 40), goals(1, 5), replans(0, 4), coin(0, 1);
  std::vector<EpisodeTrace> out;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const int total = goals(rng);
    const int sat = std::uniform_int_distribution<int>(0, total)(rng);
    const bool success = sat == total && coin(rng);
    std::vector<bool> r(static_cast<std::size_t>(replans(rng)));
    for (std::size_t k = 0; k < r.size(); ++k) r[k] = coin(rng);
    out.push_back(episode(success, sat, total, r));
  }
  return out;
}

SuiteResult two_agent_suite() {
  std::vector<EpisodeTrace> traces;
  for (int i = 0; i < 4; ++i) {
    auto t = episode(i % 2 == 0, i % 2 == 0 ? 2 : 1, 2);
    t.agent_label = "Oracle";
    traces.push_back(t);
    auto r = episode(true, 2, 2, {i != 3, true});
    r.agent_label = "O-LERa";
    traces.push_back(r);
  }
  return {"demo", summarize_by_agent(traces, {"Oracle", "O-LERa"}), "00000000deadbeef"};
}

}  // namespace

TEST(SuccessRate, Examples) {
  std::vector<EpisodeTrace> hundred;
  for (int i = 0; i < 100; ++i) hundred.push_back(episode(i < 19, i < 19 ? 1 : 0, 1));
  EXPECT_DOUBLE_EQ(success_rate(hundred), 0.19);
  EXPECT_EQ(percent(success_rate(hundred)), "19.00");

  EXPECT_DOUBLE_EQ(success_rate({episode(true, 1, 1), episode(true, 1, 1)}), 1.0);
  EXPECT_DOUBLE_EQ(success_rate({episode(true, 1, 1), episode(false, 0, 1), episode(false, 0, 1),
                                 episode(true, 1, 1)}),
                   0.5);
  EXPECT_THROW(success_rate({}), MetricError);
}

TEST(GoalConditionSuccess, Examples) {
  EXPECT_DOUBLE_EQ(goal_condition_success({episode(true, 4, 4), episode(false, 2, 4),
                                           episode(false, 1, 4), episode(false, 1, 4)}),
                   0.5);
  EXPECT_DOUBLE_EQ(goal_condition_success({episode(true, 3, 3), episode(true, 2, 2)}), 1.0);
  EXPECT_DOUBLE_EQ(goal_condition_success({episode(false, 2, 4)}), 0.5);
  EXPECT_THROW(goal_condition_success({}), MetricError);
}

TEST(ReplanningSuccess, Examples) {
  EXPECT_NEAR(*replanning_success({with_replans(2, 3), with_replans(1, 1)}), (2.0 / 3 + 1.0) / 2, 1e-12);
  EXPECT_EQ(percent(replanning_success({with_replans(2, 3), with_replans(1, 1)})), "83.33");
  EXPECT_DOUBLE_EQ(*replanning_success({with_replans(0, 2), with_replans(0, 1)}), 0.0);
  EXPECT_DOUBLE_EQ(*replanning_success({with_replans(3, 3), episode(true, 1, 1), with_replans(0, 2)}), 0.5);
  EXPECT_FALSE(replanning_success({episode(true, 1, 1)}).has_value());
  EXPECT_EQ(percent(replanning_success({episode(true, 1, 1)})), "—");
}

TEST(Metrics, MatchNaiveRecountOnRandomSets) {
  std::mt19937_64 rng(20240515);
  for (int i = 0; i < 1000; ++i) {
    auto set = random_set(rng);
    const Naive n = recount(set);
    ASSERT_EQ(success_rate(set), n.sr);
    ASSERT_EQ(goal_condition_success(set), n.gcs);
    ASSERT_EQ(replanning_success(set), n.srep);

    const double sr = success_rate(set), gcs = goal_condition_success(set);
    ASSERT_GE(sr, 0.0);
    ASSERT_LE(gcs, 1.0);
    ASSERT_LE(sr, gcs + 1e-12);
    if (auto s = replanning_success(set)) {
      ASSERT_TRUE(*s >= 0.0 && *s <= 1.0);
    }

    std::shuffle(set.begin(), set.end(), rng);
    ASSERT_NEAR(success_rate(set), sr, 1e-12);
    ASSERT_NEAR(goal_condition_success(set), gcs, 1e-12);
    if (n.srep) {
      ASSERT_NEAR(*replanning_success(set), *n.srep, 1e-12);
    }
  }
}

TEST(Report, MarkdownLayout) {
  const std::string md = emit_report(two_agent_suite(), ReportFormat::markdown);
  EXPECT_NE(md.find("| Agent | SR | GCR | SRep | Episodes | Replans |"), std::string::npos);
  EXPECT_NE(md.find("| Oracle | 50.00 | 75.00 | — | 4 | 0 |"), std::string::npos);
  EXPECT_NE(md.find("| O-LERa | 100.00 | 100.00 | 87.50 | 4 | 8 |"), std::string::npos);
  EXPECT_NE(md.find("00000000deadbeef"), std::string::npos);
}

TEST(Report, CsvLayout) {
  const std::string csv = emit_report(two_agent_suite(), ReportFormat::csv);
  EXPECT_EQ(csv,
            "agent,SR,GCR,SRep,episodes,replans\n"
            "Oracle,50.00,75.00,—,4,0\n"
            "O-LERa,100.00,100.00,87.50,4,8\n"
            "# fingerprint 00000000deadbeef\n");
}

TEST(Report, JsonUsesNullForUndefined) {
  const auto j = nlohmann::json::parse(emit_report(two_agent_suite(), ReportFormat::json));
  EXPECT_TRUE(j["rows"][0]["SRep"].is_null());
  EXPECT_EQ(j["rows"][1]["SRep"], "87.50");
  EXPECT_EQ(j["fingerprint"], "00000000deadbeef");
}

TEST(Report, RenderingIsPure) {
  const auto suite = two_agent_suite();
  for (auto f : {ReportFormat::csv, ReportFormat::markdown, ReportFormat::json})
    EXPECT_EQ(emit_report(suite, f), emit_report(suite, f));
}
