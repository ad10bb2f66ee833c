#include "spa/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

using namespace spa;

namespace {

// 1 - SSres/SStot with the slope and intercept solved from the normal equations.
double r2_by_residuals(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = double(x.size());
    const double sx = std::accumulate(x.begin(), x.end(), 0.0);
    const double sy = std::accumulate(y.begin(), y.end(), 0.0);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double icept = (sy - slope * sx) / n;
    double res = 0, tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        res += std::pow(y[i] - (slope * x[i] + icept), 2);
        tot += std::pow(y[i] - sy / n, 2);
    }
    return 1.0 - res / tot;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

}  // namespace

TEST(Metrics, CsvColumns) {
    EXPECT_EQ(csv_header(),
              "scene,agents,nli,planning_time,replans,replan_time,solution_time,statements,questions,"
              "facts_overheard,parser_failures");
}

TEST(Metrics, TimingCellsOnlyOnRequest) {
    const auto r = run_benchmark(build_evacuation(3), {});
    ASSERT_TRUE(r.solved);
    const auto quiet = split(csv_row(r, false));
    ASSERT_EQ(quiet.size(), 11u);
    EXPECT_EQ(quiet[0], "evacuation");
    EXPECT_TRUE(quiet[3].empty());
    EXPECT_TRUE(quiet[5].empty());
    EXPECT_FALSE(quiet[6].empty());
    const auto loud = split(csv_row(r, true));
    EXPECT_FALSE(loud[3].empty());
    EXPECT_FALSE(r.to_json(false).contains("planning_time"));
    EXPECT_TRUE(r.to_json(true).contains("planning_time"));
}

TEST(Metrics, ReportsAreDeterministicWithoutTimings) {
    const auto sc = build_tradeshow(2);
    EXPECT_EQ(compare(sc).to_json(false).dump(), compare(sc).to_json(false).dump());
}

TEST(Metrics, CountsAddUp) {
    const auto r = run_benchmark(build_antipodal_circle(10, 10, 1), {});
    ASSERT_TRUE(r.solved);
    std::size_t q = 0, s = 0, desires = 0;
    for (const auto& a : r.per_agent) {
        q += a.metrics.questions;
        s += a.metrics.statements;
        desires += a.desires;
    }
    EXPECT_EQ(q, r.questions);
    EXPECT_EQ(s, r.statements);
    EXPECT_EQ(desires, r.desires);
    EXPECT_EQ(r.per_agent.size(), 10u);
    EXPECT_LE(r.questions_answered, r.questions);
    EXPECT_EQ(r.parser_failures, 0u);
}

TEST(Metrics, NoLanguageMeansNoTalk) {
    RunOptions o;
    o.nli = false;
    const auto r = run_benchmark(build_antipodal_circle(10, 10, 1), o);
    EXPECT_EQ(r.questions + r.statements + r.facts_overheard, 0u);
    EXPECT_FALSE(r.nli);
}

TEST(Metrics, TickLimitLeavesUnsolved) {
    RunOptions o;
    o.max_ticks = 3;
    const auto r = run_benchmark(build_evacuation(0), o);
    EXPECT_FALSE(r.solved);
    EXPECT_FALSE(r.solution_time.has_value());
    EXPECT_EQ(r.ticks, 3u);
}

TEST(Metrics, TraceRecordsEveryPlan) {
    RunOptions o;
    o.trace = true;
    std::vector<nlohmann::json> trace;
    const auto r = run_benchmark(build_antipodal_circle(6, 6, 2), o, &trace);
    std::size_t plans = 0;
    for (const auto& a : r.per_agent) plans += a.metrics.plans + a.metrics.replans;
    EXPECT_EQ(trace.size(), plans);
    EXPECT_GE(trace.size(), r.per_agent.size());
}

TEST(Metrics, R2MatchesResiduals) {
    const std::vector<double> x = {5, 10, 20, 40};
    const std::vector<std::vector<double>> ys = {{1, 2, 4, 8}, {1, 3, 2, 9}, {4, 1, 7, 2}, {0.5, 0.9, 2.2, 4.1}};
    for (const auto& y : ys) EXPECT_NEAR(linear_fit_r2(x, y), r2_by_residuals(x, y), 1e-9);
    EXPECT_NEAR(linear_fit_r2(x, {3, 3.5, 4.5, 6.5}), 1.0, 1e-12);
}

TEST(Metrics, SweepPointsAreOrdered) {
    const auto pts = run_scaling_sweep(SweepAxis::Agents, {5, 10}, 0, 1);
    ASSERT_EQ(pts.size(), 2u);
    EXPECT_EQ(pts[0].x, 5u);
    EXPECT_EQ(pts[1].x, 10u);
    for (const auto& p : pts) {
        EXPECT_GT(p.initial_plan_time, 0);
        EXPECT_NEAR(p.initial_plan_mean * double(p.x), p.initial_plan_time, 1e-9);
    }
}
