#pragma once
//
// Benchmark runs and the numbers reported for them.
//
// Simulated quantities (solution time, counts) are deterministic for a given
// scenario and seed. Planning times are wall clock and are only written to
// reports when asked for, so that reports stay byte-identical across runs.
//

#include "spa/scenarios.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace spa {

struct AgentReport {
    std::string id;
    std::string name;
    std::size_t desires = 0;
    AgentMetrics metrics;
};

struct MetricsReport {
    std::string scene;
    std::size_t agents = 0;
    std::size_t desires = 0;
    bool nli = true;
    std::uint64_t seed = 0;
    bool solved = false;
    std::optional<double> solution_time;  // simulated seconds
    std::uint64_t ticks = 0;
    double planning_time = 0;     // wall seconds, every full plan of every agent
    double initial_plan_mean = 0; // wall seconds per agent
    std::size_t replans = 0;
    double replan_time = 0;       // wall seconds, mean per replan
    std::size_t statements = 0;
    std::size_t questions = 0;
    std::size_t questions_answered = 0;
    std::size_t facts_overheard = 0;
    std::size_t parser_failures = 0;
    std::vector<AgentReport> per_agent;

    nlohmann::json to_json(bool timings) const;
};

/// Fixed column order: scene, agents, nli, planning_time, replans,
/// replan_time, solution_time, statements, questions, facts_overheard,
/// parser_failures. Timing cells are empty unless `timings`.
std::string csv_header();
std::string csv_row(const MetricsReport& r, bool timings);

struct RunOptions {
    bool nli = true;
    std::uint64_t max_ticks = 0;  // 0: the scenario's own limit
    bool trace = false;
};

MetricsReport collect(const World& world, const std::string& scene, bool nli);
MetricsReport run_benchmark(const Scenario& scenario, const RunOptions& options,
                            std::vector<nlohmann::json>* trace = nullptr);

struct Comparison {
    MetricsReport with_nli;
    MetricsReport without_nli;
    nlohmann::json to_json(bool timings) const;
};
Comparison compare(const Scenario& scenario, std::uint64_t max_ticks = 0);

enum class SweepAxis { Agents, Domain };

struct SweepPoint {
    std::size_t x = 0;
    double initial_plan_time = 0;  // wall seconds, summed over agents
    double initial_plan_mean = 0;  // per agent
    double mean_replan_time = 0;   // wall seconds per incremental replan
};

/// Agents axis: x agents on a 10-object circle, three desires each.
/// Domain axis: x ground Located predicates (5 objects, x/5 spots), five
/// agents with two desires each. Each point keeps the fastest of `reps`.
std::vector<SweepPoint> run_scaling_sweep(SweepAxis axis, const std::vector<std::size_t>& points,
                                          std::uint64_t seed, int reps = 5);

/// Coefficient of determination of the least-squares line through (x, y).
double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace spa
