#include "spa/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <limits>

namespace spa {

using nlohmann::json;

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

json MetricsReport::to_json(bool timings) const {
    json j{{"scene", scene},
           {"agents", agents},
           {"desires", desires},
           {"nli", nli},
           {"seed", seed},
           {"solved", solved},
           {"solution_time", solution_time ? json(*solution_time) : json(nullptr)},
           {"ticks", ticks},
           {"replans", replans},
           {"statements", statements},
           {"questions", questions},
           {"questions_answered", questions_answered},
           {"facts_overheard", facts_overheard},
           {"parser_failures", parser_failures}};
    if (timings) {
        j["planning_time"] = planning_time;
        j["initial_plan_mean"] = initial_plan_mean;
        j["replan_time"] = replan_time;
    }
    json agents_j = json::array();
    for (const auto& a : per_agent) {
        const auto& m = a.metrics;
        json aj{{"id", a.id},
                {"name", a.name},
                {"desires", a.desires},
                {"plans", m.plans},
                {"replans", m.replans},
                {"statements", m.statements},
                {"questions", m.questions},
                {"facts_overheard", m.facts_overheard},
                {"parser_failures", m.parser_failures},
                {"satisfied_at", m.satisfied_at ? json(*m.satisfied_at) : json(nullptr)}};
        if (timings) {
            aj["initial_plan_time"] = m.initial_plan_us * 1e-6;
            aj["planning_time"] = m.plan_us * 1e-6;
            aj["replan_time"] = m.replans ? m.replan_us * 1e-6 / double(m.replans) : 0.0;
        }
        agents_j.push_back(std::move(aj));
    }
    j["per_agent"] = agents_j;
    return j;
}

std::string csv_header() {
    return "scene,agents,nli,planning_time,replans,replan_time,solution_time,statements,questions,facts_overheard,"
           "parser_failures";
}

std::string csv_row(const MetricsReport& r, bool timings) {
    std::string s = r.scene + "," + std::to_string(r.agents) + "," + (r.nli ? "true" : "false") + ",";
    s += (timings ? fixed(r.planning_time, 6) : "") + ",";
    s += std::to_string(r.replans) + ",";
    s += (timings ? fixed(r.replan_time, 9) : "") + ",";
    s += (r.solution_time ? fixed(*r.solution_time, 1) : "") + ",";
    s += std::to_string(r.statements) + "," + std::to_string(r.questions) + "," + std::to_string(r.facts_overheard) +
         "," + std::to_string(r.parser_failures);
    return s;
}

MetricsReport collect(const World& world, const std::string& scene, bool nli) {
    MetricsReport r;
    r.scene = scene;
    r.nli = nli;
    r.seed = world.config().seed;
    r.solution_time = world.solved_at();
    r.solved = r.solution_time.has_value();
    r.ticks = world.tick_index();
    r.questions_answered = world.questions_answered();
    double initial = 0, replan_us = 0;
    std::size_t planners = 0;
    for (const auto& a : world.agents()) {
        if (a.avatar) continue;
        ++r.agents;
        r.desires += a.desires.size();
        const auto& m = a.metrics;
        r.planning_time += m.plan_us * 1e-6;
        if (m.plans) {
            initial += m.initial_plan_us * 1e-6;
            ++planners;
        }
        r.replans += m.replans;
        replan_us += m.replan_us;
        r.statements += m.statements;
        r.questions += m.questions;
        r.facts_overheard += m.facts_overheard;
        r.parser_failures += m.parser_failures;
        r.per_agent.push_back({a.id, a.name, a.desires.size(), m});
    }
    r.initial_plan_mean = planners ? initial / double(planners) : 0.0;
    r.replan_time = r.replans ? replan_us * 1e-6 / double(r.replans) : 0.0;
    return r;
}

MetricsReport run_benchmark(const Scenario& scenario, const RunOptions& options, std::vector<json>* trace) {
    auto world = scenario.make_world(options.nli);
    world->set_tracing(options.trace || trace);
    world->run(options.max_ticks ? options.max_ticks : scenario.max_ticks);
    if (trace) *trace = std::move(world->trace());
    return collect(*world, scenario.spec->name, options.nli);
}

json Comparison::to_json(bool timings) const {
    return {{"with_nli", with_nli.to_json(timings)}, {"without_nli", without_nli.to_json(timings)}};
}

Comparison compare(const Scenario& scenario, std::uint64_t max_ticks) {
    RunOptions on{true, max_ticks, false};
    RunOptions off{false, max_ticks, false};
    return {run_benchmark(scenario, on), run_benchmark(scenario, off)};
}

// ---------------------------------------------------------------------------

namespace {

struct PlanCost {
    double total = 0;   // seconds, all agents
    double replan = 0;  // seconds, mean
};

// Plans every agent from its initial beliefs, then feeds each one the true
// location of one desired object and times the incremental replan.
PlanCost plan_cost(const Scenario& sc) {
    using Clock = std::chrono::steady_clock;
    const auto& spec = *sc.spec;
    PlanCost cost;
    std::size_t replans = 0;
    for (const auto& as : spec.agents) {
        BeliefState kb(sc.spec);
        for (const auto& b : as.beliefs) kb.assert_belief(b);
        PlannerState planner;
        const auto t0 = Clock::now();
        auto r = planner.plan(kb, as.desires, spec.actions, sc.config.planner);
        cost.total += std::chrono::duration<double>(Clock::now() - t0).count();
        if (!std::holds_alternative<PlanTiming>(r)) continue;
        for (const auto& fact : spec.world.facts) {
            if (kb.truth(fact) != Truth::Unknown) continue;
            const auto& bs = planner.bindings();
            const bool read = std::any_of(bs.begin(), bs.end(), [&](const GroundedPlan& g) {
                return std::find(g.uncertain.begin(), g.uncertain.end(), fact) != g.uncertain.end();
            });
            if (!read) continue;
            kb.assert_belief(fact);
            const auto t1 = Clock::now();
            planner.advance({PlanEvent::Kind::NewBelief, fact}, kb, spec.actions, sc.config.planner, 0.0);
            cost.replan += std::chrono::duration<double>(Clock::now() - t1).count();
            ++replans;
            break;
        }
    }
    if (replans) cost.replan /= double(replans);
    return cost;
}

}  // namespace

std::vector<SweepPoint> run_scaling_sweep(SweepAxis axis, const std::vector<std::size_t>& points, std::uint64_t seed,
                                          int reps) {
    std::vector<SweepPoint> out;
    for (std::size_t x : points) {
        const Scenario sc = axis == SweepAxis::Agents ? build_antipodal_circle(x, 10, seed, 3)
                                                      : build_antipodal_circle(5, 5, seed, 2, std::max<std::size_t>(5, x / 5));
        SweepPoint p;
        p.x = x;
        p.initial_plan_time = p.mean_replan_time = std::numeric_limits<double>::max();
        for (int i = 0; i < std::max(1, reps); ++i) {
            const PlanCost c = plan_cost(sc);
            p.initial_plan_time = std::min(p.initial_plan_time, c.total);
            p.mean_replan_time = std::min(p.mean_replan_time, c.replan);
        }
        p.initial_plan_mean = p.initial_plan_time / double(sc.spec->agents.size());
        out.push_back(p);
    }
    return out;
}

double linear_fit_r2(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
    mx /= double(n);
    my /= double(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return 0.0;
    return sxy * sxy / (sxx * syy);
}

}  // namespace spa
