// Stage 2 grounding, rescoring and the per-agent planner state.

#include "spa/planner.hpp"

#include <algorithm>
#include <chrono>
#include <map>

namespace spa {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

// Beliefs plus the changes made by simulated plan steps.
class Overlay {
public:
    explicit Overlay(const BeliefState& base) : base_(base) {}

    Truth truth(const Literal& lit, bool& from_base) const {
        auto it = delta_.find(atom_of(lit));
        if (it != delta_.end()) {
            from_base = false;
            return it->second == lit.positive ? Truth::True : Truth::False;
        }
        from_base = true;
        return base_.truth(lit);
    }

    void apply(const Literal& lit) {
        const auto& schema = base_.spec().schema(lit);
        if (lit.positive && schema.functional_slot) {
            for (const auto& c : base_.functional_conflicts(lit))
                if (!delta_.count(atom_of(c))) delta_[atom_of(c)] = false;
            const auto f = *schema.functional_slot;
            for (auto& [atom, value] : delta_) {
                if (!value || atom.schema != lit.schema || atom.args[f] == lit.args[f]) continue;
                bool same = true;
                for (std::size_t i = 0; i < atom.args.size(); ++i)
                    if (i != f && atom.args[i] != lit.args[i]) same = false;
                if (same) value = false;
            }
        }
        delta_[atom_of(lit)] = lit.positive;
    }

private:
    const BeliefState& base_;
    std::map<Atom, bool> delta_;
};

Literal ground(const Literal& l, const std::vector<EntityId>& args) { return substitute(l, args); }

// Template variables appearing in the literal, in argument order.
std::vector<int> vars_of(const Literal& l) {
    std::vector<int> out;
    for (auto t : l.args)
        if (t.is_hole() && std::find(out.begin(), out.end(), t.hole_index()) == out.end())
            out.push_back(t.hole_index());
    return out;
}

// The resolution target keeps one open variable as a hole (renumbered 0);
// the rest take their value from the binding.
Literal resolution_target(const Literal& templ_lit, const Binding& binding) {
    const auto vs = vars_of(templ_lit);
    Literal out = templ_lit;
    for (auto& t : out.args) {
        if (!t.is_hole()) continue;
        if (t.hole_index() == vs.front()) t = Term::hole(0);
        else t = Term::entity(binding[static_cast<std::size_t>(t.hole_index())]);
    }
    return out;
}

std::optional<GroundedPlan> ground_plan(const PlanTemplate& templ, const Binding& binding,
                                        const BeliefState& beliefs, std::span<const ActionSchema> actions,
                                        const Achievability& ach) {
    const auto& spec = beliefs.spec();
    GroundedPlan plan;
    plan.binding = binding;

    auto record = [&](const Literal& l, bool unknown_ok) {
        for (const auto& r : plan.requirements)
            if (r.literal == l) return;
        plan.requirements.push_back({l, unknown_ok});
    };
    auto tracked = [&](const Literal& l) {
        return spec.schema(l).kind == PredicateKind::Knowledge || !ach.achievable(l);
    };

    std::vector<std::pair<std::size_t, ResolutionAction>> resolutions;
    for (const auto& u : templ.uncertainty) {
        const Literal g = substitute(u.literal, binding);
        const Truth t = beliefs.truth(g);
        if (t == Truth::False) return std::nullopt;
        record(g, true);
        if (t == Truth::True) continue;
        if (std::find(plan.uncertain.begin(), plan.uncertain.end(), g) != plan.uncertain.end()) continue;
        plan.uncertain.push_back(g);
        std::size_t pos = u.first_step;
        const auto vs = vars_of(u.literal);
        for (std::size_t s = 0; s < pos; ++s) {
            const auto& args = templ.steps[s].args;
            if (std::any_of(vs.begin(), vs.end(),
                            [&](int v) { return std::find(args.begin(), args.end(), Term::hole(v)) != args.end(); })) {
                pos = s;
                break;
            }
        }
        ResolutionAction r;
        r.target = vs.empty() ? g : resolution_target(u.literal, binding);
        r.grounded = g;
        resolutions.emplace_back(pos, std::move(r));
    }
    plan.uncertainty_count = plan.uncertain.size();

    for (const auto& c : templ.constraints) {
        const Literal g = substitute(c, binding);
        const Truth t = beliefs.truth(g);
        const bool ok_unknown = !ach.achievable(g);
        if (t == Truth::False || (t == Truth::Unknown && !ok_unknown)) return std::nullopt;
        if (tracked(g)) record(g, ok_unknown);
    }

    Overlay sim(beliefs);
    std::vector<PlanStep> steps;
    for (std::size_t s = 0; s < templ.steps.size(); ++s) {
        const auto& ts = templ.steps[s];
        const auto& a = actions[ts.action];
        std::vector<EntityId> args;
        for (auto t : ts.args) args.push_back(t.is_hole() ? binding[static_cast<std::size_t>(t.hole_index())]
                                                          : t.entity_id());
        for (std::size_t p = 0; p < args.size(); ++p)
            if (!spec.type_allowed(args[p], a.params[p])) return std::nullopt;
        for (const auto& pre : a.preconditions) {
            const Literal g = ground(pre, args);
            bool from_base = false;
            const Truth t = sim.truth(g, from_base);
            const bool knowledge = spec.schema(g).kind == PredicateKind::Knowledge;
            const bool unknown_ok = knowledge || !ach.achievable(g);
            if (t == Truth::False || (t == Truth::Unknown && !unknown_ok)) return std::nullopt;
            if (from_base && tracked(g)) record(g, unknown_ok);
        }
        for (const auto& eff : a.effects) sim.apply(ground(eff, args));
        PlanStep step;
        step.action = ts.action;
        step.args = std::move(args);
        steps.push_back(std::move(step));
    }
    for (const auto& d : templ.desires) {
        bool from_base = false;
        if (sim.truth(d, from_base) != Truth::True) return std::nullopt;
    }

    std::stable_sort(resolutions.begin(), resolutions.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t r = 0;
    for (std::size_t s = 0; s <= steps.size(); ++s) {
        for (; r < resolutions.size() && resolutions[r].first == s; ++r) {
            PlanStep step;
            step.is_resolution = true;
            step.resolution = resolutions[r].second;
            plan.steps.push_back(std::move(step));
        }
        if (s < steps.size()) plan.steps.push_back(std::move(steps[s]));
    }
    return plan;
}

}  // namespace

std::size_t GroundedPlan::resolution_count() const {
    return static_cast<std::size_t>(
        std::count_if(steps.begin(), steps.end(), [](const PlanStep& s) { return s.is_resolution; }));
}

Stage2Result plan_stage2(const PlanTemplate& templ, const BeliefState& beliefs,
                         std::span<const ActionSchema> actions, const PlannerConfig& config) {
    Stage2Result result;
    const Achievability ach(beliefs.spec(), actions);
    const PlanTemplate& t = templ;
    const std::size_t nvars = t.variable_count();
    Binding binding(nvars, kUnbound);
    for (std::size_t v = 0; v < nvars; ++v) {
        if (t.candidates[v].empty()) return result;
        binding[v] = t.candidates[v].front();
    }
    std::vector<std::size_t> idx(nvars, 0);
    for (;;) {
        if (result.enumerated >= config.binding_cap) {
            result.truncated = true;
            break;
        }
        ++result.enumerated;
        if (auto plan = ground_plan(t, binding, beliefs, actions, ach)) result.plans.push_back(std::move(*plan));
        // Odometer: last variable fastest, so enumeration is lexicographic.
        std::size_t k = nvars;
        bool done = true;
        while (k > 0) {
            --k;
            if (++idx[k] < t.candidates[k].size()) {
                binding[k] = t.candidates[k][idx[k]];
                done = false;
                break;
            }
            idx[k] = 0;
            binding[k] = t.candidates[k][0];
        }
        if (done) break;
    }
    std::stable_sort(result.plans.begin(), result.plans.end(),
                     [](const GroundedPlan& a, const GroundedPlan& b) { return a.uncertainty_count < b.uncertainty_count; });
    return result;
}

bool rescore(GroundedPlan& plan, const BeliefState& beliefs, const Achievability&) {
    for (const auto& r : plan.requirements) {
        const Truth t = beliefs.truth(r.literal);
        if (t == Truth::False || (t == Truth::Unknown && !r.unknown_ok)) return false;
    }
    std::size_t count = 0;
    for (const auto& u : plan.uncertain)
        if (beliefs.truth(u) == Truth::Unknown) ++count;
    plan.uncertainty_count = count;
    for (auto& s : plan.steps) {
        if (!s.is_resolution || s.resolution.resolved) continue;
        if (beliefs.truth(s.resolution.grounded) != Truth::Unknown) s.resolution.resolved = true;
    }
    return true;
}

std::string_view to_string(Directive d) {
    switch (d) {
        case Directive::Continue: return "continue";
        case Directive::Rebind: return "rebind";
        case Directive::Backtrack: return "backtrack";
        case Directive::FailAndWait: return "fail_and_wait";
    }
    return "continue";
}

void PlannerState::intern_reads() {
    std::map<std::pair<Atom, bool>, std::uint32_t> ids;
    reads_.clear();
    auto id = [&](const Literal& l) {
        auto [it, fresh] = ids.try_emplace({atom_of(l), l.positive}, static_cast<std::uint32_t>(reads_.size()));
        if (fresh) reads_.push_back(l);
        return it->second;
    };
    for (auto& b : bindings_) {
        b.read_ids.clear();
        for (const auto& r : b.requirements) b.read_ids.push_back(id(r.literal));
        for (const auto& u : b.uncertain) b.read_ids.push_back(id(u));
        for (const auto& st : b.steps)
            if (st.is_resolution) b.read_ids.push_back(id(st.resolution.grounded));
    }
}

void PlannerState::rescore_all(const BeliefState& beliefs) {
    std::vector<Truth> truth(reads_.size());
    for (std::size_t i = 0; i < reads_.size(); ++i) truth[i] = beliefs.truth(reads_[i]);
    std::vector<GroundedPlan> kept;
    kept.reserve(bindings_.size());
    for (auto& b : bindings_) {
        const auto* id = b.read_ids.data();
        bool ok = true;
        for (const auto& r : b.requirements) {
            const Truth t = truth[*id++];
            if (t == Truth::False || (t == Truth::Unknown && !r.unknown_ok)) ok = false;
        }
        if (!ok) continue;
        std::size_t count = 0;
        for (std::size_t i = 0; i < b.uncertain.size(); ++i)
            if (truth[*id++] == Truth::Unknown) ++count;
        b.uncertainty_count = count;
        for (auto& st : b.steps)
            if (st.is_resolution && truth[*id++] != Truth::Unknown) st.resolution.resolved = true;
        kept.push_back(std::move(b));
    }
    std::stable_sort(kept.begin(), kept.end(), [](const GroundedPlan& a, const GroundedPlan& b) {
        return a.uncertainty_count < b.uncertainty_count;
    });
    bindings_ = std::move(kept);
}

void PlannerState::clear() {
    desires_.clear();
    template_.reset();
    bindings_.clear();
    search_.reset();
    truncated_ = false;
}

bool PlannerState::next_template(const BeliefState& beliefs, std::span<const ActionSchema> actions,
                                 const PlannerConfig& config, PlanTiming& timing) {
    while (search_) {
        auto t0 = Clock::now();
        auto templ = search_->next();
        timing.stage1_us += micros_since(t0);
        if (!templ) return false;
        t0 = Clock::now();
        auto s2 = plan_stage2(*templ, beliefs, actions, config);
        if (s2.plans.empty()) {
            timing.stage2_us += micros_since(t0);
            continue;
        }
        template_ = std::move(*templ);
        bindings_ = std::move(s2.plans);
        truncated_ = s2.truncated;
        intern_reads();
        timing.stage2_us += micros_since(t0);
        return true;
    }
    return false;
}

std::variant<PlanTiming, NoPlan> PlannerState::plan(const BeliefState& beliefs, const std::vector<Literal>& desires,
                                                    std::span<const ActionSchema> actions,
                                                    const PlannerConfig& config) {
    clear();
    desires_ = desires;
    achievable_ = Achievability(beliefs.spec(), actions);
    PlanTiming timing;
    const auto t0 = Clock::now();
    search_ = std::make_unique<TemplateSearch>(beliefs, desires, actions, config);
    timing.stage1_us += micros_since(t0);
    if (auto u = search_->first_unachievable()) {
        search_.reset();
        return NoPlan{"no action achieves " + format_literal(beliefs.spec(), *u), u};
    }
    if (!next_template(beliefs, actions, config, timing)) {
        const bool budget = search_ && search_->expansions() > config.node_limit;
        search_.reset();
        return NoPlan{budget ? "search budget exhausted" : "no plan exists", {}};
    }
    return timing;
}

std::variant<PlanTiming, NoPlan> PlannerState::replan(const BeliefState& beliefs,
                                                      const std::vector<Literal>& desires,
                                                      std::span<const ActionSchema> actions,
                                                      const PlannerConfig& config) {
    if (template_ && desires == desires_) {
        const auto t0 = Clock::now();
        rescore_all(beliefs);
        if (!bindings_.empty()) {
            PlanTiming timing;
            timing.incremental = true;
            timing.stage2_us = micros_since(t0);
            return timing;
        }
    }
    return plan(beliefs, desires, actions, config);
}

PlannerState::Outcome PlannerState::advance(const PlanEvent& event, const BeliefState& beliefs,
                                            std::span<const ActionSchema> actions, const PlannerConfig& config,
                                            double now) {
    Outcome out;
    const auto t0 = Clock::now();
    auto backtrack = [&] {
        bindings_.clear();
        if (next_template(beliefs, actions, config, out.timing)) {
            out.directive = Directive::Backtrack;
            return;
        }
        clear();
        retry_wait_until_ = now + config.retry_wait;
        out.directive = Directive::FailAndWait;
    };

    switch (event.kind) {
        case PlanEvent::Kind::StepOk:
            break;
        case PlanEvent::Kind::StepFailed:
            if (!bindings_.empty()) bindings_.erase(bindings_.begin());
            if (!bindings_.empty()) {
                out.directive = Directive::Rebind;
                // The remaining bindings may be stale; bring their scores up to date.
                rescore_all(beliefs);
            }
            if (bindings_.empty()) backtrack();
            else {
                out.timing.incremental = true;
                out.timing.stage2_us = micros_since(t0);
            }
            break;
        case PlanEvent::Kind::NewBelief: {
            if (bindings_.empty()) break;
            const Binding before = bindings_.front().binding;
            rescore_all(beliefs);
            if (bindings_.empty()) {
                backtrack();
                break;
            }
            if (bindings_.front().binding != before) out.directive = Directive::Rebind;
            out.timing.incremental = true;
            out.timing.stage2_us = micros_since(t0);
            break;
        }
    }
    return out;
}

bool replay_satisfies(const GroundedPlan& plan, const BeliefState& beliefs, std::span<const ActionSchema> actions,
                      const std::vector<Literal>& desires) {
    BeliefState sim = beliefs;
    for (const auto& s : plan.steps) {
        if (s.is_resolution) continue;
        for (const auto& e : actions[s.action].effects) sim.assert_belief(substitute(e, s.args));
    }
    return std::all_of(desires.begin(), desires.end(), [&](const Literal& d) { return sim.truth(d) == Truth::True; });
}

std::string describe(const DomainSpec& spec, std::span<const ActionSchema> actions, const PlanStep& step) {
    if (step.is_resolution) {
        std::string s = step.resolution.strategy == ResolutionStrategy::Ask ? "ASK " : "EXPLORE ";
        return s + format_literal(spec, step.resolution.target);
    }
    std::string s = actions[step.action].name + "(";
    for (std::size_t i = 0; i < step.args.size(); ++i) s += (i ? ", " : "") + spec.entity(step.args[i]).id;
    return s + ")";
}

std::string describe(const DomainSpec& spec, std::span<const ActionSchema> actions, const PlanTemplate& templ) {
    std::string out;
    for (const auto& st : templ.steps) {
        if (!out.empty()) out += "; ";
        out += actions[st.action].name + "(";
        for (std::size_t i = 0; i < st.args.size(); ++i) {
            if (i) out += ", ";
            const Term t = st.args[i];
            out += t.is_hole() ? "?" + std::to_string(t.hole_index()) : spec.entity(t.entity_id()).id;
        }
        out += ")";
    }
    return out;
}

json trace_record(const std::string& agent, double sim_time, const PlanTiming& timing, const PlannerState& state,
                  const DomainSpec& spec) {
    json j{{"agent", agent},
           {"time", sim_time},
           {"incremental", timing.incremental},
           {"stage1_us", timing.stage1_us},
           {"stage2_us", timing.stage2_us},
           {"bindings", state.bindings().size()},
           {"truncated", state.truncated()}};
    if (const auto& t = state.plan_template()) {
        j["template_steps"] = t->steps.size();
        j["unbound"] = t->unbound.size();
        j["uncertain"] = t->uncertainty.size();
    }
    if (state.has_plan()) {
        json steps = json::array();
        for (const auto& s : state.current().steps) steps.push_back(describe(spec, spec.actions, s));
        j["plan"] = steps;
        j["uncertainty_count"] = state.current().uncertainty_count;
    }
    return j;
}

}  // namespace spa
