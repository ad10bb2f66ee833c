// Stage 1: least-commitment regression search producing plan templates.

#include "spa/planner.hpp"

#include <algorithm>
#include <set>

namespace spa {

Achievability::Achievability(const DomainSpec& spec, std::span<const ActionSchema> actions)
    : table_(spec.predicates.size(), {false, false}) {
    for (const auto& a : actions)
        for (const auto& e : a.effects) table_[e.schema][e.positive ? 1 : 0] = true;
}

bool Achievability::achievable(const Literal& lit) const {
    return lit.schema < table_.size() && table_[lit.schema][lit.positive ? 1 : 0];
}

namespace {

struct Goal {
    Literal lit;
    bool desire = false;
    bool operator==(const Goal&) const = default;
};

struct Node {
    std::vector<Goal> goals;
    std::vector<TemplateStep> steps;                          // backward: steps[0] runs last
    std::vector<std::pair<Literal, std::size_t>> uncertain;   // literal, backward step index
    std::vector<std::vector<EntityId>> vars;                  // candidates per variable
};

struct Option {
    std::size_t goal = 0;
    std::size_t action = 0;
    std::size_t effect = 0;
};

struct Frame {
    Node node;
    std::vector<Option> options;
    std::size_t next = 0;
    std::string key;
    bool close_checked = false;
};

bool contains(const std::vector<EntityId>& sorted, EntityId e) {
    return std::binary_search(sorted.begin(), sorted.end(), e);
}

std::vector<EntityId> intersect(const std::vector<EntityId>& a, const std::vector<EntityId>& b) {
    std::vector<EntityId> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

void replace_term(std::vector<Term>& args, Term from, Term to) {
    for (auto& t : args)
        if (t == from) t = to;
}

void collect_vars(const Literal& l, std::vector<int>& out) {
    for (auto t : l.args)
        if (t.is_hole() && std::find(out.begin(), out.end(), t.hole_index()) == out.end())
            out.push_back(t.hole_index());
}

}  // namespace

struct TemplateSearch::Impl {
    BeliefState beliefs;
    std::vector<Literal> desires;
    std::vector<ActionSchema> actions;
    std::vector<std::size_t> action_order;  // by name
    PlannerConfig config;
    Achievability achievable;
    std::vector<Frame> stack;
    std::set<std::string> on_path;
    std::size_t expansions = 0;
    bool out_of_budget = false;
    std::optional<Literal> unachievable;

    Impl(const BeliefState& b, std::vector<Literal> d, std::span<const ActionSchema> a, PlannerConfig c)
        : beliefs(b), desires(std::move(d)), actions(a.begin(), a.end()), config(c),
          achievable(b.spec(), a) {
        action_order.resize(actions.size());
        for (std::size_t i = 0; i < actions.size(); ++i) action_order[i] = i;
        std::stable_sort(action_order.begin(), action_order.end(), [&](std::size_t x, std::size_t y) {
            return actions[x].name < actions[y].name;
        });
        for (const auto& l : desires)
            if (beliefs.truth(l) != Truth::True && !achievable.achievable(l) && !unachievable) unachievable = l;

        Node root;
        for (const auto& l : desires) {
            Goal g{l, true};
            if (std::find(root.goals.begin(), root.goals.end(), g) == root.goals.end()) root.goals.push_back(g);
        }
        push(std::move(root));
    }

    const DomainSpec& spec() const { return beliefs.spec(); }

    // Canonical goal-set key; variables are renamed by first appearance and
    // carry their candidate sets.
    std::string key_of(const Node& n) const {
        std::vector<std::string> parts;
        for (const auto& g : n.goals) {
            std::string s = g.desire ? "D" : "G";
            s += std::to_string(g.lit.schema) + (g.lit.positive ? "+" : "-");
            for (auto t : g.lit.args) s += t.is_hole() ? std::string("?,") : std::to_string(t.raw()) + ",";
            parts.push_back(std::move(s));
        }
        std::vector<std::size_t> order(n.goals.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return parts[a] < parts[b]; });
        std::map<int, int> rename;
        std::string key;
        for (auto i : order) {
            const auto& g = n.goals[i];
            key += g.desire ? "D" : "G";
            key += std::to_string(g.lit.schema) + (g.lit.positive ? "+" : "-");
            for (auto t : g.lit.args) {
                if (t.is_hole()) {
                    auto [it, fresh] = rename.try_emplace(t.hole_index(), static_cast<int>(rename.size()));
                    key += "?" + std::to_string(it->second);
                    if (fresh) {
                        key += "{";
                        for (auto e : n.vars[static_cast<std::size_t>(t.hole_index())]) key += std::to_string(e) + " ";
                        key += "}";
                    }
                    key += ",";
                } else {
                    key += std::to_string(t.raw()) + ",";
                }
            }
            key += ";";
        }
        return key;
    }

    std::vector<Option> options_for(const Node& n) const {
        std::vector<Option> out;
        if (n.steps.size() >= config.depth_limit) return out;
        // Unsatisfied goals first, in goal-list order; satisfied goals last so
        // that re-achieving a clobbered goal stays reachable.
        std::vector<std::size_t> order;
        for (std::size_t i = 0; i < n.goals.size(); ++i)
            if (!(n.goals[i].lit.grounded() && beliefs.truth(n.goals[i].lit) == Truth::True)) order.push_back(i);
        for (std::size_t i = 0; i < n.goals.size(); ++i)
            if (n.goals[i].lit.grounded() && beliefs.truth(n.goals[i].lit) == Truth::True) order.push_back(i);
        for (auto gi : order) {
            const auto& g = n.goals[gi].lit;
            for (auto ai : action_order) {
                const auto& effs = actions[ai].effects;
                for (std::size_t ei = 0; ei < effs.size(); ++ei)
                    if (effs[ei].schema == g.schema && effs[ei].positive == g.positive) out.push_back({gi, ai, ei});
            }
        }
        return out;
    }

    void push(Node n) {
        Frame f;
        f.key = key_of(n);
        f.options = options_for(n);
        f.node = std::move(n);
        on_path.insert(f.key);
        stack.push_back(std::move(f));
    }

    void pop() {
        on_path.erase(stack.back().key);
        stack.pop_back();
    }

    // Some completion of the partial literal is TRUE, or UNKNOWN and beyond
    // any action's reach.
    bool closable_partial(const Node& n, const Literal& lit) const {
        std::vector<int> vs;
        collect_vars(lit, vs);
        std::vector<std::size_t> idx(vs.size(), 0);
        Binding b;
        std::size_t steps = 0;
        for (;;) {
            if (++steps > config.binding_cap) return false;
            b.assign(n.vars.size(), kUnbound);
            for (std::size_t i = 0; i < vs.size(); ++i) {
                const auto& c = n.vars[static_cast<std::size_t>(vs[i])];
                if (c.empty()) return false;
                b[static_cast<std::size_t>(vs[i])] = c[idx[i]];
            }
            const Literal g = substitute(lit, b);
            const Truth t = beliefs.truth(g);
            if (t == Truth::True || (t == Truth::Unknown && !achievable.achievable(g))) return true;
            std::size_t k = vs.size();
            while (k > 0) {
                --k;
                if (++idx[k] < n.vars[static_cast<std::size_t>(vs[k])].size()) break;
                idx[k] = 0;
                if (k == 0) return false;
            }
            if (vs.empty()) return false;
        }
    }

    std::optional<std::vector<Literal>> try_close(const Node& n) const {
        std::vector<Literal> constraints;
        for (const auto& g : n.goals) {
            if (g.lit.grounded()) {
                const Truth t = beliefs.truth(g.lit);
                if (t == Truth::True) continue;
                if (!g.desire && t == Truth::Unknown && !achievable.achievable(g.lit)) {
                    constraints.push_back(g.lit);
                    continue;
                }
                return std::nullopt;
            }
            if (g.desire || !closable_partial(n, g.lit)) return std::nullopt;
            constraints.push_back(g.lit);
        }
        return constraints;
    }

    std::optional<Node> expand(const Node& parent, const Option& opt) const {
        const auto& a = actions[opt.action];
        const auto& eff = a.effects[opt.effect];
        Node c = parent;
        std::vector<std::optional<Term>> pm(a.params.size());

        auto substitute_all = [&](Term from, Term to) {
            for (auto& g : c.goals) replace_term(g.lit.args, from, to);
            for (auto& s : c.steps) replace_term(s.args, from, to);
            for (auto& [l, _] : c.uncertain) replace_term(l.args, from, to);
            for (auto& p : pm)
                if (p && *p == from) p = to;
        };
        auto bind = [&](int v, Term to) -> bool {
            auto& cv = c.vars[static_cast<std::size_t>(v)];
            if (to.is_hole()) {
                if (to.hole_index() == v) return true;
                auto& cw = c.vars[static_cast<std::size_t>(to.hole_index())];
                cw = intersect(cw, cv);
                if (cw.empty()) return false;
            } else {
                if (!contains(cv, to.entity_id())) return false;
            }
            cv = to.is_hole() ? std::vector<EntityId>{} : std::vector<EntityId>{to.entity_id()};
            substitute_all(Term::hole(v), to);
            return true;
        };
        auto unify = [&](Term x, Term y) -> bool {
            if (x == y) return true;
            if (x.is_hole()) return bind(x.hole_index(), y);
            if (y.is_hole()) return bind(y.hole_index(), x);
            return false;
        };

        for (std::size_t i = 0; i < eff.args.size(); ++i) {
            const Term ga = c.goals[opt.goal].lit.args[i];
            const Term ea = eff.args[i];
            if (!ea.is_hole()) {
                if (!unify(ga, ea)) return std::nullopt;
                continue;
            }
            const auto p = static_cast<std::size_t>(ea.hole_index());
            if (pm[p]) {
                if (!unify(*pm[p], ga)) return std::nullopt;
                continue;
            }
            if (ga.is_hole()) {
                auto& cv = c.vars[static_cast<std::size_t>(ga.hole_index())];
                cv = intersect(cv, spec().candidates_for(a.params[p]));
                if (cv.empty()) return std::nullopt;
            } else if (!spec().type_allowed(ga.entity_id(), a.params[p])) {
                return std::nullopt;
            }
            pm[p] = c.goals[opt.goal].lit.args[i];
        }
        for (std::size_t p = 0; p < pm.size(); ++p) {
            if (pm[p]) continue;
            pm[p] = Term::hole(static_cast<int>(c.vars.size()));
            c.vars.push_back(spec().candidates_for(a.params[p]));
            if (c.vars.back().empty()) return std::nullopt;
        }

        auto inst = [&](const Literal& l) {
            Literal out = l;
            for (auto& t : out.args)
                if (t.is_hole()) t = *pm[static_cast<std::size_t>(t.hole_index())];
            return out;
        };

        // Narrow single-variable preconditions that no action of ours can fix.
        for (const auto& pre : a.preconditions) {
            const Literal l = inst(pre);
            const bool knowledge = spec().schema(l).kind == PredicateKind::Knowledge;
            if (!knowledge && achievable.achievable(l)) continue;
            std::vector<int> vs;
            collect_vars(l, vs);
            if (vs.size() != 1) continue;
            auto& cv = c.vars[static_cast<std::size_t>(vs[0])];
            Binding b(c.vars.size(), kUnbound);
            std::vector<EntityId> kept;
            for (auto e : cv) {
                b[static_cast<std::size_t>(vs[0])] = e;
                if (beliefs.truth(substitute(l, b)) != Truth::False) kept.push_back(e);
            }
            if (kept.empty()) return std::nullopt;
            cv = std::move(kept);
        }

        // Fold singleton candidate sets into the binding.
        for (std::size_t v = 0; v < c.vars.size(); ++v)
            if (c.vars[v].size() == 1) {
                const EntityId e = c.vars[v].front();
                substitute_all(Term::hole(static_cast<int>(v)), Term::entity(e));
            }

        std::vector<Goal> new_goals;
        std::vector<Literal> new_uncertain;
        for (const auto& pre : a.preconditions) {
            const Literal l = inst(pre);
            const bool knowledge = spec().schema(l).kind == PredicateKind::Knowledge;
            const Truth t = l.grounded() ? beliefs.truth(l) : Truth::Unknown;
            if (t == Truth::True) continue;
            if (knowledge) {
                if (t == Truth::False) return std::nullopt;
                new_uncertain.push_back(l);
                continue;
            }
            if (t == Truth::False && !achievable.achievable(l)) return std::nullopt;
            Goal g{l, false};
            if (std::find(new_goals.begin(), new_goals.end(), g) == new_goals.end()) new_goals.push_back(g);
        }

        std::vector<Literal> effects;
        for (const auto& e : a.effects) effects.push_back(inst(e));

        std::vector<Goal> goals = std::move(new_goals);
        for (std::size_t i = 0; i < c.goals.size(); ++i) {
            if (i == opt.goal) continue;
            const auto& g = c.goals[i];
            if (std::find(effects.begin(), effects.end(), g.lit) != effects.end()) continue;
            for (const auto& e : effects) {
                if (e == g.lit.negated()) return std::nullopt;
                // A functional effect clobbers a different grounded value.
                const auto& schema = spec().schema(e);
                if (schema.functional_slot && e.positive && g.lit.positive && e.schema == g.lit.schema &&
                    e.grounded() && g.lit.grounded()) {
                    const auto f = *schema.functional_slot;
                    bool same_rest = true;
                    for (std::size_t k = 0; k < e.args.size(); ++k)
                        if (k != f && e.args[k] != g.lit.args[k]) same_rest = false;
                    if (same_rest && e.args[f] != g.lit.args[f]) return std::nullopt;
                }
            }
            auto dup = std::find_if(goals.begin(), goals.end(), [&](const Goal& x) { return x.lit == g.lit; });
            if (dup == goals.end()) goals.push_back(g);
            else dup->desire = dup->desire || g.desire;
        }
        c.goals = std::move(goals);

        TemplateStep step{opt.action, {}};
        for (auto& p : pm) step.args.push_back(*p);
        c.steps.push_back(std::move(step));
        for (auto& l : new_uncertain) c.uncertain.emplace_back(std::move(l), c.steps.size() - 1);
        return c;
    }

    PlanTemplate make_template(const Node& n, const std::vector<Literal>& constraints) const {
        PlanTemplate t;
        t.desires = desires;
        const std::size_t count = n.steps.size();
        std::map<int, int> rename;
        auto remap = [&](Term term) {
            if (!term.is_hole()) return term;
            auto [it, inserted] = rename.try_emplace(term.hole_index(), static_cast<int>(rename.size()));
            if (inserted) t.candidates.push_back(n.vars[static_cast<std::size_t>(term.hole_index())]);
            return Term::hole(it->second);
        };
        for (std::size_t i = 0; i < count; ++i) {
            TemplateStep s = n.steps[count - 1 - i];
            for (auto& a : s.args) a = remap(a);
            t.steps.push_back(std::move(s));
        }
        for (const auto& [lit, back] : n.uncertain) {
            Literal l = lit;
            for (auto& a : l.args) a = remap(a);
            const std::size_t exec = count - 1 - back;
            auto it = std::find_if(t.uncertainty.begin(), t.uncertainty.end(),
                                   [&](const UncertainLiteral& u) { return u.literal == l; });
            if (it == t.uncertainty.end()) t.uncertainty.push_back({l, exec});
            else it->first_step = std::min(it->first_step, exec);
        }
        std::stable_sort(t.uncertainty.begin(), t.uncertainty.end(),
                         [](const auto& a, const auto& b) { return a.first_step < b.first_step; });
        for (const auto& c : constraints) {
            Literal l = c;
            for (auto& a : l.args) a = remap(a);
            t.constraints.push_back(std::move(l));
        }
        for (int v = 0; v < static_cast<int>(t.candidates.size()); ++v) t.unbound.push_back(v);
        return t;
    }

    std::optional<PlanTemplate> next() {
        while (!stack.empty()) {
            Frame& f = stack.back();
            if (!f.close_checked) {
                f.close_checked = true;
                if (auto constraints = try_close(f.node)) return make_template(f.node, *constraints);
            }
            if (f.next >= f.options.size()) {
                pop();
                continue;
            }
            const Option opt = f.options[f.next++];
            if (++expansions > config.node_limit) {
                out_of_budget = true;
                while (!stack.empty()) pop();
                return std::nullopt;
            }
            auto child = expand(f.node, opt);
            if (!child) continue;
            if (on_path.count(key_of(*child))) continue;
            push(std::move(*child));
        }
        return std::nullopt;
    }
};

TemplateSearch::TemplateSearch(const BeliefState& beliefs, std::vector<Literal> desires,
                               std::span<const ActionSchema> actions, PlannerConfig config)
    : impl_(std::make_unique<Impl>(beliefs, std::move(desires), actions, config)) {}
TemplateSearch::~TemplateSearch() = default;
TemplateSearch::TemplateSearch(TemplateSearch&&) noexcept = default;
TemplateSearch& TemplateSearch::operator=(TemplateSearch&&) noexcept = default;

std::optional<PlanTemplate> TemplateSearch::next() { return impl_->next(); }
bool TemplateSearch::exhausted() const { return impl_->stack.empty(); }
std::size_t TemplateSearch::expansions() const { return impl_->expansions; }
std::optional<Literal> TemplateSearch::first_unachievable() const { return impl_->unachievable; }

std::variant<PlanTemplate, NoPlan> plan_stage1(const BeliefState& beliefs, const std::vector<Literal>& desires,
                                               std::span<const ActionSchema> actions,
                                               const PlannerConfig& config) {
    TemplateSearch search(beliefs, desires, actions, config);
    if (auto u = search.first_unachievable())
        return NoPlan{"no action achieves " + format_literal(beliefs.spec(), *u), u};
    if (auto t = search.next()) return std::move(*t);
    return NoPlan{search.expansions() > config.node_limit ? "search budget exhausted" : "no plan exists", {}};
}

std::vector<std::pair<std::size_t, std::string>> PlanTemplate::unbound_args(
    std::span<const ActionSchema> actions) const {
    std::vector<std::pair<std::size_t, std::string>> out;
    for (int v : unbound) {
        for (std::size_t s = 0; s < steps.size(); ++s) {
            const auto& args = steps[s].args;
            auto it = std::find(args.begin(), args.end(), Term::hole(v));
            if (it == args.end()) continue;
            out.emplace_back(s, actions[steps[s].action].params[static_cast<std::size_t>(it - args.begin())].name);
            break;
        }
    }
    return out;
}

}  // namespace spa
