#include "oracle.hpp"

#include <deque>
#include <set>

namespace spa::ref {

std::shared_ptr<DomainSpec> load_data_domain(const std::string& file) {
    return std::make_shared<DomainSpec>(load_domain_spec(std::string(SPA_DATA_DIR) + "/" + file));
}

namespace {

bool acceptable(const BeliefState& s, const Literal& l, const Achievability& ach) {
    const Truth t = s.truth(l);
    if (t == Truth::True) return true;
    if (t == Truth::False) return false;
    return s.spec().schema(l).kind == PredicateKind::Knowledge || !ach.achievable(l);
}

std::vector<std::pair<std::size_t, std::vector<EntityId>>> ground_actions(const DomainSpec& spec,
                                                                          std::span<const ActionSchema> actions) {
    std::vector<std::pair<std::size_t, std::vector<EntityId>>> out;
    for (std::size_t a = 0; a < actions.size(); ++a) {
        const auto& params = actions[a].params;
        std::vector<const std::vector<EntityId>*> cands;
        bool empty = false;
        for (const auto& p : params) {
            cands.push_back(&spec.candidates_for(p));
            empty = empty || cands.back()->empty();
        }
        if (empty) continue;
        std::vector<std::size_t> idx(params.size(), 0);
        for (;;) {
            std::vector<EntityId> args;
            for (std::size_t i = 0; i < params.size(); ++i) args.push_back((*cands[i])[idx[i]]);
            out.emplace_back(a, std::move(args));
            std::size_t k = params.size();
            while (k > 0 && ++idx[k - 1] == cands[k - 1]->size()) idx[--k] = 0;
            if (k == 0) break;
        }
    }
    return out;
}

}  // namespace

std::optional<int> forward_search(const BeliefState& beliefs, const std::vector<Literal>& desires,
                                  std::span<const ActionSchema> actions, std::size_t state_cap) {
    const Achievability ach(beliefs.spec(), actions);
    const auto ground = ground_actions(beliefs.spec(), actions);
    auto done = [&](const BeliefState& s) {
        for (const auto& d : desires)
            if (s.truth(d) != Truth::True) return false;
        return true;
    };
    std::set<std::map<Atom, bool>> seen{beliefs.facts()};
    std::deque<std::pair<BeliefState, int>> queue;
    queue.emplace_back(beliefs, 0);
    while (!queue.empty()) {
        auto [s, depth] = std::move(queue.front());
        queue.pop_front();
        if (done(s)) return depth;
        for (const auto& [a, args] : ground) {
            bool ok = true;
            for (const auto& p : actions[a].preconditions)
                if (!acceptable(s, substitute(p, args), ach)) {
                    ok = false;
                    break;
                }
            if (!ok) continue;
            BeliefState next = s;
            for (const auto& e : actions[a].effects) next.assert_belief(substitute(e, args));
            if (!seen.insert(next.facts()).second) continue;
            if (seen.size() > state_cap) return -1;
            queue.emplace_back(std::move(next), depth + 1);
        }
    }
    return std::nullopt;
}

MicroProblem random_micro_problem(std::mt19937_64& rng) {
    auto pick = [&](int n) { return static_cast<int>(rng() % static_cast<std::uint64_t>(n)); };
    auto spec = std::make_shared<DomainSpec>();
    spec->name = "micro";
    spec->entity_types = {{"A", {}}, {"B", {}}};
    const int n_entities = 2 + pick(5);
    for (int i = 0; i < n_entities; ++i)
        spec->entities.push_back({"E" + std::to_string(i), pick(2) ? "A" : "B", {}, std::nullopt, {}});

    auto random_types = [&]() -> std::vector<std::string> {
        switch (pick(3)) {
            case 0: return {"A"};
            case 1: return {"B"};
            default: return {};
        }
    };
    const int n_preds = 1 + pick(3);
    for (int p = 0; p < n_preds; ++p) {
        PredicateSchema s;
        s.name = "P" + std::to_string(p);
        // At least one fluent so that actions have something to change.
        s.kind = (p == 0 || pick(2)) ? PredicateKind::Fluent : PredicateKind::Knowledge;
        const int arity = 1 + pick(2);
        for (int k = 0; k < arity; ++k) s.slots.push_back({"s" + std::to_string(k), random_types()});
        spec->predicates.push_back(std::move(s));
    }
    spec->build_index();

    std::vector<std::size_t> fluents;
    for (std::size_t p = 0; p < spec->predicates.size(); ++p)
        if (spec->predicates[p].kind == PredicateKind::Fluent) fluents.push_back(p);

    auto compatible = [](const std::vector<std::string>& param, const std::vector<std::string>& slot) {
        return slot.empty() || (!param.empty() && param == slot);
    };
    // Random literal over the action's parameters (occasionally a constant).
    auto action_literal = [&](const ActionSchema& a, std::size_t schema) -> std::optional<Literal> {
        Literal l{static_cast<std::uint16_t>(schema), pick(3) != 0, {}};
        for (const auto& slot : spec->predicates[schema].slots) {
            std::vector<Term> options;
            for (std::size_t i = 0; i < a.params.size(); ++i)
                if (compatible(a.params[i].types, slot.types)) options.push_back(Term::hole(static_cast<int>(i)));
            if (options.empty() || pick(6) == 0) {
                const auto& c = spec->candidates_for(slot);
                if (c.empty()) return std::nullopt;
                options.push_back(Term::entity(c[static_cast<std::size_t>(pick(static_cast<int>(c.size())))]));
                l.args.push_back(options.back());
                continue;
            }
            l.args.push_back(options[static_cast<std::size_t>(pick(static_cast<int>(options.size())))]);
        }
        return l;
    };

    const int n_actions = 1 + pick(2);
    for (int i = 0; i < n_actions; ++i) {
        ActionSchema a;
        a.name = "Act" + std::to_string(i);
        const int n_params = 1 + pick(2);
        for (int k = 0; k < n_params; ++k) a.params.push_back({"x" + std::to_string(k), random_types()});
        const int n_pre = pick(4);
        for (int k = 0; k < n_pre; ++k)
            if (auto l = action_literal(a, static_cast<std::size_t>(pick(n_preds)))) a.preconditions.push_back(*l);
        const int n_eff = 1 + pick(2);
        for (int k = 0; k < n_eff; ++k)
            if (auto l = action_literal(a, fluents[static_cast<std::size_t>(pick(static_cast<int>(fluents.size())))]))
                if (std::find(a.effects.begin(), a.effects.end(), l->negated()) == a.effects.end())
                    a.effects.push_back(*l);
        if (a.effects.empty()) continue;
        spec->actions.push_back(std::move(a));
    }
    spec->build_index();

    MicroProblem out;
    out.spec = spec;
    out.beliefs = std::make_unique<BeliefState>(spec);
    for (std::size_t p = 0; p < spec->predicates.size(); ++p) {
        const auto& slots = spec->predicates[p].slots;
        if (std::any_of(slots.begin(), slots.end(), [&](const Slot& s) { return spec->candidates_for(s).empty(); }))
            continue;
        std::vector<std::size_t> idx(slots.size(), 0);
        for (;;) {
            Literal l{static_cast<std::uint16_t>(p), true, {}};
            for (std::size_t k = 0; k < slots.size(); ++k)
                l.args.push_back(Term::entity(spec->candidates_for(slots[k])[idx[k]]));
            const int r = pick(10);
            if (r < 3) out.beliefs->assert_belief(l);
            else if (r < 6) out.beliefs->assert_belief(l.negated());
            std::size_t k = slots.size();
            while (k > 0 && ++idx[k - 1] == spec->candidates_for(slots[k - 1]).size()) idx[--k] = 0;
            if (k == 0) break;
        }
    }
    const int n_desires = 1 + pick(2);
    for (int i = 0; i < n_desires; ++i) {
        const auto p = fluents[static_cast<std::size_t>(pick(static_cast<int>(fluents.size())))];
        Literal l{static_cast<std::uint16_t>(p), pick(3) != 0, {}};
        for (const auto& slot : spec->predicates[p].slots) {
            const auto& c = spec->candidates_for(slot);
            if (c.empty()) break;
            l.args.push_back(Term::entity(c[static_cast<std::size_t>(pick(static_cast<int>(c.size())))]));
        }
        if (l.args.size() != spec->predicates[p].slots.size()) continue;
        if (std::find(out.desires.begin(), out.desires.end(), l.negated()) == out.desires.end() &&
            std::find(out.desires.begin(), out.desires.end(), l) == out.desires.end())
            out.desires.push_back(l);
    }
    return out;
}

}  // namespace spa::ref
