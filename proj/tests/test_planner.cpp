#include "oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spa;

namespace {

struct Keys {
    std::shared_ptr<DomainSpec> spec = ref::load_data_domain("keys.json");
    Literal lit(const char* s) const { return parse_literal(*spec, s); }
    EntityId id(const char* s) const { return *spec->find_entity(s); }
    BeliefState kb(std::initializer_list<const char*> facts) const {
        BeliefState b(spec);
        for (auto f : facts) b.assert_belief(lit(f));
        return b;
    }
};

}  // namespace

TEST(Planner, KnownKeyOpensSafe) {
    Keys k;
    auto kb = k.kb({"Have(Key_1)", "!Have(Key_2)", "Opens(Key_1, Safe_1)", "!Locked(Safe_2)"});
    auto r = plan_stage1(kb, {k.lit("!Locked(Safe_1)")}, k.spec->actions);
    ASSERT_TRUE(std::holds_alternative<PlanTemplate>(r)) << std::get<NoPlan>(r).reason;
    const auto& t = std::get<PlanTemplate>(r);
    EXPECT_EQ(describe(*k.spec, k.spec->actions, t), "Open(Key_1, Safe_1)");
    EXPECT_TRUE(t.unbound.empty());
    EXPECT_TRUE(t.uncertainty.empty());
    auto s2 = plan_stage2(t, kb, k.spec->actions);
    ASSERT_EQ(s2.plans.size(), 1u);
    EXPECT_EQ(s2.plans[0].uncertainty_count, 0u);
    EXPECT_EQ(s2.plans[0].resolution_count(), 0u);
}

TEST(Planner, UnknownKeyGoesToUncertainty) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)", "Have(Key_1)"});
    auto r = plan_stage1(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions);
    ASSERT_TRUE(std::holds_alternative<PlanTemplate>(r));
    const auto& t = std::get<PlanTemplate>(r);
    ASSERT_EQ(t.steps.size(), 1u);
    EXPECT_EQ(describe(*k.spec, k.spec->actions, t), "Open(?0, Safe_2)");
    ASSERT_EQ(t.unbound.size(), 1u);
    const auto args = t.unbound_args(k.spec->actions);
    EXPECT_EQ(args[0], std::make_pair(std::size_t{0}, std::string("key")));
    EXPECT_EQ(t.candidates[0], (std::vector<EntityId>{k.id("Key_1"), k.id("Key_2")}));
    ASSERT_FALSE(t.uncertainty.empty());
    EXPECT_EQ(format_literal(*k.spec, t.uncertainty[0].literal), "Opens(?, Safe_2)");
}

TEST(Planner, FalseHaveFiltersCandidates) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)", "Have(Key_1)", "!Have(Key_2)"});
    auto r = plan_stage1(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions);
    ASSERT_TRUE(std::holds_alternative<PlanTemplate>(r));
    EXPECT_EQ(describe(*k.spec, k.spec->actions, std::get<PlanTemplate>(r)), "Open(Key_1, Safe_2)");
}

TEST(Planner, BindingsOrderedByUncertainty) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)", "Have(Key_1)"});
    auto t = std::get<PlanTemplate>(plan_stage1(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions));
    // Learn the answer after the template exists: stage 2 alone re-ranks.
    kb.assert_belief(k.lit("Opens(Key_2, Safe_2)"));
    auto s2 = plan_stage2(t, kb, k.spec->actions);
    ASSERT_EQ(s2.plans.size(), 2u);
    EXPECT_EQ(s2.plans[0].binding[0], k.id("Key_2"));
    EXPECT_EQ(s2.plans[0].uncertainty_count, 0u);
    EXPECT_EQ(s2.plans[1].binding[0], k.id("Key_1"));
    EXPECT_GE(s2.plans[1].uncertainty_count, 1u);
    // The uncertain binding asks before opening.
    ASSERT_EQ(s2.plans[1].steps.size(), 2u);
    EXPECT_TRUE(s2.plans[1].steps[0].is_resolution);
    EXPECT_EQ(describe(*k.spec, k.spec->actions, s2.plans[1].steps[0]), "ASK Opens(?, Safe_2)");
}

TEST(Planner, TiesBrokenById) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)", "Have(Key_1)"});
    auto t = std::get<PlanTemplate>(plan_stage1(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions));
    auto s2 = plan_stage2(t, kb, k.spec->actions);
    ASSERT_EQ(s2.plans.size(), 2u);
    EXPECT_EQ(s2.plans[0].binding[0], k.id("Key_1"));
    EXPECT_EQ(s2.plans[0].uncertainty_count, s2.plans[1].uncertainty_count);
}

TEST(Planner, EmptyDesiresGiveEmptyPlan) {
    Keys k;
    auto kb = k.kb({});
    auto r = plan_stage1(kb, {}, k.spec->actions);
    ASSERT_TRUE(std::holds_alternative<PlanTemplate>(r));
    EXPECT_TRUE(std::get<PlanTemplate>(r).steps.empty());
    PlannerState st;
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(st.plan(kb, {}, k.spec->actions, {})));
    EXPECT_TRUE(st.current().steps.empty());
}

TEST(Planner, SatisfiedDesireGivesEmptyPlan) {
    Keys k;
    auto kb = k.kb({"!Locked(Safe_2)"});
    PlannerState st;
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(st.plan(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions, {})));
    EXPECT_TRUE(st.current().steps.empty());
}

TEST(Planner, UnachievableDesireReported) {
    Keys k;
    auto kb = k.kb({});
    auto r = plan_stage1(kb, {k.lit("Have(Key_2)")}, k.spec->actions);
    ASSERT_TRUE(std::holds_alternative<NoPlan>(r));
    const auto& np = std::get<NoPlan>(r);
    ASSERT_TRUE(np.unachievable);
    EXPECT_EQ(format_literal(*k.spec, *np.unachievable), "Have(Key_2)");
}

TEST(Planner, NewBeliefResolvesQuestion) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)", "!Have(Key_1)"});
    PlannerState st;
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(st.plan(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions, {})));
    // Have(Key_1) is FALSE, so Key_2 is the only candidate and is folded in.
    ASSERT_TRUE(st.current().binding.empty());
    ASSERT_TRUE(st.current().steps[0].is_resolution);
    EXPECT_EQ(format_literal(*k.spec, st.current().steps[0].resolution.grounded), "Opens(Key_2, Safe_2)");
    EXPECT_FALSE(st.current().steps[0].resolution.resolved);
    kb.assert_belief(k.lit("Opens(Key_2, Safe_2)"));
    auto out = st.advance({PlanEvent::Kind::NewBelief, k.lit("Opens(Key_2, Safe_2)")}, kb, k.spec->actions, {}, 1.0);
    EXPECT_EQ(out.directive, Directive::Continue);
    EXPECT_TRUE(st.current().steps[0].resolution.resolved);
    EXPECT_EQ(st.current().uncertainty_count, 0u);
}

TEST(Planner, StepFailureRebindsThenWaits) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)"});
    PlannerState st;
    PlannerConfig cfg;
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(st.plan(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions, cfg)));
    ASSERT_EQ(st.bindings().size(), 2u);
    auto out = st.advance({PlanEvent::Kind::StepFailed, {}}, kb, k.spec->actions, cfg, 3.0);
    EXPECT_EQ(out.directive, Directive::Rebind);
    EXPECT_EQ(st.current().binding[0], k.id("Key_2"));
    out = st.advance({PlanEvent::Kind::StepFailed, {}}, kb, k.spec->actions, cfg, 4.0);
    EXPECT_EQ(out.directive, Directive::FailAndWait);
    EXPECT_DOUBLE_EQ(st.retry_wait_until(), 4.0 + cfg.retry_wait);
    EXPECT_FALSE(st.has_plan());
}

TEST(Planner, FalseAnswerSwitchesBinding) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)"});
    PlannerState st;
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(st.plan(kb, {k.lit("!Locked(Safe_2)")}, k.spec->actions, {})));
    ASSERT_EQ(st.current().binding[0], k.id("Key_1"));
    kb.assert_belief(k.lit("!Opens(Key_1, Safe_2)"));
    auto out = st.advance({PlanEvent::Kind::NewBelief, {}}, kb, k.spec->actions, {}, 1.0);
    EXPECT_EQ(out.directive, Directive::Rebind);
    EXPECT_EQ(st.current().binding[0], k.id("Key_2"));
}

TEST(Planner, ReplanUnchangedBeliefsKeepsPlan) {
    Keys k;
    auto kb = k.kb({"Locked(Safe_2)", "Have(Key_1)"});
    PlannerState st;
    const std::vector<Literal> d{k.lit("!Locked(Safe_2)")};
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(st.plan(kb, d, k.spec->actions, {})));
    const auto before = st.current().binding;
    auto r = st.replan(kb, d, k.spec->actions, {});
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(r));
    EXPECT_TRUE(std::get<PlanTiming>(r).incremental);
    EXPECT_EQ(st.current().binding, before);
}

// Multi-step chains: a fluent precondition becomes a subgoal.
TEST(Planner, ChainsThroughFluentPrecondition) {
    auto spec = std::make_shared<DomainSpec>(parse_domain_spec(R"json({
      "format": 1,
      "entity_types": [{"name": "place"}],
      "entities": [{"id": "A", "type": "place"}, {"id": "B", "type": "place"}, {"id": "C", "type": "place"}],
      "predicates": [
        {"name": "At", "kind": "fluent", "slots": [{"name": "p", "types": ["place"]}], "functional": "p"},
        {"name": "Link", "kind": "knowledge", "slots": [{"name": "a", "types": ["place"]}, {"name": "b", "types": ["place"]}]}],
      "actions": [{"name": "Go", "params": [{"name": "from", "types": ["place"]}, {"name": "to", "types": ["place"]}],
                   "pre": ["At(from)", "Link(from, to)"], "eff": ["At(to)"]}]
    })json"));
    BeliefState kb(spec);
    for (const char* f : {"At(A)", "Link(A, B)", "Link(B, C)", "!Link(A, C)"}) kb.assert_belief(parse_literal(*spec, f));
    PlannerState st;
    const std::vector<Literal> d{parse_literal(*spec, "At(C)")};
    auto r = st.plan(kb, d, spec->actions, {});
    ASSERT_TRUE(std::holds_alternative<PlanTiming>(r)) << std::get<NoPlan>(r).reason;
    std::string plan;
    for (const auto& s : st.current().steps) plan += describe(*spec, spec->actions, s) + ";";
    EXPECT_EQ(plan, "Go(A, B);Go(B, C);");
    EXPECT_TRUE(replay_satisfies(st.current(), kb, spec->actions, d));
}

TEST(Planner, AgreesWithForwardSearchOnSmallDomains) {
    std::mt19937_64 rng(5);
    int checked = 0;
    for (int i = 0; i < 60; ++i) {
        auto p = ref::random_micro_problem(rng);
        auto oracle = ref::forward_search(*p.beliefs, p.desires, p.spec->actions);
        if (oracle && *oracle < 0) continue;
        PlannerState st;
        auto r = st.plan(*p.beliefs, p.desires, p.spec->actions, {});
        const bool ok = std::holds_alternative<PlanTiming>(r);
        EXPECT_EQ(ok, oracle.has_value()) << "problem " << i;
        if (ok) EXPECT_TRUE(replay_satisfies(st.current(), *p.beliefs, p.spec->actions, p.desires));
        ++checked;
    }
    EXPECT_GT(checked, 50);
}
