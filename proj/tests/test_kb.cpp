#include "oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace spa;

namespace {

BeliefState example_kb(const std::shared_ptr<DomainSpec>& spec) {
    BeliefState kb(spec);
    for (const char* s : {"Have(Key_1)", "!Have(Key_2)", "Opens(Key_1, Safe_1)", "!Locked(Safe_2)"})
        kb.assert_belief(parse_literal(*spec, s));
    return kb;
}

}  // namespace

TEST(Kb, ThreeValuedTruth) {
    auto spec = ref::load_data_domain("keys.json");
    auto kb = example_kb(spec);
    EXPECT_EQ(kb.truth(parse_literal(*spec, "Opens(Key_1, Safe_1)")), Truth::True);
    EXPECT_EQ(kb.truth(parse_literal(*spec, "Have(Key_2)")), Truth::False);
    EXPECT_EQ(kb.truth(parse_literal(*spec, "Opens(Key_2, Safe_2)")), Truth::Unknown);
}

TEST(Kb, AssertRetractsNegation) {
    auto spec = ref::load_data_domain("keys.json");
    BeliefState kb(spec);
    kb.assert_belief(parse_literal(*spec, "Locked(Safe_1)"));
    auto r = kb.assert_belief(parse_literal(*spec, "!Locked(Safe_1)"));
    ASSERT_EQ(r.retracted.size(), 1u);
    EXPECT_EQ(format_literal(*spec, r.retracted[0]), "Locked(Safe_1)");
    EXPECT_EQ(kb.truth(parse_literal(*spec, "Locked(Safe_1)")), Truth::False);
}

TEST(Kb, AssertIsIdempotent) {
    auto spec = ref::load_data_domain("keys.json");
    BeliefState kb(spec);
    EXPECT_TRUE(kb.assert_belief(parse_literal(*spec, "Have(Key_1)")).changed());
    EXPECT_FALSE(kb.assert_belief(parse_literal(*spec, "Have(Key_1)")).changed());
}

TEST(Kb, QueryOrdersById) {
    auto spec = ref::load_data_domain("keys.json");
    auto kb = example_kb(spec);
    EXPECT_TRUE(kb.query(parse_literal(*spec, "Opens(?, Safe_2)")).empty());
    kb.assert_belief(parse_literal(*spec, "Opens(Key_2, Safe_1)"));
    auto m = kb.query(parse_literal(*spec, "Opens(?, Safe_1)"));
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(spec->entity(m[0].binding[0]).id, "Key_1");
    EXPECT_EQ(spec->entity(m[1].binding[0]).id, "Key_2");
}

TEST(Kb, AskedCooldown) {
    auto spec = ref::load_data_domain("keys.json");
    BeliefState kb(spec);
    kb.record_asked("q", "Alice", 10);
    EXPECT_TRUE(kb.was_recently_asked("q", "Alice", 12, 30));
    EXPECT_FALSE(kb.was_recently_asked("q", "Alice", 50, 30));
    EXPECT_FALSE(kb.was_recently_asked("other", "Alice", 12, 30));
}

TEST(Kb, SnapshotRoundTrip) {
    auto spec = ref::load_data_domain("keys.json");
    auto kb = example_kb(spec);
    kb.record_asked("q", "Bob", 3.5);
    auto back = BeliefState::from_snapshot(spec, kb.snapshot());
    EXPECT_EQ(back.facts(), kb.facts());
    EXPECT_EQ(back.snapshot(), kb.snapshot());
}

// Brute-force check of query() on random small belief sets.
TEST(Kb, QueryMatchesBruteForce) {
    std::mt19937_64 rng(11);
    for (int round = 0; round < 50; ++round) {
        auto p = ref::random_micro_problem(rng);
        const auto& spec = *p.spec;
        for (std::size_t s = 0; s < spec.predicates.size(); ++s) {
            const auto& slots = spec.predicates[s].slots;
            for (bool pos : {true, false}) {
                Literal pattern{static_cast<std::uint16_t>(s), pos, {}};
                for (std::size_t k = 0; k < slots.size(); ++k) pattern.args.push_back(Term::hole(static_cast<int>(k)));
                if (!spec.entities.empty() && slots.size() == 2 && round % 2) pattern.args[0] = Term::entity(0);
                std::set<Binding> expected;
                const auto n = static_cast<EntityId>(spec.entities.size());
                for (EntityId a = 0; a < n; ++a)
                    for (EntityId b = 0; b < (slots.size() == 2 ? n : 1); ++b) {
                        Binding bind(slots.size(), kUnbound);
                        bind[0] = a;
                        if (slots.size() == 2) bind[1] = b;
                        const Literal g = substitute(pattern, bind);
                        if (p.beliefs->lookup(atom_of(g)) != std::optional<bool>(pos)) continue;
                        Binding holes;
                        for (std::size_t k = 0; k < pattern.args.size(); ++k)
                            if (pattern.args[k].is_hole()) holes.push_back(g.args[k].entity_id());
                        expected.insert(holes);
                    }
                std::set<Binding> got;
                for (const auto& m : p.beliefs->query(pattern)) {
                    Binding holes;
                    for (std::size_t k = 0; k < pattern.args.size(); ++k)
                        if (pattern.args[k].is_hole()) holes.push_back(m.binding[static_cast<std::size_t>(pattern.args[k].hole_index())]);
                    got.insert(holes);
                }
                EXPECT_EQ(got, expected);
            }
        }
    }
}
