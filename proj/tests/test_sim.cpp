// Geometry, pathfinding, the world loop and the scenario builders.

#include "spa/metrics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <queue>

using namespace spa;
using nlohmann::json;

namespace {

// Same scenario with every desire removed.
Scenario without_desires(const Scenario& base) {
    json doc = json::parse(serialize_domain_spec(*base.spec));
    for (auto& a : doc["agents"]) a["desires"] = json::array();
    Scenario s = base;
    s.spec = std::make_shared<DomainSpec>(parse_domain_spec(doc.dump()));
    return s;
}

// Two people either side of a wall, close enough to hear each other if it
// were not there.
std::shared_ptr<DomainSpec> walled_pair() {
    json doc = {
        {"format", 1},
        {"name", "walled"},
        {"entity_types", {{{"name", "person"}}, {{"name", "thing"}}, {{"name", "place"}}}},
        {"entities",
         {{{"id", "A"}, {"type", "person"}, {"position", {2, 5}}},
          {{"id", "B"}, {"type", "person"}, {"position", {8, 5}}},
          {{"id", "Cup"}, {"type", "thing"}},
          {{"id", "Shelf"}, {"type", "place"}, {"position", {9, 9}}}}},
        {"predicates",
         {{{"name", "At"},
           {"kind", "knowledge"},
           {"observable", true},
           {"functional", "place"},
           {"slots", {{{"name", "thing"}, {"types", {"thing"}}}, {{"name", "place"}, {"types", {"place"}}}}}}}},
        {"actions", json::array()},
        {"agents", {{{"id", "A"}, {"beliefs", json::array()}, {"desires", json::array()}},
                    {{"id", "B"}, {"beliefs", json::array()}, {"desires", json::array()}}}},
        {"world",
         {{"bounds", {{0, 0}, {10, 10}}}, {"obstacles", {{{4.8, 0}, {5.2, 0}, {5.2, 10}, {4.8, 10}}}}, {"facts", json::array()}}}};
    return std::make_shared<DomainSpec>(parse_domain_spec(doc.dump()));
}

// Reference shortest path length over the grid's free cell centres, 8-connected.
double grid_distance(const NavGrid& g, Vec2 from, Vec2 to, Vec2 origin) {
    const double c = g.cell();
    auto cell = [&](Vec2 p) { return std::pair<int, int>{int((p.x - origin.x) / c), int((p.y - origin.y) / c)}; };
    auto centre = [&](int x, int y) { return Vec2{origin.x + (x + 0.5) * c, origin.y + (y + 0.5) * c}; };
    const auto [sx, sy] = cell(from);
    const auto [tx, ty] = cell(to);
    std::vector<double> dist(std::size_t(g.width() * g.height()), 1e18);
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    dist[std::size_t(sy * g.width() + sx)] = 0;
    open.push({0, sy * g.width() + sx});
    while (!open.empty()) {
        auto [d, i] = open.top();
        open.pop();
        if (d > dist[std::size_t(i)]) continue;
        const int x = i % g.width(), y = i / g.width();
        if (x == tx && y == ty) return d + distance(from, centre(sx, sy)) + distance(to, centre(tx, ty));
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy) {
                const int nx = x + dx, ny = y + dy;
                if ((!dx && !dy) || nx < 0 || ny < 0 || nx >= g.width() || ny >= g.height()) continue;
                if (!g.free(centre(nx, ny))) continue;
                if (dx && dy && (!g.free(centre(x + dx, y)) || !g.free(centre(x, y + dy)))) continue;
                const double nd = d + std::hypot(dx, dy) * c;
                if (nd < dist[std::size_t(ny * g.width() + nx)]) {
                    dist[std::size_t(ny * g.width() + nx)] = nd;
                    open.push({nd, ny * g.width() + nx});
                }
            }
    }
    return -1;
}

double length(const std::vector<Vec2>& path) {
    double l = 0;
    for (std::size_t i = 1; i < path.size(); ++i) l += distance(path[i - 1], path[i]);
    return l;
}

}  // namespace

// --- geometry and paths ---------------------------------------------------

TEST(Geometry, Basics) {
    const Polygon sq = rectangle(0, 0, 2, 2);
    EXPECT_TRUE(point_in_polygon({1, 1}, sq));
    EXPECT_FALSE(point_in_polygon({3, 1}, sq));
    EXPECT_DOUBLE_EQ(distance_to_polygon({4, 1}, sq), 2.0);
    EXPECT_DOUBLE_EQ(distance_to_polygon({1, 1}, sq), 0.0);
    EXPECT_EQ(centroid(sq), (Vec2{1, 1}));
    EXPECT_TRUE(segments_intersect({0, 0}, {2, 2}, {0, 2}, {2, 0}));
    EXPECT_FALSE(segments_intersect({0, 0}, {1, 0}, {0, 1}, {1, 1}));
    EXPECT_TRUE(segment_hits_polygon({-1, 1}, {3, 1}, sq));
    EXPECT_FALSE(segment_hits_polygon({-1, 3}, {3, 3}, sq));
}

TEST(Paths, AroundAWall) {
    WorldGeometry w;
    w.min = {0, 0};
    w.max = {20, 10};
    w.obstacles.push_back(rectangle(9, 0, 11, 8));
    const NavGrid g(w);
    const Vec2 from{2, 2}, to{18, 2};
    const auto p = g.path(from, to);
    ASSERT_TRUE(p);
    EXPECT_EQ(p->front(), from);
    EXPECT_EQ(p->back(), to);
    for (std::size_t i = 1; i < p->size(); ++i) EXPECT_TRUE(g.line_free((*p)[i - 1], (*p)[i]));
    const double ref = grid_distance(g, from, to, w.min);
    ASSERT_GT(ref, 0);
    EXPECT_GE(length(*p), distance(from, to));
    EXPECT_LE(length(*p), ref + 1e-9);  // string pulling never lengthens the grid path
    EXPECT_FALSE(g.path(from, {10, 4}));  // inside the wall
}

TEST(Paths, SealedRoomIsUnreachable) {
    WorldGeometry w;
    w.min = {0, 0};
    w.max = {10, 10};
    w.obstacles.push_back(rectangle(4, 4, 8, 4.5));
    w.obstacles.push_back(rectangle(4, 7.5, 8, 8));
    w.obstacles.push_back(rectangle(4, 4, 4.5, 8));
    w.obstacles.push_back(rectangle(7.5, 4, 8, 8));
    const NavGrid g(w);
    EXPECT_FALSE(g.path({1, 1}, {6, 6}));
    EXPECT_TRUE(g.path({1, 1}, {9, 9}));
}

// --- world ----------------------------------------------------------------

TEST(World, HearingNeedsLineOfSight) {
    auto spec = walled_pair();
    Lexicon lex;
    World w(spec, std::make_shared<Lexicon>(lex), SimConfig{});
    EXPECT_FALSE(w.audible({2, 5}, {8, 5}));
    EXPECT_TRUE(w.audible({6, 5}, {8, 5}));
    EXPECT_FALSE(w.audible({6, 0.5}, {6, 9.5 + w.config().hearing_range}));
    EXPECT_TRUE(w.visible({6, 1}, {6, 9}));
}

TEST(World, NoDesiresIsSolvedAtStart) {
    const Scenario sc = without_desires(build_antipodal_circle(4, 4, 1));
    const auto r = run_benchmark(sc, {});
    ASSERT_TRUE(r.solution_time);
    EXPECT_EQ(*r.solution_time, 0.0);
    EXPECT_EQ(r.replans + r.statements + r.questions + r.facts_overheard + r.parser_failures, 0u);
}

TEST(World, TwoAgentsSolveByAsking) {
    const Scenario sc = build_antipodal_circle(2, 2, 0, 1);
    auto w = sc.make_world(true);
    ASSERT_TRUE(w->run(sc.max_ticks));
    std::size_t questions = 0, statements = 0;
    for (const auto& a : w->agents()) {
        questions += a.metrics.questions;
        statements += a.metrics.statements;
        EXPECT_EQ(a.metrics.parser_failures, 0u);
    }
    EXPECT_GE(questions, 1u);
    EXPECT_GE(w->questions_answered(), 1u);
    EXPECT_GE(statements, w->questions_answered());
}

TEST(World, WithoutLanguageNothingIsSaid) {
    const Scenario sc = build_antipodal_circle(4, 4, 2, 2);
    auto w = sc.make_world(false);
    for (int t = 0; t < 3000 && !w->solved(); ++t) {
        w->tick();
        ASSERT_TRUE(w->last_utterances().empty()) << "tick " << t;
    }
    EXPECT_TRUE(w->solved());
}

TEST(World, Deterministic) {
    const Scenario sc = build_antipodal_circle(6, 6, 9, 2);
    auto a = sc.make_world(true);
    auto b = sc.make_world(true);
    for (int t = 0; t < 200; ++t) {
        a->tick();
        b->tick();
    }
    EXPECT_EQ(a->snapshot(), b->snapshot());
    EXPECT_EQ(collect(*a, "x", true).to_json(false), collect(*b, "x", true).to_json(false));
}

TEST(World, SnapshotShape) {
    const Scenario sc = build_tradeshow(0);
    auto w = sc.make_world(true);
    w->tick();
    const json s = w->snapshot();
    EXPECT_EQ(s["tick"], 1);
    ASSERT_EQ(s["agents"].size(), 4u);
    for (const auto& a : s["agents"])
        for (const char* k : {"id", "name", "x", "y", "radius", "avatar", "action"}) EXPECT_TRUE(a.contains(k)) << k;
    const json g = w->static_geometry();
    EXPECT_TRUE(g.contains("bounds"));
    EXPECT_FALSE(g["obstacles"].empty());
    EXPECT_EQ(g["locations"].size(), 21u);  // 20 booths and the desk
}

TEST(World, AvatarCommands) {
    const Scenario sc = with_avatars(build_museum(0), 1);
    auto w = sc.make_world(true);
    EXPECT_EQ(w->avatar_say("Avatar_1", "   "), std::optional<std::string>("empty utterance"));
    EXPECT_EQ(w->avatar_say("Visitor_1", "hello"), std::optional<std::string>("unknown avatar"));
    EXPECT_EQ(w->avatar_move_to("Avatar_1", {-50, -50}), std::optional<std::string>("unreachable"));
    EXPECT_EQ(w->avatar_say("Avatar_1", "hello"), std::nullopt);
}

TEST(World, AvatarOutOfEarshotGetsNoReaction) {
    const Scenario sc = with_avatars(build_tradeshow(0), 1);
    const std::uint64_t ts_limit = sc.max_ticks;
    auto w = sc.make_world(true);
    Agent* me = w->find_agent("Avatar_1");
    ASSERT_TRUE(w->run(ts_limit));
    // Somewhere nobody can hear: farther than hearing range from every agent.
    std::optional<Vec2> quiet;
    for (double x = 1; x < 52 && !quiet; x += 1)
        for (double y = 1; y < 36 && !quiet; y += 1) {
            bool far = w->grid().free({x, y});
            for (const auto& a : w->agents())
                if (&a != me) far = far && distance(a.position, {x, y}) > w->config().hearing_range + 1;
            if (far && w->avatar_move_to("Avatar_1", {x, y}) == std::nullopt) quiet = Vec2{x, y};
        }
    ASSERT_TRUE(quiet);
    for (int t = 0; t < 1000 && distance(me->position, *quiet) > 0.1; ++t) w->tick();
    ASSERT_LT(distance(me->position, *quiet), 0.1);
    ASSERT_EQ(w->avatar_say("Avatar_1", "where is the registration desk"), std::nullopt);
    w->tick();
    std::uint64_t said = 0;
    for (const auto& ev : w->last_utterances())
        if (ev.speaker == "Avatar_1") said = ev.id;
    ASSERT_NE(said, 0u);
    for (int t = 0; t < 20; ++t) {
        w->tick();
        for (const auto& ev : w->last_utterances()) EXPECT_NE(ev.in_reply_to, std::optional<std::uint64_t>(said)) << ev.text;
        EXPECT_TRUE(me->inbox.empty());
    }
}

// --- scenarios ------------------------------------------------------------

TEST(Scenarios, AntipodalShape) {
    const Scenario sc = build_antipodal_circle(10, 10, 0);
    const auto& spec = *sc.spec;
    ASSERT_EQ(spec.agents.size(), 10u);
    std::size_t desires = 0;
    for (const auto& a : spec.agents) {
        desires += a.desires.size();
        EXPECT_LT(a.beliefs.size(), spec.world.facts.size());  // nobody knows everything
    }
    EXPECT_EQ(desires, 30u);
    EXPECT_EQ(*build_antipodal_circle(10, 10, 0).spec, spec);
    EXPECT_FALSE(*build_antipodal_circle(10, 10, 1).spec == spec);
}

TEST(Scenarios, EvacuationShape) {
    const Scenario sc = build_evacuation(0);
    const auto& spec = *sc.spec;
    ASSERT_EQ(spec.agents.size(), 11u);
    const Literal blocked = parse_literal(spec, "!Clear(Right)");
    auto w = sc.make_world(true);
    for (const auto& a : w->agents()) {
        EXPECT_TRUE(w->holds(a, blocked));
        if (a.id == "Responder") {
            EXPECT_EQ(a.kb->truth(blocked), Truth::True);
            EXPECT_EQ(a.desires.size(), 10u);
        } else {
            EXPECT_NE(a.kb->truth(blocked), Truth::True) << a.id;
        }
    }
}

TEST(Scenarios, MuseumAndTradeshowCounts) {
    auto count = [](const Scenario& s) {
        std::size_t d = 0;
        for (const auto& a : s.spec->agents) d += a.desires.size();
        return std::pair{s.spec->agents.size(), d};
    };
    EXPECT_EQ(count(build_museum(0)), (std::pair<std::size_t, std::size_t>{5, 9}));
    EXPECT_EQ(count(build_tradeshow(0)), (std::pair<std::size_t, std::size_t>{4, 1}));
    const Scenario ts = build_tradeshow(0);
    auto w = ts.make_world(true);
    const Agent* visitor = w->find_agent("Visitor");
    ASSERT_TRUE(visitor);
    const auto desk = *ts.spec->find_entity("Registration");
    for (const auto& [atom, v] : visitor->kb->facts()) EXPECT_NE(atom.args.front(), Term::entity(desk));
}

TEST(Scenarios, EvacuationWithoutQuestions) {
    const auto c = compare(build_evacuation(3));
    EXPECT_EQ(c.with_nli.questions, 0u);
    EXPECT_GE(c.with_nli.statements, 1u);
    ASSERT_TRUE(c.with_nli.solution_time && c.without_nli.solution_time);
    EXPECT_LT(*c.with_nli.solution_time, *c.without_nli.solution_time);
}

TEST(Scenarios, TradeshowAsksAndIsTold) {
    const auto r = run_benchmark(build_tradeshow(1), {});
    EXPECT_TRUE(r.solved);
    EXPECT_GE(r.questions, 1u);
    EXPECT_GE(r.statements, 1u);
    EXPECT_EQ(r.parser_failures, 0u);
}

TEST(Scenarios, UnknownName) {
    EXPECT_FALSE(build_scenario("bogus", 0));
    for (const auto& n : scenario_names()) EXPECT_TRUE(build_scenario(n, 0)) << n;
}
