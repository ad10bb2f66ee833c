#include "spa/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <random>

namespace spa {

using nlohmann::json;

namespace {

using Rng = std::mt19937_64;

json pt(double x, double y) { return json::array({x, y}); }

json rect(double x0, double y0, double x1, double y1) {
    return json::array({pt(x0, y0), pt(x1, y0), pt(x1, y1), pt(x0, y1)});
}

template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

json slot(const std::string& name, const std::string& type) {
    return {{"name", name}, {"types", json::array({type})}};
}

Scenario finish(const json& doc, Lexicon lexicon, std::uint64_t seed, std::uint64_t max_ticks) {
    Scenario s;
    auto spec = std::make_shared<DomainSpec>(parse_domain_spec(doc.dump()));
    std::vector<std::string> exempt;
    for (const auto& a : spec->agents) exempt.push_back(spec->entity(a.entity).id);
    lexicon.validate(*spec, exempt);
    s.config = SimConfig::from_spec(*spec);
    s.config.seed = seed;
    s.spec = std::move(spec);
    s.lexicon = std::make_shared<Lexicon>(std::move(lexicon));
    s.max_ticks = max_ticks;
    return s;
}

json agent(const std::string& id, std::vector<std::string> beliefs, std::vector<std::string> desires) {
    return {{"id", id}, {"beliefs", beliefs}, {"desires", desires}};
}

}  // namespace

std::string data_dir() {
    if (const char* env = std::getenv("SPA_DATA_DIR"); env && *env) return env;
    return SPA_DATA_DIR;
}

std::shared_ptr<const Parser> Scenario::parser() const {
    if (!parser_) {
        TrainingOptions opt;
        for (const auto& a : spec->agents) opt.exempt_entities.push_back(spec->entity(a.entity).id);
        parser_ = std::make_shared<Parser>(*lexicon, *spec, config.seed, opt);
    }
    return parser_;
}

std::unique_ptr<World> Scenario::make_world(bool nli) const {
    SimConfig c = config;
    c.nli = nli;
    return std::make_unique<World>(spec, lexicon, c, parser());
}

// ---------------------------------------------------------------------------

Scenario build_antipodal_circle(std::size_t n_agents, std::size_t n_objects, std::uint64_t seed,
                                std::size_t desires_per_agent, std::size_t n_spots) {
    n_spots = std::max(n_spots, n_objects);
    Rng rng(seed ^ 0xA971D0A1ULL);
    const double radius = std::max(4.0, 0.95 * double(std::max({n_agents, n_objects, n_spots})));
    const double tau = 2 * std::numbers::pi;
    auto on_circle = [&](double angle) { return std::pair{radius * std::cos(angle), radius * std::sin(angle)}; };

    json doc;
    doc["format"] = 1;
    doc["name"] = "antipodal";
    doc["entity_types"] = json::array({{{"name", "person"}}, {{"name", "object"}}, {{"name", "spot"}}});
    json entities = json::array();
    std::vector<std::pair<double, double>> agent_pos, spot_pos;
    for (std::size_t k = 0; k < n_agents; ++k) agent_pos.push_back(on_circle(tau * double(k) / double(n_agents)));
    for (std::size_t k = 0; k < n_spots; ++k)
        spot_pos.push_back(on_circle(tau * (double(k) + 0.5) / double(n_spots)));
    std::vector<std::size_t> where(n_spots);  // object -> spot
    for (std::size_t k = 0; k < n_spots; ++k) where[k] = k;
    shuffle(where, rng);
    where.resize(n_objects);

    auto obj = [](std::size_t k) { return "Obj_" + std::to_string(k + 1); };
    auto spot = [](std::size_t k) { return "Spot_" + std::to_string(k + 1); };
    for (std::size_t k = 0; k < n_agents; ++k)
        entities.push_back({{"id", "Agent_" + std::to_string(k + 1)},
                            {"type", "person"},
                            {"position", pt(agent_pos[k].first, agent_pos[k].second)}});
    for (std::size_t k = 0; k < n_objects; ++k) {
        const auto [x, y] = spot_pos[where[k]];
        entities.push_back({{"id", obj(k)}, {"type", "object"}, {"position", pt(x, y)}});
    }
    for (std::size_t k = 0; k < n_spots; ++k)
        entities.push_back({{"id", spot(k)}, {"type", "spot"}, {"position", pt(spot_pos[k].first, spot_pos[k].second)}});
    doc["entities"] = entities;
    doc["predicates"] = json::array(
        {{{"name", "Located"},
          {"kind", "knowledge"},
          {"slots", json::array({slot("object", "object"), slot("spot", "spot")})},
          {"functional", "spot"},
          {"observable", true}},
         {{"name", "Have"}, {"kind", "fluent"}, {"slots", json::array({slot("object", "object")})}, {"egocentric", true}}});
    doc["actions"] = json::array({{{"name", "Fetch"},
                                   {"params", json::array({slot("object", "object"), slot("spot", "spot")})},
                                   {"pre", {"Located(object, spot)"}},
                                   {"eff", {"Have(object)"}},
                                   {"controller", "interact"},
                                   {"target", "spot"}}});

    // Desires come from the far half of the circle; knowledge of the rest is
    // spread so that every object is known somewhere but nobody knows all.
    std::vector<std::vector<std::size_t>> wants(n_agents);
    const std::size_t per = std::min(desires_per_agent, std::max<std::size_t>(1, n_objects / 2));
    for (std::size_t a = 0; a < n_agents; ++a) {
        std::vector<std::pair<double, std::size_t>> far;
        for (std::size_t o = 0; o < n_objects; ++o) {
            const auto [x, y] = spot_pos[where[o]];
            far.emplace_back(-std::hypot(x - agent_pos[a].first, y - agent_pos[a].second), o);
        }
        std::sort(far.begin(), far.end());
        std::vector<std::size_t> pool;
        for (std::size_t i = 0; i < std::max<std::size_t>(per, (n_objects + 1) / 2); ++i) pool.push_back(far[i].second);
        shuffle(pool, rng);
        pool.resize(per);
        std::sort(pool.begin(), pool.end());
        wants[a] = pool;
    }
    // An object everyone wants could only be found by walking. Give the last
    // agent something else so somebody is left to know it.
    for (std::size_t o = 0; n_agents > 1 && o < n_objects; ++o) {
        const bool everyone = std::all_of(wants.begin(), wants.end(), [&](const auto& w) {
            return std::find(w.begin(), w.end(), o) != w.end();
        });
        if (!everyone) continue;
        auto& last = wants.back();
        for (std::size_t alt = 0; alt < n_objects; ++alt)
            if (std::find(last.begin(), last.end(), alt) == last.end()) {
                *std::find(last.begin(), last.end(), o) = alt;
                std::sort(last.begin(), last.end());
                break;
            }
    }
    std::vector<std::vector<bool>> knows(n_agents, std::vector<bool>(n_objects, false));
    for (std::size_t o = 0; o < n_objects; ++o) {
        std::vector<std::size_t> eligible;
        for (std::size_t a = 0; a < n_agents; ++a)
            if (std::find(wants[a].begin(), wants[a].end(), o) == wants[a].end()) eligible.push_back(a);
        if (eligible.empty()) continue;
        bool any = false;
        for (std::size_t a : eligible)
            if (rng() % 10 < 3) knows[a][o] = any = true;
        if (!any) knows[eligible[rng() % eligible.size()]][o] = true;
    }
    json agents = json::array();
    for (std::size_t a = 0; a < n_agents; ++a) {
        std::vector<std::string> beliefs, desires;
        for (std::size_t o = 0; o < n_objects; ++o)
            if (knows[a][o]) beliefs.push_back("Located(" + obj(o) + ", " + spot(where[o]) + ")");
        for (std::size_t o : wants[a]) desires.push_back("Have(" + obj(o) + ")");
        agents.push_back(agent("Agent_" + std::to_string(a + 1), beliefs, desires));
    }
    doc["agents"] = agents;
    const double b = radius + 3;
    json facts = json::array();
    for (std::size_t o = 0; o < n_objects; ++o) facts.push_back("Located(" + obj(o) + ", " + spot(where[o]) + ")");
    doc["world"] = {{"bounds", json::array({pt(-b, -b), pt(b, b)})}, {"obstacles", json::array()}, {"facts", facts}};
    doc["lexicon"] = "antipodal.lexicon.json";

    Lexicon lex = load_lexicon(data_dir() + "/antipodal.lexicon.json");
    for (std::size_t k = 0; k < n_objects; ++k) {
        LexEntry o;
        o.surface = "object " + std::to_string(k + 1);
        o.pos = "NNP";
        o.ref = {RefKind::Entity, obj(k), {}};
        lex.entries.push_back(o);
    }
    for (std::size_t k = 0; k < n_spots; ++k) {
        LexEntry s;
        s.surface = "spot " + std::to_string(k + 1);
        s.pos = "NNP";
        s.ref = {RefKind::Entity, spot(k), {}};
        lex.entries.push_back(s);
    }
    return finish(doc, std::move(lex), seed, 6000);
}

// ---------------------------------------------------------------------------

Scenario build_evacuation(std::uint64_t seed, std::size_t evacuees) {
    Rng rng(seed ^ 0xE7AC0A7EULL);
    json doc;
    doc["format"] = 1;
    doc["name"] = "evacuation";
    doc["entity_types"] = json::array({{{"name", "person"}}, {{"name", "passage"}}, {{"name", "area"}}});
    json entities = json::array();
    entities.push_back({{"id", "Responder"}, {"type", "person"}, {"position", pt(0, 21)}});
    std::vector<std::string> ids;
    std::vector<double> start_y;
    for (std::size_t k = 0; k < evacuees; ++k) {
        const double x = -1.5 + double(rng() % 31) * 0.1;
        const double y = 1.0 + double(rng() % 141) * 0.1;
        ids.push_back("Evacuee_" + std::to_string(k + 1));
        start_y.push_back(y);
        entities.push_back({{"id", ids.back()}, {"type", "person"}, {"position", pt(x, y)}});
    }
    entities.push_back({{"id", "Left"}, {"type", "passage"}, {"position", pt(-14, 32)}});
    entities.push_back({{"id", "Right"}, {"type", "passage"}, {"position", pt(14, 32)}});
    entities.push_back({{"id", "Yard"}, {"type", "area"}, {"region", rect(-16, 37, 16, 47)}});
    doc["entities"] = entities;
    doc["predicates"] = json::array(
        {{{"name", "Clear"}, {"kind", "fluent"}, {"slots", json::array({slot("passage", "passage")})}, {"observable", true}},
         {{"name", "Leads"},
          {"kind", "knowledge"},
          {"slots", json::array({slot("passage", "passage"), slot("area", "area")})},
          {"observable", true}},
         {{"name", "Outside"}, {"kind", "fluent"}, {"slots", json::array({slot("area", "area")})}, {"egocentric", true}},
         {{"name", "Warned"}, {"kind", "fluent"}, {"slots", json::array({slot("person", "person")})}}});
    doc["actions"] = json::array({{{"name", "Escape"},
                                   {"params", json::array({slot("passage", "passage"), slot("area", "area")})},
                                   {"pre", {"Clear(passage)", "Leads(passage, area)"}},
                                   {"eff", {"Outside(area)"}},
                                   {"controller", "move_to"},
                                   {"target", "area"},
                                   {"via", "passage"}},
                                  {{"name", "Warn"},
                                   {"params", json::array({slot("person", "person")})},
                                   {"eff", {"Warned(person)"}},
                                   {"say", {"!Clear(Right)", "Leads(Left, Yard)"}},
                                   {"controller", "utter"},
                                   {"target", "person"}}});
    json agents = json::array();
    std::vector<std::size_t> order(evacuees);
    for (std::size_t k = 0; k < evacuees; ++k) order[k] = k;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return start_y[a] > start_y[b]; });
    std::vector<std::string> warn;
    for (auto k : order) warn.push_back("Warned(" + ids[k] + ")");
    agents.push_back(agent("Responder", {"!Clear(Right)", "Leads(Left, Yard)"}, warn));
    // Half the evacuees believe the right passage is their way out.
    std::vector<bool> right(evacuees, false);
    for (std::size_t k = 0; k < evacuees; ++k) right[k] = k % 2 == 0;
    shuffle(right, rng);
    for (std::size_t k = 0; k < evacuees; ++k)
        agents.push_back(agent(ids[k], {right[k] ? "Leads(Right, Yard)" : "Leads(Left, Yard)"}, {"Outside(Yard)"}));
    doc["agents"] = agents;
    json obstacles = json::array({
        rect(-18, -1, -2, 20), rect(2, -1, 18, 20),   // stem walls
        rect(-2, -1, 2, 0),                           // stem floor
        rect(-12, 24, 12, 37),                        // block between the branches
        rect(-18, 20, -16, 48), rect(16, 20, 18, 48), // outer walls
        rect(-16, 47, 16, 48),                        // yard far wall
        rect(12, 34.5, 16, 35.5),                     // fire
    });
    doc["world"] = {{"bounds", json::array({pt(-18, -1), pt(18, 48)})},
                    {"obstacles", obstacles},
                    {"facts", {"Clear(Left)", "Leads(Left, Yard)", "Leads(Right, Yard)"}}};
    doc["lexicon"] = "evacuation.lexicon.json";
    return finish(doc, load_lexicon(data_dir() + "/evacuation.lexicon.json"), seed, 3000);
}

// ---------------------------------------------------------------------------

namespace {

json visit_action(const std::string& item_type, const std::string& place_type) {
    return {{"name", "Visit"},
            {"params", json::array({slot("item", item_type), slot("place", place_type)})},
            {"pre", {"InSpace(item, place)"}},
            {"eff", {"Visited(item)"}},
            {"controller", "move_to"},
            {"target", "place"}};
}

json inspace_predicates(const std::string& item_type, const std::string& place_type) {
    return json::array({{{"name", "InSpace"},
                         {"kind", "knowledge"},
                         {"slots", json::array({slot("item", item_type), slot("place", place_type)})},
                         {"functional", "place"},
                         {"observable", true}},
                        {{"name", "Visited"},
                         {"kind", "fluent"},
                         {"slots", json::array({slot("item", item_type)})},
                         {"egocentric", true}}});
}

}  // namespace

Scenario build_museum(std::uint64_t seed) {
    Rng rng(seed ^ 0x3E5E03ULL);
    const std::vector<std::pair<std::string, std::string>> statues = {
        {"Venus", "marble"},   {"David", "marble"},   {"Thinker", "bronze"}, {"Discobolus", "bronze"},
        {"Victory", "marble"}, {"Laocoon", "marble"}, {"Pieta", "marble"},   {"Moses", "marble"}};
    const std::vector<std::string> galleries = {"GalleryA", "GalleryB", "GalleryC", "GalleryD"};
    const std::vector<std::pair<double, double>> origin = {{0, 0}, {10, 0}, {0, 10}, {10, 10}};

    json doc;
    doc["format"] = 1;
    doc["name"] = "museum";
    doc["entity_types"] = json::array({{{"name", "person"}},
                                       {{"name", "statue"}, {"attributes", json::array({{{"name", "material"}}})}},
                                       {{"name", "gallery"}}});
    std::vector<std::size_t> slots(statues.size());  // two statues per gallery
    for (std::size_t k = 0; k < slots.size(); ++k) slots[k] = k;
    shuffle(slots, rng);
    json entities = json::array();
    std::vector<std::string> facts;
    for (std::size_t k = 0; k < statues.size(); ++k) {
        const std::size_t g = slots[k] / 2;
        const double x = origin[g].first + (slots[k] % 2 ? 6.5 : 3.5), y = origin[g].second + 5.0;
        entities.push_back({{"id", statues[k].first},
                            {"type", "statue"},
                            {"position", pt(x, y)},
                            {"attributes", {{"material", statues[k].second}}}});
        facts.push_back("InSpace(" + statues[k].first + ", " + galleries[g] + ")");
    }
    for (std::size_t g = 0; g < galleries.size(); ++g) {
        const auto [x, y] = origin[g];
        entities.push_back({{"id", galleries[g]}, {"type", "gallery"}, {"region", rect(x, y, x + 10, y + 10)}});
    }
    const std::size_t n_agents = 5;
    std::vector<std::string> names;
    for (std::size_t a = 0; a < n_agents; ++a) {
        names.push_back("Visitor_" + std::to_string(a + 1));
        const std::size_t g = rng() % galleries.size();
        const double x = origin[g].first + 2.0 + double(rng() % 61) * 0.1;
        const double y = origin[g].second + 1.5 + double(rng() % 21) * 0.1;
        entities.push_back({{"id", names.back()}, {"type", "person"}, {"position", pt(x, y)}});
    }
    doc["entities"] = entities;
    doc["predicates"] = inspace_predicates("statue", "gallery");
    doc["actions"] = json::array({visit_action("statue", "gallery")});

    // Nine desires over five visitors; each statue's location is known to one
    // visitor who does not want it.
    const std::vector<std::size_t> counts = {2, 2, 2, 2, 1};
    std::vector<std::vector<std::size_t>> wants(n_agents);
    for (std::size_t a = 0; a < n_agents; ++a) {
        std::vector<std::size_t> pool(statues.size());
        for (std::size_t k = 0; k < pool.size(); ++k) pool[k] = k;
        shuffle(pool, rng);
        pool.resize(counts[a]);
        std::sort(pool.begin(), pool.end());
        wants[a] = pool;
    }
    std::vector<std::vector<std::string>> beliefs(n_agents);
    json attr_beliefs = json::array();
    for (std::size_t k = 0; k < statues.size(); ++k) {
        std::vector<std::size_t> eligible;
        for (std::size_t a = 0; a < n_agents; ++a)
            if (std::find(wants[a].begin(), wants[a].end(), k) == wants[a].end()) eligible.push_back(a);
        const std::size_t a = eligible[rng() % eligible.size()];
        beliefs[a].push_back(facts[k]);
    }
    json agents = json::array();
    for (std::size_t a = 0; a < n_agents; ++a) {
        std::vector<std::string> desires;
        for (auto k : wants[a]) desires.push_back("Visited(" + statues[k].first + ")");
        json j = agent(names[a], beliefs[a], desires);
        j["attributes"] = json::array({{{"entity", "Venus"}, {"attribute", "material"}, {"value", "marble"}}});
        agents.push_back(j);
    }
    doc["agents"] = agents;
    json obstacles = json::array({
        rect(9.8, 0, 10.2, 4), rect(9.8, 6, 10.2, 14), rect(9.8, 16, 10.2, 20),
        rect(0, 9.8, 4, 10.2), rect(6, 9.8, 9.8, 10.2), rect(10.2, 9.8, 14, 10.2), rect(16, 9.8, 20, 10.2),
    });
    doc["world"] = {{"bounds", json::array({pt(0, 0), pt(20, 20)})}, {"obstacles", obstacles}, {"facts", facts}};
    doc["lexicon"] = "museum.lexicon.json";
    return finish(doc, load_lexicon(data_dir() + "/museum.lexicon.json"), seed, 6000);
}

// ---------------------------------------------------------------------------

Scenario build_tradeshow(std::uint64_t seed) {
    Rng rng(seed ^ 0x7EAD5E0ULL);
    json doc;
    doc["format"] = 1;
    doc["name"] = "tradeshow";
    doc["entity_types"] = json::array({{{"name", "person"}}, {{"name", "desk"}}, {{"name", "booth"}}});
    // 5 x 4 booths, 6 m x 4 m each, walled at the back and one side.
    constexpr int cols = 5, rows = 4;
    struct Booth {
        std::string id;
        double x, y;  // lower-left corner
    };
    std::vector<Booth> booths;
    for (int row = 0; row < rows; ++row)
        for (int col = 0; col < cols; ++col)
            booths.push_back({"Booth_" + std::to_string(row * cols + col + 1), 3.0 + col * 10.0, 4.0 + row * 8.0});
    json entities = json::array();
    json obstacles = json::array();
    for (const auto& b : booths) {
        entities.push_back({{"id", b.id}, {"type", "booth"}, {"region", rect(b.x, b.y, b.x + 6, b.y + 4)}});
        obstacles.push_back(rect(b.x, b.y + 4, b.x + 6, b.y + 4.5));
        obstacles.push_back(rect(b.x + 6, b.y, b.x + 6.4, b.y + 4.5));
    }
    // The desk sits in the back half. One informed exhibitor staffs the booth by
    // the entrance, the other stands somewhere along the front aisles.
    const std::size_t half = booths.size() / 2;
    const std::size_t desk = half + rng() % (booths.size() - half);
    const auto& db = booths[desk];
    entities.push_back({{"id", "Registration"}, {"type", "desk"}, {"position", pt(db.x + 3, db.y + 2)}});
    entities.push_back({{"id", "Visitor"}, {"type", "person"}, {"position", pt(1.0, 1.0)}});
    std::vector<std::size_t> front, rest;
    for (std::size_t k = 0; k < booths.size(); ++k)
        if (k < half) front.push_back(k);
        else if (k != desk) rest.push_back(k);
    const std::size_t greeter = 0;
    front.erase(front.begin() + static_cast<std::ptrdiff_t>(greeter));
    shuffle(front, rng);
    shuffle(rest, rng);
    json agents = json::array();
    agents.push_back(agent("Visitor", {}, {"Visited(Registration)"}));
    const std::string fact = "InSpace(Registration, " + db.id + ")";
    const std::vector<std::size_t> stands = {greeter, front[0], rest[0]};
    for (std::size_t k = 0; k < stands.size(); ++k) {
        const auto& b = booths[stands[k]];
        const std::string id = "Exhibitor_" + std::to_string(k + 1);
        entities.push_back({{"id", id}, {"type", "person"}, {"position", pt(b.x + 3, b.y - 0.8)}});
        agents.push_back(agent(id, k < 2 ? std::vector<std::string>{fact} : std::vector<std::string>{}, {}));
    }
    doc["entities"] = entities;
    doc["predicates"] = inspace_predicates("desk", "booth");
    doc["actions"] = json::array({visit_action("desk", "booth")});
    doc["agents"] = agents;
    doc["world"] = {{"bounds", json::array({pt(0, 0), pt(52, 36)})}, {"obstacles", obstacles}, {"facts", {fact}}};
    doc["lexicon"] = "tradeshow.lexicon.json";
    return finish(doc, load_lexicon(data_dir() + "/tradeshow.lexicon.json"), seed, 6000);
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = {"antipodal", "evacuation", "museum", "tradeshow"};
    return names;
}

std::optional<Scenario> build_scenario(const std::string& name, std::uint64_t seed) {
    if (name == "antipodal") return build_antipodal_circle(10, 10, seed);
    if (name == "evacuation") return build_evacuation(seed);
    if (name == "museum") return build_museum(seed);
    if (name == "tradeshow") return build_tradeshow(seed);
    return std::nullopt;
}

Scenario with_avatars(const Scenario& base, std::size_t count) {
    json doc = json::parse(serialize_domain_spec(*base.spec));
    const auto& spec = *base.spec;
    if (spec.agents.empty()) throw SpecError("scenario has no agents to place avatars beside");
    const Entity& first = spec.entity(spec.agents.front().entity);
    for (std::size_t k = 0; k < count; ++k) {
        const std::string id = "Avatar_" + std::to_string(k + 1);
        doc["entities"].push_back({{"id", id}, {"type", first.type}, {"position", pt(first.position->x, first.position->y)}});
        doc["agents"].push_back({{"id", id}, {"avatar", true}, {"beliefs", json::array()}, {"desires", json::array()}});
    }
    Scenario s = finish(doc, *base.lexicon, base.config.seed, base.max_ticks);
    s.config = base.config;
    return s;
}

}  // namespace spa
