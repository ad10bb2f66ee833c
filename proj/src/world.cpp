#include "spa/world.hpp"

#include <algorithm>

namespace spa {

using nlohmann::json;

SimConfig SimConfig::from_spec(const DomainSpec& spec) {
    SimConfig c;
    c.dt = spec.config_or("dt", c.dt);
    c.sense_radius = spec.config_or("sense_radius", c.sense_radius);
    c.hearing_range = spec.config_or("hearing_range", c.hearing_range);
    c.max_speed = spec.config_or("max_speed", c.max_speed);
    c.interact_range = spec.config_or("interact_range", c.interact_range);
    c.cooldown = spec.config_or("cooldown", c.cooldown);
    c.answer_timeout = spec.config_or("answer_timeout", c.answer_timeout);
    c.affirm = spec.config_or("affirm", c.affirm ? 1.0 : 0.0) != 0.0;
    c.planner.retry_wait = spec.config_or("replan_wait", c.planner.retry_wait);
    return c;
}

namespace {

std::shared_ptr<const Parser> default_parser(const Lexicon& lexicon, const DomainSpec& spec, std::uint64_t seed) {
    TrainingOptions opt;
    for (const auto& a : spec.agents) opt.exempt_entities.push_back(spec.entity(a.entity).id);
    auto corpus = generate_training_data(lexicon, spec, seed, opt);
    if (corpus.empty()) return nullptr;
    return std::make_shared<Parser>(lexicon, corpus);
}

}  // namespace

World::World(std::shared_ptr<const DomainSpec> spec, std::shared_ptr<const Lexicon> lexicon, SimConfig config,
             std::shared_ptr<const Parser> parser)
    : spec_(std::move(spec)), lexicon_(std::move(lexicon)), parser_(std::move(parser)), config_(config),
      grid_(spec_->world), truth_(spec_) {
    if (!lexicon_) lexicon_ = std::make_shared<Lexicon>();
    if (!parser_) parser_ = default_parser(*lexicon_, *spec_, config_.seed);
    for (const auto& f : spec_->world.facts) truth_.assert_belief(f);
    location_.assign(spec_->entities.size(), false);
    for (const auto& act : spec_->actions)
        for (auto p : {act.target_param, act.via_param})
            if (p)
                for (EntityId e : spec_->candidates_for(act.params[*p])) {
                    const auto& ent = spec_->entity(e);
                    if (ent.position || ent.region.size() >= 3) location_[static_cast<std::size_t>(e)] = true;
                }

    std::vector<const AgentSpec*> order;
    for (const auto& a : spec_->agents) order.push_back(&a);
    std::sort(order.begin(), order.end(), [](auto* x, auto* y) { return x->entity < y->entity; });
    agent_of_entity_.assign(spec_->entities.size(), 0);
    for (const auto* as : order) {
        Agent a;
        const auto& ent = spec_->entity(as->entity);
        a.id = ent.id;
        a.entity = as->entity;
        a.avatar = as->avatar;
        a.radius = as->radius;
        a.position = ent.anchor().value_or(Vec2{});
        a.name = names_.assign(a.id);
        a.rng.seed(config_.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(as->entity) + 1);
        if (!a.avatar) {
            a.kb = std::make_unique<BeliefState>(spec_);
            for (const auto& b : as->beliefs) {
                a.kb->assert_belief(b);
                if (spec_->schema(b).egocentric && b.positive) a.own_facts.insert(atom_of(b));
            }
            for (const auto& f : as->attribute_beliefs) a.kb->set_attribute(f.entity, f.attribute, f.value);
            a.desires = as->desires;
        }
        agent_of_entity_[static_cast<std::size_t>(a.entity)] = agents_.size() + 1;
        agents_.push_back(std::move(a));
    }
    if (solved()) solved_at_ = 0.0;
}

Agent* World::find_agent(std::string_view id) {
    for (auto& a : agents_)
        if (a.id == id) return &a;
    return nullptr;
}

bool World::holds(const Agent& agent, const Literal& lit) const {
    if (spec_->schema(lit).egocentric) return agent.own_facts.contains(atom_of(lit)) == lit.positive;
    switch (truth_.truth(lit)) {
        case Truth::True: return true;
        case Truth::False: return false;
        case Truth::Unknown: return !lit.positive;
    }
    return false;
}

bool World::solved() const {
    for (const auto& a : agents_) {
        if (a.avatar) continue;
        for (const auto& d : a.desires)
            if (!holds(a, d)) return false;
    }
    return true;
}

bool World::visible(Vec2 from, Vec2 to) const {
    for (const auto& o : spec_->world.obstacles)
        if (segment_hits_polygon(from, to, o)) return false;
    return true;
}

bool World::audible(Vec2 from, Vec2 to) const {
    return distance(from, to) <= config_.hearing_range && visible(from, to);
}

std::optional<Vec2> World::anchor(EntityId e) const {
    if (e >= 0 && static_cast<std::size_t>(e) < agent_of_entity_.size() && agent_of_entity_[e])
        return agents_[agent_of_entity_[e] - 1].position;
    return spec_->entity(e).anchor();
}

std::uint64_t World::emit(UtteranceEvent ev) {
    ev.id = next_utterance_++;
    ev.tick = tick_;
    bus_.push_back(std::move(ev));
    return bus_.back().id;
}

void World::apply_effects(Agent& agent, const ActionSchema& action, const std::vector<EntityId>& args) {
    Binding b(args.begin(), args.end());
    for (const auto& e : action.effects) {
        const Literal lit = substitute(e, b);
        if (spec_->schema(lit).egocentric) {
            if (lit.positive) agent.own_facts.insert(atom_of(lit));
            else agent.own_facts.erase(atom_of(lit));
        } else {
            truth_.assert_belief(lit);
        }
        if (agent.kb && agent.kb->assert_belief(lit).changed()) {
            agent.beliefs_changed = true;
            agent.changed_schemas.insert(lit.schema);
        }
    }
}

void World::sense(Agent& a) {
    if (a.avatar) return;
    const auto& spec = *spec_;
    std::vector<std::int8_t> seen(spec.entities.size(), -1);
    auto perceivable = [&](EntityId e) {
        auto& s = seen[static_cast<std::size_t>(e)];
        if (s >= 0) return s == 1;
        const auto& ent = spec.entity(e);
        bool ok = false;
        if (e == a.entity) ok = true;
        else if (agent_of_entity_[e]) {
            const auto& other = agents_[agent_of_entity_[e] - 1];
            ok = other.present && distance(a.position, other.position) <= config_.sense_radius && visible(a.position, other.position);
        } else if (ent.region.size() >= 3) {
            ok = distance_to_polygon(a.position, ent.region) <= config_.sense_radius;
        } else if (ent.position) {
            ok = distance(a.position, *ent.position) <= config_.sense_radius && visible(a.position, *ent.position);
        }
        s = ok ? 1 : 0;
        // A region counts as explored once the agent is near its middle.
        if (ok && !agent_of_entity_[e]) {
            if (ent.position) a.perceived.insert(e);
            else if (ent.region.size() >= 3) {
                const Vec2 c = centroid(ent.region);
                if (distance(a.position, c) <= 0.5 * config_.sense_radius && visible(a.position, c))
                    a.perceived.insert(e);
            }
        }
        return ok;
    };
    for (std::size_t si = 0; si < spec.predicates.size(); ++si) {
        const auto& schema = spec.predicates[si];
        if (!schema.observable || schema.egocentric) continue;
        std::vector<std::vector<EntityId>> choices;
        bool empty = false;
        for (const auto& slot : schema.slots) {
            std::vector<EntityId> c;
            for (EntityId e : spec.candidates_for(slot))
                if (perceivable(e)) c.push_back(e);
            if (c.empty()) empty = true;
            choices.push_back(std::move(c));
        }
        if (empty) continue;
        std::vector<std::size_t> idx(choices.size(), 0);
        Literal lit;
        lit.schema = static_cast<std::uint16_t>(si);
        lit.args.resize(choices.size());
        while (true) {
            for (std::size_t k = 0; k < choices.size(); ++k) lit.args[k] = Term::entity(choices[k][idx[k]]);
            lit.positive = true;
            Literal observed = lit;
            observed.positive = holds(a, lit);
            if (a.kb->truth(observed) != Truth::True && a.kb->assert_belief(observed).changed()) {
                a.beliefs_changed = true;
                a.changed_schemas.insert(observed.schema);
            }
            std::size_t k = choices.size();
            while (k > 0 && ++idx[k - 1] == choices[k - 1].size()) idx[--k] = 0;
            if (k == 0) break;
        }
    }
    // Attributes of whatever is in view.
    for (std::size_t e = 0; e < spec.entities.size(); ++e) {
        const auto& ent = spec.entities[e];
        if (ent.attributes.empty() || !perceivable(static_cast<EntityId>(e))) continue;
        for (const auto& [k, v] : ent.attributes) a.kb->set_attribute(static_cast<EntityId>(e), k, v);
    }
    // Mark every visible location, even those no predicate mentions.
    for (std::size_t e = 0; e < spec.entities.size(); ++e) perceivable(static_cast<EntityId>(e));
}

void World::tick() {
    spoken_last_ = std::move(bus_);
    bus_.clear();
    for (auto& a : agents_) a.inbox.clear();
    for (auto& a : agents_) {
        if (!a.present) continue;
        sense(a);
        for (const auto& ev : spoken_last_)
            if (ev.speaker != a.id && audible(ev.position, a.position)) hear(a, ev);
        plan(a);
        execute(a);
    }
    for (const auto& ev : spoken_last_) recent_.push_back(ev);
    const double horizon = 5.0 / config_.dt;
    while (!recent_.empty() && double(tick_ - recent_.front().tick) > horizon) recent_.pop_front();
    ++tick_;
    if (!solved_at_ && solved()) solved_at_ = time();
}

bool World::run(std::uint64_t max_ticks) {
    while (!solved_at_ && tick_ < max_ticks) tick();
    return solved_at_.has_value();
}

std::optional<std::string> World::avatar_move_to(const std::string& avatar, Vec2 target) {
    Agent* a = find_agent(avatar);
    if (!a || !a->avatar || !a->present) return "unknown avatar";
    auto path = grid_.path(a->position, target);
    if (!path) return "unreachable";
    a->waypoints = std::move(*path);
    a->waypoint = 0;
    a->mode = Agent::Mode::Move;
    a->last_action = "move_to";
    return std::nullopt;
}

std::optional<std::string> World::avatar_say(const std::string& avatar, const std::string& text) {
    Agent* a = find_agent(avatar);
    if (!a || !a->avatar || !a->present) return "unknown avatar";
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return "empty utterance";
    UtteranceEvent ev;
    ev.speaker = a->id;
    ev.text = text;
    ev.position = a->position;
    ev.from_avatar = true;
    emit(std::move(ev));
    return std::nullopt;
}

std::optional<std::string> World::set_avatar_present(const std::string& avatar, bool present) {
    Agent* a = find_agent(avatar);
    if (!a || !a->avatar) return "unknown avatar";
    a->present = present;
    a->waypoints.clear();
    a->mode = Agent::Mode::Idle;
    a->inbox.clear();
    return std::nullopt;
}

json World::snapshot() const {
    json agents = json::array();
    for (const auto& a : agents_) {
        if (!a.present) continue;
        agents.push_back({{"id", a.id},
                          {"name", a.name},
                          {"x", a.position.x},
                          {"y", a.position.y},
                          {"radius", a.radius},
                          {"avatar", a.avatar},
                          {"action", a.last_action}});
    }
    json utts = json::array();
    for (const auto& u : recent_) {
        json j{{"speaker", u.speaker}, {"text", u.text}, {"tick", u.tick}};
        if (auto n = names_.name_of(u.speaker)) j["name"] = *n;
        utts.push_back(std::move(j));
    }
    return {{"tick", tick_}, {"time", time()}, {"agents", agents}, {"utterances", utts}};
}

json World::static_geometry() const {
    auto poly = [](const Polygon& p) {
        json a = json::array();
        for (auto v : p) a.push_back({v.x, v.y});
        return a;
    };
    json obstacles = json::array();
    for (const auto& o : spec_->world.obstacles) obstacles.push_back(poly(o));
    json locations = json::array();
    for (std::size_t e = 0; e < spec_->entities.size(); ++e) {
        if (agent_of_entity_[e]) continue;
        const auto& ent = spec_->entities[e];
        json j{{"id", ent.id}, {"type", ent.type}};
        if (ent.region.size() >= 3) j["region"] = poly(ent.region);
        else if (ent.position) j["position"] = {ent.position->x, ent.position->y};
        else continue;
        locations.push_back(std::move(j));
    }
    return {{"bounds", {{spec_->world.min.x, spec_->world.min.y}, {spec_->world.max.x, spec_->world.max.y}}},
            {"obstacles", obstacles},
            {"locations", locations}};
}

}  // namespace spa
