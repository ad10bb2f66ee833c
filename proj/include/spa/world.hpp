#pragma once
//
// Deterministic discrete-time world: disc agents in a 2D plane with polygonal
// obstacles, sensing, line-of-sight hearing, an utterance bus, controllers,
// and the per-tick Sense-Plan-Ask loop.
//

#include "spa/dialogue.hpp"
#include "spa/pathfinding.hpp"
#include "spa/planner.hpp"

#include <json.hpp>

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace spa {

struct SimConfig {
    double dt = 0.1;
    double sense_radius = 5.0;
    double hearing_range = 10.0;
    double max_speed = 1.4;
    double interact_range = 1.0;
    double cooldown = 30.0;       // repeat-question cooldown, simulated seconds
    double answer_timeout = 1.0;  // how long an asker waits for a reply
    bool affirm = true;           // acknowledge answers to one's own questions
    bool nli = true;              // natural-language interaction enabled
    std::uint64_t seed = 0;
    PlannerConfig planner;

    /// Defaults overridden by the domain spec's `config` section.
    static SimConfig from_spec(const DomainSpec& spec);
};

struct UtteranceEvent {
    std::uint64_t id = 0;
    std::string speaker;  // entity id
    std::string text;
    Vec2 position;
    std::uint64_t tick = 0;
    std::optional<std::string> addressee;   // entity id the speaker meant, if any
    std::optional<UtteranceMeaning> meaning;  // what an agent speaker encoded; absent for avatars
    std::optional<std::uint64_t> in_reply_to;
    bool from_avatar = false;
};

struct AgentMetrics {
    double initial_plan_us = 0;
    std::size_t plans = 0;
    double plan_us = 0;  // all full plans
    std::size_t replans = 0;
    double replan_us = 0;
    std::size_t statements = 0;
    std::size_t questions = 0;
    std::size_t facts_overheard = 0;
    std::size_t parser_failures = 0;
    std::optional<double> satisfied_at;
};

struct Agent {
    std::string id;
    EntityId entity = kUnbound;
    std::string name;  // phonetic
    bool avatar = false;
    bool present = true;  // avatar slots are absent until a client claims them
    Vec2 position;
    Vec2 velocity;
    double radius = 0.25;

    std::unique_ptr<BeliefState> kb;  // null for avatars
    std::set<Atom> own_facts;         // egocentric ground truth
    std::vector<Literal> desires;
    PlannerState planner;
    NlgRng rng;
    AgentMetrics metrics;

    // Execution state.
    enum class Mode { Idle, Move, Ask, Explore, Utter, Wait };
    Mode mode = Mode::Idle;
    std::size_t step = 0;           // index into planner.current().steps
    bool step_started = false;
    std::vector<Vec2> waypoints;
    std::size_t waypoint = 0;
    double timer = 0.0;
    std::optional<EntityId> explore_target;
    bool needs_plan = true;
    double retry_at = 0.0;
    int phase = 0;  // MoveTo: 0 heading for the via entity, 1 for the target
    std::set<std::uint16_t> changed_schemas;  // since the planner last looked
    bool beliefs_changed = false;
    std::set<EntityId> perceived;   // spatial entities sensed at least once
    std::map<std::uint64_t, double> open_questions;  // own question id -> time asked
    std::string last_action;        // for snapshots
    std::vector<UtteranceEvent> inbox;  // avatars: utterances heard this tick
};

class World {
public:
    World(std::shared_ptr<const DomainSpec> spec, std::shared_ptr<const Lexicon> lexicon, SimConfig config,
          std::shared_ptr<const Parser> parser = nullptr);

    void tick();
    /// Runs until every agent desire holds or max_ticks; returns solved.
    bool run(std::uint64_t max_ticks);

    double time() const { return double(tick_) * config_.dt; }
    std::uint64_t tick_index() const { return tick_; }
    bool solved() const;
    std::optional<double> solved_at() const { return solved_at_; }

    const DomainSpec& spec() const { return *spec_; }
    const Lexicon& lexicon() const { return *lexicon_; }
    const Parser& parser() const { return *parser_; }
    const SimConfig& config() const { return config_; }
    const NavGrid& grid() const { return grid_; }
    std::vector<Agent>& agents() { return agents_; }
    const std::vector<Agent>& agents() const { return agents_; }
    Agent* find_agent(std::string_view id);
    const PhoneticNameRegistry& names() const { return names_; }

    /// Ground truth, closed world: absent means false.
    bool holds(const Agent& agent, const Literal& lit) const;
    const BeliefState& truth() const { return truth_; }

    // Avatar commands, applied by the caller between ticks.
    std::optional<std::string> avatar_move_to(const std::string& avatar, Vec2 target);
    std::optional<std::string> avatar_say(const std::string& avatar, const std::string& text);
    /// Brings an avatar slot into the world or takes it out.
    std::optional<std::string> set_avatar_present(const std::string& avatar, bool present);

    /// Everything delivered during the last tick.
    const std::vector<UtteranceEvent>& last_utterances() const { return spoken_last_; }
    const std::deque<UtteranceEvent>& recent_utterances() const { return recent_; }
    std::size_t questions_answered() const { return answered_.size(); }

    nlohmann::json snapshot() const;
    nlohmann::json static_geometry() const;
    std::vector<nlohmann::json>& trace() { return trace_; }
    void set_tracing(bool on) { tracing_ = on; }

    // Used by agent behaviour.
    bool audible(Vec2 from, Vec2 to) const;
    bool visible(Vec2 from, Vec2 to) const;
    std::uint64_t emit(UtteranceEvent ev);
    void apply_effects(Agent& agent, const ActionSchema& action, const std::vector<EntityId>& args);
    std::optional<Vec2> anchor(EntityId e) const;  // static entity position or live agent position
    /// Places worth exploring: entities whose type some action moves to or through.
    bool is_location(EntityId e) const { return location_[static_cast<std::size_t>(e)]; }

private:
    void sense(Agent& a);
    void hear(Agent& a, const UtteranceEvent& ev);
    void affirm(Agent& a, const UtteranceEvent& answer);
    void plan(Agent& a);
    void execute(Agent& a);

    std::shared_ptr<const DomainSpec> spec_;
    std::shared_ptr<const Lexicon> lexicon_;
    std::shared_ptr<const Parser> parser_;
    SimConfig config_;
    NavGrid grid_;
    BeliefState truth_;
    std::vector<Agent> agents_;
    std::vector<std::size_t> agent_of_entity_;
    std::vector<bool> location_;  // entity -> index+1, 0 when not an agent
    PhoneticNameRegistry names_;
    std::vector<UtteranceEvent> bus_;          // emitted this tick
    std::vector<UtteranceEvent> spoken_last_;  // delivered this tick
    std::deque<UtteranceEvent> recent_;
    std::set<std::uint64_t> answered_;
    std::uint64_t next_utterance_ = 1;
    std::uint64_t tick_ = 0;
    std::optional<double> solved_at_;
    bool tracing_ = false;
    std::vector<nlohmann::json> trace_;

    friend struct AgentBehaviour;
};

}  // namespace spa
