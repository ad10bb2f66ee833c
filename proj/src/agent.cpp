#include "spa/world.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace spa {

namespace {

using Kind = UtteranceMeaning::Kind;

bool same_meaning(const UtteranceMeaning& a, const UtteranceMeaning& b) {
    if (a.kind == Kind::OutOfDomain && a.intent != b.intent) return false;
    return a.kind == b.kind && a.literal == b.literal && a.query == b.query && a.assignment == b.assignment;
}

// Moves along the waypoints; true once the last one is reached.
bool follow(Agent& a, double speed, double dt) {
    double budget = speed * dt;
    const Vec2 start = a.position;
    while (budget > 1e-12 && a.waypoint < a.waypoints.size()) {
        const Vec2 w = a.waypoints[a.waypoint];
        const double d = distance(a.position, w);
        if (d <= budget) {
            a.position = w;
            budget -= d;
            ++a.waypoint;
        } else {
            a.position = a.position + (w - a.position) * (budget / d);
            budget = 0;
        }
    }
    a.velocity = (a.position - start) * (1.0 / dt);
    return a.waypoint >= a.waypoints.size();
}

std::optional<std::vector<Vec2>> route(const NavGrid& grid, Vec2 from, const Entity& target, std::optional<Vec2> live) {
    if (target.region.size() >= 3) return grid.path_to_region(from, target.region);
    if (live) return grid.path(from, *live);
    return std::nullopt;
}

enum class StepState { Running, Done, Failed };

}  // namespace

// ---------------------------------------------------------------------------
// Hearing

void World::hear(Agent& a, const UtteranceEvent& ev) {
    if (a.avatar) {
        a.inbox.push_back(ev);
        return;
    }
    if (!config_.nli || !parser_) return;
    const ParsedUtterance parsed = parser_->parse(ev.text);
    const UtteranceMeaning meaning = interpret(parsed, *spec_, *lexicon_);
    if (ev.meaning ? !same_meaning(*ev.meaning, meaning) : (ev.from_avatar && meaning.kind == Kind::Unintelligible))
        ++a.metrics.parser_failures;

    std::optional<std::string> addressee = ev.addressee;
    if (meaning.addressee)
        if (auto id = names_.agent_for(*meaning.addressee)) addressee = *id;
    const bool to_me = addressee && *addressee == a.id;
    const bool to_other = addressee && *addressee != a.id;

    // Nearest listener answers small talk from a human that names nobody.
    auto nearest_to_speaker = [&] {
        if (!ev.from_avatar || addressee) return false;
        const double mine = distance(a.position, ev.position);
        for (const auto& o : agents_) {
            if (o.avatar || !o.present || o.id == a.id || !audible(ev.position, o.position)) continue;
            const double d = distance(o.position, ev.position);
            if (d < mine || (d == mine && o.id < a.id)) return false;
        }
        return true;
    };

    if (meaning.kind == Kind::Statement) {
        const ChangeReport change = absorb(meaning, *a.kb);
        if (change.changed()) {
            a.beliefs_changed = true;
            if (meaning.literal) a.changed_schemas.insert(meaning.literal->schema);
            for (const auto& r : change.retracted) a.changed_schemas.insert(r.schema);
            if (to_other) ++a.metrics.facts_overheard;
            if (config_.affirm && ev.in_reply_to) affirm(a, ev);
        }
        return;
    }
    if (to_other) return;

    const bool question = meaning.kind == Kind::InfoQuestion || meaning.kind == Kind::ConfirmQuestion ||
                          meaning.kind == Kind::AttrQuestion;
    Reply reply = respond(meaning, *a.kb, *lexicon_, a.rng);
    const bool informative = !reply.stated.empty() || !reply.stated_attributes.empty();
    if (!question && !ev.from_avatar) return;  // small talk between agents goes nowhere
    if (!to_me && !nearest_to_speaker() && !(question && informative)) return;

    const bool aligned = reply.texts.size() == reply.stated.size() + reply.stated_attributes.size();
    for (std::size_t i = 0; i < reply.texts.size(); ++i) {
        UtteranceEvent out;
        out.speaker = a.id;
        out.text = reply.texts[i];
        out.position = a.position;
        out.addressee = ev.speaker;
        out.in_reply_to = ev.id;
        if (aligned) {
            UtteranceMeaning m;
            m.kind = Kind::Statement;
            if (i < reply.stated.size()) m.literal = reply.stated[i];
            else m.assignment = reply.stated_attributes[i - reply.stated.size()];
            out.meaning = m;
            ++a.metrics.statements;
        }
        emit(std::move(out));
    }
    if (question && informative) answered_.insert(ev.id);
}

void World::affirm(Agent& a, const UtteranceEvent& answer) {
    auto it = a.open_questions.find(*answer.in_reply_to);
    if (it == a.open_questions.end()) return;
    const bool fresh = time() - it->second <= config_.cooldown;
    a.open_questions.erase(it);
    if (!fresh) return;
    std::vector<std::string> words;
    if (auto s = lexicon_->samples.find(Intent::Affirmation); s != lexicon_->samples.end())
        for (const auto& w : s->second)
            if (w.find(' ') == std::string::npos) words.push_back(w);
    if (words.empty()) return;
    std::string text = words[a.rng() % words.size()];
    text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    UtteranceEvent ev;
    ev.speaker = a.id;
    ev.text = text + ".";
    ev.position = a.position;
    ev.addressee = answer.speaker;
    ev.in_reply_to = answer.id;
    UtteranceMeaning m;
    m.kind = Kind::OutOfDomain;
    m.intent = Intent::Affirmation;
    ev.meaning = m;
    emit(std::move(ev));
}

// ---------------------------------------------------------------------------
// Planning

void World::plan(Agent& a) {
    if (a.avatar) return;
    const auto& actions = spec_->actions;
    auto record = [&](const PlanTiming& t) {
        if (tracing_) trace_.push_back(trace_record(a.id, time(), t, a.planner, *spec_));
    };
    auto reset_execution = [&] {
        a.step = 0;
        a.step_started = false;
        a.mode = Agent::Mode::Idle;
        a.waypoints.clear();
        a.waypoint = 0;
    };

    const bool satisfied = std::all_of(a.desires.begin(), a.desires.end(),
                                       [&](const Literal& d) { return a.kb->truth(d) == Truth::True; });
    if (satisfied) {
        if (!a.metrics.satisfied_at) a.metrics.satisfied_at = time();
        if (a.planner.has_plan()) a.planner.clear();
        a.needs_plan = false;
        a.beliefs_changed = false;
        a.changed_schemas.clear();
        reset_execution();
        return;
    }
    if (a.needs_plan || !a.planner.has_plan()) {
        if (time() + 1e-9 < a.retry_at) return;
        a.needs_plan = false;
        a.beliefs_changed = false;
        a.changed_schemas.clear();
        reset_execution();
        auto r = a.planner.plan(*a.kb, a.desires, actions, config_.planner);
        if (auto* t = std::get_if<PlanTiming>(&r)) {
            const double us = t->stage1_us + t->stage2_us;
            if (a.metrics.plans == 0) a.metrics.initial_plan_us = us;
            ++a.metrics.plans;
            a.metrics.plan_us += us;
            record(*t);
        } else {
            if (a.metrics.plans == 0) ++a.metrics.plans;
            a.retry_at = time() + config_.planner.retry_wait;
            a.needs_plan = true;
        }
        return;
    }
    if (!a.beliefs_changed) return;

    // Only beliefs the plan depends on trigger a replan.
    const auto& cur = a.planner.current();
    bool relevant = false;
    auto touches = [&](const Literal& l) { return a.changed_schemas.contains(l.schema); };
    for (const auto& r : cur.requirements) relevant = relevant || touches(r.literal);
    for (const auto& u : cur.uncertain) relevant = relevant || touches(u);
    for (const auto& s : cur.steps) {
        if (relevant) break;
        if (s.is_resolution) relevant = touches(s.resolution.grounded);
        else
            for (const auto& p : actions[s.action].preconditions) relevant = relevant || touches(p);
    }
    a.beliefs_changed = false;
    a.changed_schemas.clear();
    if (!relevant) return;

    auto out = a.planner.advance({PlanEvent::Kind::NewBelief, std::nullopt}, *a.kb, actions, config_.planner, time());
    ++a.metrics.replans;
    a.metrics.replan_us += out.timing.stage1_us + out.timing.stage2_us;
    record(out.timing);
    switch (out.directive) {
        case Directive::Continue: break;
        case Directive::Rebind:
        case Directive::Backtrack: reset_execution(); break;
        case Directive::FailAndWait:
            reset_execution();
            a.needs_plan = true;
            a.retry_at = a.planner.retry_wait_until();
            break;
    }
}

// ---------------------------------------------------------------------------
// Execution

namespace {

struct Exec {
    World& w;
    Agent& a;

    const DomainSpec& spec() const { return w.spec(); }
    const SimConfig& cfg() const { return w.config(); }

    Literal ground(const Literal& l, const std::vector<EntityId>& args) const {
        return substitute(l, Binding(args.begin(), args.end()));
    }

    StepState resolution(const PlanStep& s) {
        const Literal& target = s.resolution.grounded;
        if (a.kb->truth(target) != Truth::Unknown) return StepState::Done;
        switch (a.mode) {
            case Agent::Mode::Ask:
                a.timer -= cfg().dt;
                if (a.timer > 0) return StepState::Running;
                a.mode = Agent::Mode::Idle;
                break;
            case Agent::Mode::Explore:
                if (a.explore_target && a.perceived.contains(*a.explore_target)) {
                    a.mode = Agent::Mode::Idle;
                    break;
                }
                if (follow(a, cfg().max_speed, cfg().dt)) a.mode = Agent::Mode::Idle;
                return StepState::Running;
            default: break;
        }
        if (cfg().nli && ask(s.resolution)) return StepState::Running;
        return explore(s.resolution) ? StepState::Running : StepState::Failed;
    }

    bool ask(const ResolutionAction& r) {
        const std::string key = format_literal(spec(), r.grounded);
        std::vector<const Agent*> hearers;
        for (const auto& o : w.agents())
            if (o.id != a.id && o.present && w.audible(a.position, o.position) &&
                !a.kb->was_recently_asked(key, o.id, w.time(), cfg().cooldown))
                hearers.push_back(&o);
        if (hearers.empty()) return false;
        std::optional<std::string> name;
        if (hearers.size() == 1) name = hearers.front()->name;
        const Literal& q = r.target.grounded() ? r.grounded : r.target;
        std::string text;
        try {
            text = generate_question(w.lexicon(), spec(), q, name, a.rng);
        } catch (const NlgError&) {
            return false;
        }
        UtteranceEvent ev;
        ev.speaker = a.id;
        ev.text = std::move(text);
        ev.position = a.position;
        if (hearers.size() == 1) ev.addressee = hearers.front()->id;
        UtteranceMeaning m;
        m.kind = q.grounded() ? Kind::ConfirmQuestion : Kind::InfoQuestion;
        m.literal = q;
        ev.meaning = m;
        a.open_questions[w.emit(std::move(ev))] = w.time();
        for (const auto* h : hearers) a.kb->record_asked(key, h->id, w.time());
        ++a.metrics.questions;
        a.mode = Agent::Mode::Ask;
        a.timer = cfg().answer_timeout;
        a.last_action = "ask " + key;
        return true;
    }

    bool explore(const ResolutionAction& r) {
        const auto& sp = spec();
        std::vector<EntityId> pool;
        const auto& schema = sp.schema(r.target);
        for (std::size_t k = 0; k < r.target.args.size(); ++k) {
            if (r.target.args[k].is_hole())
                for (EntityId e : sp.candidates_for(schema.slots[k])) pool.push_back(e);
            else
                pool.push_back(r.target.args[k].entity_id());
        }
        std::optional<EntityId> best;
        double best_d = 0;
        auto consider = [&](EntityId e) {
            if (!w.is_location(e) || a.perceived.contains(e)) return;
            const double d = distance(a.position, *sp.entity(e).anchor());
            if (!best || d < best_d) best = e, best_d = d;
        };
        auto pick = [&] {
            for (EntityId e : pool) consider(e);
            if (!best)
                for (std::size_t e = 0; e < sp.entities.size(); ++e) consider(static_cast<EntityId>(e));
        };
        pick();
        if (!best && !a.perceived.empty()) {
            a.perceived.clear();  // everything seen once; sweep again
            pick();
        }
        if (!best) return false;
        auto path = route(w.grid(), a.position, sp.entity(*best), sp.entity(*best).anchor());
        if (!path) {
            a.perceived.insert(*best);  // unreachable; don't pick it again
            return explore(r);
        }
        a.waypoints = std::move(*path);
        a.waypoint = 0;
        a.explore_target = best;
        a.mode = Agent::Mode::Explore;
        a.last_action = "explore " + sp.entity(*best).id;
        return true;
    }

    bool known_true(const Literal& l) const { return a.kb->truth(l) == Truth::True; }

    bool set_route(EntityId target) {
        auto path = route(w.grid(), a.position, spec().entity(target), w.anchor(target));
        if (!path) return false;
        a.waypoints = std::move(*path);
        a.waypoint = 0;
        return true;
    }

    StepState action(const PlanStep& s) {
        const auto& act = spec().actions[s.action];
        if (!a.step_started) {
            if (!act.effects.empty() &&
                std::all_of(act.effects.begin(), act.effects.end(),
                            [&](const Literal& e) { return known_true(ground(e, s.args)); }))
                return StepState::Done;
            for (const auto& p : act.preconditions)
                if (a.kb->truth(ground(p, s.args)) == Truth::False) return StepState::Failed;
            a.step_started = true;
            a.phase = 0;
            a.last_action = describe(spec(), spec().actions, s);
            switch (act.controller) {
                case Controller::MoveTo:
                    a.mode = Agent::Mode::Move;
                    if (act.via_param) {
                        if (!set_route(s.args[*act.via_param])) return StepState::Failed;
                    } else {
                        a.phase = 1;
                        if (!act.target_param || !set_route(s.args[*act.target_param])) return StepState::Failed;
                    }
                    break;
                case Controller::Interact:
                    a.mode = Agent::Mode::Move;
                    if (act.target_param && !set_route(s.args[*act.target_param])) return StepState::Failed;
                    break;
                case Controller::Utter: a.mode = Agent::Mode::Utter; break;
                case Controller::Wait:
                    a.mode = Agent::Mode::Wait;
                    a.timer = act.duration_hint;
                    break;
            }
        }
        switch (act.controller) {
            case Controller::MoveTo:
                if (!follow(a, cfg().max_speed, cfg().dt)) return StepState::Running;
                if (a.phase == 0) {
                    // Route the second leg only once the via point is reached.
                    a.phase = 1;
                    if (!act.target_param || !set_route(s.args[*act.target_param])) return StepState::Failed;
                    return StepState::Running;
                }
                break;
            case Controller::Interact: {
                if (act.target_param) {
                    const EntityId t = s.args[*act.target_param];
                    const auto& ent = spec().entity(t);
                    const bool close = ent.region.size() >= 3
                                           ? point_in_polygon(a.position, ent.region)
                                           : distance(a.position, *w.anchor(t)) <= cfg().interact_range;
                    if (!close) {
                        if (follow(a, cfg().max_speed, cfg().dt)) return set_route(t) ? StepState::Running : StepState::Failed;
                        return StepState::Running;
                    }
                }
                break;
            }
            case Controller::Utter:
                if (!utter(act, s)) return StepState::Running;
                return StepState::Done;
            case Controller::Wait:
                a.timer -= cfg().dt;
                if (a.timer > 1e-9) return StepState::Running;
                break;
        }
        w.apply_effects(a, act, s.args);
        return StepState::Done;
    }

    // Speaks whenever someone in range still lacks the effect; every such
    // hearer receives it. Done once the target has it.
    bool utter(const ActionSchema& act, const PlanStep& s) {
        const auto& sp = spec();
        if (!act.target_param) {
            if (cfg().nli) speak(act, s, std::nullopt);
            w.apply_effects(a, act, s.args);
            return true;
        }
        const std::size_t tp = *act.target_param;
        const EntityId target = s.args[tp];
        auto args_for = [&](EntityId who) {
            std::vector<EntityId> args = s.args;
            args[tp] = who;
            return args;
        };
        auto has_effects = [&](EntityId who) {
            const Agent* other = nullptr;
            for (const auto& o : w.agents())
                if (o.entity == who) other = &o;
            for (const auto& e : act.effects) {
                const Literal l = ground(e, args_for(who));
                if (other ? !w.holds(*other, l) : !known_true(l)) return false;
            }
            return true;
        };
        if (!cfg().nli) {
            w.apply_effects(a, act, s.args);
            return true;
        }
        std::vector<EntityId> lacking;
        for (const auto& o : w.agents())
            if (o.id != a.id && !o.avatar && w.audible(a.position, o.position) &&
                sp.type_allowed(o.entity, act.params[tp]) && !has_effects(o.entity))
                lacking.push_back(o.entity);
        if (lacking.empty()) {
            a.mode = Agent::Mode::Utter;
            return has_effects(target);
        }
        const bool target_here = std::find(lacking.begin(), lacking.end(), target) != lacking.end();
        speak(act, s, target_here ? target : lacking.front());
        for (EntityId who : lacking) w.apply_effects(a, act, args_for(who));
        return has_effects(target);
    }

    void speak(const ActionSchema& act, const PlanStep& s, std::optional<EntityId> addressee) {
        const auto& sp = spec();
        Binding b(s.args.begin(), s.args.end());
        for (const auto& u : act.utterances) {
            const Literal lit = substitute(u, b);
            UtteranceEvent ev;
            ev.speaker = a.id;
            try {
                ev.text = generate_statement(w.lexicon(), sp, lit, a.rng);
            } catch (const NlgError&) {
                continue;
            }
            ev.position = a.position;
            if (addressee) ev.addressee = sp.entity(*addressee).id;
            UtteranceMeaning m;
            m.kind = Kind::Statement;
            m.literal = lit;
            ev.meaning = m;
            w.emit(std::move(ev));
            ++a.metrics.statements;
        }
    }
};

}  // namespace

void World::execute(Agent& a) {
    a.velocity = {};
    if (a.avatar) {
        if (a.mode == Agent::Mode::Move && follow(a, config_.max_speed, config_.dt)) {
            a.mode = Agent::Mode::Idle;
            a.last_action.clear();
        }
        return;
    }
    if (!a.planner.has_plan()) {
        a.last_action = a.metrics.satisfied_at ? "done" : "idle";
        return;
    }
    const auto& actions = spec_->actions;
    Exec ex{*this, a};
    for (int guard = 0; guard < 16; ++guard) {
        const auto& steps = a.planner.current().steps;
        if (a.step >= steps.size()) {
            // Plan ran out without the desires being known; start over.
            a.planner.clear();
            a.needs_plan = true;
            a.mode = Agent::Mode::Idle;
            return;
        }
        const PlanStep step = steps[a.step];
        const StepState st = step.is_resolution ? ex.resolution(step) : ex.action(step);
        if (st == StepState::Running) return;
        if (st == StepState::Done) {
            a.planner.advance({PlanEvent::Kind::StepOk, std::nullopt}, *a.kb, actions, config_.planner, time());
            ++a.step;
            a.step_started = false;
            a.mode = Agent::Mode::Idle;
            a.waypoints.clear();
            continue;
        }
        auto out = a.planner.advance({PlanEvent::Kind::StepFailed, std::nullopt}, *a.kb, actions, config_.planner,
                                     time());
        ++a.metrics.replans;
        a.metrics.replan_us += out.timing.stage1_us + out.timing.stage2_us;
        if (tracing_) trace_.push_back(trace_record(a.id, time(), out.timing, a.planner, *spec_));
        a.step = 0;
        a.step_started = false;
        a.mode = Agent::Mode::Idle;
        a.waypoints.clear();
        if (out.directive == Directive::FailAndWait) {
            a.needs_plan = true;
            a.retry_at = a.planner.retry_wait_until();
        }
        return;
    }
}

}  // namespace spa
