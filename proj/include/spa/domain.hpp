#pragma once
//
// Problem-domain formalism: entity types, entities, predicate and action
// schemas, literals and desires, plus the declarative spec file loader.
//
// A DomainSpec is immutable once loaded and may be shared read-only between
// any number of agents.
//

#include "spa/geometry.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace spa {

using EntityId = std::int32_t;
inline constexpr EntityId kUnbound = -1;

enum class ValueKind { String, Number, EntityRef };
using AttributeValue = std::variant<std::string, double>;

std::string to_string(const AttributeValue& v);

struct AttributeDef {
    std::string name;
    ValueKind kind = ValueKind::String;
    bool operator==(const AttributeDef&) const = default;
};

struct EntityType {
    std::string name;
    std::vector<AttributeDef> attributes;

    const AttributeDef* find_attribute(std::string_view attr) const;
    bool operator==(const EntityType&) const = default;
};

struct Entity {
    std::string id;
    std::string type;
    std::map<std::string, AttributeValue> attributes;
    std::optional<Vec2> position;
    Polygon region;

    /// Position of a point entity, or the centroid of a region entity.
    std::optional<Vec2> anchor() const;
    bool operator==(const Entity&) const = default;
};

enum class PredicateKind { Knowledge, Fluent };

struct Slot {
    std::string name;
    std::vector<std::string> types;  // empty: any type
    bool operator==(const Slot&) const = default;
};

struct PredicateSchema {
    std::string name;
    std::vector<Slot> slots;
    PredicateKind kind = PredicateKind::Knowledge;
    std::optional<std::size_t> functional_slot;
    bool observable = false;  // sensed from the first argument's surroundings
    bool egocentric = false;  // holds per agent ("I have", "I am at")

    std::size_t arity() const { return slots.size(); }
    bool operator==(const PredicateSchema&) const = default;
};

/// A literal argument: an entity or a named hole. Holes are numbered; in an
/// action schema hole k is parameter k.
class Term {
public:
    constexpr Term() = default;
    static constexpr Term entity(EntityId e) { return Term(e); }
    static constexpr Term hole(int k) { return Term(-1 - k); }

    constexpr bool is_hole() const { return raw_ < 0; }
    constexpr EntityId entity_id() const { return raw_; }
    constexpr int hole_index() const { return -1 - raw_; }
    constexpr std::int32_t raw() const { return raw_; }

    auto operator<=>(const Term&) const = default;

private:
    constexpr explicit Term(std::int32_t raw) : raw_(raw) {}
    std::int32_t raw_ = 0;
};

struct Literal {
    std::uint16_t schema = 0;
    bool positive = true;
    std::vector<Term> args;

    bool grounded() const;
    Literal negated() const;
    auto operator<=>(const Literal&) const = default;
};

/// Partial assignment of holes: binding[k] is the entity for hole k.
using Binding = std::vector<EntityId>;

enum class Controller { MoveTo, Utter, Interact, Wait };

std::string_view to_string(Controller c);

struct ActionSchema {
    std::string name;
    std::vector<Slot> params;
    std::vector<Literal> preconditions;
    std::vector<Literal> effects;
    Controller controller = Controller::Wait;
    std::optional<std::size_t> target_param;  // MOVE_TO / INTERACT / UTTER target
    std::optional<std::size_t> via_param;     // MOVE_TO passes through this entity first
    std::vector<Literal> utterances;          // UTTER: statements spoken
    double duration_hint = 0.0;

    bool operator==(const ActionSchema&) const = default;
};

struct AttributeFact {
    EntityId entity = kUnbound;
    std::string attribute;
    AttributeValue value;
    bool operator==(const AttributeFact&) const = default;
};

struct AgentSpec {
    EntityId entity = kUnbound;
    bool avatar = false;
    double radius = 0.25;
    std::vector<Literal> beliefs;
    std::vector<AttributeFact> attribute_beliefs;
    std::vector<Literal> desires;
    bool operator==(const AgentSpec&) const = default;
};

struct WorldGeometry {
    Vec2 min{0, 0};
    Vec2 max{50, 50};
    std::vector<Polygon> obstacles;
    std::vector<Literal> facts;  // ground truth beyond per-agent egocentric state
    bool operator==(const WorldGeometry&) const = default;
};

struct DomainSpec {
    std::string name;
    std::vector<EntityType> entity_types;
    std::vector<Entity> entities;  // sorted by id; EntityId indexes this vector
    std::vector<PredicateSchema> predicates;
    std::vector<ActionSchema> actions;
    std::vector<AgentSpec> agents;
    WorldGeometry world;
    std::map<std::string, double> config;
    std::string lexicon_path;

    bool operator==(const DomainSpec& o) const;

    // Lookup (valid after build_index()).
    void build_index();
    std::optional<EntityId> find_entity(std::string_view id) const;
    std::optional<std::size_t> find_predicate(std::string_view name) const;
    std::optional<std::size_t> find_action(std::string_view name) const;
    const EntityType* find_type(std::string_view name) const;
    const PredicateSchema& schema(const Literal& lit) const { return predicates[lit.schema]; }
    const Entity& entity(EntityId e) const { return entities[static_cast<std::size_t>(e)]; }
    bool type_allowed(EntityId e, const Slot& slot) const;
    /// Entities admissible for a slot, ascending by id.
    const std::vector<EntityId>& candidates_for(const Slot& slot) const;
    double config_or(std::string_view key, double fallback) const;

private:
    std::unordered_map<std::string, EntityId> entity_index_;
    std::unordered_map<std::string, std::size_t> predicate_index_;
    std::unordered_map<std::string, std::size_t> action_index_;
    mutable std::map<std::vector<std::string>, std::vector<EntityId>> candidate_cache_;
};

/// Error raised while loading or validating a domain. Carries a source
/// position when the failure is syntactic.
class SpecError : public std::runtime_error {
public:
    explicit SpecError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : std::runtime_error(what), line_(line), column_(column) {}
    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

DomainSpec parse_domain_spec(std::string_view text);
DomainSpec load_domain_spec(const std::string& path);
std::string serialize_domain_spec(const DomainSpec& spec);

/// Type check of a (possibly partial) binding keyed by slot name.
std::vector<std::string> validate_binding(const DomainSpec& spec, std::span<const Slot> slots,
                                          const std::map<std::string, EntityId>& binding);
std::vector<std::string> validate_binding(const DomainSpec& spec, const PredicateSchema& schema,
                                          const std::map<std::string, EntityId>& binding);
std::vector<std::string> validate_binding(const DomainSpec& spec, const ActionSchema& schema,
                                          const std::map<std::string, EntityId>& binding);

/// Replace bound holes; unbound holes stay. Throws SpecError when a bound
/// entity violates the predicate slot's type constraint.
Literal instantiate(const DomainSpec& spec, const Literal& templ, const Binding& binding);
/// Same, without the type check (hot planner paths that already filtered).
Literal substitute(const Literal& templ, const Binding& binding);

/// Parses "Name(a, b)", "!Name(a)", "not Name(a)". Arguments resolve against
/// `params` first (becoming holes), then entity ids; "?" and "?x" are fresh holes.
Literal parse_literal(const DomainSpec& spec, std::string_view text,
                      std::span<const Slot> params = {});
std::string format_literal(const DomainSpec& spec, const Literal& lit,
                           std::span<const Slot> params = {});

/// Verifies arity and slot types of every bound argument.
void check_literal(const DomainSpec& spec, const Literal& lit, std::string_view context);

}  // namespace spa
