#pragma once
//
// Per-agent belief store with three-valued truth. Absence of a literal means
// UNKNOWN, never false.
//

#include "spa/domain.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace spa {

enum class Truth { True, False, Unknown };

std::string_view to_string(Truth t);

/// Predicate instance without polarity; the key under which beliefs are stored.
struct Atom {
    std::uint16_t schema = 0;
    std::vector<Term> args;
    auto operator<=>(const Atom&) const = default;
};

inline Atom atom_of(const Literal& l) { return {l.schema, l.args}; }

struct ChangeReport {
    bool added = false;
    std::vector<Literal> retracted;
    bool changed() const { return added || !retracted.empty(); }
};

struct QueryMatch {
    Binding binding;  // indexed by hole number
    bool positive = true;
};

class BeliefState {
public:
    explicit BeliefState(std::shared_ptr<const DomainSpec> spec);

    const DomainSpec& spec() const { return *spec_; }
    const std::shared_ptr<const DomainSpec>& spec_ptr() const { return spec_; }

    Truth truth(const Literal& lit) const;
    /// Stored polarity of an atom, if any.
    std::optional<bool> lookup(const Atom& atom) const;

    /// Adds `lit`, retracting its direct negation and, for schemas with a
    /// functional slot, any positive literal that differs only in that slot.
    ChangeReport assert_belief(const Literal& lit);
    /// Forgets the atom entirely (back to UNKNOWN).
    bool forget(const Atom& atom);

    /// Bindings of the pattern's holes whose instantiation is TRUE (positive
    /// pattern) or FALSE (negative pattern). Ordered by entity id.
    std::vector<QueryMatch> query(const Literal& pattern) const;

    /// Positive literals sharing every non-functional argument with `lit`.
    std::vector<Literal> functional_conflicts(const Literal& lit) const;

    std::optional<AttributeValue> query_attribute(EntityId entity, std::string_view attr) const;
    bool set_attribute(EntityId entity, const std::string& attr, AttributeValue value);

    void record_asked(const std::string& question_key, const std::string& addressee, double now);
    bool was_recently_asked(const std::string& question_key, const std::string& addressee, double now,
                            double cooldown) const;

    std::size_t size() const { return facts_.size(); }
    const std::map<Atom, bool>& facts() const { return facts_; }
    const std::map<std::pair<EntityId, std::string>, AttributeValue>& attributes() const {
        return attributes_;
    }
    std::vector<Literal> literals() const;

    nlohmann::json snapshot() const;
    static BeliefState from_snapshot(std::shared_ptr<const DomainSpec> spec, const nlohmann::json& j);

private:
    std::shared_ptr<const DomainSpec> spec_;
    std::map<Atom, bool> facts_;
    std::map<std::pair<EntityId, std::string>, AttributeValue> attributes_;
    std::map<std::pair<std::string, std::string>, double> asked_log_;
};

/// Storage backend seam: something that can persist and restore snapshots.
/// The in-memory store above is the only implementation shipped.
class BeliefStoreAdapter {
public:
    virtual ~BeliefStoreAdapter() = default;
    virtual void save(const std::string& agent_id, const nlohmann::json& snapshot) = 0;
    virtual std::optional<nlohmann::json> load(const std::string& agent_id) = 0;
};

/// Writes one `<agent_id>.json` snapshot per agent under a directory.
class FileSnapshotStore final : public BeliefStoreAdapter {
public:
    explicit FileSnapshotStore(std::string directory) : dir_(std::move(directory)) {}
    void save(const std::string& agent_id, const nlohmann::json& snapshot) override;
    std::optional<nlohmann::json> load(const std::string& agent_id) override;

private:
    std::string dir_;
};

}  // namespace spa
