#include "spa/kb.hpp"

#include <filesystem>
#include <fstream>

namespace spa {

using nlohmann::json;

std::string_view to_string(Truth t) {
    switch (t) {
        case Truth::True: return "true";
        case Truth::False: return "false";
        case Truth::Unknown: return "unknown";
    }
    return "unknown";
}

BeliefState::BeliefState(std::shared_ptr<const DomainSpec> spec) : spec_(std::move(spec)) {}

std::optional<bool> BeliefState::lookup(const Atom& atom) const {
    auto it = facts_.find(atom);
    if (it == facts_.end()) return std::nullopt;
    return it->second;
}

Truth BeliefState::truth(const Literal& lit) const {
    auto it = facts_.find(atom_of(lit));
    if (it != facts_.end()) return it->second == lit.positive ? Truth::True : Truth::False;
    // A functional slot holds one value: knowing another value settles this one.
    const auto& schema = spec_->predicates[lit.schema];
    if (schema.functional_slot && lit.grounded()) {
        Literal pos = lit;
        pos.positive = true;
        if (!functional_conflicts(pos).empty()) return lit.positive ? Truth::False : Truth::True;
    }
    return Truth::Unknown;
}

std::vector<Literal> BeliefState::functional_conflicts(const Literal& lit) const {
    std::vector<Literal> out;
    const auto& schema = spec_->predicates.at(lit.schema);
    if (!schema.functional_slot || !lit.positive) return out;
    const std::size_t f = *schema.functional_slot;
    Atom lo{lit.schema, {}};
    if (f != 0 && !lit.args.empty()) lo.args.push_back(lit.args.front());
    for (auto it = facts_.lower_bound(lo); it != facts_.end() && it->first.schema == lit.schema; ++it) {
        const auto& args = it->first.args;
        if (!lo.args.empty() && args.front() != lo.args.front()) break;
        if (!it->second) continue;
        bool same = true;
        for (std::size_t i = 0; i < args.size() && same; ++i)
            if (i != f && args[i] != lit.args[i]) same = false;
        if (same && args[f] != lit.args[f]) out.push_back(Literal{lit.schema, true, args});
    }
    return out;
}

ChangeReport BeliefState::assert_belief(const Literal& lit) {
    ChangeReport report;
    const Atom atom = atom_of(lit);
    auto it = facts_.find(atom);
    if (it != facts_.end() && it->second == lit.positive) return report;
    if (it != facts_.end()) {
        report.retracted.push_back(lit.negated());
        facts_.erase(it);
    }
    for (const auto& conflict : functional_conflicts(lit)) {
        facts_.erase(atom_of(conflict));
        report.retracted.push_back(conflict);
    }
    facts_.emplace(atom, lit.positive);
    report.added = true;
    return report;
}

bool BeliefState::forget(const Atom& atom) { return facts_.erase(atom) > 0; }

std::vector<QueryMatch> BeliefState::query(const Literal& pattern) const {
    std::vector<QueryMatch> out;
    int holes = 0;
    for (auto t : pattern.args)
        if (t.is_hole()) holes = std::max(holes, t.hole_index() + 1);

    Atom lo{pattern.schema, {}};
    // Narrow to the (schema, first-arg) block when the first argument is bound.
    if (!pattern.args.empty() && !pattern.args.front().is_hole()) lo.args.push_back(pattern.args.front());
    for (auto it = facts_.lower_bound(lo); it != facts_.end() && it->first.schema == pattern.schema; ++it) {
        const auto& args = it->first.args;
        if (!lo.args.empty() && args.front() != lo.args.front()) break;
        if (it->second != pattern.positive) continue;
        Binding b(static_cast<std::size_t>(holes), kUnbound);
        bool match = true;
        for (std::size_t i = 0; i < args.size() && match; ++i) {
            const Term p = pattern.args[i];
            if (!p.is_hole()) {
                match = p == args[i];
                continue;
            }
            auto& slot = b[static_cast<std::size_t>(p.hole_index())];
            if (slot == kUnbound) slot = args[i].entity_id();
            else match = slot == args[i].entity_id();
        }
        if (match) out.push_back({std::move(b), pattern.positive});
    }
    return out;
}

std::optional<AttributeValue> BeliefState::query_attribute(EntityId entity, std::string_view attr) const {
    const auto* type = spec_->find_type(spec_->entity(entity).type);
    if (!type || !type->find_attribute(attr))
        throw SpecError("attribute '" + std::string(attr) + "' not declared on type '" +
                        spec_->entity(entity).type + "'");
    auto it = attributes_.find({entity, std::string(attr)});
    if (it == attributes_.end()) return std::nullopt;
    return it->second;
}

bool BeliefState::set_attribute(EntityId entity, const std::string& attr, AttributeValue value) {
    const auto* type = spec_->find_type(spec_->entity(entity).type);
    if (!type || !type->find_attribute(attr))
        throw SpecError("attribute '" + attr + "' not declared on type '" + spec_->entity(entity).type + "'");
    auto [it, inserted] = attributes_.try_emplace({entity, attr}, value);
    if (inserted) return true;
    if (it->second == value) return false;
    it->second = std::move(value);
    return true;
}

void BeliefState::record_asked(const std::string& key, const std::string& addressee, double now) {
    asked_log_[{key, addressee}] = now;
}

bool BeliefState::was_recently_asked(const std::string& key, const std::string& addressee, double now,
                                     double cooldown) const {
    auto it = asked_log_.find({key, addressee});
    return it != asked_log_.end() && now - it->second <= cooldown;
}

std::vector<Literal> BeliefState::literals() const {
    std::vector<Literal> out;
    out.reserve(facts_.size());
    for (const auto& [atom, pos] : facts_) out.push_back(Literal{atom.schema, pos, atom.args});
    return out;
}

json BeliefState::snapshot() const {
    json beliefs = json::array();
    for (const auto& l : literals()) beliefs.push_back(format_literal(*spec_, l));
    json attrs = json::array();
    for (const auto& [key, v] : attributes_) {
        json value = std::holds_alternative<double>(v) ? json(std::get<double>(v)) : json(std::get<std::string>(v));
        attrs.push_back({{"entity", spec_->entity(key.first).id}, {"attribute", key.second}, {"value", value}});
    }
    json asked = json::array();
    for (const auto& [key, t] : asked_log_)
        asked.push_back({{"question", key.first}, {"addressee", key.second}, {"time", t}});
    return {{"beliefs", beliefs}, {"attributes", attrs}, {"asked_log", asked}};
}

BeliefState BeliefState::from_snapshot(std::shared_ptr<const DomainSpec> spec, const json& j) {
    BeliefState kb(spec);
    for (const auto& b : j.at("beliefs")) kb.assert_belief(parse_literal(*spec, b.get<std::string>()));
    for (const auto& a : j.at("attributes")) {
        auto e = spec->find_entity(a.at("entity").get<std::string>());
        if (!e) throw SpecError("snapshot references unknown entity");
        const auto& v = a.at("value");
        kb.set_attribute(*e, a.at("attribute").get<std::string>(),
                         v.is_number() ? AttributeValue(v.get<double>()) : AttributeValue(v.get<std::string>()));
    }
    for (const auto& q : j.at("asked_log"))
        kb.record_asked(q.at("question").get<std::string>(), q.at("addressee").get<std::string>(),
                        q.at("time").get<double>());
    return kb;
}

void FileSnapshotStore::save(const std::string& agent_id, const json& snapshot) {
    std::filesystem::create_directories(dir_);
    std::ofstream out(std::filesystem::path(dir_) / (agent_id + ".json"));
    out << snapshot.dump(2) << '\n';
}

std::optional<json> FileSnapshotStore::load(const std::string& agent_id) {
    std::ifstream in(std::filesystem::path(dir_) / (agent_id + ".json"));
    if (!in) return std::nullopt;
    return json::parse(in);
}

}  // namespace spa
