#include "spa/domain.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace spa {

using nlohmann::json;

std::string to_string(const AttributeValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    std::ostringstream os;
    os << std::get<double>(v);
    return os.str();
}

std::string_view to_string(Controller c) {
    switch (c) {
        case Controller::MoveTo: return "move_to";
        case Controller::Utter: return "utter";
        case Controller::Interact: return "interact";
        case Controller::Wait: return "wait";
    }
    return "wait";
}

const AttributeDef* EntityType::find_attribute(std::string_view attr) const {
    for (const auto& a : attributes)
        if (a.name == attr) return &a;
    return nullptr;
}

std::optional<Vec2> Entity::anchor() const {
    if (position) return position;
    if (!region.empty()) return centroid(region);
    return std::nullopt;
}

bool Literal::grounded() const {
    return std::none_of(args.begin(), args.end(), [](Term t) { return t.is_hole(); });
}

Literal Literal::negated() const {
    Literal l = *this;
    l.positive = !positive;
    return l;
}

bool DomainSpec::operator==(const DomainSpec& o) const {
    return name == o.name && entity_types == o.entity_types && entities == o.entities &&
           predicates == o.predicates && actions == o.actions && agents == o.agents &&
           world == o.world && config == o.config && lexicon_path == o.lexicon_path;
}

void DomainSpec::build_index() {
    entity_index_.clear();
    predicate_index_.clear();
    action_index_.clear();
    candidate_cache_.clear();
    for (std::size_t i = 0; i < entities.size(); ++i)
        entity_index_.emplace(entities[i].id, static_cast<EntityId>(i));
    for (std::size_t i = 0; i < predicates.size(); ++i) predicate_index_.emplace(predicates[i].name, i);
    for (std::size_t i = 0; i < actions.size(); ++i) action_index_.emplace(actions[i].name, i);
}

std::optional<EntityId> DomainSpec::find_entity(std::string_view id) const {
    auto it = entity_index_.find(std::string(id));
    if (it == entity_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> DomainSpec::find_predicate(std::string_view n) const {
    auto it = predicate_index_.find(std::string(n));
    if (it == predicate_index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> DomainSpec::find_action(std::string_view n) const {
    auto it = action_index_.find(std::string(n));
    if (it == action_index_.end()) return std::nullopt;
    return it->second;
}

const EntityType* DomainSpec::find_type(std::string_view n) const {
    for (const auto& t : entity_types)
        if (t.name == n) return &t;
    return nullptr;
}

bool DomainSpec::type_allowed(EntityId e, const Slot& slot) const {
    if (e < 0 || static_cast<std::size_t>(e) >= entities.size()) return false;
    if (slot.types.empty()) return true;
    const auto& t = entities[static_cast<std::size_t>(e)].type;
    return std::find(slot.types.begin(), slot.types.end(), t) != slot.types.end();
}

const std::vector<EntityId>& DomainSpec::candidates_for(const Slot& slot) const {
    auto it = candidate_cache_.find(slot.types);
    if (it != candidate_cache_.end()) return it->second;
    std::vector<EntityId> out;
    for (std::size_t i = 0; i < entities.size(); ++i)
        if (type_allowed(static_cast<EntityId>(i), slot)) out.push_back(static_cast<EntityId>(i));
    return candidate_cache_.emplace(slot.types, std::move(out)).first->second;
}

double DomainSpec::config_or(std::string_view key, double fallback) const {
    auto it = config.find(std::string(key));
    return it == config.end() ? fallback : it->second;
}

// ---------------------------------------------------------------------------
// Literals
// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

Literal parse_literal(const DomainSpec& spec, std::string_view text, std::span<const Slot> params) {
    std::string_view s = trim(text);
    Literal lit;
    if (s.starts_with("!")) {
        lit.positive = false;
        s = trim(s.substr(1));
    } else if (s.starts_with("\xC2\xAC")) {  // U+00AC NOT SIGN
        lit.positive = false;
        s = trim(s.substr(2));
    } else if (s.starts_with("not ")) {
        lit.positive = false;
        s = trim(s.substr(4));
    }
    const auto open = s.find('(');
    const auto close = s.rfind(')');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open)
        throw SpecError("malformed literal '" + std::string(text) + "'");
    const std::string name(trim(s.substr(0, open)));
    const auto schema = spec.find_predicate(name);
    if (!schema) throw SpecError("unknown predicate '" + name + "' in '" + std::string(text) + "'");
    lit.schema = static_cast<std::uint16_t>(*schema);

    std::map<std::string, int> named_holes;
    int next_hole = static_cast<int>(params.size());
    std::string_view inner = s.substr(open + 1, close - open - 1);
    if (!trim(inner).empty()) {
        std::size_t pos = 0;
        while (pos <= inner.size()) {
            auto comma = inner.find(',', pos);
            if (comma == std::string_view::npos) comma = inner.size();
            const std::string arg(trim(inner.substr(pos, comma - pos)));
            pos = comma + 1;
            if (arg.empty()) throw SpecError("empty argument in '" + std::string(text) + "'");
            auto param = std::find_if(params.begin(), params.end(),
                                      [&](const Slot& p) { return p.name == arg; });
            if (param != params.end()) {
                lit.args.push_back(Term::hole(static_cast<int>(param - params.begin())));
            } else if (arg.front() == '?') {
                const std::string tag = arg.substr(1);
                if (!tag.empty() && std::all_of(tag.begin(), tag.end(), [](char c) {
                        return std::isdigit(static_cast<unsigned char>(c));
                    })) {
                    lit.args.push_back(Term::hole(std::stoi(tag)));
                } else if (!tag.empty() && named_holes.count(tag)) {
                    lit.args.push_back(Term::hole(named_holes[tag]));
                } else {
                    if (!tag.empty()) named_holes[tag] = next_hole;
                    lit.args.push_back(Term::hole(next_hole++));
                }
            } else if (auto e = spec.find_entity(arg)) {
                lit.args.push_back(Term::entity(*e));
            } else {
                throw SpecError("undeclared parameter or entity '" + arg + "' in '" +
                                std::string(text) + "'");
            }
            if (comma == inner.size()) break;
        }
    }
    check_literal(spec, lit, text);
    return lit;
}

std::string format_literal(const DomainSpec& spec, const Literal& lit, std::span<const Slot> params) {
    std::string out = lit.positive ? "" : "!";
    out += spec.predicates.at(lit.schema).name;
    out += '(';
    for (std::size_t i = 0; i < lit.args.size(); ++i) {
        if (i) out += ", ";
        const Term t = lit.args[i];
        if (!t.is_hole()) {
            out += spec.entity(t.entity_id()).id;
        } else if (static_cast<std::size_t>(t.hole_index()) < params.size()) {
            out += params[static_cast<std::size_t>(t.hole_index())].name;
        } else if (t.hole_index() == 0) {
            out += '?';
        } else {
            out += '?' + std::to_string(t.hole_index());
        }
    }
    out += ')';
    return out;
}

void check_literal(const DomainSpec& spec, const Literal& lit, std::string_view context) {
    if (lit.schema >= spec.predicates.size()) throw SpecError("literal references unknown schema");
    const auto& schema = spec.predicates[lit.schema];
    if (lit.args.size() != schema.arity())
        throw SpecError("arity mismatch for '" + schema.name + "': expected " +
                        std::to_string(schema.arity()) + ", got " + std::to_string(lit.args.size()) +
                        " in '" + std::string(context) + "'");
    for (std::size_t i = 0; i < lit.args.size(); ++i) {
        const Term t = lit.args[i];
        if (t.is_hole()) continue;
        if (!spec.type_allowed(t.entity_id(), schema.slots[i]))
            throw SpecError(spec.entity(t.entity_id()).id + " not of type " +
                            (schema.slots[i].types.empty() ? std::string("any")
                                                            : schema.slots[i].types.front()) +
                            " in slot '" + schema.slots[i].name + "' of '" + schema.name + "'");
    }
}

Literal substitute(const Literal& templ, const Binding& binding) {
    Literal out = templ;
    for (auto& t : out.args) {
        if (!t.is_hole()) continue;
        const auto k = static_cast<std::size_t>(t.hole_index());
        if (k < binding.size() && binding[k] != kUnbound) t = Term::entity(binding[k]);
    }
    return out;
}

Literal instantiate(const DomainSpec& spec, const Literal& templ, const Binding& binding) {
    Literal out = substitute(templ, binding);
    check_literal(spec, out, format_literal(spec, templ));
    return out;
}

std::vector<std::string> validate_binding(const DomainSpec& spec, std::span<const Slot> slots,
                                          const std::map<std::string, EntityId>& binding) {
    std::vector<std::string> violations;
    for (const auto& [slot_name, entity] : binding) {
        auto slot = std::find_if(slots.begin(), slots.end(),
                                 [&](const Slot& s) { return s.name == slot_name; });
        if (slot == slots.end()) {
            violations.push_back("unknown slot '" + slot_name + "'");
            continue;
        }
        if (!spec.type_allowed(entity, *slot)) {
            const std::string who =
                entity >= 0 && static_cast<std::size_t>(entity) < spec.entities.size()
                    ? spec.entity(entity).id
                    : std::to_string(entity);
            violations.push_back(who + " not of type " +
                                 (slot->types.empty() ? std::string("any") : slot->types.front()));
        }
    }
    return violations;
}

std::vector<std::string> validate_binding(const DomainSpec& spec, const PredicateSchema& schema,
                                          const std::map<std::string, EntityId>& binding) {
    return validate_binding(spec, schema.slots, binding);
}

std::vector<std::string> validate_binding(const DomainSpec& spec, const ActionSchema& schema,
                                          const std::map<std::string, EntityId>& binding) {
    return validate_binding(spec, schema.params, binding);
}

// ---------------------------------------------------------------------------
// Spec file
// ---------------------------------------------------------------------------

namespace {

std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

Vec2 read_point(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw SpecError(where + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Polygon read_polygon(const json& j, const std::string& where) {
    if (!j.is_array()) throw SpecError(where + ": expected list of points");
    Polygon p;
    for (std::size_t i = 0; i < j.size(); ++i) p.push_back(read_point(j[i], where));
    if (p.size() < 3) throw SpecError(where + ": polygon needs at least 3 points");
    return p;
}

json write_point(Vec2 v) { return json::array({v.x, v.y}); }

json write_polygon(const Polygon& p) {
    json a = json::array();
    for (auto v : p) a.push_back(write_point(v));
    return a;
}

std::vector<Slot> read_slots(const json& j, const std::string& where, const DomainSpec& spec) {
    std::vector<Slot> slots;
    std::set<std::string> names;
    for (const auto& s : j) {
        Slot slot;
        slot.name = s.at("name").get<std::string>();
        if (!names.insert(slot.name).second)
            throw SpecError(where + ": duplicate identifier '" + slot.name + "'");
        if (s.contains("types"))
            for (const auto& t : s.at("types")) {
                auto tn = t.get<std::string>();
                if (!spec.find_type(tn))
                    throw SpecError(where + ": unknown type reference '" + tn + "'");
                slot.types.push_back(tn);
            }
        slots.push_back(std::move(slot));
    }
    return slots;
}

json write_slots(const std::vector<Slot>& slots) {
    json a = json::array();
    for (const auto& s : slots) a.push_back({{"name", s.name}, {"types", s.types}});
    return a;
}

ValueKind read_kind(const std::string& k, const std::string& where) {
    if (k == "string") return ValueKind::String;
    if (k == "number") return ValueKind::Number;
    if (k == "entity") return ValueKind::EntityRef;
    throw SpecError(where + ": unknown attribute kind '" + k + "'");
}

std::string_view kind_name(ValueKind k) {
    switch (k) {
        case ValueKind::String: return "string";
        case ValueKind::Number: return "number";
        case ValueKind::EntityRef: return "entity";
    }
    return "string";
}

AttributeValue read_value(const json& j, const AttributeDef& def, const DomainSpec& spec,
                          const std::string& where) {
    switch (def.kind) {
        case ValueKind::Number:
            if (!j.is_number()) throw SpecError(where + ": attribute '" + def.name + "' expects a number");
            return j.get<double>();
        case ValueKind::EntityRef: {
            auto id = j.get<std::string>();
            if (!spec.find_entity(id)) throw SpecError(where + ": unknown entity '" + id + "'");
            return id;
        }
        case ValueKind::String: break;
    }
    if (!j.is_string()) throw SpecError(where + ": attribute '" + def.name + "' expects a string");
    return j.get<std::string>();
}

json write_value(const AttributeValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return std::get<double>(v);
}

Controller read_controller(const std::string& c, const std::string& where) {
    if (c == "move_to") return Controller::MoveTo;
    if (c == "utter") return Controller::Utter;
    if (c == "interact") return Controller::Interact;
    if (c == "wait") return Controller::Wait;
    throw SpecError(where + ": unknown controller '" + c + "'");
}

std::vector<Literal> read_literals(const DomainSpec& spec, const json& j, const std::string& where,
                                   std::span<const Slot> params = {}) {
    std::vector<Literal> out;
    if (j.is_null()) return out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        try {
            out.push_back(parse_literal(spec, j[i].get<std::string>(), params));
        } catch (const SpecError& e) {
            throw SpecError(where + "[" + std::to_string(i) + "]: " + e.what());
        }
    }
    return out;
}

json write_literals(const DomainSpec& spec, const std::vector<Literal>& lits,
                    std::span<const Slot> params = {}) {
    json a = json::array();
    for (const auto& l : lits) a.push_back(format_literal(spec, l, params));
    return a;
}

std::optional<std::size_t> slot_index(const std::vector<Slot>& slots, const std::string& name) {
    for (std::size_t i = 0; i < slots.size(); ++i)
        if (slots[i].name == name) return i;
    return std::nullopt;
}

DomainSpec from_json(const json& doc) {
    if (!doc.is_object()) throw SpecError("spec document must be a JSON object");
    if (doc.value("format", 0) != 1) throw SpecError("unsupported or missing \"format\" (expected 1)");
    DomainSpec spec;
    spec.name = doc.value("name", std::string{});

    std::set<std::string> seen;
    for (const auto& t : doc.value("entity_types", json::array())) {
        EntityType type;
        type.name = t.at("name").get<std::string>();
        if (!seen.insert(type.name).second)
            throw SpecError("entity_types: duplicate identifier '" + type.name + "'");
        std::set<std::string> attrs;
        for (const auto& a : t.value("attributes", json::array())) {
            AttributeDef def{a.at("name").get<std::string>(),
                             read_kind(a.value("kind", "string"), "entity_types." + type.name)};
            if (!attrs.insert(def.name).second)
                throw SpecError("entity_types." + type.name + ": duplicate identifier '" + def.name + "'");
            type.attributes.push_back(def);
        }
        spec.entity_types.push_back(std::move(type));
    }

    const json entities = doc.value("entities", json::array());
    if (entities.empty()) throw SpecError("no entities declared");
    seen.clear();
    for (const auto& e : entities) {
        Entity ent;
        ent.id = e.at("id").get<std::string>();
        ent.type = e.at("type").get<std::string>();
        const std::string where = "entities." + ent.id;
        if (!seen.insert(ent.id).second) throw SpecError("entities: duplicate identifier '" + ent.id + "'");
        if (!spec.find_type(ent.type)) throw SpecError(where + ": unknown type reference '" + ent.type + "'");
        if (e.contains("position")) ent.position = read_point(e.at("position"), where);
        if (e.contains("region")) ent.region = read_polygon(e.at("region"), where);
        spec.entities.push_back(std::move(ent));
    }
    std::sort(spec.entities.begin(), spec.entities.end(),
              [](const Entity& a, const Entity& b) { return a.id < b.id; });
    spec.build_index();
    // Attribute values may reference entities, so they are read after indexing.
    for (const auto& e : entities) {
        auto& ent = spec.entities[static_cast<std::size_t>(*spec.find_entity(e.at("id").get<std::string>()))];
        const auto* type = spec.find_type(ent.type);
        const json attrs = e.value("attributes", json::object());
        for (const auto& [k, v] : attrs.items()) {
            const auto* def = type->find_attribute(k);
            if (!def) throw SpecError("entities." + ent.id + ": undeclared attribute '" + k + "'");
            ent.attributes[k] = read_value(v, *def, spec, "entities." + ent.id);
        }
    }

    seen.clear();
    for (const auto& p : doc.value("predicates", json::array())) {
        PredicateSchema schema;
        schema.name = p.at("name").get<std::string>();
        const std::string where = "predicates." + schema.name;
        if (!seen.insert(schema.name).second)
            throw SpecError("predicates: duplicate identifier '" + schema.name + "'");
        schema.slots = read_slots(p.at("slots"), where, spec);
        if (schema.slots.empty()) throw SpecError(where + ": arity must be at least 1");
        const auto kind = p.value("kind", "knowledge");
        if (kind == "knowledge") schema.kind = PredicateKind::Knowledge;
        else if (kind == "fluent") schema.kind = PredicateKind::Fluent;
        else throw SpecError(where + ": unknown predicate kind '" + kind + "'");
        if (p.contains("functional")) {
            const auto f = p.at("functional").get<std::string>();
            schema.functional_slot = slot_index(schema.slots, f);
            if (!schema.functional_slot) throw SpecError(where + ": functional slot '" + f + "' not declared");
        }
        schema.observable = p.value("observable", false);
        schema.egocentric = p.value("egocentric", false);
        spec.predicates.push_back(std::move(schema));
    }
    spec.build_index();

    seen.clear();
    for (const auto& a : doc.value("actions", json::array())) {
        ActionSchema act;
        act.name = a.at("name").get<std::string>();
        const std::string where = "actions." + act.name;
        if (!seen.insert(act.name).second) throw SpecError("actions: duplicate identifier '" + act.name + "'");
        act.params = read_slots(a.value("params", json::array()), where, spec);
        act.preconditions = read_literals(spec, a.value("pre", json::array()), where + ".pre", act.params);
        act.effects = read_literals(spec, a.value("eff", json::array()), where + ".eff", act.params);
        act.utterances = read_literals(spec, a.value("say", json::array()), where + ".say", act.params);
        for (const auto* list : {&act.preconditions, &act.effects, &act.utterances})
            for (const auto& l : *list)
                for (auto t : l.args)
                    if (t.is_hole() && static_cast<std::size_t>(t.hole_index()) >= act.params.size())
                        throw SpecError(where + ": open variable in '" + format_literal(spec, l) + "'");
        act.controller = read_controller(a.value("controller", "wait"), where);
        for (auto [key, field] : {std::pair{"target", &act.target_param}, std::pair{"via", &act.via_param}}) {
            if (!a.contains(key)) continue;
            const auto name = a.at(key).get<std::string>();
            *field = slot_index(act.params, name);
            if (!*field) throw SpecError(where + ": undeclared parameter '" + name + "'");
        }
        act.duration_hint = a.value("duration", 0.0);
        spec.actions.push_back(std::move(act));
    }
    spec.build_index();

    seen.clear();
    for (const auto& g : doc.value("agents", json::array())) {
        AgentSpec agent;
        const auto id = g.at("id").get<std::string>();
        const std::string where = "agents." + id;
        auto e = spec.find_entity(id);
        if (!e) throw SpecError(where + ": unknown entity '" + id + "'");
        if (!seen.insert(id).second) throw SpecError("agents: duplicate identifier '" + id + "'");
        agent.entity = *e;
        agent.avatar = g.value("avatar", false);
        agent.radius = g.value("radius", 0.25);
        if (agent.radius <= 0) throw SpecError(where + ": radius must be positive");
        agent.beliefs = read_literals(spec, g.value("beliefs", json::array()), where + ".beliefs");
        for (const auto& l : agent.beliefs)
            if (!l.grounded()) throw SpecError(where + ": belief '" + format_literal(spec, l) + "' is not grounded");
        agent.desires = read_literals(spec, g.value("desires", json::array()), where + ".desires");
        for (const auto& l : agent.desires)
            if (!l.grounded()) throw SpecError(where + ": desire '" + format_literal(spec, l) + "' is not grounded");
        for (const auto& ab : g.value("attributes", json::array())) {
            AttributeFact f;
            const auto eid = ab.at("entity").get<std::string>();
            auto fe = spec.find_entity(eid);
            if (!fe) throw SpecError(where + ".attributes: unknown entity '" + eid + "'");
            f.entity = *fe;
            f.attribute = ab.at("attribute").get<std::string>();
            const auto* def = spec.find_type(spec.entity(*fe).type)->find_attribute(f.attribute);
            if (!def) throw SpecError(where + ".attributes: undeclared attribute '" + f.attribute + "'");
            f.value = read_value(ab.at("value"), *def, spec, where);
            agent.attribute_beliefs.push_back(std::move(f));
        }
        spec.agents.push_back(std::move(agent));
    }

    const json world = doc.value("world", json::object());
    if (world.contains("bounds")) {
        const auto& b = world.at("bounds");
        spec.world.min = read_point(b.at(0), "world.bounds");
        spec.world.max = read_point(b.at(1), "world.bounds");
    }
    for (std::size_t i = 0; i < world.value("obstacles", json::array()).size(); ++i)
        spec.world.obstacles.push_back(
            read_polygon(world.at("obstacles")[i], "world.obstacles[" + std::to_string(i) + "]"));
    spec.world.facts = read_literals(spec, world.value("facts", json::array()), "world.facts");
    for (const auto& l : spec.world.facts)
        if (!l.grounded()) throw SpecError("world.facts: '" + format_literal(spec, l) + "' is not grounded");

    const json config = doc.value("config", json::object());
    for (const auto& [k, v] : config.items()) {
        if (!v.is_number()) throw SpecError("config." + k + ": expected a number");
        spec.config[k] = v.get<double>();
    }
    spec.lexicon_path = doc.value("lexicon", std::string{});
    return spec;
}

}  // namespace

DomainSpec parse_domain_spec(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
        throw SpecError("syntax error at line " + std::to_string(line) + ", column " +
                            std::to_string(col) + ": " + e.what(),
                        line, col);
    }
    try {
        return from_json(doc);
    } catch (const json::exception& e) {
        throw SpecError(std::string("malformed spec: ") + e.what());
    }
}

DomainSpec load_domain_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SpecError("cannot open spec file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_domain_spec(ss.str());
}

std::string serialize_domain_spec(const DomainSpec& spec) {
    json doc;
    doc["format"] = 1;
    doc["name"] = spec.name;
    doc["entity_types"] = json::array();
    for (const auto& t : spec.entity_types) {
        json attrs = json::array();
        for (const auto& a : t.attributes) attrs.push_back({{"name", a.name}, {"kind", kind_name(a.kind)}});
        doc["entity_types"].push_back({{"name", t.name}, {"attributes", attrs}});
    }
    doc["entities"] = json::array();
    for (const auto& e : spec.entities) {
        json j = {{"id", e.id}, {"type", e.type}};
        if (!e.attributes.empty()) {
            json attrs = json::object();
            for (const auto& [k, v] : e.attributes) attrs[k] = write_value(v);
            j["attributes"] = attrs;
        }
        if (e.position) j["position"] = write_point(*e.position);
        if (!e.region.empty()) j["region"] = write_polygon(e.region);
        doc["entities"].push_back(j);
    }
    doc["predicates"] = json::array();
    for (const auto& p : spec.predicates) {
        json j = {{"name", p.name},
                  {"kind", p.kind == PredicateKind::Knowledge ? "knowledge" : "fluent"},
                  {"slots", write_slots(p.slots)}};
        if (p.functional_slot) j["functional"] = p.slots[*p.functional_slot].name;
        if (p.observable) j["observable"] = true;
        if (p.egocentric) j["egocentric"] = true;
        doc["predicates"].push_back(j);
    }
    doc["actions"] = json::array();
    for (const auto& a : spec.actions) {
        json j = {{"name", a.name},
                  {"params", write_slots(a.params)},
                  {"pre", write_literals(spec, a.preconditions, a.params)},
                  {"eff", write_literals(spec, a.effects, a.params)},
                  {"controller", to_string(a.controller)},
                  {"duration", a.duration_hint}};
        if (!a.utterances.empty()) j["say"] = write_literals(spec, a.utterances, a.params);
        if (a.target_param) j["target"] = a.params[*a.target_param].name;
        if (a.via_param) j["via"] = a.params[*a.via_param].name;
        doc["actions"].push_back(j);
    }
    doc["agents"] = json::array();
    for (const auto& g : spec.agents) {
        json j = {{"id", spec.entity(g.entity).id},
                  {"radius", g.radius},
                  {"beliefs", write_literals(spec, g.beliefs)},
                  {"desires", write_literals(spec, g.desires)}};
        if (g.avatar) j["avatar"] = true;
        if (!g.attribute_beliefs.empty()) {
            json attrs = json::array();
            for (const auto& f : g.attribute_beliefs)
                attrs.push_back({{"entity", spec.entity(f.entity).id},
                                 {"attribute", f.attribute},
                                 {"value", write_value(f.value)}});
            j["attributes"] = attrs;
        }
        doc["agents"].push_back(j);
    }
    json obstacles = json::array();
    for (const auto& o : spec.world.obstacles) obstacles.push_back(write_polygon(o));
    doc["world"] = {{"bounds", json::array({write_point(spec.world.min), write_point(spec.world.max)})},
                    {"obstacles", obstacles},
                    {"facts", write_literals(spec, spec.world.facts)}};
    doc["config"] = json::object();
    for (const auto& [k, v] : spec.config) doc["config"][k] = v;
    if (!spec.lexicon_path.empty()) doc["lexicon"] = spec.lexicon_path;
    return doc.dump(2);
}

}  // namespace spa
