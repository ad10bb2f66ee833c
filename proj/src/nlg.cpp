#include "spa/nlg.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace spa {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool filter_ok(const DomainSpec& spec, EntityId e, const TemplateSlot& slot) {
    if (slot.type_filters.empty()) return true;
    const auto t = lower(spec.entity(e).type);
    return std::find(slot.type_filters.begin(), slot.type_filters.end(), t) != slot.type_filters.end();
}

struct Choice {
    const SentenceTemplate* templ;
    SlotFill fill;
};

// Templates of the predicate entry whose entity slots cover exactly the
// grounded arguments of `lit`.
std::vector<Choice> predicate_choices(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit,
                                      const LexEntry& entry, Intent intent, bool negated) {
    std::vector<Choice> out;
    const auto& schema = spec.predicates[lit.schema];
    std::set<std::size_t> grounded;
    for (std::size_t a = 0; a < lit.args.size(); ++a)
        if (!lit.args[a].is_hole()) grounded.insert(a);
    for (const auto& t : entry.templates) {
        if (t.intent != intent || t.negated != negated) continue;
        auto args = Lexicon::slot_arguments(t, schema, spec);
        if (!args) continue;
        if (std::set<std::size_t>(args->begin(), args->end()) != grounded || args->size() != grounded.size()) continue;
        SlotFill fill;
        bool ok = true;
        std::size_t k = 0;
        for (const auto& p : t.pieces) {
            if (!p.slot || p.slot->kind != SlotKind::PredicateEntity) continue;
            const EntityId e = lit.args[(*args)[k++]].entity_id();
            if (!filter_ok(spec, e, *p.slot) || !lexicon.entity_entry(spec.entity(e).id)) ok = false;
            fill.entities.push_back(spec.entity(e).id);
        }
        if (ok) out.push_back({&t, std::move(fill)});
    }
    return out;
}

std::vector<Choice> attribute_choices(const Lexicon& lexicon, const DomainSpec& spec, EntityId entity,
                                      const LexEntry& entry, Intent intent, const std::string& value) {
    std::vector<Choice> out;
    for (const auto& t : entry.templates) {
        if (t.intent != intent || t.negated) continue;
        if (t.count(SlotKind::AttributeEntity) != 1) continue;
        if (t.has_value_slot() != (intent == Intent::AttributeAnswer)) continue;
        bool ok = lexicon.entity_entry(spec.entity(entity).id) != nullptr;
        for (const auto& p : t.pieces)
            if (p.slot && p.slot->kind == SlotKind::AttributeEntity && !filter_ok(spec, entity, *p.slot)) ok = false;
        if (ok) out.push_back({&t, SlotFill{{spec.entity(entity).id}, value, {}}});
    }
    return out;
}

std::string render(const Lexicon& lexicon, const LexEntry& owner, std::vector<Choice>& choices,
                   const std::optional<std::string>& addressee, NlgRng& rng, bool capitalize) {
    // Prefer templates that name the addressee themselves when there is one.
    if (addressee) {
        std::vector<Choice> named;
        for (auto& c : choices)
            if (c.templ->count(SlotKind::Addressee) > 0) named.push_back(c);
        if (!named.empty()) choices = std::move(named);
    } else {
        std::erase_if(choices, [](const Choice& c) { return c.templ->count(SlotKind::Addressee) > 0; });
    }
    if (choices.empty()) return {};
    auto& c = choices[rng() % choices.size()];
    if (addressee && c.templ->count(SlotKind::Addressee) > 0) {
        c.fill.addressee = *addressee;
        return lexicon.realize(owner, *c.templ, c.fill, capitalize).text;
    }
    if (addressee) return *addressee + ", " + lexicon.realize(owner, *c.templ, c.fill, false).text;
    return lexicon.realize(owner, *c.templ, c.fill, capitalize).text;
}

const LexEntry& predicate_entry(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit) {
    const auto& name = spec.predicates[lit.schema].name;
    const auto* e = lexicon.predicate_entry(name);
    if (!e) throw NlgError("no lexicon entry for predicate " + name);
    return *e;
}

}  // namespace

const std::string& PhoneticNameRegistry::assign(const std::string& agent_id) {
    if (auto it = names_.find(agent_id); it != names_.end()) return it->second;
    const auto& base = phonetic_alphabet();
    const std::size_t n = names_.size();
    std::string name = base[n % base.size()];
    if (n >= base.size()) name += "-" + std::to_string(n / base.size() + 1);
    agents_[name] = agent_id;
    return names_.emplace(agent_id, std::move(name)).first->second;
}

std::optional<std::string> PhoneticNameRegistry::name_of(const std::string& agent_id) const {
    if (auto it = names_.find(agent_id); it != names_.end()) return it->second;
    return std::nullopt;
}

std::optional<std::string> PhoneticNameRegistry::agent_for(std::string_view name) const {
    for (const auto& [n, id] : agents_)
        if (lower(n) == lower(name)) return id;
    return std::nullopt;
}

std::string generate_question(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit,
                              const std::optional<std::string>& addressee, NlgRng& rng) {
    const auto& entry = predicate_entry(lexicon, spec, lit);
    auto choices = predicate_choices(lexicon, spec, lit, entry, Intent::PredicateQuestion, false);
    auto text = render(lexicon, entry, choices, addressee, rng, true);
    if (text.empty())
        throw NlgError("no question template for " + format_literal(spec, lit) + " (predicate " + entry.ref.name + ")");
    return text;
}

std::string generate_statement(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit, NlgRng& rng,
                               bool capitalize) {
    if (!lit.grounded()) throw NlgError("statement of ungrounded literal " + format_literal(spec, lit));
    const auto& entry = predicate_entry(lexicon, spec, lit);
    auto choices = predicate_choices(lexicon, spec, lit, entry, Intent::PredicateAnswer, !lit.positive);
    auto text = render(lexicon, entry, choices, std::nullopt, rng, capitalize);
    if (text.empty())
        throw NlgError("no statement template for " + format_literal(spec, lit) + " (predicate " + entry.ref.name + ")");
    return text;
}

std::string generate_attribute_question(const Lexicon& lexicon, const DomainSpec& spec, EntityId entity,
                                        const std::string& attribute, const std::optional<std::string>& addressee,
                                        NlgRng& rng) {
    const auto* entry = lexicon.attribute_entry(attribute);
    if (!entry) throw NlgError("no lexicon entry for attribute " + attribute);
    auto choices = attribute_choices(lexicon, spec, entity, *entry, Intent::AttributeQuestion, {});
    auto text = render(lexicon, *entry, choices, addressee, rng, true);
    if (text.empty()) throw NlgError("no question template for attribute " + attribute);
    return text;
}

std::string generate_attribute_statement(const Lexicon& lexicon, const DomainSpec& spec, EntityId entity,
                                         const std::string& attribute, const AttributeValue& value, NlgRng& rng,
                                         bool capitalize) {
    const auto* entry = lexicon.attribute_entry(attribute);
    if (!entry) throw NlgError("no lexicon entry for attribute " + attribute);
    auto choices = attribute_choices(lexicon, spec, entity, *entry, Intent::AttributeAnswer, to_string(value));
    auto text = render(lexicon, *entry, choices, std::nullopt, rng, capitalize);
    if (text.empty()) throw NlgError("no statement template for attribute " + attribute);
    return text;
}

std::string no_knowledge(const Lexicon& lexicon, NlgRng& rng) {
    if (lexicon.no_knowledge.empty()) return "I'm sorry. I don't know.";
    return lexicon.no_knowledge[rng() % lexicon.no_knowledge.size()];
}

}  // namespace spa
