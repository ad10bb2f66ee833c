#include "spa/dialogue.hpp"

#include <algorithm>
#include <cctype>

namespace spa {

namespace {

using Kind = UtteranceMeaning::Kind;

// Assigns entities, in utterance order, to the first free slot whose type
// admits them. nullopt when some entity does not fit.
std::optional<Literal> fill_slots(const DomainSpec& spec, std::size_t schema_index,
                                  const std::vector<EntityId>& entities) {
    const auto& schema = spec.predicates[schema_index];
    Literal lit;
    lit.schema = static_cast<std::uint16_t>(schema_index);
    lit.args.assign(schema.arity(), Term::hole(0));
    std::vector<bool> used(schema.arity(), false);
    for (EntityId e : entities) {
        bool placed = false;
        for (std::size_t a = 0; a < schema.arity() && !placed; ++a) {
            if (used[a] || !spec.type_allowed(e, schema.slots[a])) continue;
            used[a] = true;
            lit.args[a] = Term::entity(e);
            placed = true;
        }
        if (!placed) return std::nullopt;
    }
    int hole = 0;
    for (std::size_t a = 0; a < schema.arity(); ++a)
        if (!used[a]) lit.args[a] = Term::hole(hole++);
    return lit;
}

std::string fallback_reply(const Lexicon& lexicon, Intent intent, NlgRng& rng) {
    if (auto it = lexicon.responses.find(intent); it != lexicon.responses.end() && !it->second.empty())
        return it->second[rng() % it->second.size()];
    switch (intent) {
        case Intent::Greeting: return "Hello.";
        case Intent::Thanks: return "You're welcome.";
        case Intent::Farewell: return "Goodbye.";
        case Intent::Affirmation: return "Okay.";
        default: return "Sorry, I didn't understand that.";
    }
}

}  // namespace

std::string_view to_string(UtteranceMeaning::Kind k) {
    switch (k) {
        case Kind::InfoQuestion: return "info_question";
        case Kind::ConfirmQuestion: return "confirm_question";
        case Kind::Statement: return "statement";
        case Kind::AttrQuestion: return "attribute_question";
        case Kind::OutOfDomain: return "out_of_domain";
        case Kind::Unintelligible: return "unintelligible";
    }
    return "unintelligible";
}

std::string describe(const DomainSpec& spec, const UtteranceMeaning& m) {
    if (m.literal) return format_literal(spec, *m.literal);
    if (m.query) {
        const auto& e = spec.entity(m.query->entity);
        return e.type + "(" + e.id + ")." + m.query->attribute + "=?";
    }
    if (m.assignment) {
        const auto& e = spec.entity(m.assignment->entity);
        return e.type + "(" + e.id + ")." + m.assignment->attribute + "=" + to_string(m.assignment->value);
    }
    return std::string(to_string(m.kind)) + (m.kind == Kind::OutOfDomain ? ":" + std::string(to_string(m.intent)) : "");
}

UtteranceMeaning interpret(const ParsedUtterance& parsed, const DomainSpec& spec, const Lexicon& lexicon) {
    UtteranceMeaning m;
    m.intent = parsed.intent;
    m.addressee = parsed.addressee;
    if (parsed.intent == Intent::Fallback) return m;
    if (!in_domain(parsed.intent)) {
        m.kind = Kind::OutOfDomain;
        return m;
    }
    std::vector<EntityId> entities;
    const Nle* predicate = nullptr;
    const Nle* attribute = nullptr;
    const Nle* value = nullptr;
    for (const auto& n : parsed.nles) {
        switch (n.type) {
            case NleType::KnowledgeEntity:
                if (auto id = spec.find_entity(n.ref)) entities.push_back(*id);
                break;
            case NleType::PredicateType:
                if (!predicate) predicate = &n;
                break;
            case NleType::AttributeType:
                if (!attribute) attribute = &n;
                break;
            case NleType::AttributeInstance:
                if (!value) value = &n;
                break;
            case NleType::Addressee: break;
        }
    }
    const bool question = is_question(parsed.intent);

    // Attribute meanings: an attribute word, or a value word, without a predicate word.
    std::string attr_name;
    if (attribute) attr_name = attribute->ref;
    else if (value && !predicate)
        for (const auto& e : lexicon.entries)
            if (e.ref.kind == RefKind::Value && e.ref.name == value->ref) {
                attr_name = e.ref.attribute;
                break;
            }
    if (!attr_name.empty() && (!predicate || parsed.intent == Intent::AttributeQuestion ||
                               parsed.intent == Intent::AttributeAnswer)) {
        std::optional<EntityId> subject;
        const AttributeDef* def = nullptr;
        for (EntityId e : entities) {
            const auto* t = spec.find_type(spec.entity(e).type);
            if (t && (def = t->find_attribute(attr_name))) {
                subject = e;
                break;
            }
        }
        if (!subject) return m;
        if (question) {
            m.kind = Kind::AttrQuestion;
            m.query = AttributeQuery{*subject, attr_name};
            return m;
        }
        if (!value) return m;
        AttributeValue v = value->ref;
        if (def->kind == ValueKind::Number) {
            try {
                v = std::stod(value->ref);
            } catch (const std::exception&) {
                return m;
            }
        }
        m.kind = Kind::Statement;
        m.assignment = AttributeFact{*subject, attr_name, v};
        return m;
    }

    std::optional<Literal> lit;
    if (predicate) {
        auto p = spec.find_predicate(predicate->ref);
        if (!p) return m;
        lit = fill_slots(spec, *p, entities);
    } else {
        // Infer the predicate: exactly one speakable schema must accept every entity.
        if (entities.empty()) return m;
        for (std::size_t p = 0; p < spec.predicates.size(); ++p) {
            if (!lexicon.predicate_entry(spec.predicates[p].name)) continue;
            auto candidate = fill_slots(spec, p, entities);
            if (!candidate) continue;
            if (lit) return m;  // ambiguous
            lit = candidate;
        }
    }
    if (!lit) return m;
    if (!lit->grounded()) {
        if (!question) return m;  // an answer that leaves something open says nothing
        m.kind = Kind::InfoQuestion;
    } else if (question) {
        m.kind = Kind::ConfirmQuestion;
    } else {
        m.kind = Kind::Statement;
        lit->positive = !parsed.negated;
    }
    m.literal = lit;
    return m;
}

std::string state(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit, NlgRng& rng) {
    return generate_statement(lexicon, spec, lit, rng);
}

ChangeReport absorb(const UtteranceMeaning& meaning, BeliefState& kb) {
    ChangeReport r;
    if (meaning.kind != Kind::Statement) return r;
    if (meaning.literal) return kb.assert_belief(*meaning.literal);
    if (meaning.assignment)
        r.added = kb.set_attribute(meaning.assignment->entity, meaning.assignment->attribute, meaning.assignment->value);
    return r;
}

Reply respond(const UtteranceMeaning& meaning, BeliefState& kb, const Lexicon& lexicon, NlgRng& rng) {
    Reply r;
    const auto& spec = kb.spec();
    switch (meaning.kind) {
        case Kind::ConfirmQuestion: {
            const auto& lit = *meaning.literal;
            const Truth t = kb.truth(lit);
            if (t == Truth::Unknown) {
                r.texts.push_back(no_knowledge(lexicon, rng));
                break;
            }
            const Literal said = t == Truth::True ? lit : lit.negated();
            std::string text = t == Truth::True ? "Yes" : "No";
            try {
                text += ", " + generate_statement(lexicon, spec, said, rng, false);
            } catch (const NlgError&) {
                text += ".";
            }
            r.texts.push_back(std::move(text));
            r.stated.push_back(said);
            break;
        }
        case Kind::InfoQuestion: {
            for (const auto& match : kb.query(*meaning.literal)) {
                const Literal grounded = substitute(*meaning.literal, match.binding);
                r.texts.push_back(generate_statement(lexicon, spec, grounded, rng));
                r.stated.push_back(grounded);
            }
            if (r.texts.empty()) r.texts.push_back(no_knowledge(lexicon, rng));
            break;
        }
        case Kind::AttrQuestion: {
            const auto& q = *meaning.query;
            if (auto v = kb.query_attribute(q.entity, q.attribute)) {
                r.texts.push_back(generate_attribute_statement(lexicon, spec, q.entity, q.attribute, *v, rng));
                r.stated_attributes.push_back({q.entity, q.attribute, *v});
            } else {
                r.texts.push_back(no_knowledge(lexicon, rng));
            }
            break;
        }
        case Kind::Statement: r.change = absorb(meaning, kb); break;
        case Kind::OutOfDomain: r.texts.push_back(fallback_reply(lexicon, meaning.intent, rng)); break;
        case Kind::Unintelligible: r.texts.push_back(fallback_reply(lexicon, Intent::Fallback, rng)); break;
    }
    return r;
}

}  // namespace spa
