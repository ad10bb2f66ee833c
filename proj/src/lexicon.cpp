#include "spa/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

namespace spa {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, kIntentCount> kIntentNames = {
    "predicate_question", "predicate_answer", "attribute_question", "attribute_answer", "greeting",
    "thanks",             "farewell",         "affirmation",        "fallback"};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

void capitalize_first(std::string& s) {
    for (auto& c : s)
        if (std::isalpha(static_cast<unsigned char>(c))) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            return;
        }
}

std::vector<std::string> token_texts(std::string_view s) {
    std::vector<std::string> out;
    for (auto& t : tokenize(s)) out.push_back(std::move(t.text));
    return out;
}

}  // namespace

std::string_view to_string(Intent i) { return kIntentNames[static_cast<std::size_t>(i)]; }

std::optional<Intent> intent_from_string(std::string_view s) {
    for (std::size_t i = 0; i < kIntentNames.size(); ++i)
        if (kIntentNames[i] == s) return static_cast<Intent>(i);
    return std::nullopt;
}

bool in_domain(Intent i) { return static_cast<int>(i) <= static_cast<int>(Intent::AttributeAnswer); }

bool is_question(Intent i) { return i == Intent::PredicateQuestion || i == Intent::AttributeQuestion; }

std::string_view to_string(NleType t) {
    switch (t) {
        case NleType::AttributeInstance: return "attribute_instance";
        case NleType::AttributeType: return "attribute_type";
        case NleType::PredicateType: return "predicate_type";
        case NleType::KnowledgeEntity: return "knowledge_entity";
        case NleType::Addressee: return "addressee";
    }
    return "knowledge_entity";
}

const std::vector<std::string>& phonetic_alphabet() {
    static const std::vector<std::string> names = {
        "Alpha", "Bravo",  "Charlie", "Delta",  "Echo",    "Foxtrot", "Golf",    "Hotel", "India",
        "Juliett", "Kilo", "Lima",    "Mike",   "November", "Oscar",  "Papa",    "Quebec", "Romeo",
        "Sierra", "Tango", "Uniform", "Victor", "Whiskey", "Xray",    "Yankee",  "Zulu"};
    return names;
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        if (!std::isalnum(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && std::isalnum(static_cast<unsigned char>(text[j]))) ++j;
        out.push_back({lower(text.substr(i, j - i)), i, j});
        i = j;
    }
    return out;
}

std::size_t SentenceTemplate::count(SlotKind k) const {
    return static_cast<std::size_t>(std::count_if(pieces.begin(), pieces.end(), [&](const TemplatePiece& p) {
        return p.slot && p.slot->kind == k && !p.slot->value;
    }));
}

bool SentenceTemplate::has_value_slot() const {
    return std::any_of(pieces.begin(), pieces.end(), [](const TemplatePiece& p) { return p.slot && p.slot->value; });
}

SentenceTemplate parse_template(std::string_view text, Intent intent, bool negated) {
    SentenceTemplate t;
    t.text = std::string(text);
    t.intent = intent;
    t.negated = negated;
    std::size_t i = 0;
    std::string literal;
    while (i < text.size()) {
        if (text[i] == ']') throw LexiconError("template '" + t.text + "': unbalanced ']'");
        if (text[i] != '[') {
            literal += text[i++];
            continue;
        }
        const auto close = text.find(']', i);
        if (close == std::string_view::npos) throw LexiconError("template '" + t.text + "': unterminated slot");
        const std::string body(text.substr(i + 1, close - i - 1));
        if (body.find('[') != std::string::npos) throw LexiconError("template '" + t.text + "': nested '['");
        std::vector<std::string> parts;
        std::stringstream ss(body);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.empty() || parts[0].empty()) throw LexiconError("template '" + t.text + "': empty slot");
        TemplateSlot slot;
        const auto& kind = parts[0];
        if (kind == "PREDICATE") slot.kind = SlotKind::Predicate;
        else if (kind == "PREDICATE-ENTITY") slot.kind = SlotKind::PredicateEntity;
        else if (kind == "ATTRIBUTE") slot.kind = SlotKind::Attribute;
        else if (kind == "ATTRIBUTE-ENTITY") slot.kind = SlotKind::AttributeEntity;
        else if (kind == "ADDRESSEE") slot.kind = SlotKind::Addressee;
        else throw LexiconError("template '" + t.text + "': unknown slot kind '" + kind + "'");
        for (std::size_t k = 1; k < parts.size(); ++k) {
            const auto& q = parts[k];
            if (q == "NAME") continue;
            if (q == "DEF-ARTICLE-NAME") slot.def_article = true;
            else if (q == "VALUE") slot.value = true;
            else if (!q.empty() && q == upper(q)) slot.type_filters.push_back(lower(q));
            else throw LexiconError("template '" + t.text + "': bad qualifier '" + q + "'");
        }
        if (slot.value && slot.kind != SlotKind::Attribute)
            throw LexiconError("template '" + t.text + "': VALUE only applies to ATTRIBUTE");
        if (!literal.empty()) t.pieces.push_back({std::move(literal), std::nullopt});
        literal.clear();
        t.pieces.push_back({"", slot});
        i = close + 1;
    }
    if (!literal.empty()) t.pieces.push_back({std::move(literal), std::nullopt});
    return t;
}

const LexEntry* Lexicon::entity_entry(std::string_view id) const {
    for (const auto& e : entries)
        if (e.ref.kind == RefKind::Entity && e.ref.name == id) return &e;
    return nullptr;
}

const LexEntry* Lexicon::predicate_entry(std::string_view name) const {
    for (const auto& e : entries)
        if (e.ref.kind == RefKind::Predicate && e.ref.name == name) return &e;
    return nullptr;
}

const LexEntry* Lexicon::attribute_entry(std::string_view name) const {
    for (const auto& e : entries)
        if (e.ref.kind == RefKind::Attribute && e.ref.name == name) return &e;
    return nullptr;
}

const LexEntry* Lexicon::value_entry(std::string_view attribute, std::string_view value) const {
    for (const auto& e : entries)
        if (e.ref.kind == RefKind::Value && e.ref.attribute == attribute && e.ref.name == value) return &e;
    return nullptr;
}

std::optional<std::vector<std::size_t>> Lexicon::slot_arguments(const SentenceTemplate& t,
                                                                const PredicateSchema& schema,
                                                                const DomainSpec& spec) {
    std::vector<std::size_t> out;
    std::vector<bool> used(schema.arity(), false);
    for (const auto& p : t.pieces) {
        if (!p.slot || p.slot->kind != SlotKind::PredicateEntity) continue;
        std::optional<std::size_t> pick;
        for (std::size_t a = 0; a < schema.arity() && !pick; ++a) {
            if (used[a]) continue;
            if (p.slot->type_filters.empty()) {
                pick = a;
                continue;
            }
            const auto& types = schema.slots[a].types;
            for (const auto& f : p.slot->type_filters) {
                const bool fits = types.empty()
                                      ? spec.find_type(f) != nullptr ||
                                            std::any_of(spec.entity_types.begin(), spec.entity_types.end(),
                                                        [&](const EntityType& et) { return lower(et.name) == f; })
                                      : std::any_of(types.begin(), types.end(),
                                                    [&](const std::string& ty) { return lower(ty) == f; });
                if (fits) pick = a;
            }
        }
        if (!pick) return std::nullopt;
        used[*pick] = true;
        out.push_back(*pick);
    }
    return out;
}

Realization Lexicon::realize(const LexEntry& owner, const SentenceTemplate& t, const SlotFill& fill,
                             bool capitalize) const {
    Realization r;
    std::size_t next_entity = 0;
    if (!literal_matcher_ || matcher_entries_ != entries.size()) {
        literal_matcher_ = std::make_shared<Gazetteer>(*this, std::vector<std::string>{});
        matcher_entries_ = entries.size();
    }
    auto emit_surface = [&](const std::string& s, NleType type, const std::string& ref) {
        const std::size_t b = r.text.size();
        r.text += s;
        r.spans.push_back({type, ref, b, r.text.size()});
    };
    for (const auto& piece : t.pieces) {
        if (!piece.slot) {
            const std::size_t base = r.text.size();
            r.text += piece.text;
            // Lexicon words inside the template text (hints such as "where").
            for (auto nle : literal_matcher_->match(piece.text)) {
                nle.begin += base;
                nle.end += base;
                r.spans.push_back(std::move(nle));
            }
            continue;
        }
        const auto& slot = *piece.slot;
        switch (slot.kind) {
            case SlotKind::Predicate:
                emit_surface(owner.surface, NleType::PredicateType, owner.ref.name);
                break;
            case SlotKind::Attribute:
                if (slot.value) {
                    const auto* v = value_entry(owner.ref.name, fill.value);
                    emit_surface(v ? v->surface : fill.value, NleType::AttributeInstance, fill.value);
                } else {
                    emit_surface(owner.surface, NleType::AttributeType, owner.ref.name);
                }
                break;
            case SlotKind::PredicateEntity:
            case SlotKind::AttributeEntity: {
                if (next_entity >= fill.entities.size())
                    throw LexiconError("template '" + t.text + "': not enough entities to fill");
                const auto& id = fill.entities[next_entity++];
                const auto* e = entity_entry(id);
                if (!e) throw LexiconError("no lexicon entry for entity '" + id + "'");
                if (slot.def_article && !e->article.empty()) r.text += e->article + " ";
                emit_surface(e->surface, NleType::KnowledgeEntity, id);
                break;
            }
            case SlotKind::Addressee:
                emit_surface(fill.addressee, NleType::Addressee, fill.addressee);
                break;
        }
    }
    if (capitalize) capitalize_first(r.text);
    std::sort(r.spans.begin(), r.spans.end(), [](const Nle& a, const Nle& b) { return a.begin < b.begin; });
    return r;
}

void Lexicon::validate(const DomainSpec& spec, const std::vector<std::string>& exempt) const {
    for (const auto& e : spec.entities) {
        if (std::find(exempt.begin(), exempt.end(), e.id) != exempt.end()) continue;
        if (!entity_entry(e.id)) throw LexiconError("entity '" + e.id + "' has no lexicon entry");
    }
    auto attribute_declared = [&](const std::string& a) {
        return std::any_of(spec.entity_types.begin(), spec.entity_types.end(),
                           [&](const EntityType& t) { return t.find_attribute(a) != nullptr; });
    };
    for (const auto& e : entries) {
        switch (e.ref.kind) {
            case RefKind::Entity:
                if (!spec.find_entity(e.ref.name))
                    throw LexiconError("lexicon entry '" + e.surface + "' names unknown entity '" + e.ref.name + "'");
                break;
            case RefKind::Predicate: {
                auto p = spec.find_predicate(e.ref.name);
                if (!p)
                    throw LexiconError("lexicon entry '" + e.surface + "' names unknown predicate '" + e.ref.name + "'");
                for (const auto& t : e.templates)
                    if (!slot_arguments(t, spec.predicates[*p], spec))
                        throw LexiconError("template '" + t.text + "' does not fit predicate " + e.ref.name);
                break;
            }
            case RefKind::Attribute:
            case RefKind::Value: {
                const auto& a = e.ref.kind == RefKind::Attribute ? e.ref.name : e.ref.attribute;
                if (!attribute_declared(a))
                    throw LexiconError("lexicon entry '" + e.surface + "' names undeclared attribute '" + a + "'");
                break;
            }
        }
    }
}

namespace {

json template_json(const SentenceTemplate& t) {
    json j{{"text", t.text}, {"intent", to_string(t.intent)}};
    if (t.negated) j["negated"] = true;
    return j;
}

}  // namespace

json Lexicon::to_json() const {
    json doc{{"format", 1}};
    json es = json::array();
    for (const auto& e : entries) {
        json j{{"surface", e.surface}};
        if (!e.pos.empty()) j["pos"] = e.pos;
        if (!e.article.empty()) j["article"] = e.article;
        if (!e.hints.empty()) j["hints"] = e.hints;
        switch (e.ref.kind) {
            case RefKind::Entity: j["entity"] = e.ref.name; break;
            case RefKind::Predicate: j["predicate"] = e.ref.name; break;
            case RefKind::Attribute: j["attribute"] = e.ref.name; break;
            case RefKind::Value:
                j["value"] = e.ref.name;
                j["of"] = e.ref.attribute;
                break;
        }
        if (!e.templates.empty()) {
            j["templates"] = json::array();
            for (const auto& t : e.templates) j["templates"].push_back(template_json(t));
        }
        es.push_back(std::move(j));
    }
    doc["entries"] = std::move(es);
    json resp = json::object(), samp = json::object();
    for (const auto& [i, v] : responses) resp[std::string(to_string(i))] = v;
    for (const auto& [i, v] : samples) samp[std::string(to_string(i))] = v;
    doc["responses"] = resp;
    doc["samples"] = samp;
    doc["no_knowledge"] = no_knowledge;
    return doc;
}

Lexicon parse_lexicon(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw LexiconError(std::string("lexicon syntax error: ") + e.what());
    }
    if (doc.value("format", 0) != 1) throw LexiconError("unsupported or missing lexicon \"format\" (expected 1)");
    Lexicon lex;
    auto read_intent = [](const std::string& s) {
        auto i = intent_from_string(s);
        if (!i) throw LexiconError("unknown intent '" + s + "'");
        return *i;
    };
    try {
        const json entries = doc.value("entries", json::array());
        for (const auto& j : entries) {
            LexEntry e;
            e.surface = j.at("surface").get<std::string>();
            e.pos = j.value("pos", std::string{});
            e.article = j.value("article", std::string{});
            e.hints = j.value("hints", std::vector<std::string>{});
            int refs = 0;
            if (j.contains("entity")) {
                e.ref = {RefKind::Entity, j.at("entity").get<std::string>(), {}};
                ++refs;
            }
            if (j.contains("predicate")) {
                e.ref = {RefKind::Predicate, j.at("predicate").get<std::string>(), {}};
                ++refs;
            }
            if (j.contains("attribute")) {
                e.ref = {RefKind::Attribute, j.at("attribute").get<std::string>(), {}};
                ++refs;
            }
            if (j.contains("value")) {
                e.ref = {RefKind::Value, j.at("value").get<std::string>(), j.at("of").get<std::string>()};
                ++refs;
            }
            if (refs != 1)
                throw LexiconError("lexicon entry '" + e.surface +
                                   "' must refer to exactly one entity, predicate, attribute or value");
            const json templates = j.value("templates", json::array());
            for (const auto& t : templates)
                e.templates.push_back(parse_template(t.at("text").get<std::string>(),
                                                     read_intent(t.at("intent").get<std::string>()),
                                                     t.value("negated", false)));
            lex.entries.push_back(std::move(e));
        }
        const json responses = doc.value("responses", json::object());
        const json samples = doc.value("samples", json::object());
        for (const auto& [k, v] : responses.items())
            lex.responses[read_intent(k)] = v.get<std::vector<std::string>>();
        for (const auto& [k, v] : samples.items())
            lex.samples[read_intent(k)] = v.get<std::vector<std::string>>();
        lex.no_knowledge = doc.value("no_knowledge", std::vector<std::string>{"I'm sorry. I don't know."});
    } catch (const json::exception& e) {
        throw LexiconError(std::string("malformed lexicon: ") + e.what());
    }
    return lex;
}

Lexicon load_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw LexiconError("cannot open lexicon file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_lexicon(ss.str());
}

Gazetteer::Gazetteer(const Lexicon& lexicon, const std::vector<std::string>& addressees) {
    auto add = [&](std::string_view phrase, NleType type, const std::string& ref) {
        auto toks = token_texts(phrase);
        if (toks.empty()) return;
        longest_ = std::max(longest_, toks.size());
        phrases_.try_emplace(std::move(toks), Target{type, ref});
    };
    for (const auto& e : lexicon.entries) {
        NleType type = NleType::KnowledgeEntity;
        switch (e.ref.kind) {
            case RefKind::Entity: type = NleType::KnowledgeEntity; break;
            case RefKind::Predicate: type = NleType::PredicateType; break;
            case RefKind::Attribute: type = NleType::AttributeType; break;
            case RefKind::Value: type = NleType::AttributeInstance; break;
        }
        add(e.surface, type, e.ref.name);
        for (const auto& h : e.hints) add(h, type, e.ref.name);
    }
    for (const auto& a : addressees) add(a, NleType::Addressee, a);
}

std::vector<Nle> Gazetteer::match(std::string_view text) const { return match(tokenize(text)); }

std::vector<Nle> Gazetteer::match(const std::vector<Token>& tokens) const {
    std::vector<Nle> out;
    std::size_t i = 0;
    std::vector<std::string> key;
    while (i < tokens.size()) {
        bool found = false;
        for (std::size_t len = std::min(longest_, tokens.size() - i); len > 0 && !found; --len) {
            key.clear();
            for (std::size_t k = 0; k < len; ++k) key.push_back(tokens[i + k].text);
            auto it = phrases_.find(key);
            if (it == phrases_.end()) continue;
            out.push_back({it->second.type, it->second.ref, tokens[i].begin, tokens[i + len - 1].end});
            i += len;
            found = true;
        }
        if (!found) ++i;
    }
    return out;
}

}  // namespace spa
