#pragma once
//
// English lexicon for a domain: surface forms for entities, predicates,
// attributes and attribute values, plus sentence templates with slot markup
//
//   [KIND(:QUALIFIER)*]
//   KIND       PREDICATE | PREDICATE-ENTITY | ATTRIBUTE | ATTRIBUTE-ENTITY | ADDRESSEE
//   QUALIFIER  NAME | DEF-ARTICLE-NAME | VALUE | <type filter, e.g. GALLERY>
//

#include "spa/domain.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace spa {

enum class Intent {
    PredicateQuestion,
    PredicateAnswer,
    AttributeQuestion,
    AttributeAnswer,
    Greeting,
    Thanks,
    Farewell,
    Affirmation,
    Fallback,
};

inline constexpr std::size_t kIntentCount = 9;

std::string_view to_string(Intent i);
std::optional<Intent> intent_from_string(std::string_view s);
bool in_domain(Intent i);
bool is_question(Intent i);

enum class NleType { AttributeInstance, AttributeType, PredicateType, KnowledgeEntity, Addressee };

std::string_view to_string(NleType t);

/// A recognized (or annotated) named entity: character span plus canonical ref.
struct Nle {
    NleType type = NleType::KnowledgeEntity;
    std::string ref;  // entity id, predicate name, attribute name, value, or addressee name
    std::size_t begin = 0;
    std::size_t end = 0;
    bool operator==(const Nle&) const = default;
};

enum class RefKind { Entity, Predicate, Attribute, Value };

struct LexRef {
    RefKind kind = RefKind::Entity;
    std::string name;       // entity id, predicate name, attribute name, or value
    std::string attribute;  // for values: the attribute they belong to
};

enum class SlotKind { Predicate, PredicateEntity, Attribute, AttributeEntity, Addressee };

struct TemplateSlot {
    SlotKind kind = SlotKind::PredicateEntity;
    bool def_article = false;
    bool value = false;
    std::vector<std::string> type_filters;  // lowercase
};

struct TemplatePiece {
    std::string text;
    std::optional<TemplateSlot> slot;
};

struct SentenceTemplate {
    std::string text;
    Intent intent = Intent::PredicateAnswer;
    bool negated = false;
    std::vector<TemplatePiece> pieces;

    std::size_t count(SlotKind k) const;
    bool has_value_slot() const;
};

class LexiconError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

SentenceTemplate parse_template(std::string_view text, Intent intent, bool negated = false);

struct LexEntry {
    std::string surface;
    std::string pos;
    std::string article;  // e.g. "the"; empty for proper names
    std::vector<std::string> hints;
    LexRef ref;
    std::vector<SentenceTemplate> templates;
};

/// Entities filling a template's entity slots, in slot order.
struct SlotFill {
    std::vector<std::string> entities;
    std::string value;
    std::string addressee;
};

class Gazetteer;

struct Realization {
    std::string text;
    std::vector<Nle> spans;
};

class Lexicon {
public:
    std::vector<LexEntry> entries;
    std::map<Intent, std::vector<std::string>> responses;  // canned replies for out-of-domain intents
    std::map<Intent, std::vector<std::string>> samples;    // example sentences for out-of-domain intents
    std::vector<std::string> no_knowledge;

    const LexEntry* entity_entry(std::string_view id) const;
    const LexEntry* predicate_entry(std::string_view name) const;
    const LexEntry* attribute_entry(std::string_view name) const;
    const LexEntry* value_entry(std::string_view attribute, std::string_view value) const;

    /// Every entity not in `exempt` has an entry; every reference resolves.
    void validate(const DomainSpec& spec, const std::vector<std::string>& exempt = {}) const;

    /// Argument index each PREDICATE-ENTITY slot binds, or nullopt when the
    /// template does not fit the schema.
    static std::optional<std::vector<std::size_t>> slot_arguments(const SentenceTemplate& t,
                                                                  const PredicateSchema& schema,
                                                                  const DomainSpec& spec);

    /// Renders a template. Spans cover every filled slot and every lexicon
    /// word found in the template's literal text.
    Realization realize(const LexEntry& owner, const SentenceTemplate& t, const SlotFill& fill, bool capitalize = true) const;

    nlohmann::json to_json() const;

private:
    mutable std::shared_ptr<const Gazetteer> literal_matcher_;
    mutable std::size_t matcher_entries_ = 0;
};

Lexicon parse_lexicon(std::string_view text);
Lexicon load_lexicon(const std::string& path);

/// Names used to address agents: Alpha, Bravo, ... (26 entries).
const std::vector<std::string>& phonetic_alphabet();

/// Lowercase alphanumeric runs with their character offsets.
struct Token {
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};
std::vector<Token> tokenize(std::string_view text);

/// Leftmost-longest, case-insensitive matcher over lexicon surfaces and hints
/// (plus addressee names).
class Gazetteer {
public:
    Gazetteer() = default;
    Gazetteer(const Lexicon& lexicon, const std::vector<std::string>& addressees);
    std::vector<Nle> match(std::string_view text) const;
    std::vector<Nle> match(const std::vector<Token>& tokens) const;

private:
    struct Target {
        NleType type;
        std::string ref;
    };
    std::map<std::vector<std::string>, Target> phrases_;
    std::size_t longest_ = 0;
};

}  // namespace spa
