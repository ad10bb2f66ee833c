#pragma once
//
// Mapping parsed utterances onto beliefs and queries, and composing replies.
//

#include "spa/kb.hpp"
#include "spa/nlg.hpp"
#include "spa/nlu.hpp"

#include <optional>
#include <string>
#include <vector>

namespace spa {

struct AttributeQuery {
    EntityId entity = kUnbound;
    std::string attribute;
    bool operator==(const AttributeQuery&) const = default;
};

struct UtteranceMeaning {
    enum class Kind { InfoQuestion, ConfirmQuestion, Statement, AttrQuestion, OutOfDomain, Unintelligible };
    Kind kind = Kind::Unintelligible;
    std::optional<Literal> literal;          // InfoQuestion (with holes), ConfirmQuestion, Statement
    std::optional<AttributeQuery> query;     // AttrQuestion
    std::optional<AttributeFact> assignment; // attribute Statement
    Intent intent = Intent::Fallback;
    std::optional<std::string> addressee;
};

std::string_view to_string(UtteranceMeaning::Kind k);

/// Human-readable form: "InSpace(Venus, ?)", "Statue(Venus).material=?", ...
std::string describe(const DomainSpec& spec, const UtteranceMeaning& m);

UtteranceMeaning interpret(const ParsedUtterance& parsed, const DomainSpec& spec, const Lexicon& lexicon);

struct Reply {
    std::vector<std::string> texts;
    std::vector<Literal> stated;          // literals asserted by the reply texts
    std::vector<AttributeFact> stated_attributes;
    ChangeReport change;                  // from absorbing a statement
};

/// Answers questions from `kb`, absorbs statements into it, and produces
/// canned replies for everything else.
Reply respond(const UtteranceMeaning& meaning, BeliefState& kb, const Lexicon& lexicon, NlgRng& rng);

ChangeReport absorb(const UtteranceMeaning& meaning, BeliefState& kb);

/// The statement sentence for a grounded literal or attribute fact, for
/// callers that volunteer information.
std::string state(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit, NlgRng& rng);

}  // namespace spa
