#pragma once
//
// Template-based generation of questions and statements from literals and
// attribute facts.
//

#include "spa/lexicon.hpp"

#include <map>
#include <optional>
#include <random>
#include <string>

namespace spa {

class NlgError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Agent id -> unique spoken name ("Alpha", "Bravo", ..., then "Alpha-2").
class PhoneticNameRegistry {
public:
    const std::string& assign(const std::string& agent_id);
    std::optional<std::string> name_of(const std::string& agent_id) const;
    std::optional<std::string> agent_for(std::string_view name) const;
    std::size_t size() const { return names_.size(); }

private:
    std::map<std::string, std::string> names_;
    std::map<std::string, std::string, std::less<>> agents_;
};

using NlgRng = std::mt19937_64;

/// A question about `lit`. Holes are what is asked; a fully grounded literal
/// gives a confirmation question. With an addressee the sentence is either
/// realized through an ADDRESSEE slot or prefixed as a vocative.
std::string generate_question(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit,
                              const std::optional<std::string>& addressee, NlgRng& rng);

/// A statement of a grounded literal; negative literals need a negated template.
std::string generate_statement(const Lexicon& lexicon, const DomainSpec& spec, const Literal& lit, NlgRng& rng,
                               bool capitalize = true);

std::string generate_attribute_question(const Lexicon& lexicon, const DomainSpec& spec, EntityId entity,
                                        const std::string& attribute, const std::optional<std::string>& addressee,
                                        NlgRng& rng);

std::string generate_attribute_statement(const Lexicon& lexicon, const DomainSpec& spec, EntityId entity,
                                         const std::string& attribute, const AttributeValue& value, NlgRng& rng,
                                         bool capitalize = true);

std::string no_knowledge(const Lexicon& lexicon, NlgRng& rng);

}  // namespace spa
