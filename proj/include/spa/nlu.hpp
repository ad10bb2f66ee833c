#pragma once
//
// Shallow semantic parsing: training data generated from the lexicon, a
// multinomial naive Bayes intent classifier, and gazetteer entity extraction.
//

#include "spa/lexicon.hpp"

#include <json.hpp>

#include <cstdint>
#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace spa {

class NluError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainingExample {
    std::string text;
    Intent intent = Intent::Fallback;
    std::vector<Nle> spans;
};

struct TrainingOptions {
    std::size_t per_intent_cap = 40;
    std::size_t combination_cap = 5000;  // per template, before sampling
    double vocative_rate = 0.25;         // share of questions prefixed with an addressee name
    double reply_rate = 0.2;             // share of answers prefixed with "Yes, " / "No, "
    std::vector<std::string> exempt_entities;  // entities without lexicon entries (agents)
};

/// Labels a lexicon can produce examples for: template intents plus sample keys.
std::vector<Intent> lexicon_intents(const Lexicon& lexicon);

std::vector<TrainingExample> generate_training_data(const Lexicon& lexicon, const DomainSpec& spec,
                                                    std::uint64_t seed, const TrainingOptions& options = {});

/// Seed-stable 50/50 split per intent: first = training half, second = held out.
std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> split_corpus(
    const std::vector<TrainingExample>& corpus, std::uint64_t seed);

/// Feature extraction shared by training and classification. Entity, value
/// and addressee mentions become placeholders; predicate and attribute words
/// become kind markers, so the model learns sentence shapes rather than names.
std::vector<std::string> intent_features(std::string_view text, const Gazetteer& gazetteer);

class IntentModel {
public:
    /// Errors when a required label has no example. By default all nine are required.
    static IntentModel train(const std::vector<TrainingExample>& examples, const Gazetteer& gazetteer,
                             const std::vector<Intent>& required = all_intents());
    static std::vector<Intent> all_intents();

    /// Most probable intent and its posterior. Without `in_domain_allowed`
    /// only the out-of-domain labels compete.
    std::pair<Intent, double> classify(const std::vector<std::string>& features, bool in_domain_allowed = true) const;

    nlohmann::json to_json() const;
    bool operator==(const IntentModel&) const = default;

private:
    std::array<double, kIntentCount> log_prior_{};
    std::array<double, kIntentCount> log_unseen_{};
    std::map<std::string, std::array<double, kIntentCount>> log_likelihood_;
};

struct ParsedUtterance {
    Intent intent = Intent::Fallback;
    double confidence = 0.0;
    std::vector<Nle> nles;
    bool negated = false;
    std::optional<std::string> addressee;
};

class Parser {
public:
    Parser(const Lexicon& lexicon, const DomainSpec& spec, std::uint64_t seed, const TrainingOptions& options = {},
           double fallback_threshold = 0.4);
    /// Trains on a given corpus instead of generating one.
    Parser(const Lexicon& lexicon, const std::vector<TrainingExample>& corpus, double fallback_threshold = 0.4);

    ParsedUtterance parse(std::string_view text) const;
    const IntentModel& model() const { return model_; }
    const Gazetteer& gazetteer() const { return gazetteer_; }

private:
    Gazetteer gazetteer_;
    IntentModel model_;
    double threshold_;
};

struct NluEvaluation {
    std::size_t total = 0;
    std::size_t intent_correct = 0;
    std::size_t nle_exact = 0;
    std::vector<std::string> failures;

    double intent_accuracy() const { return total ? double(intent_correct) / double(total) : 1.0; }
    double nle_accuracy() const { return total ? double(nle_exact) / double(total) : 1.0; }
};

NluEvaluation evaluate(const Parser& parser, const std::vector<TrainingExample>& held_out);

}  // namespace spa
