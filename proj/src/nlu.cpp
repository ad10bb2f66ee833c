#include "spa/nlu.hpp"

#include <algorithm>
#include <limits>
#include <functional>
#include <numeric>
#include <cmath>
#include <random>
#include <iostream>
#include <set>

namespace spa {

using nlohmann::json;

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string type_of(const DomainSpec& spec, const std::string& entity) {
    auto id = spec.find_entity(entity);
    return id ? lower(spec.entity(*id).type) : std::string{};
}

bool passes_filter(const DomainSpec& spec, const std::string& entity, const TemplateSlot& slot) {
    if (slot.type_filters.empty()) return true;
    const auto t = type_of(spec, entity);
    return std::find(slot.type_filters.begin(), slot.type_filters.end(), t) != slot.type_filters.end();
}

template <class Rng>
void shuffle(std::vector<std::size_t>& v, Rng& rng) {
    // Fisher-Yates with a plain modulo draw: std::shuffle's distribution is
    // implementation-defined, this keeps corpora identical across toolchains.
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng() % i]);
}

struct Candidate {
    const LexEntry* owner;
    const SentenceTemplate* templ;
    SlotFill fill;
};

// Cartesian product of per-slot choices, in order, stopping at `cap`.
void product(const std::vector<std::vector<std::string>>& choices, std::size_t cap,
             const std::function<void(const std::vector<std::string>&)>& emit) {
    if (choices.empty()) {
        emit({});
        return;
    }
    for (const auto& c : choices)
        if (c.empty()) return;
    std::vector<std::size_t> idx(choices.size(), 0);
    std::vector<std::string> row(choices.size());
    for (std::size_t n = 0; n < cap; ++n) {
        for (std::size_t k = 0; k < choices.size(); ++k) row[k] = choices[k][idx[k]];
        emit(row);
        std::size_t k = choices.size();
        while (k > 0) {
            --k;
            if (++idx[k] < choices[k].size()) break;
            idx[k] = 0;
            if (k == 0) return;
        }
    }
}

bool distinct(const std::vector<std::string>& v) {
    std::set<std::string> s(v.begin(), v.end());
    return s.size() == v.size();
}

void candidates_for_template(const Lexicon& lex, const DomainSpec& spec, const LexEntry& owner,
                             const SentenceTemplate& t, const TrainingOptions& opt, std::vector<Candidate>& out) {
    std::vector<std::vector<std::string>> choices;
    std::vector<std::string> values;
    auto has_entry = [&](const std::string& id) {
        return lex.entity_entry(id) != nullptr &&
               std::find(opt.exempt_entities.begin(), opt.exempt_entities.end(), id) == opt.exempt_entities.end();
    };
    if (owner.ref.kind == RefKind::Predicate) {
        auto p = spec.find_predicate(owner.ref.name);
        if (!p) return;
        const auto& schema = spec.predicates[*p];
        auto args = Lexicon::slot_arguments(t, schema, spec);
        if (!args) return;
        std::size_t k = 0;
        for (const auto& piece : t.pieces) {
            if (!piece.slot || piece.slot->kind != SlotKind::PredicateEntity) continue;
            std::vector<std::string> ids;
            for (EntityId e : spec.candidates_for(schema.slots[(*args)[k]])) {
                const auto& id = spec.entity(e).id;
                if (has_entry(id) && passes_filter(spec, id, *piece.slot)) ids.push_back(id);
            }
            choices.push_back(std::move(ids));
            ++k;
        }
    } else if (owner.ref.kind == RefKind::Attribute) {
        for (const auto& piece : t.pieces) {
            if (!piece.slot || piece.slot->kind != SlotKind::AttributeEntity) continue;
            std::vector<std::string> ids;
            for (const auto& e : spec.entities) {
                const auto* et = spec.find_type(e.type);
                if (!et || !et->find_attribute(owner.ref.name)) continue;
                if (has_entry(e.id) && passes_filter(spec, e.id, *piece.slot)) ids.push_back(e.id);
            }
            choices.push_back(std::move(ids));
        }
        if (t.has_value_slot()) {
            for (const auto& e : lex.entries)
                if (e.ref.kind == RefKind::Value && e.ref.attribute == owner.ref.name) values.push_back(e.ref.name);
            if (values.empty()) return;
        }
    } else {
        return;
    }
    const bool wants_value = t.has_value_slot();
    const std::size_t before = out.size();
    product(choices, opt.combination_cap, [&](const std::vector<std::string>& row) {
        if (!distinct(row)) return;
        if (wants_value) {
            for (const auto& v : values) out.push_back({&owner, &t, SlotFill{row, v, {}}});
        } else {
            out.push_back({&owner, &t, SlotFill{row, {}, {}}});
        }
    });
    if (out.size() == before && (!choices.empty() || wants_value))
        std::clog << "warning: template '" << t.text << "' has no compatible binding, skipped\n";
}

}  // namespace

std::vector<TrainingExample> generate_training_data(const Lexicon& lexicon, const DomainSpec& spec,
                                                    std::uint64_t seed, const TrainingOptions& options) {
    std::mt19937_64 rng(seed);
    std::array<std::vector<Candidate>, kIntentCount> by_intent;
    for (const auto& e : lexicon.entries)
        for (const auto& t : e.templates)
            candidates_for_template(lexicon, spec, e, t, options, by_intent[static_cast<std::size_t>(t.intent)]);

    const auto& names = phonetic_alphabet();
    std::vector<TrainingExample> out;
    for (std::size_t i = 0; i < kIntentCount; ++i) {
        const auto intent = static_cast<Intent>(i);
        auto& cands = by_intent[i];
        std::vector<std::size_t> order(cands.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle(order, rng);
        const std::size_t n = std::min(options.per_intent_cap, order.size());
        for (std::size_t k = 0; k < n; ++k) {
            auto& c = cands[order[k]];
            const bool addresses = c.templ->count(SlotKind::Addressee) > 0;
            if (addresses) c.fill.addressee = names[rng() % names.size()];
            const bool vocative = !addresses && is_question(intent) &&
                                  double(rng() % 1000) < options.vocative_rate * 1000.0;
            // Replies to confirmation questions are spoken as "Yes, ..." / "No, ...".
            const bool reply = intent == Intent::PredicateAnswer && c.templ->count(SlotKind::PredicateEntity) > 0 &&
                               double(rng() % 1000) < options.reply_rate * 1000.0;
            auto r = lexicon.realize(*c.owner, *c.templ, c.fill, !vocative && !reply);
            TrainingExample ex{std::move(r.text), intent, std::move(r.spans)};
            std::string prefix;
            if (vocative) prefix = names[rng() % names.size()] + ", ";
            if (reply) prefix = c.templ->negated ? "No, " : "Yes, ";
            if (!prefix.empty()) {
                for (auto& s : ex.spans) {
                    s.begin += prefix.size();
                    s.end += prefix.size();
                }
                if (vocative) {
                    const auto name = prefix.substr(0, prefix.size() - 2);
                    ex.spans.insert(ex.spans.begin(), Nle{NleType::Addressee, name, 0, name.size()});
                }
                ex.text = prefix + ex.text;
            }
            out.push_back(std::move(ex));
        }
        // Out-of-domain labels come from the lexicon's sample sentences.
        if (auto it = lexicon.samples.find(intent); it != lexicon.samples.end()) {
            std::vector<std::size_t> sorder(it->second.size());
            std::iota(sorder.begin(), sorder.end(), std::size_t{0});
            shuffle(sorder, rng);
            const std::size_t m = std::min(options.per_intent_cap, sorder.size());
            for (std::size_t k = 0; k < m; ++k) {
                const auto& text = it->second[sorder[k]];
                out.push_back({text, intent, {}});
            }
        }
    }
    return out;
}

std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> split_corpus(
    const std::vector<TrainingExample>& corpus, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
    std::array<std::vector<std::size_t>, kIntentCount> by_intent;
    for (std::size_t i = 0; i < corpus.size(); ++i) by_intent[static_cast<std::size_t>(corpus[i].intent)].push_back(i);
    std::pair<std::vector<TrainingExample>, std::vector<TrainingExample>> out;
    for (auto& idx : by_intent) {
        shuffle(idx, rng);
        // The training half gets the odd one out so small labels stay trainable.
        const std::size_t train = (idx.size() + 1) / 2;
        for (std::size_t k = 0; k < idx.size(); ++k) (k < train ? out.first : out.second).push_back(corpus[idx[k]]);
    }
    return out;
}

std::vector<std::string> intent_features(std::string_view text, const Gazetteer& gazetteer) {
    const auto tokens = tokenize(text);
    const auto nles = gazetteer.match(tokens);
    std::vector<std::string> seq;
    std::vector<std::string> feats;
    std::size_t n = 0;
    for (std::size_t i = 0; i < tokens.size();) {
        while (n < nles.size() && nles[n].end <= tokens[i].begin) ++n;
        if (n < nles.size() && nles[n].begin == tokens[i].begin) {
            switch (nles[n].type) {
                case NleType::KnowledgeEntity: seq.push_back("__ent__"); break;
                case NleType::AttributeInstance: seq.push_back("__val__"); break;
                case NleType::Addressee: seq.push_back("__addr__"); break;
                case NleType::PredicateType: seq.push_back("__pred__"); break;
                case NleType::AttributeType: seq.push_back("__attr__"); break;
            }
            const bool keep_words = nles[n].type == NleType::PredicateType || nles[n].type == NleType::AttributeType;
            while (i < tokens.size() && tokens[i].begin < nles[n].end) {
                if (keep_words) feats.push_back("w:" + tokens[i].text);
                ++i;
            }
            continue;
        }
        seq.push_back(tokens[i].text);
        ++i;
    }
    for (const auto& s : seq) feats.push_back("u:" + s);
    std::string prev = "<s>";
    for (const auto& s : seq) {
        feats.push_back("b:" + prev + " " + s);
        prev = s;
    }
    if (!seq.empty()) feats.push_back("b:" + prev + " </s>");
    // A question mark is the strongest single cue; count it like a few words.
    if (text.find('?') != std::string_view::npos) feats.insert(feats.end(), 3, "?");
    return feats;
}

std::vector<Intent> lexicon_intents(const Lexicon& lexicon) {
    std::set<Intent> seen;
    for (const auto& e : lexicon.entries)
        for (const auto& t : e.templates) seen.insert(t.intent);
    for (const auto& [i, v] : lexicon.samples)
        if (!v.empty()) seen.insert(i);
    return {seen.begin(), seen.end()};
}

std::vector<Intent> IntentModel::all_intents() {
    std::vector<Intent> out;
    for (std::size_t c = 0; c < kIntentCount; ++c) out.push_back(static_cast<Intent>(c));
    return out;
}

IntentModel IntentModel::train(const std::vector<TrainingExample>& examples, const Gazetteer& gazetteer,
                               const std::vector<Intent>& required) {
    std::array<std::size_t, kIntentCount> docs{};
    std::array<double, kIntentCount> totals{};
    std::map<std::string, std::array<double, kIntentCount>> counts;
    for (const auto& ex : examples) {
        const auto c = static_cast<std::size_t>(ex.intent);
        ++docs[c];
        for (const auto& f : intent_features(ex.text, gazetteer)) {
            counts[f][c] += 1.0;
            totals[c] += 1.0;
        }
    }
    std::string missing;
    for (Intent i : required)
        if (docs[static_cast<std::size_t>(i)] == 0) missing += (missing.empty() ? "" : ", ") + std::string(to_string(i));
    if (!missing.empty()) throw NluError("training corpus has no examples for: " + missing);

    IntentModel m;
    const double vocab = static_cast<double>(counts.size());
    const double n = static_cast<double>(examples.size());
    for (std::size_t c = 0; c < kIntentCount; ++c) {
        // Labels without examples can never win.
        m.log_prior_[c] = docs[c] ? std::log(double(docs[c]) / n) : -1e9;
        m.log_unseen_[c] = std::log(1.0 / (totals[c] + vocab));
    }
    for (const auto& [f, cnt] : counts) {
        auto& row = m.log_likelihood_[f];
        for (std::size_t c = 0; c < kIntentCount; ++c) row[c] = std::log((cnt[c] + 1.0) / (totals[c] + vocab));
    }
    return m;
}

std::pair<Intent, double> IntentModel::classify(const std::vector<std::string>& features,
                                                bool in_domain_allowed) const {
    auto score = log_prior_;
    if (!in_domain_allowed)
        for (std::size_t c = 0; c < kIntentCount; ++c)
            if (in_domain(static_cast<Intent>(c))) score[c] = -std::numeric_limits<double>::infinity();
    for (const auto& f : features) {
        auto it = log_likelihood_.find(f);
        if (it == log_likelihood_.end()) continue;  // out of vocabulary
        for (std::size_t c = 0; c < kIntentCount; ++c) score[c] += it->second[c];
    }
    const auto best = static_cast<std::size_t>(std::max_element(score.begin(), score.end()) - score.begin());
    double z = 0.0;
    for (double s : score) z += std::exp(s - score[best]);
    return {static_cast<Intent>(best), 1.0 / z};
}

json IntentModel::to_json() const {
    json j;
    j["log_prior"] = log_prior_;
    j["features"] = log_likelihood_.size();
    return j;
}

Parser::Parser(const Lexicon& lexicon, const DomainSpec& spec, std::uint64_t seed, const TrainingOptions& options,
               double fallback_threshold)
    : Parser(lexicon, generate_training_data(lexicon, spec, seed, options), fallback_threshold) {}

Parser::Parser(const Lexicon& lexicon, const std::vector<TrainingExample>& corpus, double fallback_threshold)
    : gazetteer_(lexicon, phonetic_alphabet()), model_(IntentModel::train(corpus, gazetteer_, lexicon_intents(lexicon))),
      threshold_(fallback_threshold) {}

ParsedUtterance Parser::parse(std::string_view text) const {
    ParsedUtterance out;
    const auto tokens = tokenize(text);
    if (tokens.empty()) return out;
    out.nles = gazetteer_.match(tokens);
    // Domain intents need something from the domain to talk about.
    const bool grounded = std::any_of(out.nles.begin(), out.nles.end(),
                                      [](const Nle& n) { return n.type != NleType::Addressee; });
    auto [intent, conf] = model_.classify(intent_features(text, gazetteer_), grounded);
    out.confidence = conf;
    out.intent = conf < threshold_ ? Intent::Fallback : intent;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const auto& t = tokens[i].text;
        if (t == "not" || t == "never") out.negated = true;
        // "doesn't" tokenizes as "doesn" + "t"
        if (t == "t" && i > 0 && tokens[i - 1].end == tokens[i].begin - 1 && tokens[i - 1].text.ends_with('n'))
            out.negated = true;
    }
    for (const auto& n : out.nles)
        if (n.type == NleType::Addressee) {
            out.addressee = n.ref;
            break;
        }
    return out;
}

NluEvaluation evaluate(const Parser& parser, const std::vector<TrainingExample>& held_out) {
    NluEvaluation ev;
    for (const auto& ex : held_out) {
        ++ev.total;
        const auto p = parser.parse(ex.text);
        const bool intent_ok = p.intent == ex.intent;
        bool nle_ok = p.nles.size() == ex.spans.size();
        for (std::size_t i = 0; nle_ok && i < p.nles.size(); ++i)
            nle_ok = p.nles[i].type == ex.spans[i].type && p.nles[i].ref == ex.spans[i].ref;
        ev.intent_correct += intent_ok;
        ev.nle_exact += nle_ok;
        if (!intent_ok || !nle_ok)
            ev.failures.push_back("'" + ex.text + "': expected " + std::string(to_string(ex.intent)) + ", got " +
                                  std::string(to_string(p.intent)) + (nle_ok ? "" : " (entity mismatch)"));
    }
    return ev;
}

}  // namespace spa
