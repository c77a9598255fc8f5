#include "qrex/expansion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qrex {
namespace {

// Weighted components assembled into one model, dropping zero-mass terms so a
// degenerate weight reproduces the surviving component bit-for-bit.
struct WeightedComponent {
    double weight;
    const LanguageModel* lm;
    TermOrigin origin;
};

void assemble(ExpandedQuery& out, const std::vector<WeightedComponent>& components) {
    for (const WeightedComponent& c : components) {
        if (c.weight == 0.0) continue;
        for (const auto& [term, p] : c.lm->probs) {
            double mass = c.weight * p;
            if (mass == 0.0) continue;
            out.lm.probs[term] += mass;
            out.contributions.push_back({term, c.origin, mass, ""});
        }
    }
}

// Sets the last entry to the exact remainder and nudges it until the plain
// left-to-right sum reproduces the target bit-for-bit.
void close_to_target(std::vector<std::pair<std::string, double>>& terms, double target) {
    if (terms.empty()) return;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < terms.size(); ++i) acc += terms[i].second;
    terms.back().second = target - acc;

    while (!terms.empty() && terms.back().second <= 0.0) {
        double spill = terms.back().second;
        terms.pop_back();
        if (!terms.empty()) terms.back().second += spill;
    }
    auto total = [&] {
        double sum = 0.0;
        for (const auto& [_, count] : terms) sum += count;
        return sum;
    };
    for (int guard = 0; guard < 8 && !terms.empty() && total() != target; ++guard) {
        double direction = total() < target ? std::numeric_limits<double>::infinity()
                                            : -std::numeric_limits<double>::infinity();
        terms.back().second = std::nextafter(terms.back().second, direction);
    }
}

std::set<std::string> collection_vocabulary(const CollectionStats& stats) {
    std::set<std::string> vocab;
    for (const auto& [term, _] : stats.collection_count) vocab.insert(term);
    return vocab;
}

LanguageModel feedback_mle(const std::vector<const Question*>& feedback) {
    std::vector<std::string> tokens;
    for (const Question* q : feedback) {
        tokens.insert(tokens.end(), q->tokens.begin(), q->tokens.end());
    }
    return mle_lm(std::span<const std::string>(tokens));
}

}  // namespace

std::string_view to_string(TermOrigin origin) {
    switch (origin) {
        case TermOrigin::base: return "base";
        case TermOrigin::word_expansion: return "word-expansion";
        case TermOrigin::centroid: return "centroid";
        case TermOrigin::elmo_feedback: return "elmo-feedback";
        case TermOrigin::prf: return "prf";
    }
    return "unknown";
}

std::vector<BaseExpansion> word_expansion_counts(const Question& question,
                                                 const EmbeddingTable& table,
                                                 const CollectionStats& stats,
                                                 const ExpansionParams& params,
                                                 const std::set<std::string>& exclude) {
    if (params.k_words < 1) throw ConfigError("k_words must be at least 1");
    if (!(params.alpha_al >= 0.0 && params.alpha_al <= 1.0)) {
        throw ConfigError("alpha_al must be in [0, 1]");
    }
    std::set<std::string> vocab = collection_vocabulary(stats);

    std::vector<BaseExpansion> expansions;
    for (const auto& [base, count] : question.term_counts) {
        if (exclude.count(base) > 0) continue;
        std::vector<WordSim> neighbors =
            top_k_similar_words(base, static_cast<std::size_t>(params.k_words), table, vocab);
        std::erase_if(neighbors, [](const WordSim& w) { return w.sim <= 0.0; });
        if (neighbors.empty()) continue;

        BaseExpansion expansion;
        expansion.base = base;
        expansion.base_count = static_cast<double>(count);
        double raw_sum = 0.0;
        std::vector<double> raw(neighbors.size());
        for (std::size_t i = 0; i < neighbors.size(); ++i) {
            raw[i] = params.alpha_al * expansion.base_count * neighbors[i].sim;
            raw_sum += raw[i];
        }
        if (raw_sum <= 0.0) {
            // alpha = 0 zeroes every raw count; the renormalization cancels
            // alpha anyway, so fall back to similarity-proportional shares.
            raw_sum = 0.0;
            for (std::size_t i = 0; i < neighbors.size(); ++i) {
                raw[i] = neighbors[i].sim;
                raw_sum += raw[i];
            }
        }
        for (std::size_t i = 0; i < neighbors.size(); ++i) {
            expansion.term_counts.emplace_back(neighbors[i].term,
                                               raw[i] / raw_sum * expansion.base_count);
        }
        close_to_target(expansion.term_counts, expansion.base_count);
        if (!expansion.term_counts.empty()) expansions.push_back(std::move(expansion));
    }
    return expansions;
}

ExpandedQuery expand_word_by_word(const Question& question, const EmbeddingTable& table,
                                  const CollectionStats& stats, const ExpansionParams& params,
                                  const std::set<std::string>& exclude) {
    ExpandedQuery out;
    out.query_id = question.id;
    out.method = "expAL";

    std::map<std::string, double> counts;
    for (const auto& [term, count] : question.term_counts) {
        counts[term] += static_cast<double>(count);
    }
    std::vector<BaseExpansion> expansions =
        word_expansion_counts(question, table, stats, params, exclude);
    for (const BaseExpansion& expansion : expansions) {
        for (const auto& [term, count] : expansion.term_counts) counts[term] += count;
    }

    double total = 0.0;
    for (const auto& [_, count] : counts) total += count;
    for (const auto& [term, count] : counts) out.lm.probs[term] = count / total;

    for (const auto& [term, count] : question.term_counts) {
        out.contributions.push_back(
            {term, TermOrigin::base, static_cast<double>(count) / total, ""});
    }
    for (const BaseExpansion& expansion : expansions) {
        for (const auto& [term, count] : expansion.term_counts) {
            out.contributions.push_back(
                {term, TermOrigin::word_expansion, count / total, expansion.base});
        }
    }
    return out;
}

ExpandedQuery expand_centroid(const Question& question, const EmbeddingTable& table,
                              const CollectionStats& stats, const ExpansionParams& params,
                              const std::set<std::string>& exclude) {
    if (params.v_words < 1) throw ConfigError("v_words must be at least 1");
    if (!(params.lambda_kuzi >= 0.0 && params.lambda_kuzi <= 1.0)) {
        throw ConfigError("lambda_kuzi must be in [0, 1]");
    }

    ExpandedQuery out;
    out.query_id = question.id;
    out.method = "expKuzi";
    LanguageModel original = mle_lm(question);

    QuestionVector centroid = question_centroid(question, table, exclude);
    if (centroid.is_zero) {
        out.flags.push_back("centroid-degenerate");
        assemble(out, {{1.0, &original, TermOrigin::base}});
        return out;
    }

    // exp(cosine) of every embedded collection term against the centroid.
    std::vector<WordSim> scores;
    for (const auto& [term, _] : stats.collection_count) {
        const std::vector<double>* vec = table.find_normalized(term);
        if (!vec) continue;
        scores.push_back({term, std::exp(cosine(*vec, centroid.values))});
    }
    if (scores.empty()) {
        out.flags.push_back("no-embedded-vocabulary");
        assemble(out, {{1.0, &original, TermOrigin::base}});
        return out;
    }
    auto by_score = [](const WordSim& a, const WordSim& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.term < b.term;
    };
    std::size_t v = std::min<std::size_t>(scores.size(), static_cast<std::size_t>(params.v_words));
    std::partial_sort(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(v),
                      scores.end(), by_score);
    scores.resize(v);

    double sum = 0.0;
    for (const WordSim& s : scores) sum += s.sim;
    LanguageModel centroid_lm;
    for (const WordSim& s : scores) centroid_lm.probs[s.term] = s.sim / sum;

    assemble(out, {{params.lambda_kuzi, &original, TermOrigin::base},
                   {1.0 - params.lambda_kuzi, &centroid_lm, TermOrigin::centroid}});
    return out;
}

LanguageModel smm_feedback_lm(const std::vector<const Question*>& feedback,
                              const CollectionStats& stats, const ExpansionParams& params,
                              std::vector<double>* log_likelihood_trace) {
    if (feedback.empty()) throw DataError("smm_feedback_lm: empty feedback set");
    if (!(params.smm_lambda > 0.0 && params.smm_lambda < 1.0)) {
        throw ConfigError("smm_lambda must be in (0, 1)");
    }
    double lambda = params.smm_lambda;

    std::map<std::string, double> counts;
    double total = 0.0;
    for (const Question* q : feedback) {
        for (const std::string& t : q->tokens) {
            counts[t] += 1.0;
            total += 1.0;
        }
    }
    if (total == 0.0) throw DataError("smm_feedback_lm: feedback has no tokens");

    std::map<std::string, double> topic;
    for (const auto& [term, count] : counts) topic[term] = count / total;

    auto log_likelihood = [&] {
        double ll = 0.0;
        for (const auto& [term, count] : counts) {
            ll += count * std::log((1.0 - lambda) * topic[term] +
                                   lambda * stats.collection_prob(term));
        }
        return ll;
    };
    if (log_likelihood_trace) log_likelihood_trace->push_back(log_likelihood());

    for (int iter = 0; iter < params.smm_iters; ++iter) {
        double weight_sum = 0.0;
        std::map<std::string, double> weighted;
        for (const auto& [term, count] : counts) {
            double topic_part = (1.0 - lambda) * topic[term];
            double denom = topic_part + lambda * stats.collection_prob(term);
            double z = denom > 0.0 ? topic_part / denom : 0.0;
            double w = count * z;
            weighted[term] = w;
            weight_sum += w;
        }
        if (weight_sum <= 0.0) break;
        for (auto& [term, w] : weighted) topic[term] = w / weight_sum;
        if (log_likelihood_trace) log_likelihood_trace->push_back(log_likelihood());
    }

    LanguageModel lm;
    for (const auto& [term, p] : topic) {
        if (p > 0.0) lm.probs[term] = p;
    }
    return lm;
}

ExpandedQuery expand_prf(const Question& question, const Corpus& corpus,
                         const ScoringParams& scoring, const ExpansionParams& params,
                         FeedbackScorer scorer) {
    if (params.prf_depth < 1) throw ConfigError("prf_depth must be at least 1");
    if (!(params.prf_weight >= 0.0 && params.prf_weight <= 1.0)) {
        throw ConfigError("prf_weight must be in [0, 1]");
    }
    ExpandedQuery out;
    out.query_id = question.id;
    out.method = "lm-prf";
    LanguageModel original = mle_lm(question);

    std::vector<const Question*> feedback = retrieve_feedback(
        question, corpus, static_cast<std::size_t>(params.prf_depth), scorer, scoring);
    if (feedback.empty()) {
        out.flags.push_back("no-feedback");
        assemble(out, {{1.0, &original, TermOrigin::base}});
        return out;
    }
    LanguageModel theta_f = smm_feedback_lm(feedback, corpus.stats(), params);
    assemble(out, {{1.0 - params.prf_weight, &original, TermOrigin::base},
                   {params.prf_weight, &theta_f, TermOrigin::prf}});
    return out;
}

ContextualFeedback contextual_feedback_set(const Question& question, const Corpus& corpus,
                                           const ContextualStore& store, std::size_t k,
                                           const std::set<std::string>& exclude_central) {
    auto unexcluded = [&] {
        QuestionVector input = contextual_question_vector(question, store);
        return top_k_similar_questions(input, corpus, store, k);
    };

    ContextualFeedback feedback;
    if (exclude_central.empty()) {
        feedback.ids = unexcluded();
        return feedback;
    }

    std::vector<std::vector<std::string>> per_term;
    for (const std::string& term : exclude_central) {
        QuestionVector input = contextual_question_vector(question, store, term);
        if (input.is_zero) {
            // Every input token matched the excluded term; nothing to rank by.
            feedback.ids = unexcluded();
            feedback.intersection_fallback = true;
            return feedback;
        }
        per_term.push_back(top_k_similar_questions(input, corpus, store, k, term));
    }
    if (per_term.size() == 1) {
        feedback.ids = std::move(per_term.front());
        return feedback;
    }

    // Keep the first ranking's order, filtered by membership in every other set.
    for (const std::string& id : per_term.front()) {
        bool everywhere = std::all_of(per_term.begin() + 1, per_term.end(),
                                      [&](const std::vector<std::string>& ids) {
                                          return std::find(ids.begin(), ids.end(), id) !=
                                                 ids.end();
                                      });
        if (everywhere) feedback.ids.push_back(id);
    }
    if (feedback.ids.empty()) {
        feedback.ids = unexcluded();
        feedback.intersection_fallback = true;
    }
    return feedback;
}

ExpandedQuery expand_similar_questions(const Question& question, const Corpus& corpus,
                                       const ContextualStore& store,
                                       const ExpansionParams& params,
                                       const std::set<std::string>& exclude_central) {
    if (params.k_questions < 1) throw ConfigError("k_questions must be at least 1");
    if (!(params.alpha_elmo >= 0.0 && params.alpha_elmo <= 1.0)) {
        throw ConfigError("alpha_elmo must be in [0, 1]");
    }

    ExpandedQuery out;
    out.query_id = question.id;
    out.method = "expELMo";
    LanguageModel original = mle_lm(question);

    ContextualFeedback feedback = contextual_feedback_set(
        question, corpus, store, static_cast<std::size_t>(params.k_questions), exclude_central);
    if (feedback.intersection_fallback) out.flags.push_back("feedback-intersection-fallback");
    if (feedback.ids.empty()) {
        out.flags.push_back("no-feedback");
        assemble(out, {{1.0, &original, TermOrigin::base}});
        return out;
    }

    std::vector<const Question*> questions;
    for (const std::string& id : feedback.ids) questions.push_back(&corpus.at(id));
    LanguageModel theta = feedback_mle(questions);

    assemble(out, {{1.0 - params.alpha_elmo, &original, TermOrigin::base},
                   {params.alpha_elmo, &theta, TermOrigin::elmo_feedback}});
    return out;
}

ExpandedQuery expand_similar_questions_prf(const Question& question, const Corpus& corpus,
                                           const ContextualStore& store,
                                           const ScoringParams& scoring,
                                           const ExpansionParams& params, FeedbackScorer scorer,
                                           const std::set<std::string>& exclude_central) {
    if (params.alpha_prf < 0.0 || params.beta_prf < 0.0 ||
        params.alpha_prf + params.beta_prf >= 1.0) {
        throw ConfigError("alpha_prf and beta_prf must be non-negative and sum below 1");
    }
    if (params.prf_depth < 1) throw ConfigError("prf_depth must be at least 1");

    ExpandedQuery out;
    out.query_id = question.id;
    out.method = "expELMoPRF";
    LanguageModel original = mle_lm(question);

    ContextualFeedback contextual = contextual_feedback_set(
        question, corpus, store, static_cast<std::size_t>(params.k_questions), exclude_central);
    if (contextual.intersection_fallback) out.flags.push_back("feedback-intersection-fallback");
    LanguageModel theta_contextual;
    if (!contextual.ids.empty()) {
        std::vector<const Question*> questions;
        for (const std::string& id : contextual.ids) questions.push_back(&corpus.at(id));
        theta_contextual = feedback_mle(questions);
    } else {
        out.flags.push_back("no-contextual-feedback");
    }

    std::vector<const Question*> prf_feedback = retrieve_feedback(
        question, corpus, static_cast<std::size_t>(params.prf_depth), scorer, scoring);
    LanguageModel theta_prf;
    if (!prf_feedback.empty()) {
        theta_prf = smm_feedback_lm(prf_feedback, corpus.stats(), params);
    } else {
        out.flags.push_back("no-prf-feedback");
    }

    assemble(out, {{1.0 - params.alpha_prf - params.beta_prf, &original, TermOrigin::base},
                   {params.alpha_prf, &theta_contextual, TermOrigin::elmo_feedback},
                   {params.beta_prf, &theta_prf, TermOrigin::prf}});
    return out;
}

}  // namespace qrex
