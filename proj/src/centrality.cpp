#include "qrex/centrality.hpp"

#include <algorithm>
#include <set>

namespace qrex {
namespace {

void validate(const CentralitySpec& spec) {
    if (spec.feedback_depth < 1) throw ConfigError("centrality feedback_depth must be at least 1");
    if (spec.iters < 1) throw ConfigError("centrality iters must be at least 1");
    if (!(spec.c_idf > 0.0)) throw ConfigError("c_idf must be positive");
    if (!(spec.damping > 0.0 && spec.damping < 1.0)) {
        throw ConfigError("damping must be in (0, 1)");
    }
}

/// Distinct question terms in first-occurrence order, so argmax ties resolve
/// to the earliest token position.
std::vector<std::string> distinct_terms(const Question& question) {
    std::vector<std::string> terms;
    std::set<std::string> seen;
    for (const std::string& t : question.tokens) {
        if (seen.insert(t).second) terms.push_back(t);
    }
    return terms;
}

}  // namespace

std::map<std::string, double> term_centrality(const Question& question,
                                              const std::vector<const Question*>& feedback,
                                              const CentralitySpec& spec) {
    validate(spec);
    if (question.tokens.empty()) throw DataError("term_centrality: empty question");
    if (feedback.empty()) throw DataError("term_centrality: empty feedback set");

    std::vector<std::string> terms = distinct_terms(question);
    std::size_t n = terms.size();
    if (n == 1) return {{terms[0], 1.0}};

    // Document-level co-occurrence within the feedback set, plus-one smoothed.
    std::vector<std::vector<double>> assoc(n, std::vector<double>(n, 1.0));
    std::vector<double> freq(n, 0.0);
    for (const Question* doc : feedback) {
        std::vector<std::size_t> present;
        for (std::size_t i = 0; i < n; ++i) {
            int c = count_of(*doc, terms[i]);
            if (c > 0) present.push_back(i);
            freq[i] += static_cast<double>(c);
        }
        for (std::size_t i : present) {
            for (std::size_t j : present) assoc[i][j] += 1.0;
        }
    }
    for (std::vector<double>& row : assoc) {
        double sum = 0.0;
        for (double w : row) sum += w;
        for (double& w : row) w /= sum;
    }

    double freq_sum = 0.0;
    for (double f : freq) freq_sum += f;
    std::vector<double> prior(n, 1.0 / static_cast<double>(n));
    if (freq_sum > 0.0) {
        for (std::size_t i = 0; i < n; ++i) prior[i] = freq[i] / freq_sum;
    }

    std::vector<double> centrality(n, 1.0 / static_cast<double>(n));
    for (int iter = 0; iter < spec.iters; ++iter) {
        std::vector<double> next(n, 0.0);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double walked = 0.0;
            for (std::size_t j = 0; j < n; ++j) walked += assoc[i][j] * centrality[j];
            next[i] = spec.damping * walked + (1.0 - spec.damping) * prior[i];
            sum += next[i];
        }
        for (std::size_t i = 0; i < n; ++i) next[i] /= sum;
        centrality = std::move(next);
    }

    std::map<std::string, double> result;
    for (std::size_t i = 0; i < n; ++i) result[terms[i]] = centrality[i];
    return result;
}

double didf(const std::string& term, const CollectionStats& stats, double c_idf) {
    if (!(c_idf > 0.0)) throw ConfigError("c_idf must be positive");
    double value = idf(term, stats);
    return value / (c_idf + value);
}

CentralWordSet central_words(const Question& question, const Corpus& corpus,
                             const CentralitySpec& spec, FeedbackScorer scorer,
                             const ScoringParams& params) {
    validate(spec);
    if (question.tokens.empty()) throw DataError("central_words: empty question");

    std::vector<const Question*> feedback = retrieve_feedback(
        question, corpus, static_cast<std::size_t>(spec.feedback_depth), scorer, params);
    std::map<std::string, double> centrality = term_centrality(question, feedback, spec);

    std::vector<std::string> terms = distinct_terms(question);
    auto argmax = [&](auto&& value_of) {
        std::string best = terms.front();
        double best_value = value_of(best);
        for (std::size_t i = 1; i < terms.size(); ++i) {
            double v = value_of(terms[i]);
            if (v > best_value) {
                best_value = v;
                best = terms[i];
            }
        }
        return best;
    };

    CentralWordSet result;
    result.before_idf = argmax([&](const std::string& t) { return centrality.at(t); });
    result.after_idf = argmax([&](const std::string& t) {
        return centrality.at(t) * didf(t, corpus.stats(), spec.c_idf);
    });
    result.words.push_back(result.before_idf);
    if (result.after_idf != result.before_idf) result.words.push_back(result.after_idf);
    return result;
}

}  // namespace qrex
