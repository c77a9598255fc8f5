#pragma once

#include <map>
#include <string>
#include <vector>

#include "qrex/corpus.hpp"
#include "qrex/retrieval.hpp"

namespace qrex {

struct CentralitySpec {
    int feedback_depth = 10;  // questions retrieved as centrality evidence
    int iters = 12;           // fixed-point iterations
    double c_idf = 1.0;       // idf regulator of didf
    double damping = 0.85;
};

/// 1-2 question terms carrying the question's intent.
struct CentralWordSet {
    std::string before_idf;  // argmax of the centrality vector
    std::string after_idf;   // argmax after the didf reweighting
    std::vector<std::string> words;

    bool has_two() const { return words.size() == 2; }
};

/// Fixed-point term importance over the distinct question terms: association
/// weights are document-level co-occurrence counts within the feedback
/// questions (plus-one smoothed, row-normalized), iterated as
///   A <- normalize(damping * W * A + (1 - damping) * f)
/// with f the normalized feedback-frequency vector. A is non-negative and
/// sums to 1.
std::map<std::string, double> term_centrality(const Question& question,
                                              const std::vector<const Question*>& feedback,
                                              const CentralitySpec& spec);

/// didf(t) = idf(t) / (c + idf(t)), in [0, 1), monotone in idf.
double didf(const std::string& term, const CollectionStats& stats, double c_idf);

/// Retrieves feedback evidence, takes the centrality argmax before and after
/// the didf reweighting, and returns both words (one when they coincide).
/// Argmax ties break on the earliest token position.
CentralWordSet central_words(const Question& question, const Corpus& corpus,
                             const CentralitySpec& spec,
                             FeedbackScorer scorer = FeedbackScorer::kl,
                             const ScoringParams& params = {});

}  // namespace qrex
