#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "qrex/corpus.hpp"

namespace qrex {

/// Sparse term distribution; stored entries are positive and sum to 1.
struct LanguageModel {
    std::map<std::string, double> probs;

    double prob(const std::string& term) const;
    /// Throws unless every entry is positive and the mass sums to 1 +- tol.
    void validate(double tol = 1e-9) const;
};

LanguageModel mle_lm(std::span<const std::string> tokens);
LanguageModel mle_lm(const Question& question);

struct ScoringParams {
    double mu = 1000.0;  // Dirichlet pseudo-count
    double bm25_k1 = 1.2;
    double bm25_b = 0.75;
    double translation_beta = 0.3;       // mixing weight of the translation component
    double translation_self_prob = 0.5;  // floor for self-translation mass
    int translation_min_count = 1;       // terms below this collection count get no table row
};

/// KL-divergence retrieval score with Dirichlet smoothing:
///   sum over candidate terms w with query mass of
///     p(w|query) * log(p_seen(w|cand) / (alpha_d * p(w|C)))  +  log alpha_d
/// where p_seen(w|cand) = (count(w,cand) + mu*p(w|C)) / (|cand| + mu) and
/// alpha_d = mu / (|cand| + mu). Rank-equivalent to Dirichlet query likelihood.
double kl_score(const LanguageModel& query_lm, const Question& candidate,
                const CollectionStats& stats, const ScoringParams& params);

double bm25_score(const Question& query, const Question& candidate, const CollectionStats& stats,
                  const ScoringParams& params);

/// Row-stochastic term translation probabilities, source -> (target -> p).
struct TranslationTable {
    std::map<std::string, std::map<std::string, double>> trans;

    const std::map<std::string, double>* row(const std::string& term) const;
    double prob(const std::string& source, const std::string& target) const;
};

/// Co-occurrence mutual information over question+answer pair units: each row
/// is proportional to the positive pointwise MI of the source with its unit
/// co-occurrence partners, then renormalized with the self-translation floor.
/// Terms whose collection count is below min_count get no row; scoring treats
/// rowless sources as identity translations.
TranslationTable build_translation_table(const Corpus& corpus, int min_count, double self_prob);

/// Query likelihood where the candidate model is first passed through the
/// translation table, (1-beta)*p_ml(w|cand) + beta*sum_u p(w|u)*p_ml(u|cand),
/// then Dirichlet-smoothed against p(w|C).
double translation_lm_score(const Question& query, const Question& candidate,
                            const TranslationTable& table, const CollectionStats& stats,
                            const ScoringParams& params);

struct ScoredEntry {
    std::string question_id;
    double score = 0.0;
};

struct RankedList {
    std::string query_id;
    std::vector<ScoredEntry> entries;  // descending score, ties by id ascending
};

/// Scores every corpus question with the given function; deterministic.
RankedList rank(const std::string& query_id, const Corpus& corpus,
                const std::function<double(const Question&)>& score);

RankedList rank_kl(const std::string& query_id, const LanguageModel& query_lm,
                   const Corpus& corpus, const ScoringParams& params);

enum class FeedbackScorer { kl, bm25 };

/// Top `depth` corpus questions under the chosen base scorer, used as
/// pseudo-relevance evidence.
std::vector<const Question*> retrieve_feedback(const Question& question, const Corpus& corpus,
                                               std::size_t depth, FeedbackScorer scorer,
                                               const ScoringParams& params);

/// TREC run format: "<query_id> Q0 <question_id> <rank> <score> <tag>",
/// scores printed with 6 decimal places.
void write_run_file(std::ostream& out, std::span<const RankedList> lists, std::string_view tag);

struct RunFile {
    std::string tag;
    std::vector<RankedList> lists;  // sorted by query id
};

RunFile read_run_file(const std::filesystem::path& path);

}  // namespace qrex
