#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "qrex/corpus.hpp"
#include "qrex/embeddings.hpp"
#include "qrex/retrieval.hpp"

namespace qrex {

enum class TermOrigin { base, word_expansion, centroid, elmo_feedback, prf };

std::string_view to_string(TermOrigin origin);

struct Contribution {
    std::string term;
    TermOrigin origin = TermOrigin::base;
    double mass = 0.0;
    std::string source;  // base word behind a word_expansion entry
};

/// Input question plus its expanded language model. Per-term contribution
/// masses sum to the model probabilities; total mass sums to 1.
struct ExpandedQuery {
    std::string query_id;
    std::string method;
    LanguageModel lm;
    std::vector<Contribution> contributions;
    std::vector<std::string> flags;  // degradations and fallbacks taken
};

struct ExpansionParams {
    double alpha_al = 0.4;     // similarity weight of per-word expansion counts
    int k_words = 2;           // expansion words per base word
    int v_words = 9;           // centroid expansion vocabulary size
    double lambda_kuzi = 0.65; // original-model weight in centroid interpolation
    int k_questions = 5;       // contextual feedback set size
    double alpha_elmo = 0.3;   // feedback weight in contextual interpolation
    double alpha_prf = 0.3;    // contextual feedback weight in the fused model
    double beta_prf = 0.2;     // PRF feedback weight in the fused model
    int prf_depth = 2;         // feedback questions for PRF
    double prf_weight = 0.5;   // feedback weight of the standalone PRF model
    double smm_lambda = 0.5;   // background weight inside the mixture model
    int smm_iters = 20;
};

struct BaseExpansion {
    std::string base;
    double base_count = 0.0;
    /// Renormalized expansion counts; sums back to base_count exactly under
    /// left-to-right addition.
    std::vector<std::pair<std::string, double>> term_counts;
};

/// Per-base expansion counts before the final sum-normalization. Bases that
/// are excluded, unembedded, or without positive-similarity neighbors are
/// omitted (they keep only their own count).
std::vector<BaseExpansion> word_expansion_counts(const Question& question,
                                                 const EmbeddingTable& table,
                                                 const CollectionStats& stats,
                                                 const ExpansionParams& params,
                                                 const std::set<std::string>& exclude = {});

/// Word-by-word expansion: each base word contributes its k nearest embedding
/// neighbors, weighted by similarity and renormalized so the expansion counts
/// of a base sum to the base count; base words keep their original counts.
ExpandedQuery expand_word_by_word(const Question& question, const EmbeddingTable& table,
                                  const CollectionStats& stats, const ExpansionParams& params,
                                  const std::set<std::string>& exclude = {});

/// Whole-question expansion: exp(cosine) of every collection term against the
/// question centroid, top v sum-normalized, interpolated with the MLE model.
ExpandedQuery expand_centroid(const Question& question, const EmbeddingTable& table,
                              const CollectionStats& stats, const ExpansionParams& params,
                              const std::set<std::string>& exclude = {});

/// Simple-mixture feedback model: EM on the concatenated feedback counts
/// against the collection background. Appends the log-likelihood after
/// initialization and after every iteration when a trace is supplied.
LanguageModel smm_feedback_lm(const std::vector<const Question*>& feedback,
                              const CollectionStats& stats, const ExpansionParams& params,
                              std::vector<double>* log_likelihood_trace = nullptr);

/// Standalone pseudo-relevance feedback: top prf_depth questions under the
/// base scorer feed the mixture model; result interpolated at prf_weight.
ExpandedQuery expand_prf(const Question& question, const Corpus& corpus,
                         const ScoringParams& scoring, const ExpansionParams& params,
                         FeedbackScorer scorer = FeedbackScorer::kl);

struct ContextualFeedback {
    std::vector<std::string> ids;
    bool intersection_fallback = false;  // exclusion produced nothing usable
};

/// Feedback set of the contextual-similarity expansion. One excluded term
/// applies to input and candidates alike; two excluded terms produce one
/// top-k set per term whose intersection is the feedback set, falling back
/// to the unexcluded top-k when the intersection is empty.
ContextualFeedback contextual_feedback_set(const Question& question, const Corpus& corpus,
                                           const ContextualStore& store, std::size_t k,
                                           const std::set<std::string>& exclude_central = {});

/// Similar-question expansion: MLE over the contextual feedback set,
/// interpolated with the question model at alpha_elmo.
ExpandedQuery expand_similar_questions(const Question& question, const Corpus& corpus,
                                       const ContextualStore& store,
                                       const ExpansionParams& params,
                                       const std::set<std::string>& exclude_central = {});

/// Three-way interpolation of the question model, the contextual feedback
/// model and the mixture-model PRF feedback, weighted (1-a-b, a, b).
ExpandedQuery expand_similar_questions_prf(const Question& question, const Corpus& corpus,
                                           const ContextualStore& store,
                                           const ScoringParams& scoring,
                                           const ExpansionParams& params,
                                           FeedbackScorer scorer = FeedbackScorer::kl,
                                           const std::set<std::string>& exclude_central = {});

}  // namespace qrex
