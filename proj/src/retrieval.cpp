#include "qrex/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace qrex {
namespace {

void require_positive_mu(const ScoringParams& params) {
    if (!(params.mu > 0.0)) throw ConfigError("mu must be positive");
}

}  // namespace

double LanguageModel::prob(const std::string& term) const {
    auto it = probs.find(term);
    return it == probs.end() ? 0.0 : it->second;
}

void LanguageModel::validate(double tol) const {
    double sum = 0.0;
    for (const auto& [term, p] : probs) {
        if (!(p > 0.0)) {
            throw DataError("language model stores non-positive probability for term '" + term +
                            "'");
        }
        sum += p;
    }
    if (std::fabs(sum - 1.0) > tol) {
        throw DataError("language model mass is " + std::to_string(sum) + ", expected 1");
    }
}

LanguageModel mle_lm(std::span<const std::string> tokens) {
    if (tokens.empty()) throw DataError("mle_lm: empty question");
    std::map<std::string, double> counts;
    for (const std::string& t : tokens) counts[t] += 1.0;
    double total = static_cast<double>(tokens.size());
    LanguageModel lm;
    for (const auto& [term, count] : counts) lm.probs[term] = count / total;
    return lm;
}

LanguageModel mle_lm(const Question& question) {
    return mle_lm(std::span<const std::string>(question.tokens));
}

double kl_score(const LanguageModel& query_lm, const Question& candidate,
                const CollectionStats& stats, const ScoringParams& params) {
    require_positive_mu(params);
    if (candidate.tokens.empty()) throw DataError("kl_score: empty candidate: " + candidate.id);

    // Query terms unseen in the whole collection are dropped; the remaining
    // mass is renormalized so the score stays rank-equivalent to Dirichlet
    // query likelihood over the surviving terms.
    double seen_mass = 0.0;
    for (const auto& [term, p] : query_lm.probs) {
        if (stats.collection_prob(term) > 0.0) seen_mass += p;
    }
    if (seen_mass <= 0.0) return 0.0;  // nothing scorable; every candidate ties

    double len = static_cast<double>(candidate.tokens.size());
    double alpha_d = params.mu / (len + params.mu);
    // Contributions are summed in ascending order; candidates with equal
    // contribution multisets then score bit-identically and tie
    // deterministically instead of by rounding noise.
    std::vector<double> contributions;
    for (const auto& [term, count] : candidate.term_counts) {
        double qp = query_lm.prob(term);
        if (qp <= 0.0) continue;
        double pc = stats.collection_prob(term);
        if (pc <= 0.0) continue;
        double p_seen = (static_cast<double>(count) + params.mu * pc) / (len + params.mu);
        contributions.push_back((qp / seen_mass) * std::log(p_seen / (alpha_d * pc)));
    }
    std::sort(contributions.begin(), contributions.end());
    double score = 0.0;
    for (double c : contributions) score += c;
    return score + std::log(alpha_d);
}

double bm25_score(const Question& query, const Question& candidate, const CollectionStats& stats,
                  const ScoringParams& params) {
    if (params.bm25_k1 < 0.0) throw ConfigError("bm25_k1 must be non-negative");
    if (params.bm25_b < 0.0 || params.bm25_b > 1.0) throw ConfigError("bm25_b must be in [0, 1]");
    double k1 = params.bm25_k1;
    double b = params.bm25_b;
    double len = static_cast<double>(candidate.tokens.size());
    double avg = stats.average_doc_length();
    double norm = avg > 0.0 ? k1 * (1.0 - b + b * len / avg) : k1;

    double score = 0.0;
    for (const std::string& term : query.tokens) {  // multiplicity counts
        double tf = static_cast<double>(count_of(candidate, term));
        if (tf == 0.0) continue;
        score += idf(term, stats) * (tf * (k1 + 1.0)) / (tf + norm);
    }
    return score;
}

const std::map<std::string, double>* TranslationTable::row(const std::string& term) const {
    auto it = trans.find(term);
    return it == trans.end() ? nullptr : &it->second;
}

double TranslationTable::prob(const std::string& source, const std::string& target) const {
    const auto* r = row(source);
    if (!r) return source == target ? 1.0 : 0.0;  // rowless source: identity
    auto it = r->find(target);
    return it == r->end() ? 0.0 : it->second;
}

TranslationTable build_translation_table(const Corpus& corpus, int min_count, double self_prob) {
    if (!(self_prob > 0.0 && self_prob <= 1.0)) {
        throw ConfigError("translation self probability must be in (0, 1]");
    }
    bool any_answers = std::any_of(corpus.questions().begin(), corpus.questions().end(),
                                   [](const Question& q) { return !q.answer_tokens.empty(); });
    if (!any_answers) {
        throw DataError(
            "translation table: corpus has no answer text; "
            "disable the trlm method or supply answers");
    }

    // Eligible vocabulary spans question and answer text, filtered by total
    // occurrence count; answer-only terms are valid translation partners.
    std::map<std::string, std::int64_t> occurrences;
    for (const Question& q : corpus.questions()) {
        for (const std::string& t : q.tokens) ++occurrences[t];
        for (const std::string& t : q.answer_tokens) ++occurrences[t];
    }
    std::set<std::string> eligible;
    for (const auto& [term, count] : occurrences) {
        if (count >= min_count) eligible.insert(term);
    }

    // Presence counts over question+answer units.
    std::map<std::string, int> unit_freq;
    std::map<std::string, std::map<std::string, int>> pair_freq;  // outer key <= inner key
    double n_units = static_cast<double>(corpus.size());
    for (const Question& q : corpus.questions()) {
        std::set<std::string> present;
        for (const std::string& t : q.tokens) {
            if (eligible.count(t)) present.insert(t);
        }
        for (const std::string& t : q.answer_tokens) {
            if (eligible.count(t)) present.insert(t);
        }
        std::vector<std::string> terms(present.begin(), present.end());
        for (std::size_t i = 0; i < terms.size(); ++i) {
            unit_freq[terms[i]] += 1;
            for (std::size_t j = i; j < terms.size(); ++j) {
                pair_freq[terms[i]][terms[j]] += 1;
            }
        }
    }

    TranslationTable table;
    for (const std::string& source : eligible) {
        auto source_it = unit_freq.find(source);
        if (source_it == unit_freq.end()) continue;  // eligible but absent from every unit text
        double n_source = static_cast<double>(source_it->second);

        std::map<std::string, double> weights;
        auto consider = [&](const std::string& target, int joint) {
            double pmi = std::log(static_cast<double>(joint) * n_units /
                                  (n_source * static_cast<double>(unit_freq.at(target))));
            if (pmi > 0.0) weights[target] = pmi;
        };
        if (auto it = pair_freq.find(source); it != pair_freq.end()) {
            for (const auto& [target, joint] : it->second) consider(target, joint);
        }
        for (const auto& [first, row] : pair_freq) {
            if (first >= source) break;
            if (auto it = row.find(source); it != row.end()) consider(first, it->second);
        }

        std::map<std::string, double> dist;
        if (weights.empty()) {
            dist[source] = 1.0;
        } else {
            double sum = 0.0;
            for (const auto& [_, w] : weights) sum += w;
            for (const auto& [target, w] : weights) dist[target] = w / sum;
            double self = dist.count(source) ? dist[source] : 0.0;
            if (self < self_prob) {
                double rest = 1.0 - self;
                double scale = rest > 0.0 ? (1.0 - self_prob) / rest : 0.0;
                for (auto& [target, p] : dist) p *= scale;
                dist[source] = self_prob;
            }
        }
        table.trans[source] = std::move(dist);
    }
    return table;
}

double translation_lm_score(const Question& query, const Question& candidate,
                            const TranslationTable& table, const CollectionStats& stats,
                            const ScoringParams& params) {
    require_positive_mu(params);
    if (candidate.tokens.empty()) {
        throw DataError("translation_lm_score: empty candidate: " + candidate.id);
    }
    double beta = params.translation_beta;
    double len = static_cast<double>(candidate.tokens.size());

    double score = 0.0;
    for (const std::string& term : query.tokens) {  // multiplicity counts
        double p_ml = static_cast<double>(count_of(candidate, term)) / len;
        double translated = 0.0;
        for (const auto& [source, count] : candidate.term_counts) {
            double p = table.prob(source, term);
            if (p > 0.0) translated += p * (static_cast<double>(count) / len);
        }
        double p_tr = (1.0 - beta) * p_ml + beta * translated;
        double p_smooth = (len * p_tr + params.mu * stats.collection_prob(term)) /
                          (len + params.mu);
        if (p_smooth <= 0.0) continue;  // term unseen everywhere, no signal
        score += std::log(p_smooth);
    }
    return score;
}

RankedList rank(const std::string& query_id, const Corpus& corpus,
                const std::function<double(const Question&)>& score) {
    if (corpus.empty()) throw DataError("rank: empty corpus");
    RankedList list;
    list.query_id = query_id;
    list.entries.reserve(corpus.size());
    for (const Question& q : corpus.questions()) {
        list.entries.push_back({q.id, score(q)});
    }
    std::sort(list.entries.begin(), list.entries.end(),
              [](const ScoredEntry& a, const ScoredEntry& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.question_id < b.question_id;
              });
    return list;
}

RankedList rank_kl(const std::string& query_id, const LanguageModel& query_lm,
                   const Corpus& corpus, const ScoringParams& params) {
    return rank(query_id, corpus, [&](const Question& candidate) {
        return kl_score(query_lm, candidate, corpus.stats(), params);
    });
}

std::vector<const Question*> retrieve_feedback(const Question& question, const Corpus& corpus,
                                               std::size_t depth, FeedbackScorer scorer,
                                               const ScoringParams& params) {
    RankedList list;
    switch (scorer) {
        case FeedbackScorer::kl:
            list = rank_kl(question.id, mle_lm(question), corpus, params);
            break;
        case FeedbackScorer::bm25:
            list = rank(question.id, corpus, [&](const Question& candidate) {
                return bm25_score(question, candidate, corpus.stats(), params);
            });
            break;
    }
    std::vector<const Question*> feedback;
    for (const ScoredEntry& entry : list.entries) {
        if (feedback.size() >= depth) break;
        feedback.push_back(&corpus.at(entry.question_id));
    }
    return feedback;
}

void write_run_file(std::ostream& out, std::span<const RankedList> lists, std::string_view tag) {
    char score_buf[64];
    for (const RankedList& list : lists) {
        for (std::size_t i = 0; i < list.entries.size(); ++i) {
            const ScoredEntry& entry = list.entries[i];
            std::snprintf(score_buf, sizeof(score_buf), "%.6f", entry.score);
            out << list.query_id << " Q0 " << entry.question_id << ' ' << (i + 1) << ' '
                << score_buf << ' ' << tag << '\n';
        }
    }
}

RunFile read_run_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open run file: " + path.string());

    struct Row {
        std::size_t rank;
        std::string question_id;
        double score;
    };
    std::map<std::string, std::vector<Row>> by_query;
    RunFile run;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        std::string query_id, q0, question_id, tag;
        std::size_t rank_no = 0;
        double score = 0.0;
        if (!(row >> query_id >> q0 >> question_id >> rank_no >> score >> tag)) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": malformed run line");
        }
        by_query[query_id].push_back({rank_no, question_id, score});
        if (run.tag.empty()) run.tag = tag;
    }
    for (auto& [query_id, rows] : by_query) {
        std::sort(rows.begin(), rows.end(),
                  [](const Row& a, const Row& b) { return a.rank < b.rank; });
        RankedList list;
        list.query_id = query_id;
        for (const Row& r : rows) list.entries.push_back({r.question_id, r.score});
        run.lists.push_back(std::move(list));
    }
    return run;
}

}  // namespace qrex
