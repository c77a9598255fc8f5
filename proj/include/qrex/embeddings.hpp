#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qrex/corpus.hpp"

namespace qrex {

/// Static word vectors with a precomputed L2-normalized view.
/// Immutable after loading; concurrent reads are safe.
class EmbeddingTable {
  public:
    EmbeddingTable() = default;
    explicit EmbeddingTable(std::size_t dim) : dim_(dim) {}

    std::size_t dim() const { return dim_; }
    std::size_t size() const { return vectors_.size(); }
    bool contains(const std::string& term) const { return vectors_.count(term) > 0; }

    /// Replaces any existing vector for the term.
    void insert(const std::string& term, std::vector<double> vector);

    const std::vector<double>* find(const std::string& term) const;
    const std::vector<double>* find_normalized(const std::string& term) const;
    const std::map<std::string, std::vector<double>>& vectors() const { return vectors_; }

  private:
    std::size_t dim_ = 0;
    std::map<std::string, std::vector<double>> vectors_;
    std::map<std::string, std::vector<double>> normalized_;
};

struct EmbeddingLoadReport {
    std::size_t rows = 0;
    std::size_t duplicates = 0;
};

/// word2vec text format: header "<vocab_size> <dim>", then "<term> <c1> ... <c_dim>"
/// per line. Duplicate terms keep the last row and are counted in the report.
EmbeddingTable load_static_embeddings(const std::filesystem::path& path,
                                      EmbeddingLoadReport* report = nullptr);

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);

/// Cosine similarity clamped to [-1, 1]; zero vectors yield 0 by convention.
double cosine(std::span<const double> u, std::span<const double> v);

struct WordSim {
    std::string term;
    double sim = 0.0;
};

/// The k highest-cosine terms from vocab_filter that are present in the table,
/// excluding the base word; descending similarity, ties by term.
/// An unknown base word yields an empty list.
std::vector<WordSim> top_k_similar_words(const std::string& base, std::size_t k,
                                         const EmbeddingTable& table,
                                         const std::set<std::string>& vocab_filter);
/// Same, over the whole table vocabulary.
std::vector<WordSim> top_k_similar_words(const std::string& base, std::size_t k,
                                         const EmbeddingTable& table);

struct QuestionVector {
    std::vector<double> values;
    bool is_zero = false;  // every token excluded, unknown, or zero-length
};

/// Unnormalized sum of the static vectors of the question tokens, skipping
/// excluded terms and terms absent from the table. Multiplicity counts.
QuestionVector question_centroid(const Question& question, const EmbeddingTable& table,
                                 const std::set<std::string>& exclude = {});

/// Per-question, per-token contextual vectors, aligned with Question.tokens.
class ContextualStore {
  public:
    std::size_t dim() const { return dim_; }
    std::size_t size() const { return per_question_.size(); }
    bool contains(const std::string& id) const { return per_question_.count(id) > 0; }

    void insert(const std::string& id, std::vector<std::vector<double>> vectors);
    const std::vector<std::vector<double>>* find(const std::string& id) const;
    const std::map<std::string, std::vector<std::vector<double>>>& records() const {
        return per_question_;
    }

  private:
    std::size_t dim_ = 0;
    std::map<std::string, std::vector<std::vector<double>>> per_question_;
};

/// Newline-delimited records {"id": ..., "vectors": [[...], ...]}. Each record
/// must name a known question and carry exactly one vector per token.
ContextualStore load_contextual_store(const std::filesystem::path& path,
                                      const std::map<std::string, std::size_t>& expected_token_counts);

void save_contextual_store(const ContextualStore& store, const std::filesystem::path& path);

/// Sum of the question's contextual token vectors; positions whose surface term
/// equals exclude_term are omitted. Throws when the question is not stored.
QuestionVector contextual_question_vector(const Question& question, const ContextualStore& store,
                                          const std::optional<std::string>& exclude_term = {});

/// Candidate ids ranked by cosine to the input vector, descending, ties by id.
/// Candidate vectors are built with the same exclude_term; zero-vector
/// candidates are dropped. k beyond the candidate count returns everything.
std::vector<std::string> top_k_similar_questions(const QuestionVector& input, const Corpus& corpus,
                                                 const ContextualStore& store, std::size_t k,
                                                 const std::optional<std::string>& exclude_term = {});

/// Deterministic stand-in for externally produced contextual vectors: each
/// token gets a hash-seeded unit vector perturbed by its left and right
/// neighbor terms at weight 0.25, so the same word in different contexts maps
/// to different vectors.
ContextualStore make_pseudo_contextual_store(const std::vector<const Question*>& questions,
                                             std::size_t dim);

}  // namespace qrex
