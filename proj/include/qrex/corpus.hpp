#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qrex/errors.hpp"

namespace qrex {

struct TokenizerConfig {
    bool remove_stopwords = false;
    bool stem = false;
};

/// Lowercases, maps non-alphanumeric bytes to whitespace and splits.
/// Bytes >= 0x80 are kept verbatim so UTF-8 sequences survive intact.
std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config = {});

struct Question {
    std::string id;
    std::string title;
    std::string body;
    std::vector<std::string> answers;
    /// Indexed text tokens (title, plus body/answers when configured).
    std::vector<std::string> tokens;
    /// Tokenized answer text, kept for translation-model co-occurrence.
    std::vector<std::string> answer_tokens;
    /// (term, count) pairs derived from tokens, sorted by term.
    std::vector<std::pair<std::string, int>> term_counts;
};

std::vector<std::pair<std::string, int>> term_count_pairs(std::span<const std::string> tokens);

/// Convenience constructor for tests and generators: fills title and term_counts.
Question make_question(std::string id, std::vector<std::string> tokens);

/// Count of `term` in a question, 0 when absent.
int count_of(const Question& question, const std::string& term);

struct CollectionStats {
    std::int64_t total_tokens = 0;
    std::int64_t doc_count = 0;
    std::map<std::string, std::int64_t> collection_count;
    std::map<std::string, std::int64_t> doc_freq;

    /// p(w|C): collection_count(w) / total_tokens, 0 for unseen terms.
    double collection_prob(const std::string& term) const;
    double average_doc_length() const;
    bool contains(const std::string& term) const;
};

/// idf(t) = ln((doc_count + 1) / (doc_freq(t) + 0.5)); unseen terms use doc_freq = 0.
double idf(const std::string& term, const CollectionStats& stats);

struct FieldConfig {
    bool index_body = false;
    bool index_answers = false;
    TokenizerConfig tokenizer;
};

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t skipped_empty = 0;
};

struct Posting {
    std::string question_id;
    std::int64_t count = 0;
};

/// Immutable question collection. Built once, then safe for concurrent reads.
class Corpus {
  public:
    Corpus() = default;

    /// Sorts by id, rejects duplicates, skips zero-token questions and
    /// derives postings and collection statistics.
    static Corpus from_questions(std::vector<Question> questions, FieldConfig config,
                                 IngestReport* report = nullptr);

    const std::vector<Question>& questions() const { return questions_; }
    const Question* find(const std::string& id) const;
    const Question& at(const std::string& id) const;
    const CollectionStats& stats() const { return stats_; }
    const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }
    const FieldConfig& field_config() const { return config_; }
    bool empty() const { return questions_.empty(); }
    std::size_t size() const { return questions_.size(); }

  private:
    std::vector<Question> questions_;  // sorted by id
    std::map<std::string, std::size_t> index_;
    std::map<std::string, std::vector<Posting>> postings_;
    CollectionStats stats_;
    FieldConfig config_;
};

/// Reads a newline-delimited record file (one JSON object per line with
/// fields id, title, optional body, optional answers) and tokenizes per config.
/// Zero-token records are skipped and counted in the report.
std::vector<Question> read_question_file(const std::filesystem::path& path,
                                         const FieldConfig& config,
                                         IngestReport* report = nullptr);

Corpus ingest_corpus(const std::filesystem::path& path, const FieldConfig& config,
                     IngestReport* report = nullptr);

/// One record per question, same line format read_question_file accepts.
void write_question_records(std::ostream& out, std::span<const Question> questions);

void save_index(const Corpus& corpus, const std::filesystem::path& file);
Corpus load_index(const std::filesystem::path& file);

}  // namespace qrex
