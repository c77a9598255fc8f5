#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "qrex/corpus.hpp"
#include "qrex/embeddings.hpp"
#include "qrex/eval.hpp"

namespace qrex {

/// Controls for the synthetic lexical-gap generator. The vocabulary is split
/// into synonym pairs; relevant questions paraphrase their input question by
/// swapping terms for synonyms at synonym_rate, distractors reuse the question
/// shape with classes disjoint from the input's.
struct SynthSpec {
    int n_queries = 50;
    int n_relevant_per_query = 3;
    int n_distractors = 20;
    double synonym_rate = 0.6;
    int vocab_size = 200;  // words; every two form a synonym pair
    int question_length = 6;
    std::uint64_t seed = 42;
    std::size_t context_dim = 64;
};

struct SynthData {
    Corpus corpus;
    std::vector<Question> queries;
    Judgments judgments;
    EmbeddingTable embeddings;
    ContextualStore contextual;
};

/// Deterministic for a fixed spec. The constructed embedding geometry puts
/// synonym pairs at cosine >= 0.95 and every cross-class pair at <= 0.3,
/// verified exhaustively before returning.
SynthData generate(const SynthSpec& spec);

/// Emits corpus.jsonl, queries.jsonl, qrels.txt, embeddings.txt and
/// contextual.jsonl into the directory, in the formats the CLI consumes.
void write_synth_files(const SynthData& data, const std::filesystem::path& out_dir);

}  // namespace qrex
