#include "qrex/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "detail/rng.hpp"

namespace qrex {
namespace {

std::string class_word(int class_index, bool synonym) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "w%04d%c", class_index, synonym ? 'b' : 'a');
    return buf;
}

std::string padded_id(const char* prefix, int value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%04d", prefix, value);
    return buf;
}

void validate(const SynthSpec& spec) {
    if (spec.n_queries < 1 || spec.n_relevant_per_query < 1 || spec.n_distractors < 1 ||
        spec.question_length < 1 || spec.vocab_size < 1) {
        throw ConfigError("synth: all counts must be at least 1");
    }
    if (!(spec.synonym_rate >= 0.0 && spec.synonym_rate <= 1.0)) {
        throw ConfigError("synth: synonym_rate must be in [0, 1]");
    }
    // Each question draws question_length distinct classes and its distractors
    // draw the same number from the complement.
    int min_classes = 2 * spec.question_length;
    if (spec.vocab_size / 2 < min_classes) {
        throw DataError("synth: vocab too small for the requested structure; need at least " +
                        std::to_string(2 * min_classes) + " words");
    }
}

EmbeddingTable build_embeddings(int n_classes) {
    // Two orthonormal axes per class; the synonym is a small rotation of the
    // primary word, so within-class cosine is 0.96 and cross-class cosine 0.
    std::size_t dim = static_cast<std::size_t>(2 * n_classes);
    EmbeddingTable table(dim);
    for (int c = 0; c < n_classes; ++c) {
        std::vector<double> primary(dim, 0.0);
        primary[static_cast<std::size_t>(2 * c)] = 1.0;
        std::vector<double> synonym(dim, 0.0);
        synonym[static_cast<std::size_t>(2 * c)] = 0.96;
        synonym[static_cast<std::size_t>(2 * c + 1)] = 0.28;
        table.insert(class_word(c, false), std::move(primary));
        table.insert(class_word(c, true), std::move(synonym));
    }
    return table;
}

void check_embedding_geometry(const EmbeddingTable& table, int n_classes) {
    std::vector<const std::string*> terms;
    for (const auto& [term, _] : table.vectors()) terms.push_back(&term);
    for (std::size_t i = 0; i < terms.size(); ++i) {
        for (std::size_t j = i + 1; j < terms.size(); ++j) {
            double sim = cosine(*table.find(*terms[i]), *table.find(*terms[j]));
            bool same_class = terms[i]->substr(0, 5) == terms[j]->substr(0, 5);
            if (same_class && sim < 0.95) {
                throw DataError("synth: synonym pair below the cosine floor: " + *terms[i] +
                                ", " + *terms[j]);
            }
            if (!same_class && sim > 0.3) {
                throw DataError("synth: cross-class pair above the cosine ceiling: " + *terms[i] +
                                ", " + *terms[j]);
            }
        }
    }
    (void)n_classes;
}

}  // namespace

SynthData generate(const SynthSpec& spec) {
    validate(spec);
    detail::Rng rng(spec.seed);
    int n_classes = spec.vocab_size / 2;

    SynthData data;
    data.embeddings = build_embeddings(n_classes);
    check_embedding_geometry(data.embeddings, n_classes);

    std::vector<int> all_classes(static_cast<std::size_t>(n_classes));
    std::iota(all_classes.begin(), all_classes.end(), 0);

    std::vector<Question> candidates;
    for (int qi = 0; qi < spec.n_queries; ++qi) {
        std::vector<int> pool = all_classes;
        rng.shuffle(pool);
        std::vector<int> query_classes(pool.begin(),
                                       pool.begin() + spec.question_length);

        std::vector<std::string> query_tokens;
        for (int c : query_classes) query_tokens.push_back(class_word(c, false));
        Question query = make_question(padded_id("q", qi), query_tokens);
        data.queries.push_back(query);

        for (int ri = 0; ri < spec.n_relevant_per_query; ++ri) {
            std::vector<std::string> tokens;
            for (int c : query_classes) {
                bool swap = rng.next_unit() < spec.synonym_rate;
                tokens.push_back(class_word(c, swap));
            }
            std::string id = query.id + padded_id("r", ri);
            data.judgments.add(query.id, id, 1);
            candidates.push_back(make_question(std::move(id), std::move(tokens)));
        }

        std::vector<int> complement;
        for (int c : all_classes) {
            if (std::find(query_classes.begin(), query_classes.end(), c) == query_classes.end()) {
                complement.push_back(c);
            }
        }
        for (int di = 0; di < spec.n_distractors; ++di) {
            std::vector<int> pick = complement;
            rng.shuffle(pick);
            std::vector<std::string> tokens;
            for (int i = 0; i < spec.question_length; ++i) {
                tokens.push_back(class_word(pick[static_cast<std::size_t>(i)], false));
            }
            std::string id = query.id + padded_id("d", di);
            data.judgments.add(query.id, id, 0);
            candidates.push_back(make_question(std::move(id), std::move(tokens)));
        }
    }
    data.corpus = Corpus::from_questions(std::move(candidates), FieldConfig{});

    std::vector<const Question*> everything;
    for (const Question& q : data.corpus.questions()) everything.push_back(&q);
    for (const Question& q : data.queries) everything.push_back(&q);
    data.contextual = make_pseudo_contextual_store(everything, spec.context_dim);
    return data;
}

void write_synth_files(const SynthData& data, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream out(out_dir / "corpus.jsonl");
        if (!out) throw DataError("cannot write " + (out_dir / "corpus.jsonl").string());
        write_question_records(out, data.corpus.questions());
    }
    {
        std::ofstream out(out_dir / "queries.jsonl");
        if (!out) throw DataError("cannot write " + (out_dir / "queries.jsonl").string());
        write_question_records(out, data.queries);
    }
    {
        std::ofstream out(out_dir / "qrels.txt");
        if (!out) throw DataError("cannot write " + (out_dir / "qrels.txt").string());
        save_qrels(data.judgments, out);
    }
    save_embeddings(data.embeddings, out_dir / "embeddings.txt");
    save_contextual_store(data.contextual, out_dir / "contextual.jsonl");
}

}  // namespace qrex
