#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qrex/embeddings.hpp"
#include "support/oracles.hpp"

using namespace qrex;

namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& content) {
    auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path);
    out << content;
    return path;
}

EmbeddingTable small_table() {
    EmbeddingTable table(2);
    table.insert("a", {1.0, 0.0});
    table.insert("b", {0.9, 0.1});
    table.insert("c", {0.0, 1.0});
    return table;
}

}  // namespace

TEST_CASE("load_static_embeddings parses the word2vec text format") {
    auto path = write_temp("qrex_emb_ok.txt", "2 2\na 1 0\nb 0 1\n");
    EmbeddingTable table = load_static_embeddings(path);
    CHECK(table.dim() == 2);
    CHECK(table.size() == 2);
    CHECK((*table.find("a"))[0] == 1.0);
}

TEST_CASE("load_static_embeddings rejects malformed rows") {
    auto wide = write_temp("qrex_emb_wide.txt", "1 2\na 1 0 3\n");
    CHECK_THROWS_WITH_AS(load_static_embeddings(wide), doctest::Contains("line 2"), DataError);

    auto text = write_temp("qrex_emb_text.txt", "1 2\na 1 oops\n");
    CHECK_THROWS_AS(load_static_embeddings(text), DataError);
}

TEST_CASE("load_static_embeddings keeps the last duplicate row") {
    auto path = write_temp("qrex_emb_dup.txt", "2 2\na 1 0\na 0 1\n");
    EmbeddingLoadReport report;
    EmbeddingTable table = load_static_embeddings(path, &report);
    CHECK(report.duplicates == 1);
    CHECK((*table.find("a"))[1] == 1.0);
}

TEST_CASE("the normalized view holds unit vectors") {
    oracle::Rand rand(29);
    EmbeddingTable table = oracle::random_embeddings(rand, 20, 5);
    for (const auto& [term, raw] : table.vectors()) {
        (void)raw;
        const auto* unit = table.find_normalized(term);
        REQUIRE(unit != nullptr);
        double norm = 0.0;
        for (double x : *unit) norm += x * x;
        CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("embeddings round-trip through save and load") {
    oracle::Rand rand(3);
    EmbeddingTable table = oracle::random_embeddings(rand, 12, 4);
    auto path = std::filesystem::temp_directory_path() / "qrex_emb_rt.txt";
    save_embeddings(table, path);
    EmbeddingTable loaded = load_static_embeddings(path);
    REQUIRE(loaded.size() == table.size());
    for (const auto& [term, vec] : table.vectors()) {
        const auto* other = loaded.find(term);
        REQUIRE(other != nullptr);
        CHECK(*other == vec);
    }
}

TEST_CASE("cosine basics") {
    std::vector<double> x{3.0, 4.0};
    CHECK(cosine(x, x) == doctest::Approx(1.0));
    CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == doctest::Approx(0.0));
    CHECK(cosine(std::vector<double>{1, 1}, std::vector<double>{2, 2}) == doctest::Approx(1.0));
    CHECK(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 2}) == 0.0);
    CHECK_THROWS_AS(cosine(std::vector<double>{1.0}, std::vector<double>{1, 2}), DataError);
}

TEST_CASE("cosine is invariant under positive scaling") {
    oracle::Rand rand(5);
    for (int round = 0; round < 40; ++round) {
        std::vector<double> u(4), v(4);
        for (double& x : u) x = rand.symmetric();
        for (double& x : v) x = rand.symmetric();
        double alpha = 0.01 + 10.0 * rand.unit();
        double beta = 0.01 + 10.0 * rand.unit();
        std::vector<double> su(4), sv(4);
        for (int i = 0; i < 4; ++i) {
            su[i] = alpha * u[i];
            sv[i] = beta * v[i];
        }
        CHECK(cosine(u, v) == doctest::Approx(cosine(su, sv)).epsilon(1e-9));
    }
}

TEST_CASE("top_k_similar_words ranks by cosine with lexicographic ties") {
    EmbeddingTable table = small_table();
    std::set<std::string> vocab{"a", "b", "c"};

    auto top1 = top_k_similar_words("a", 1, table, vocab);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].term == "b");
    CHECK(top1[0].sim == doctest::Approx(0.9 / std::sqrt(0.82)));  // ~0.9939

    auto all = top_k_similar_words("a", 10, table, vocab);
    CHECK(all.size() == 2);  // k beyond the candidate count

    CHECK(top_k_similar_words("missing", 3, table, vocab).empty());
}

TEST_CASE("top_k_similar_words at k is a prefix of k+1") {
    oracle::Rand rand(17);
    EmbeddingTable table = oracle::random_embeddings(rand, 25, 6);
    std::set<std::string> vocab;
    for (const auto& [term, _] : table.vectors()) vocab.insert(term);
    for (const auto& [base, _] : table.vectors()) {
        for (std::size_t k = 1; k < 6; ++k) {
            auto smaller = top_k_similar_words(base, k, table, vocab);
            auto larger = top_k_similar_words(base, k + 1, table, vocab);
            REQUIRE(smaller.size() <= larger.size());
            for (std::size_t i = 0; i < smaller.size(); ++i) {
                CHECK(smaller[i].term == larger[i].term);
            }
        }
    }
}

TEST_CASE("question_centroid sums token vectors") {
    EmbeddingTable table(2);
    table.insert("a", {1.0, 0.0});
    table.insert("b", {0.0, 1.0});

    Question ab = make_question("q1", {"a", "b"});
    CHECK(question_centroid(ab, table).values == std::vector<double>{1.0, 1.0});
    CHECK(question_centroid(ab, table, {"b"}).values == std::vector<double>{1.0, 0.0});

    Question aa = make_question("q2", {"a", "a"});
    CHECK(question_centroid(aa, table).values == std::vector<double>{2.0, 0.0});

    QuestionVector excluded = question_centroid(ab, table, {"a", "b"});
    CHECK(excluded.is_zero);
}

TEST_CASE("question_centroid ignores token order and foreign exclusions") {
    oracle::Rand rand(23);
    EmbeddingTable table = oracle::random_embeddings(rand, 15, 4);
    for (int round = 0; round < 25; ++round) {
        auto tokens = oracle::random_tokens(rand, 15, 8);
        Question q = make_question("q", tokens);
        std::reverse(tokens.begin(), tokens.end());
        Question reversed = make_question("q", tokens);
        CHECK(question_centroid(q, table).values == question_centroid(reversed, table).values);
        CHECK(question_centroid(q, table).values ==
              question_centroid(q, table, {"not-a-question-term"}).values);
    }
}

TEST_CASE("contextual store loading checks alignment") {
    std::map<std::string, std::size_t> expected{{"q1", 3}, {"q2", 2}};

    auto ok = write_temp("qrex_ctx_ok.jsonl",
                         R"({"id": "q1", "vectors": [[1, 0], [0, 1], [1, 1]]}
{"id": "q2", "vectors": [[1, 0], [0, 1]]}
)");
    ContextualStore store = load_contextual_store(ok, expected);
    CHECK(store.size() == 2);
    CHECK(store.dim() == 2);

    auto short_rec = write_temp("qrex_ctx_short.jsonl", R"({"id": "q1", "vectors": [[1, 0], [0, 1]]}
)");
    CHECK_THROWS_WITH_AS(load_contextual_store(short_rec, expected), doctest::Contains("q1"),
                         DataError);

    auto unknown = write_temp("qrex_ctx_unknown.jsonl", R"({"id": "zz", "vectors": [[1, 0]]}
)");
    CHECK_THROWS_WITH_AS(load_contextual_store(unknown, expected), doctest::Contains("zz"),
                         DataError);
}

TEST_CASE("contextual_question_vector sums and excludes by surface term") {
    ContextualStore store;
    store.insert("q1", {{1.0, 0.0}, {0.0, 1.0}});
    Question q = make_question("q1", {"alpha", "beta"});

    CHECK(contextual_question_vector(q, store).values == std::vector<double>{1.0, 1.0});
    CHECK(contextual_question_vector(q, store, std::optional<std::string>("beta")).values ==
          std::vector<double>{1.0, 0.0});

    Question missing = make_question("q9", {"alpha"});
    CHECK_THROWS_AS(contextual_question_vector(missing, store), DataError);

    QuestionVector all_excluded =
        contextual_question_vector(make_question("q1", {"beta", "beta"}), store,
                                   std::optional<std::string>("beta"));
    CHECK(all_excluded.is_zero);
}

TEST_CASE("top_k_similar_questions matches a brute-force sort") {
    oracle::Rand rand(31);
    std::vector<Question> questions;
    for (int i = 0; i < 23; ++i) {
        questions.push_back(
            make_question("c" + std::to_string(100 + i), oracle::random_tokens(rand, 12, 6)));
    }
    Corpus corpus = Corpus::from_questions(questions, FieldConfig{});
    std::vector<const Question*> all;
    for (const Question& q : corpus.questions()) all.push_back(&q);
    Question input = make_question("input", oracle::random_tokens(rand, 12, 6));
    all.push_back(&input);
    ContextualStore store = make_pseudo_contextual_store(all, 16);

    QuestionVector input_vec = contextual_question_vector(input, store);
    auto top5 = top_k_similar_questions(input_vec, corpus, store, 5);
    REQUIRE(top5.size() == 5);

    // Brute force: cosine to every candidate, full sort.
    struct Scored {
        std::string id;
        double sim;
    };
    std::vector<Scored> scored;
    for (const Question& cand : corpus.questions()) {
        QuestionVector v = contextual_question_vector(cand, store);
        scored.push_back({cand.id, cosine(input_vec.values, v.values)});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.id < b.id;
    });
    for (int i = 0; i < 5; ++i) CHECK(top5[static_cast<std::size_t>(i)] == scored[static_cast<std::size_t>(i)].id);

    // An exact copy of a candidate's vectors ranks that candidate first.
    Question copy = corpus.questions().front();
    ContextualStore with_copy = store;
    with_copy.insert("the-copy", *store.find(copy.id));
    Question copy_q = make_question("the-copy", copy.tokens);
    QuestionVector copy_vec = contextual_question_vector(copy_q, with_copy);
    auto top = top_k_similar_questions(copy_vec, corpus, with_copy, 2);
    CHECK(top.front() == copy.id);

    CHECK(top_k_similar_questions(input_vec, corpus, store, 1000).size() == corpus.size());
}

TEST_CASE("pseudo contextual stub is context-sensitive and deterministic") {
    Question acting = make_question("p1", {"who", "plays", "jacob"});
    Question music = make_question("p2", {"instrument", "plays", "music"});
    ContextualStore store = make_pseudo_contextual_store({&acting, &music}, 16);

    const auto& v1 = (*store.find("p1"))[1];  // "plays" between who/jacob
    const auto& v2 = (*store.find("p2"))[1];  // "plays" between instrument/music
    CHECK(v1 != v2);
    CHECK(cosine(v1, v2) > 0.5);  // same surface term stays correlated

    ContextualStore again = make_pseudo_contextual_store({&acting, &music}, 16);
    CHECK(*again.find("p1") == *store.find("p1"));
    CHECK(*again.find("p2") == *store.find("p2"));
}
