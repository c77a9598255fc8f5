#include <doctest.h>

#include <cmath>

#include "qrex/centrality.hpp"
#include "support/oracles.hpp"

using namespace qrex;

TEST_CASE("single-term questions carry all centrality") {
    Question q = make_question("q", {"alone"});
    Question fb = make_question("f", {"alone", "noise"});
    auto centrality = term_centrality(q, {&fb}, CentralitySpec{});
    REQUIRE(centrality.size() == 1);
    CHECK(centrality.at("alone") == 1.0);
}

TEST_CASE("symmetric feedback splits centrality evenly") {
    Question q = make_question("q", {"a", "b"});
    std::vector<Question> feedback;
    for (int i = 0; i < 4; ++i) feedback.push_back(make_question("f" + std::to_string(i), {"a", "b"}));
    std::vector<const Question*> ptrs;
    for (const Question& f : feedback) ptrs.push_back(&f);
    auto centrality = term_centrality(q, ptrs, CentralitySpec{});
    CHECK(centrality.at("a") == doctest::Approx(0.5));
    CHECK(centrality.at("b") == doctest::Approx(0.5));
}

TEST_CASE("feedback frequency dominates the fixed point") {
    // a appears in 9 of 10 feedback questions, b in 1; no joint occurrence.
    Question q = make_question("q", {"a", "b"});
    std::vector<Question> feedback;
    for (int i = 0; i < 9; ++i) {
        feedback.push_back(make_question("f" + std::to_string(i), {"a", "pad"}));
    }
    feedback.push_back(make_question("f9", {"b", "pad"}));
    std::vector<const Question*> ptrs;
    for (const Question& f : feedback) ptrs.push_back(&f);

    CentralitySpec spec;
    for (int iters = 1; iters <= 24; ++iters) {
        spec.iters = iters;
        auto centrality = term_centrality(q, ptrs, spec);
        CHECK(centrality.at("a") > centrality.at("b"));  // argmax stable for every depth
        CHECK(centrality.at("a") + centrality.at("b") == doctest::Approx(1.0));
    }
}

TEST_CASE("term_centrality validates its inputs") {
    Question q = make_question("q", {"a"});
    CHECK_THROWS_AS(term_centrality(q, {}, CentralitySpec{}), DataError);
    Question fb = make_question("f", {"a"});
    CentralitySpec bad;
    bad.iters = 0;
    CHECK_THROWS_AS(term_centrality(q, {&fb}, bad), ConfigError);
}

TEST_CASE("didf follows the regulated idf curve") {
    CollectionStats stats;
    stats.doc_count = 100;
    stats.doc_freq["mid"] = 60;  // idf = ln(101/60.5) ~ 0.5123
    double mid_idf = idf("mid", stats);
    CHECK(didf("mid", stats, mid_idf) == doctest::Approx(0.5));  // idf == c

    // Asymptote: enormous idf saturates toward 1.
    CollectionStats huge;
    huge.doc_count = 1000000000;
    huge.doc_freq["rare"] = 1;
    CHECK(didf("rare", huge, 1.0) > 0.95);

    // Monotone in idf for a fixed regulator.
    stats.doc_freq["rare"] = 2;
    CHECK(idf("rare", stats) > idf("mid", stats));
    CHECK(didf("rare", stats, 1.0) > didf("mid", stats, 1.0));
}

namespace {

/// Feedback engineered so "common" wins raw centrality while "rare" wins
/// after the idf reweighting.
Corpus divergent_corpus() {
    std::vector<Question> questions;
    // Feedback pool: "common" everywhere, "rare" in a couple of questions.
    for (int i = 0; i < 10; ++i) {
        std::vector<std::string> tokens{"common", "pad" + std::to_string(i)};
        if (i < 2) tokens.push_back("rare");
        questions.push_back(make_question("f" + std::to_string(i), tokens));
    }
    // Background glut of "common" so its idf collapses.
    for (int i = 0; i < 30; ++i) {
        questions.push_back(make_question("bg" + std::to_string(i), {"common", "x" + std::to_string(i)}));
    }
    return Corpus::from_questions(std::move(questions), FieldConfig{});
}

}  // namespace

TEST_CASE("central word set holds two words when the idf reweighting flips the argmax") {
    Corpus corpus = divergent_corpus();
    Question q = make_question("q", {"common", "rare"});
    CentralitySpec spec;
    CentralWordSet set = central_words(q, corpus, spec);
    CHECK(set.before_idf == "common");
    CHECK(set.after_idf == "rare");
    REQUIRE(set.has_two());
    CHECK(set.words == std::vector<std::string>{"common", "rare"});
}

TEST_CASE("central word set holds one word when both argmaxes agree") {
    // "rare" dominates the feedback and the idf signal alike.
    std::vector<Question> questions;
    for (int i = 0; i < 10; ++i) {
        questions.push_back(make_question("f" + std::to_string(i), {"rare", "pad"}));
    }
    for (int i = 0; i < 20; ++i) {
        questions.push_back(make_question("bg" + std::to_string(i),
                                          {"boring", "y" + std::to_string(i)}));
    }
    Corpus corpus = Corpus::from_questions(std::move(questions), FieldConfig{});
    Question q = make_question("q", {"boring", "rare"});
    CentralWordSet set = central_words(q, corpus, CentralitySpec{});
    CHECK(set.before_idf == set.after_idf);
    CHECK(set.words.size() == 1);
}

TEST_CASE("a single-term question is its own central word") {
    Corpus corpus = Corpus::from_questions(
        {make_question("f1", {"alone", "noise"}), make_question("f2", {"other", "words"})},
        FieldConfig{});
    CentralWordSet set = central_words(make_question("q", {"alone"}), corpus, CentralitySpec{});
    CHECK(set.words == std::vector<std::string>{"alone"});
}

TEST_CASE("central word sets stay inside the question and within size 2") {
    oracle::Rand rand(107);
    for (int round = 0; round < 20; ++round) {
        Corpus corpus = oracle::random_corpus(rand, 8 + rand.below(20), 4 + rand.below(10));
        Question q = make_question("q", oracle::random_tokens(rand, 10, 6));
        CentralitySpec spec;
        spec.feedback_depth = 1 + static_cast<int>(rand.below(8));
        CentralWordSet set = central_words(q, corpus, spec);
        CHECK(set.words.size() >= 1);
        CHECK(set.words.size() <= 2);
        for (const std::string& w : set.words) {
            CHECK(std::find(q.tokens.begin(), q.tokens.end(), w) != q.tokens.end());
        }
        // Deterministic re-run.
        CentralWordSet again = central_words(q, corpus, spec);
        CHECK(again.words == set.words);
    }
}

TEST_CASE("uniform scaling of associations cannot move the argmax") {
    // Row normalization makes the fixed point invariant to any positive
    // rescaling of the association weights; doubling the feedback evidence
    // (same proportions) must keep the ordering.
    Question q = make_question("q", {"a", "b", "c"});
    std::vector<Question> feedback;
    for (int i = 0; i < 3; ++i) feedback.push_back(make_question("f" + std::to_string(i), {"a", "b"}));
    feedback.push_back(make_question("f3", {"c"}));
    std::vector<const Question*> once;
    for (const Question& f : feedback) once.push_back(&f);
    std::vector<const Question*> twice = once;
    twice.insert(twice.end(), once.begin(), once.end());

    auto single = term_centrality(q, once, CentralitySpec{});
    auto doubled = term_centrality(q, twice, CentralitySpec{});
    auto argmax = [](const std::map<std::string, double>& m) {
        return std::max_element(m.begin(), m.end(), [](const auto& x, const auto& y) {
                   return x.second < y.second;
               })->first;
    };
    CHECK(argmax(single) == argmax(doubled));
}
