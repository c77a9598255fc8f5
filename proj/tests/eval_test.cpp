#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrex/eval.hpp"
#include "support/oracles.hpp"

using namespace qrex;

namespace {

RankedList make_list(const std::string& query_id, const std::vector<std::string>& ids) {
    RankedList list;
    list.query_id = query_id;
    double score = static_cast<double>(ids.size());
    for (const std::string& id : ids) list.entries.push_back({id, score--});
    return list;
}

}  // namespace

TEST_CASE("average precision on hand-checked rankings") {
    Judgments judgments;
    judgments.add("q", "r1", 1);
    judgments.add("q", "r2", 1);
    judgments.add("q", "n1", 0);

    // Both relevant questions on top: AP = 1.
    CHECK(*average_precision(make_list("q", {"r1", "r2", "n1"}), judgments) == doctest::Approx(1.0));

    // Relevant at ranks 1 and 3: AP = (1 + 2/3) / 2.
    CHECK(*average_precision(make_list("q", {"r1", "n1", "r2"}), judgments) ==
          doctest::Approx(5.0 / 6.0));

    // Relevant question never retrieved.
    Judgments one;
    one.add("q", "missing", 1);
    CHECK(*average_precision(make_list("q", {"a", "b"}), one) == doctest::Approx(0.0));

    // No relevant judgments at all: excluded, not zero.
    Judgments none;
    none.add("q", "a", 0);
    CHECK(!average_precision(make_list("q", {"a"}), none).has_value());
}

TEST_CASE("average precision ignores order below the last relevant question") {
    Judgments judgments;
    judgments.add("q", "r1", 1);
    double ap1 = *average_precision(make_list("q", {"r1", "x", "y", "z"}), judgments);
    double ap2 = *average_precision(make_list("q", {"r1", "z", "y", "x"}), judgments);
    CHECK(ap1 == ap2);
}

TEST_CASE("moving a relevant question up a rank never lowers AP") {
    oracle::Rand rand(113);
    for (int round = 0; round < 30; ++round) {
        std::vector<std::string> ids;
        Judgments judgments;
        for (int i = 0; i < 10; ++i) {
            std::string id = "d" + std::to_string(i);
            ids.push_back(id);
            judgments.add("q", id, rand.below(3) == 0 ? 1 : 0);
        }
        if (judgments.relevant_count("q") == 0) judgments.rels["q"]["d0"] = 1;
        double before = *average_precision(make_list("q", ids), judgments);
        // Swap a relevant question one rank upward.
        for (std::size_t i = 1; i < ids.size(); ++i) {
            if (judgments.label("q", ids[i]) == 1 && judgments.label("q", ids[i - 1]) == 0) {
                std::swap(ids[i], ids[i - 1]);
                break;
            }
        }
        double after = *average_precision(make_list("q", ids), judgments);
        CHECK(after >= before);
    }
}

TEST_CASE("mean average precision aggregates evaluable queries") {
    Judgments judgments;
    judgments.add("q1", "r", 1);
    judgments.add("q2", "r", 1);
    std::vector<RankedList> runs{make_list("q1", {"r"}), make_list("q2", {"x", "r"})};
    EvalReport report = mean_average_precision(runs, judgments);
    CHECK(report.map == doctest::Approx(0.75));
    CHECK(report.n_queries == 2);

    // Unevaluable query excluded and counted.
    Judgments partial;
    partial.add("q1", "r", 1);
    std::vector<RankedList> mixed{make_list("q1", {"x", "r"}), make_list("q2", {"y"})};
    EvalReport partial_report = mean_average_precision(mixed, partial);
    CHECK(partial_report.map == doctest::Approx(0.5));
    CHECK(partial_report.n_queries == 1);
    CHECK(partial_report.skipped_queries == 1);

    std::vector<RankedList> empty_runs{make_list("q9", {"y"})};
    CHECK_THROWS_AS(mean_average_precision(empty_runs, partial), DataError);
}

TEST_CASE("MAP agrees with an independent implementation on random runs") {
    oracle::Rand rand(127);
    for (int round = 0; round < 20; ++round) {
        Judgments judgments;
        std::vector<RankedList> runs;
        int n_queries = 3 + static_cast<int>(rand.below(8));
        for (int qi = 0; qi < n_queries; ++qi) {
            std::string query = "q" + std::to_string(qi);
            std::vector<std::string> ids;
            for (int d = 0; d < 12; ++d) {
                std::string id = "d" + std::to_string(d);
                ids.push_back(id);
                judgments.add(query, id, rand.below(4) == 0 ? 1 : 0);
            }
            // Deterministic pseudo-random permutation.
            for (std::size_t i = ids.size(); i > 1; --i) {
                std::swap(ids[i - 1], ids[rand.below(i)]);
            }
            runs.push_back(make_list(query, ids));
        }
        bool any_relevant = false;
        for (const RankedList& r : runs) any_relevant |= judgments.relevant_count(r.query_id) > 0;
        if (!any_relevant) continue;
        EvalReport report = mean_average_precision(runs, judgments);
        CHECK(std::fabs(report.map - oracle::map_oracle(runs, judgments)) < 1e-9);
    }
}

TEST_CASE("MAP of a run judged by its own retrievals is 1") {
    oracle::Rand rand(131);
    std::vector<RankedList> runs;
    Judgments judgments;
    for (int qi = 0; qi < 5; ++qi) {
        std::string query = "q" + std::to_string(qi);
        std::vector<std::string> ids;
        for (int d = 0; d < 6; ++d) {
            std::string id = "d" + std::to_string(d);
            ids.push_back(id);
            judgments.add(query, id, 1);
        }
        runs.push_back(make_list(query, ids));
    }
    CHECK(mean_average_precision(runs, judgments).map == doctest::Approx(1.0));
}

TEST_CASE("dev/test split is deterministic and balanced") {
    std::vector<std::string> ten;
    for (int i = 0; i < 10; ++i) ten.push_back("q" + std::to_string(i));
    DevTestSplit split = split_dev_test(ten, 7);
    CHECK(split.dev.size() == 5);
    CHECK(split.test.size() == 5);

    std::vector<std::string> eleven = ten;
    eleven.push_back("q10");
    DevTestSplit odd = split_dev_test(eleven, 7);
    CHECK(odd.dev.size() == 6);
    CHECK(odd.test.size() == 5);

    DevTestSplit again = split_dev_test(ten, 7);
    CHECK(again.dev == split.dev);
    CHECK(again.test == split.test);

    // Disjoint and covering.
    std::set<std::string> all(split.dev.begin(), split.dev.end());
    for (const std::string& id : split.test) CHECK(all.insert(id).second);
    CHECK(all.size() == ten.size());

    CHECK_THROWS_AS(split_dev_test({"only"}, 7), DataError);
}

TEST_CASE("dev/test splits partition every size") {
    for (int n = 2; n <= 25; ++n) {
        std::vector<std::string> ids;
        for (int i = 0; i < n; ++i) ids.push_back("q" + std::to_string(i));
        DevTestSplit split = split_dev_test(ids, 17);
        CHECK(split.dev.size() - split.test.size() <= 1);
        CHECK(split.dev.size() >= split.test.size());
        std::set<std::string> all(split.dev.begin(), split.dev.end());
        for (const std::string& id : split.test) CHECK(all.insert(id).second);
        CHECK(all.size() == ids.size());
    }
}

TEST_CASE("paired t-test matches the hand-computed df=4 example") {
    std::vector<double> a{2.0, 4.0, 6.0, 8.0, 10.0};
    std::vector<double> b{1.0, 2.0, 3.0, 4.0, 5.0};  // differences 1..5
    TTestResult result = paired_t_test(a, b);
    CHECK(result.t == doctest::Approx(4.242640687).epsilon(1e-9));
    CHECK(std::fabs(result.p - 0.0132) < 1e-3);
    CHECK(result.significant_at_95);
}

TEST_CASE("paired t-test reproduces standard table quantiles") {
    // Differences shifted so the t statistic lands exactly on a two-sided
    // 5% critical value; p must come out at 0.05.
    auto shifted = [](int n, double target_t, double mean, double sd) {
        std::vector<double> d;
        double k = target_t / std::sqrt(static_cast<double>(n)) * sd - mean;
        for (int i = 1; i <= n; ++i) d.push_back(i + k);
        return d;
    };
    std::vector<double> zeros5(5, 0.0), zeros11(11, 0.0);

    TTestResult df4 = paired_t_test(shifted(5, 2.776445, 3.0, 1.5811388300841898), zeros5);
    CHECK(df4.p == doctest::Approx(0.05).epsilon(1e-5));

    TTestResult df10 = paired_t_test(shifted(11, 2.228139, 6.0, 3.3166247903554), zeros11);
    CHECK(df10.p == doctest::Approx(0.05).epsilon(1e-5));

    // t = 1 with one degree of freedom sits at p = 0.5 (Cauchy quartile).
    std::vector<double> d1{0.0, 1.0}, zeros2(2, 0.0);
    TTestResult df1 = paired_t_test(d1, zeros2);
    CHECK(df1.t == doctest::Approx(1.0));
    CHECK(df1.p == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("paired t-test conventions and symmetry") {
    std::vector<double> a{0.5, 0.6, 0.7};
    CHECK(paired_t_test(a, a).t == 0.0);
    CHECK(paired_t_test(a, a).p == 1.0);
    CHECK(!paired_t_test(a, a).significant_at_95);

    // Zero variance, nonzero mean.
    std::vector<double> b{0.4, 0.5, 0.6};
    TTestResult shifted = paired_t_test(a, b);
    CHECK(std::isinf(shifted.t));
    CHECK(shifted.p == 0.0);
    CHECK(shifted.significant_at_95);

    std::vector<double> c{0.52, 0.71, 0.63};
    TTestResult forward = paired_t_test(a, c);
    TTestResult backward = paired_t_test(c, a);
    CHECK(forward.t == doctest::Approx(-backward.t));
    CHECK(forward.p == doctest::Approx(backward.p));

    std::vector<double> mismatched{0.1, 0.2};
    CHECK_THROWS_AS(paired_t_test(a, mismatched), DataError);
    std::vector<double> tiny{0.1};
    CHECK_THROWS_AS(paired_t_test(tiny, tiny), DataError);
}

TEST_CASE("qrels round-trip through the TREC format") {
    Judgments judgments;
    judgments.add("q1", "d1", 1);
    judgments.add("q1", "d2", 0);
    judgments.add("q2", "d1", 1);

    auto path = std::filesystem::temp_directory_path() / "qrex_qrels_rt.txt";
    {
        std::ofstream out(path);
        save_qrels(judgments, out);
    }
    Judgments loaded = load_qrels(path);
    CHECK(loaded.rels == judgments.rels);

    auto bad = std::filesystem::temp_directory_path() / "qrex_qrels_bad.txt";
    {
        std::ofstream out(bad);
        out << "q1 0 d1 2\n";
    }
    CHECK_THROWS_AS(load_qrels(bad), DataError);

    auto dup = std::filesystem::temp_directory_path() / "qrex_qrels_dup.txt";
    {
        std::ofstream out(dup);
        out << "q1 0 d1 1\nq1 0 d1 0\n";
    }
    CHECK_THROWS_AS(load_qrels(dup), DataError);
}
