#include "qrex/eval.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "detail/rng.hpp"

namespace qrex {
namespace {

// Continued-fraction evaluation of the incomplete beta function.
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 300;
    constexpr double kEps = 3e-14;
    constexpr double kTiny = 1e-300;

    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double regularized_incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_bt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                   b * std::log(1.0 - x);
    double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
    return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

/// Two-sided p-value of a t statistic with df degrees of freedom.
double t_test_p_value(double t, double df) {
    return regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
}

}  // namespace

int Judgments::label(const std::string& query_id, const std::string& question_id) const {
    auto q = rels.find(query_id);
    if (q == rels.end()) return 0;
    auto d = q->second.find(question_id);
    return d == q->second.end() ? 0 : d->second;
}

std::size_t Judgments::relevant_count(const std::string& query_id) const {
    auto q = rels.find(query_id);
    if (q == rels.end()) return 0;
    std::size_t count = 0;
    for (const auto& [_, label] : q->second) {
        if (label == 1) ++count;
    }
    return count;
}

void Judgments::add(const std::string& query_id, const std::string& question_id, int label) {
    if (label != 0 && label != 1) {
        throw DataError("judgment label must be 0 or 1 for pair (" + query_id + ", " +
                        question_id + ")");
    }
    auto [_, inserted] = rels[query_id].emplace(question_id, label);
    if (!inserted) {
        throw DataError("duplicate judgment for pair (" + query_id + ", " + question_id + ")");
    }
}

Judgments load_qrels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open qrels file: " + path.string());

    Judgments judgments;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        std::string query_id, iteration, question_id;
        int label = 0;
        if (!(row >> query_id >> iteration >> question_id >> label)) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": malformed qrels line");
        }
        judgments.add(query_id, question_id, label);
    }
    return judgments;
}

void save_qrels(const Judgments& judgments, std::ostream& out) {
    for (const auto& [query_id, docs] : judgments.rels) {
        for (const auto& [question_id, label] : docs) {
            out << query_id << " 0 " << question_id << ' ' << label << '\n';
        }
    }
}

std::optional<double> average_precision(const RankedList& ranked, const Judgments& judgments) {
    std::size_t total_relevant = judgments.relevant_count(ranked.query_id);
    if (total_relevant == 0) return std::nullopt;

    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.entries.size(); ++i) {
        if (judgments.label(ranked.query_id, ranked.entries[i].question_id) == 1) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(total_relevant);
}

EvalReport mean_average_precision(std::span<const RankedList> runs, const Judgments& judgments) {
    EvalReport report;
    std::set<std::string> seen;
    double sum = 0.0;
    for (const RankedList& run : runs) {
        if (!seen.insert(run.query_id).second) {
            throw DataError("duplicate ranked list for query: " + run.query_id);
        }
        std::optional<double> ap = average_precision(run, judgments);
        if (!ap) {
            ++report.skipped_queries;
            continue;
        }
        report.per_query_ap[run.query_id] = *ap;
        sum += *ap;
    }
    report.n_queries = report.per_query_ap.size();
    if (report.n_queries == 0) throw DataError("no evaluable queries");
    report.map = sum / static_cast<double>(report.n_queries);
    return report;
}

DevTestSplit split_dev_test(std::vector<std::string> query_ids, std::uint64_t seed) {
    if (query_ids.size() < 2) throw DataError("dev/test split needs at least 2 queries");
    detail::Rng rng(seed);
    rng.shuffle(query_ids);

    DevTestSplit split;
    std::size_t dev_size = (query_ids.size() + 1) / 2;
    split.dev.assign(query_ids.begin(), query_ids.begin() + static_cast<std::ptrdiff_t>(dev_size));
    split.test.assign(query_ids.begin() + static_cast<std::ptrdiff_t>(dev_size), query_ids.end());
    return split;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw DataError("paired_t_test: sample length mismatch");
    if (a.size() < 2) throw DataError("paired_t_test: need at least 2 paired samples");

    std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);

    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double d = (a[i] - b[i]) - mean;
        ss += d * d;
    }
    double variance = ss / static_cast<double>(n - 1);

    TTestResult result;
    if (variance == 0.0) {
        if (mean == 0.0) return {0.0, 1.0, false};
        double inf = std::numeric_limits<double>::infinity();
        return {mean > 0.0 ? inf : -inf, 0.0, true};
    }
    double df = static_cast<double>(n - 1);
    result.t = mean / std::sqrt(variance / static_cast<double>(n));
    result.p = t_test_p_value(result.t, df);
    result.significant_at_95 = result.p < 0.05;
    return result;
}

}  // namespace qrex
