#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qrex/retrieval.hpp"

namespace qrex {

/// Binary relevance labels per (query, question) pair.
struct Judgments {
    std::map<std::string, std::map<std::string, int>> rels;

    /// 0 when the pair is unjudged.
    int label(const std::string& query_id, const std::string& question_id) const;
    std::size_t relevant_count(const std::string& query_id) const;
    /// Throws on duplicate pairs and on labels outside {0, 1}.
    void add(const std::string& query_id, const std::string& question_id, int label);
};

/// TREC qrels format: "<query_id> 0 <question_id> <0|1>".
Judgments load_qrels(const std::filesystem::path& path);
void save_qrels(const Judgments& judgments, std::ostream& out);

/// AP with unjudged questions counted non-relevant; nullopt when the query
/// has no relevant judged question (excluded upstream, not scored 0).
std::optional<double> average_precision(const RankedList& ranked, const Judgments& judgments);

struct EvalReport {
    std::map<std::string, double> per_query_ap;
    double map = 0.0;
    std::size_t n_queries = 0;
    std::size_t skipped_queries = 0;  // queries without relevant judgments
};

EvalReport mean_average_precision(std::span<const RankedList> runs, const Judgments& judgments);

struct DevTestSplit {
    std::vector<std::string> dev;
    std::vector<std::string> test;
};

/// Deterministic seeded shuffle; dev takes the first half (the extra query on
/// odd counts), test the rest.
DevTestSplit split_dev_test(std::vector<std::string> query_ids, std::uint64_t seed);

struct TTestResult {
    double t = 0.0;
    double p = 1.0;
    bool significant_at_95 = false;
};

/// Two-sided paired t-test with n-1 degrees of freedom; p-values through the
/// regularized incomplete beta function. Zero-variance differences follow the
/// conventions t=0,p=1 (zero mean) and t=+-inf,p=0 (nonzero mean).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace qrex
