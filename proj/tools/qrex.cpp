// qrex: question retrieval with query expansion.
// Subcommands: index, retrieve, expand, central, eval, tune, synth.

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qrex/centrality.hpp"
#include "qrex/corpus.hpp"
#include "qrex/embeddings.hpp"
#include "qrex/errors.hpp"
#include "qrex/eval.hpp"
#include "qrex/expansion.hpp"
#include "qrex/retrieval.hpp"
#include "qrex/synth.hpp"

namespace {

using namespace qrex;

// ---------------------------------------------------------------------------
// options

struct Options {
    std::string corpus_path;
    std::string index_path;
    std::string queries_path;
    std::string embeddings_path;
    std::string ctx_path;
    std::string qrels_path;
    std::string out_path;
    std::string method = "lmir";
    std::string tag;
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    std::uint64_t seed = 42;

    bool index_body = false;
    bool index_answers = false;
    bool remove_stopwords = false;
    bool stem = false;

    ScoringParams scoring;
    ExpansionParams expansion;
    CentralitySpec centrality;
    SynthSpec synth;

    std::string tune_param;
    std::vector<double> tune_grid;
    std::vector<std::string> run_files;

    FieldConfig field_config() const {
        FieldConfig config;
        config.index_body = index_body;
        config.index_answers = index_answers;
        config.tokenizer.remove_stopwords = remove_stopwords;
        config.tokenizer.stem = stem;
        return config;
    }
};

struct Method {
    enum class Base { bm25, lmir, trlm, lm_prf, exp_al, exp_kuzi, exp_elmo, exp_elmo_prf };
    Base base = Base::lmir;
    bool selective = false;
    std::string name;

    bool is_expansion() const {
        return base == Base::exp_al || base == Base::exp_kuzi || base == Base::exp_elmo ||
               base == Base::exp_elmo_prf;
    }
    bool needs_embeddings() const { return base == Base::exp_al || base == Base::exp_kuzi; }
    bool needs_contextual() const {
        return base == Base::exp_elmo || base == Base::exp_elmo_prf;
    }
};

Method parse_method(const std::string& name) {
    Method method;
    method.name = name;
    std::string base = name;
    const std::string suffix = "-centrality";
    if (base.size() > suffix.size() &&
        base.compare(base.size() - suffix.size(), suffix.size(), suffix) == 0) {
        method.selective = true;
        base = base.substr(0, base.size() - suffix.size());
    }
    if (base == "bm25") method.base = Method::Base::bm25;
    else if (base == "lmir") method.base = Method::Base::lmir;
    else if (base == "trlm") method.base = Method::Base::trlm;
    else if (base == "lm-prf") method.base = Method::Base::lm_prf;
    else if (base == "expAL") method.base = Method::Base::exp_al;
    else if (base == "expKuzi") method.base = Method::Base::exp_kuzi;
    else if (base == "expELMo") method.base = Method::Base::exp_elmo;
    else if (base == "expELMoPRF") method.base = Method::Base::exp_elmo_prf;
    else {
        throw ConfigError("unknown method '" + name +
                          "' (expected one of bm25, lmir, trlm, lm-prf, expAL, expKuzi, "
                          "expELMo, expELMoPRF, each optionally with -centrality)");
    }
    return method;
}

std::string format_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

/// Run tags carry the method plus a parameter fingerprint so evaluation
/// tables stay self-describing.
std::string parameter_hash(const Options& opt) {
    std::string snapshot = opt.method;
    for (double v : {opt.scoring.mu, opt.scoring.bm25_k1, opt.scoring.bm25_b,
                     opt.scoring.translation_beta, opt.scoring.translation_self_prob,
                     static_cast<double>(opt.scoring.translation_min_count),
                     opt.expansion.alpha_al, static_cast<double>(opt.expansion.k_words),
                     static_cast<double>(opt.expansion.v_words), opt.expansion.lambda_kuzi,
                     static_cast<double>(opt.expansion.k_questions), opt.expansion.alpha_elmo,
                     opt.expansion.alpha_prf, opt.expansion.beta_prf,
                     static_cast<double>(opt.expansion.prf_depth), opt.expansion.prf_weight,
                     opt.expansion.smm_lambda, static_cast<double>(opt.expansion.smm_iters),
                     static_cast<double>(opt.centrality.feedback_depth),
                     static_cast<double>(opt.centrality.iters), opt.centrality.c_idf,
                     opt.centrality.damping}) {
        snapshot += ':';
        snapshot += format_double(v);
    }
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : snapshot) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%08llx", static_cast<unsigned long long>(hash >> 32));
    return buf;
}

// ---------------------------------------------------------------------------
// shared pipeline pieces

void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, n == 0 ? 1 : static_cast<unsigned>(n)));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < n;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            }
        });
    }
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

Corpus load_corpus_input(const Options& opt) {
    if (!opt.index_path.empty()) return load_index(opt.index_path);
    if (opt.corpus_path.empty()) {
        throw ConfigError("provide a question collection via --corpus or --index");
    }
    IngestReport report;
    Corpus corpus = ingest_corpus(opt.corpus_path, opt.field_config(), &report);
    std::cerr << "ingested " << report.accepted << " questions (" << report.skipped_empty
              << " skipped empty) from " << opt.corpus_path << '\n';
    return corpus;
}

// Queries tokenize with the corpus's own field config, so an index built
// with stemming or stopword removal stays consistent with its queries.
std::vector<Question> load_queries(const Options& opt, const FieldConfig& config) {
    if (opt.queries_path.empty()) throw ConfigError("provide input questions via --queries");
    IngestReport report;
    std::vector<Question> queries = read_question_file(opt.queries_path, config, &report);
    if (report.skipped_empty > 0) {
        std::cerr << "warning: skipped " << report.skipped_empty
                  << " input questions with no tokens\n";
    }
    std::sort(queries.begin(), queries.end(),
              [](const Question& a, const Question& b) { return a.id < b.id; });
    return queries;
}

struct Resources {
    Corpus corpus;
    std::vector<Question> queries;
    EmbeddingTable embeddings;
    ContextualStore contextual;
    TranslationTable translation;
};

Resources load_resources(const Options& opt, const Method& method) {
    Resources res;
    res.corpus = load_corpus_input(opt);
    res.queries = load_queries(opt, res.corpus.field_config());

    if (method.needs_embeddings()) {
        if (opt.embeddings_path.empty()) {
            throw ConfigError("method " + method.name + " requires --embeddings");
        }
        EmbeddingLoadReport report;
        res.embeddings = load_static_embeddings(opt.embeddings_path, &report);
        if (report.duplicates > 0) {
            std::cerr << "warning: " << report.duplicates
                      << " duplicate embedding rows (last occurrence kept)\n";
        }
    }
    if (method.needs_contextual()) {
        if (opt.ctx_path.empty()) {
            throw ConfigError("method " + method.name + " requires --ctx-store");
        }
        std::map<std::string, std::size_t> expected;
        for (const Question& q : res.corpus.questions()) expected[q.id] = q.tokens.size();
        for (const Question& q : res.queries) expected[q.id] = q.tokens.size();
        res.contextual = load_contextual_store(opt.ctx_path, expected);
        for (const auto& [id, count] : expected) {
            (void)count;
            if (!res.contextual.contains(id)) {
                throw DataError("contextual store " + opt.ctx_path +
                                " is missing vectors for question '" + id +
                                "'; regenerate the --ctx-store input");
            }
        }
    }
    if (method.base == Method::Base::trlm) {
        res.translation = build_translation_table(res.corpus, opt.scoring.translation_min_count,
                                                  opt.scoring.translation_self_prob);
    }
    return res;
}

struct QueryOutput {
    RankedList list;
    ExpandedQuery expanded;
    bool has_expanded = false;
    std::vector<std::string> notes;
};

QueryOutput process_query(const Question& query, const Method& method, const Options& opt,
                          const Resources& res) {
    QueryOutput out;
    std::set<std::string> exclude;
    if (method.selective) {
        if (method.is_expansion()) {
            CentralWordSet central = central_words(query, res.corpus, opt.centrality,
                                                   FeedbackScorer::kl, opt.scoring);
            exclude.insert(central.words.begin(), central.words.end());
            std::string joined;
            for (const std::string& w : central.words) {
                if (!joined.empty()) joined += ", ";
                joined += w;
            }
            out.notes.push_back("central words: " + joined);
        } else {
            out.notes.push_back("centrality has no effect on method " + method.name);
        }
    }

    std::size_t unseen = 0;
    for (const auto& [term, count] : query.term_counts) {
        (void)count;
        if (!res.corpus.stats().contains(term)) ++unseen;
    }
    if (unseen > 0) {
        out.notes.push_back(std::to_string(unseen) + " query terms unseen in the collection");
    }

    switch (method.base) {
        case Method::Base::bm25:
            out.list = rank(query.id, res.corpus, [&](const Question& cand) {
                return bm25_score(query, cand, res.corpus.stats(), opt.scoring);
            });
            break;
        case Method::Base::lmir:
            out.list = rank_kl(query.id, mle_lm(query), res.corpus, opt.scoring);
            break;
        case Method::Base::trlm:
            out.list = rank(query.id, res.corpus, [&](const Question& cand) {
                return translation_lm_score(query, cand, res.translation, res.corpus.stats(),
                                            opt.scoring);
            });
            break;
        case Method::Base::lm_prf:
            out.expanded = expand_prf(query, res.corpus, opt.scoring, opt.expansion);
            out.has_expanded = true;
            break;
        case Method::Base::exp_al:
            out.expanded = expand_word_by_word(query, res.embeddings, res.corpus.stats(),
                                               opt.expansion, exclude);
            out.has_expanded = true;
            break;
        case Method::Base::exp_kuzi:
            out.expanded = expand_centroid(query, res.embeddings, res.corpus.stats(),
                                           opt.expansion, exclude);
            out.has_expanded = true;
            break;
        case Method::Base::exp_elmo:
            out.expanded = expand_similar_questions(query, res.corpus, res.contextual,
                                                    opt.expansion, exclude);
            out.has_expanded = true;
            break;
        case Method::Base::exp_elmo_prf:
            out.expanded = expand_similar_questions_prf(query, res.corpus, res.contextual,
                                                        opt.scoring, opt.expansion,
                                                        FeedbackScorer::kl, exclude);
            out.has_expanded = true;
            break;
    }
    if (out.has_expanded) {
        out.list = rank_kl(query.id, out.expanded.lm, res.corpus, opt.scoring);
        for (const std::string& flag : out.expanded.flags) out.notes.push_back(flag);
    }
    return out;
}

std::vector<QueryOutput> run_pipeline(const Options& opt, const Method& method,
                                      const Resources& res) {
    std::vector<QueryOutput> outputs(res.queries.size());
    parallel_for(res.queries.size(), opt.workers, [&](std::size_t i) {
        outputs[i] = process_query(res.queries[i], method, opt, res);
    });
    return outputs;
}

void print_notes(const Resources& res, const std::vector<QueryOutput>& outputs) {
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        for (const std::string& note : outputs[i].notes) {
            std::cerr << res.queries[i].id << ": " << note << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// subcommands

int cmd_index(const Options& opt) {
    if (opt.corpus_path.empty()) throw ConfigError("index requires --corpus");
    if (opt.out_path.empty()) throw ConfigError("index requires --out <directory>");
    IngestReport report;
    Corpus corpus = ingest_corpus(opt.corpus_path, opt.field_config(), &report);
    std::filesystem::create_directories(opt.out_path);
    save_index(corpus, std::filesystem::path(opt.out_path) / "index.json");
    std::cerr << "indexed " << report.accepted << " questions (" << report.skipped_empty
              << " skipped empty), " << corpus.stats().collection_count.size()
              << " distinct terms\n";
    return 0;
}

int cmd_retrieve(const Options& opt) {
    if (opt.out_path.empty()) throw ConfigError("retrieve requires --out <run file>");
    Method method = parse_method(opt.method);
    Resources res = load_resources(opt, method);
    std::vector<QueryOutput> outputs = run_pipeline(opt, method, res);

    std::vector<RankedList> lists;
    lists.reserve(outputs.size());
    for (QueryOutput& o : outputs) lists.push_back(std::move(o.list));

    std::string tag = opt.tag.empty() ? opt.method + "-" + parameter_hash(opt) : opt.tag;
    std::ofstream out(opt.out_path);
    if (!out) throw DataError("cannot write run file: " + opt.out_path);
    write_run_file(out, lists, tag);
    print_notes(res, outputs);
    std::cerr << "wrote " << lists.size() << " ranked lists to " << opt.out_path << '\n';
    return 0;
}

int cmd_expand(const Options& opt) {
    Method method = parse_method(opt.method);
    if (!method.is_expansion() && method.base != Method::Base::lm_prf) {
        throw ConfigError("expand requires an expansion method, not " + opt.method);
    }
    Resources res = load_resources(opt, method);
    std::vector<QueryOutput> outputs = run_pipeline(opt, method, res);

    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!opt.out_path.empty()) {
        file.open(opt.out_path);
        if (!file) throw DataError("cannot write expansion dump: " + opt.out_path);
        out = &file;
    }
    for (const QueryOutput& o : outputs) {
        nlohmann::json record;
        record["id"] = o.expanded.query_id;
        record["method"] = o.expanded.method;
        record["params"] = {{"hash", parameter_hash(opt)},
                            {"mu", opt.scoring.mu},
                            {"alpha_al", opt.expansion.alpha_al},
                            {"k_words", opt.expansion.k_words},
                            {"v_words", opt.expansion.v_words},
                            {"lambda_kuzi", opt.expansion.lambda_kuzi},
                            {"k_questions", opt.expansion.k_questions},
                            {"alpha_elmo", opt.expansion.alpha_elmo},
                            {"alpha_prf", opt.expansion.alpha_prf},
                            {"beta_prf", opt.expansion.beta_prf},
                            {"prf_depth", opt.expansion.prf_depth},
                            {"prf_weight", opt.expansion.prf_weight},
                            {"smm_lambda", opt.expansion.smm_lambda},
                            {"smm_iters", opt.expansion.smm_iters}};
        record["flags"] = o.expanded.flags;
        std::vector<Contribution> sorted = o.expanded.contributions;
        std::sort(sorted.begin(), sorted.end(), [](const Contribution& a, const Contribution& b) {
            if (a.mass != b.mass) return a.mass > b.mass;
            if (a.term != b.term) return a.term < b.term;
            return static_cast<int>(a.origin) < static_cast<int>(b.origin);
        });
        nlohmann::json terms = nlohmann::json::array();
        for (const Contribution& c : sorted) {
            nlohmann::json entry;
            entry["term"] = c.term;
            entry["p"] = c.mass;
            entry["origin"] = std::string(to_string(c.origin));
            if (!c.source.empty()) entry["source"] = c.source;
            terms.push_back(std::move(entry));
        }
        record["terms"] = std::move(terms);
        *out << record.dump() << '\n';
    }
    print_notes(res, outputs);
    return 0;
}

int cmd_central(const Options& opt) {
    Options local = opt;
    local.method = "lmir";
    Method method = parse_method(local.method);
    Resources res = load_resources(local, method);

    char buf[256];
    for (const Question& query : res.queries) {
        std::vector<const Question*> feedback = retrieve_feedback(
            query, res.corpus, static_cast<std::size_t>(opt.centrality.feedback_depth),
            FeedbackScorer::kl, opt.scoring);
        std::map<std::string, double> centrality =
            term_centrality(query, feedback, opt.centrality);
        CentralWordSet set =
            central_words(query, res.corpus, opt.centrality, FeedbackScorer::kl, opt.scoring);

        std::cout << "# " << query.id << " central:";
        for (const std::string& w : set.words) std::cout << ' ' << w;
        std::cout << '\n';
        std::cout << "term\tA\tdidf\tI\tmark\n";
        std::set<std::string> seen;
        for (const std::string& token : query.tokens) {
            if (!seen.insert(token).second) continue;
            double a = centrality.at(token);
            double d = didf(token, res.corpus.stats(), opt.centrality.c_idf);
            std::string mark;
            if (token == set.before_idf) mark += "A*";
            if (token == set.after_idf) mark += mark.empty() ? "I*" : " I*";
            std::snprintf(buf, sizeof(buf), "%s\t%.6f\t%.6f\t%.6f\t%s", token.c_str(), a, d,
                          a * d, mark.c_str());
            std::cout << buf << '\n';
        }
    }
    return 0;
}

int cmd_eval(const Options& opt) {
    if (opt.qrels_path.empty()) throw ConfigError("eval requires --qrels");
    if (opt.run_files.empty()) throw ConfigError("eval requires at least one run file");
    Judgments judgments = load_qrels(opt.qrels_path);

    struct RunEval {
        std::string name;
        RunFile run;
        EvalReport report;
    };
    std::vector<RunEval> runs;
    for (const std::string& path : opt.run_files) {
        RunEval r;
        r.run = read_run_file(path);
        r.name = r.run.tag.empty() ? path : r.run.tag;
        std::vector<std::string> orphans;
        for (const RankedList& list : r.run.lists) {
            if (judgments.rels.find(list.query_id) == judgments.rels.end()) {
                orphans.push_back(list.query_id);
            }
        }
        if (!orphans.empty()) {
            std::cerr << "warning: " << path << " has " << orphans.size()
                      << " queries without judgments:";
            for (const std::string& id : orphans) std::cerr << ' ' << id;
            std::cerr << '\n';
        }
        r.report = mean_average_precision(r.run.lists, judgments);
        runs.push_back(std::move(r));
    }

    char buf[256];
    std::cout << "query";
    for (const RunEval& r : runs) std::cout << '\t' << r.name;
    std::cout << '\n';
    std::set<std::string> all_queries;
    for (const RunEval& r : runs) {
        for (const auto& [query_id, ap] : r.report.per_query_ap) {
            (void)ap;
            all_queries.insert(query_id);
        }
    }
    for (const std::string& query_id : all_queries) {
        std::cout << query_id;
        for (const RunEval& r : runs) {
            auto it = r.report.per_query_ap.find(query_id);
            if (it == r.report.per_query_ap.end()) {
                std::cout << "\t-";
            } else {
                std::snprintf(buf, sizeof(buf), "\t%.6f", it->second);
                std::cout << buf;
            }
        }
        std::cout << '\n';
    }
    std::cout << '\n';
    for (const RunEval& r : runs) {
        std::snprintf(buf, sizeof(buf), "MAP\t%s\t%.4f\t(n=%zu, skipped=%zu)", r.name.c_str(),
                      r.report.map, r.report.n_queries, r.report.skipped_queries);
        std::cout << buf << '\n';
    }

    if (runs.size() > 1) {
        std::cout << "\n# paired t-test p-values (two-sided, * = significant at 95%)\n";
        for (std::size_t i = 0; i < runs.size(); ++i) {
            for (std::size_t j = i + 1; j < runs.size(); ++j) {
                std::vector<double> a, b;
                for (const auto& [query_id, ap] : runs[i].report.per_query_ap) {
                    auto other = runs[j].report.per_query_ap.find(query_id);
                    if (other == runs[j].report.per_query_ap.end()) continue;
                    a.push_back(ap);
                    b.push_back(other->second);
                }
                if (a.size() < 2) {
                    std::cout << runs[i].name << " vs " << runs[j].name
                              << ": not enough aligned queries\n";
                    continue;
                }
                TTestResult t = paired_t_test(a, b);
                std::snprintf(buf, sizeof(buf), "%s vs %s: t=%.4f p=%.4f%s",
                              runs[i].name.c_str(), runs[j].name.c_str(), t.t, t.p,
                              t.significant_at_95 ? " *" : "");
                std::cout << buf << '\n';
            }
        }
    }
    return 0;
}

int cmd_tune(const Options& opt) {
    if (opt.qrels_path.empty()) throw ConfigError("tune requires --qrels");
    if (opt.tune_param.empty() || opt.tune_grid.empty()) {
        throw ConfigError("tune requires --param and --grid");
    }

    using Setter = std::function<void(Options&, double)>;
    const std::map<std::string, Setter> setters = {
        {"mu", [](Options& o, double v) { o.scoring.mu = v; }},
        {"bm25_k1", [](Options& o, double v) { o.scoring.bm25_k1 = v; }},
        {"bm25_b", [](Options& o, double v) { o.scoring.bm25_b = v; }},
        {"translation_beta", [](Options& o, double v) { o.scoring.translation_beta = v; }},
        {"translation_self_prob",
         [](Options& o, double v) { o.scoring.translation_self_prob = v; }},
        {"alpha_al", [](Options& o, double v) { o.expansion.alpha_al = v; }},
        {"k_words", [](Options& o, double v) { o.expansion.k_words = static_cast<int>(v); }},
        {"v_words", [](Options& o, double v) { o.expansion.v_words = static_cast<int>(v); }},
        {"lambda_kuzi", [](Options& o, double v) { o.expansion.lambda_kuzi = v; }},
        {"k_questions",
         [](Options& o, double v) { o.expansion.k_questions = static_cast<int>(v); }},
        {"alpha_elmo", [](Options& o, double v) { o.expansion.alpha_elmo = v; }},
        {"alpha_prf", [](Options& o, double v) { o.expansion.alpha_prf = v; }},
        {"beta_prf", [](Options& o, double v) { o.expansion.beta_prf = v; }},
        {"prf_depth", [](Options& o, double v) { o.expansion.prf_depth = static_cast<int>(v); }},
        {"prf_weight", [](Options& o, double v) { o.expansion.prf_weight = v; }},
        {"smm_lambda", [](Options& o, double v) { o.expansion.smm_lambda = v; }},
        {"smm_iters", [](Options& o, double v) { o.expansion.smm_iters = static_cast<int>(v); }},
        {"centrality_depth",
         [](Options& o, double v) { o.centrality.feedback_depth = static_cast<int>(v); }},
        {"centrality_iters",
         [](Options& o, double v) { o.centrality.iters = static_cast<int>(v); }},
        {"c_idf", [](Options& o, double v) { o.centrality.c_idf = v; }},
        {"damping", [](Options& o, double v) { o.centrality.damping = v; }},
    };
    auto setter = setters.find(opt.tune_param);
    if (setter == setters.end()) {
        throw ConfigError("unknown tunable parameter '" + opt.tune_param + "'");
    }

    Method method = parse_method(opt.method);
    Resources res = load_resources(opt, method);

    // The development half of the split is the only data tuning may read.
    std::vector<std::string> ids;
    for (const Question& q : res.queries) ids.push_back(q.id);
    DevTestSplit split = split_dev_test(ids, opt.seed);
    std::set<std::string> dev_ids(split.dev.begin(), split.dev.end());

    Judgments full = load_qrels(opt.qrels_path);
    Judgments dev_judgments;
    for (const auto& [query_id, docs] : full.rels) {
        if (dev_ids.count(query_id) == 0) continue;
        for (const auto& [question_id, label] : docs) {
            dev_judgments.add(query_id, question_id, label);
        }
    }

    Resources dev_res;
    dev_res.corpus = std::move(res.corpus);
    dev_res.embeddings = std::move(res.embeddings);
    dev_res.contextual = std::move(res.contextual);
    dev_res.translation = std::move(res.translation);
    for (const Question& q : res.queries) {
        if (dev_ids.count(q.id) > 0) dev_res.queries.push_back(q);
    }

    char buf[128];
    std::cout << "param\tvalue\tdev_map\tn\n";
    double best_value = opt.tune_grid.front();
    double best_map = -1.0;
    for (double value : opt.tune_grid) {
        Options trial = opt;
        setter->second(trial, value);
        std::vector<QueryOutput> outputs = run_pipeline(trial, method, dev_res);
        std::vector<RankedList> lists;
        for (QueryOutput& o : outputs) lists.push_back(std::move(o.list));
        EvalReport report = mean_average_precision(lists, dev_judgments);
        std::snprintf(buf, sizeof(buf), "%s\t%s\t%.4f\t%zu", opt.tune_param.c_str(),
                      format_double(value).c_str(), report.map, report.n_queries);
        std::cout << buf << '\n';
        if (report.map > best_map) {
            best_map = report.map;
            best_value = value;
        }
    }
    std::snprintf(buf, sizeof(buf), "best\t%s\t%.4f", format_double(best_value).c_str(),
                  best_map);
    std::cout << buf << '\n';
    std::cerr << "tuned on " << dev_res.queries.size() << " dev queries; " << split.test.size()
              << " test queries untouched\n";
    return 0;
}

int cmd_synth(const Options& opt) {
    if (opt.out_path.empty()) throw ConfigError("synth requires --out <directory>");
    SynthData data = generate(opt.synth);
    write_synth_files(data, opt.out_path);
    std::cerr << "wrote synthetic data (" << data.corpus.size() << " candidates, "
              << data.queries.size() << " queries) to " << opt.out_path << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// wiring

void add_tokenizer_flags(CLI::App* cmd, Options& opt) {
    cmd->add_flag("--index-body", opt.index_body, "Index question bodies alongside titles");
    cmd->add_flag("--index-answers", opt.index_answers, "Index answer text alongside titles");
    cmd->add_flag("--stopwords", opt.remove_stopwords, "Remove stopwords during tokenization");
    cmd->add_flag("--stem", opt.stem, "Apply light plural stemming");
}

void add_param_flags(CLI::App* cmd, Options& opt) {
    cmd->add_option("--mu", opt.scoring.mu, "Dirichlet smoothing pseudo-count");
    cmd->add_option("--bm25-k1", opt.scoring.bm25_k1, "BM25 k1");
    cmd->add_option("--bm25-b", opt.scoring.bm25_b, "BM25 b");
    cmd->add_option("--trans-beta", opt.scoring.translation_beta, "Translation mixing weight");
    cmd->add_option("--trans-self-prob", opt.scoring.translation_self_prob,
                    "Self-translation floor");
    cmd->add_option("--trans-min-count", opt.scoring.translation_min_count,
                    "Minimum occurrences for translation rows");
    cmd->add_option("--alpha-al", opt.expansion.alpha_al, "Word-expansion count weight");
    cmd->add_option("--k-words", opt.expansion.k_words, "Expansion words per base word");
    cmd->add_option("--v-words", opt.expansion.v_words, "Centroid expansion words");
    cmd->add_option("--lambda-kuzi", opt.expansion.lambda_kuzi,
                    "Original-model weight in centroid interpolation");
    cmd->add_option("--k-questions", opt.expansion.k_questions, "Contextual feedback questions");
    cmd->add_option("--alpha-elmo", opt.expansion.alpha_elmo, "Contextual feedback weight");
    cmd->add_option("--alpha-prf", opt.expansion.alpha_prf,
                    "Contextual feedback weight in the fused model");
    cmd->add_option("--beta-prf", opt.expansion.beta_prf, "PRF weight in the fused model");
    cmd->add_option("--prf-depth", opt.expansion.prf_depth, "PRF feedback questions");
    cmd->add_option("--prf-weight", opt.expansion.prf_weight, "Standalone PRF feedback weight");
    cmd->add_option("--smm-lambda", opt.expansion.smm_lambda, "Mixture background weight");
    cmd->add_option("--smm-iters", opt.expansion.smm_iters, "Mixture EM iterations");
    cmd->add_option("--centrality-depth", opt.centrality.feedback_depth,
                    "Centrality feedback questions");
    cmd->add_option("--centrality-iters", opt.centrality.iters, "Centrality iterations");
    cmd->add_option("--c-idf", opt.centrality.c_idf, "didf regulator");
    cmd->add_option("--damping", opt.centrality.damping, "Centrality damping factor");
}

}  // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"question retrieval with query expansion"};
    app.require_subcommand(1);
    app.fallthrough();  // lets --config appear after the subcommand name
    app.set_config("--config", "", "Configuration file (key=value; [subcommand] sections)");

    CLI::App* index = app.add_subcommand("index", "Tokenize and index a question collection");
    index->add_option("--corpus", opt.corpus_path, "Question collection (JSONL)");
    index->add_option("--out", opt.out_path, "Output directory for index artifacts");
    add_tokenizer_flags(index, opt);

    CLI::App* retrieve = app.add_subcommand("retrieve", "Rank the collection per input question");
    retrieve->add_option("--corpus", opt.corpus_path, "Question collection (JSONL)");
    retrieve->add_option("--index", opt.index_path, "Prebuilt index.json");
    retrieve->add_option("--queries", opt.queries_path, "Input questions (JSONL)");
    retrieve->add_option("--embeddings", opt.embeddings_path,
                         "Static word vectors (word2vec text)");
    retrieve->add_option("--ctx-store", opt.ctx_path, "Contextual vector store (JSONL)");
    retrieve->add_option("--method", opt.method,
                         "bm25|lmir|trlm|lm-prf|expAL|expKuzi|expELMo|expELMoPRF[-centrality]");
    retrieve->add_option("--out", opt.out_path, "Run file to write");
    retrieve->add_option("--tag", opt.tag, "Run tag (default: method + parameter hash)");
    retrieve->add_option("--workers", opt.workers, "Worker threads for query processing");
    add_tokenizer_flags(retrieve, opt);
    add_param_flags(retrieve, opt);

    CLI::App* expand = app.add_subcommand("expand", "Dump expanded query language models");
    expand->add_option("--corpus", opt.corpus_path, "Question collection (JSONL)");
    expand->add_option("--index", opt.index_path, "Prebuilt index.json");
    expand->add_option("--queries", opt.queries_path, "Input questions (JSONL)");
    expand->add_option("--embeddings", opt.embeddings_path, "Static word vectors");
    expand->add_option("--ctx-store", opt.ctx_path, "Contextual vector store");
    expand->add_option("--method", opt.method, "Expansion method");
    expand->add_option("--out", opt.out_path, "Output file (default stdout)");
    expand->add_option("--workers", opt.workers, "Worker threads");
    add_tokenizer_flags(expand, opt);
    add_param_flags(expand, opt);

    CLI::App* central = app.add_subcommand("central", "Print per-term centrality tables");
    central->add_option("--corpus", opt.corpus_path, "Question collection (JSONL)");
    central->add_option("--index", opt.index_path, "Prebuilt index.json");
    central->add_option("--queries", opt.queries_path, "Input questions (JSONL)");
    add_tokenizer_flags(central, opt);
    add_param_flags(central, opt);

    CLI::App* eval = app.add_subcommand("eval", "Evaluate run files against judgments");
    eval->add_option("--qrels", opt.qrels_path, "Relevance judgments (TREC qrels)");
    eval->add_option("runs", opt.run_files, "Run files to evaluate");

    CLI::App* tune = app.add_subcommand("tune", "Grid-search one parameter on the dev split");
    tune->add_option("--corpus", opt.corpus_path, "Question collection (JSONL)");
    tune->add_option("--index", opt.index_path, "Prebuilt index.json");
    tune->add_option("--queries", opt.queries_path, "Input questions (JSONL)");
    tune->add_option("--embeddings", opt.embeddings_path, "Static word vectors");
    tune->add_option("--ctx-store", opt.ctx_path, "Contextual vector store");
    tune->add_option("--qrels", opt.qrels_path, "Relevance judgments");
    tune->add_option("--method", opt.method, "Method to tune");
    tune->add_option("--param", opt.tune_param, "Parameter name (snake_case)");
    tune->add_option("--grid", opt.tune_grid, "Grid values")->delimiter(',');
    tune->add_option("--seed", opt.seed, "Dev/test split seed");
    tune->add_option("--workers", opt.workers, "Worker threads");
    add_tokenizer_flags(tune, opt);
    add_param_flags(tune, opt);

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic lexical-gap data set");
    synth->add_option("--out", opt.out_path, "Output directory");
    synth->add_option("--n-queries", opt.synth.n_queries, "Input questions");
    synth->add_option("--n-relevant", opt.synth.n_relevant_per_query,
                      "Relevant questions per query");
    synth->add_option("--n-distractors", opt.synth.n_distractors, "Distractors per query");
    synth->add_option("--synonym-rate", opt.synth.synonym_rate, "Per-token synonym swap rate");
    synth->add_option("--vocab-size", opt.synth.vocab_size, "Vocabulary size (words)");
    synth->add_option("--question-length", opt.synth.question_length, "Tokens per question");
    synth->add_option("--seed", opt.synth.seed, "Generator seed");
    synth->add_option("--context-dim", opt.synth.context_dim, "Contextual vector dimension");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (index->parsed()) return cmd_index(opt);
        if (retrieve->parsed()) return cmd_retrieve(opt);
        if (expand->parsed()) return cmd_expand(opt);
        if (central->parsed()) return cmd_central(opt);
        if (eval->parsed()) return cmd_eval(opt);
        if (tune->parsed()) return cmd_tune(opt);
        if (synth->parsed()) return cmd_synth(opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
