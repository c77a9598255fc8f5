#include "qrex/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "detail/rng.hpp"

namespace qrex {
namespace {

using nlohmann::json;

double l2_norm(std::span<const double> v) {
    double sum = 0.0;
    for (double x : v) sum += x * x;
    return std::sqrt(sum);
}

std::vector<double> normalize_or_zero(const std::vector<double>& v) {
    double norm = l2_norm(v);
    if (norm == 0.0) return std::vector<double>(v.size(), 0.0);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / norm;
    return out;
}

std::vector<double> hash_unit_vector(const std::string& term, std::size_t dim) {
    std::uint64_t state = detail::fnv1a64(term);
    detail::Rng rng(state);
    std::vector<double> v(dim);
    for (double& x : v) x = rng.next_symmetric();
    double norm = l2_norm(v);
    if (norm == 0.0) {
        v[0] = 1.0;
        return v;
    }
    for (double& x : v) x /= norm;
    return v;
}

}  // namespace

void EmbeddingTable::insert(const std::string& term, std::vector<double> vector) {
    if (dim_ == 0) dim_ = vector.size();
    if (vector.size() != dim_) {
        throw DataError("embedding for '" + term + "' has dimension " +
                        std::to_string(vector.size()) + ", expected " + std::to_string(dim_));
    }
    normalized_[term] = normalize_or_zero(vector);
    vectors_[term] = std::move(vector);
}

const std::vector<double>* EmbeddingTable::find(const std::string& term) const {
    auto it = vectors_.find(term);
    return it == vectors_.end() ? nullptr : &it->second;
}

const std::vector<double>* EmbeddingTable::find_normalized(const std::string& term) const {
    auto it = normalized_.find(term);
    return it == normalized_.end() ? nullptr : &it->second;
}

EmbeddingTable load_static_embeddings(const std::filesystem::path& path,
                                      EmbeddingLoadReport* report) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open embeddings file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("embeddings file is empty: " + path.string());
    std::istringstream header(line);
    std::size_t vocab_size = 0, dim = 0;
    if (!(header >> vocab_size >> dim) || dim == 0) {
        throw DataError(path.string() + ": malformed header, expected '<vocab_size> <dim>'");
    }

    EmbeddingTable table(dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream row(line);
        std::string term;
        row >> term;
        std::vector<double> vector;
        vector.reserve(dim);
        double component = 0.0;
        while (row >> component) vector.push_back(component);
        if (!row.eof()) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": non-numeric vector component for term '" + term + "'");
        }
        if (vector.size() != dim) {
            throw DataError(path.string() + " line " + std::to_string(line_no) + ": term '" +
                            term + "' has " + std::to_string(vector.size()) +
                            " components, header declares " + std::to_string(dim));
        }
        if (table.contains(term) && report) ++report->duplicates;
        table.insert(term, std::move(vector));
        if (report) ++report->rows;
    }
    return table;
}

void save_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write embeddings file: " + path.string());
    out << table.size() << ' ' << table.dim() << '\n';
    out.precision(17);
    for (const auto& [term, vector] : table.vectors()) {
        out << term;
        for (double x : vector) out << ' ' << x;
        out << '\n';
    }
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw DataError("cosine: dimension mismatch (" + std::to_string(u.size()) + " vs " +
                        std::to_string(v.size()) + ")");
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
}

namespace {

template <typename TermRange>
std::vector<WordSim> top_k_impl(const std::string& base, std::size_t k,
                                const EmbeddingTable& table, const TermRange& terms) {
    const std::vector<double>* base_vec = table.find_normalized(base);
    if (!base_vec || k == 0) return {};

    std::vector<WordSim> sims;
    for (const std::string& term : terms) {
        if (term == base) continue;
        const std::vector<double>* vec = table.find_normalized(term);
        if (!vec) continue;
        sims.push_back({term, cosine(*base_vec, *vec)});
    }
    auto by_sim = [](const WordSim& a, const WordSim& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return a.term < b.term;
    };
    if (sims.size() > k) {
        std::partial_sort(sims.begin(), sims.begin() + static_cast<std::ptrdiff_t>(k), sims.end(),
                          by_sim);
        sims.resize(k);
    } else {
        std::sort(sims.begin(), sims.end(), by_sim);
    }
    return sims;
}

}  // namespace

std::vector<WordSim> top_k_similar_words(const std::string& base, std::size_t k,
                                         const EmbeddingTable& table,
                                         const std::set<std::string>& vocab_filter) {
    return top_k_impl(base, k, table, vocab_filter);
}

std::vector<WordSim> top_k_similar_words(const std::string& base, std::size_t k,
                                         const EmbeddingTable& table) {
    std::vector<std::string> terms;
    terms.reserve(table.size());
    for (const auto& [term, _] : table.vectors()) terms.push_back(term);
    return top_k_impl(base, k, table, terms);
}

QuestionVector question_centroid(const Question& question, const EmbeddingTable& table,
                                 const std::set<std::string>& exclude) {
    QuestionVector result;
    result.values.assign(table.dim(), 0.0);
    std::size_t used = 0;
    // Summed per distinct term in sorted order, so the result depends only on
    // the token bag, not on token order.
    for (const auto& [term, count] : question.term_counts) {
        if (exclude.count(term) > 0) continue;
        const std::vector<double>* vec = table.find(term);
        if (!vec) continue;
        for (std::size_t i = 0; i < vec->size(); ++i) {
            result.values[i] += static_cast<double>(count) * (*vec)[i];
        }
        used += static_cast<std::size_t>(count);
    }
    result.is_zero = used == 0 || l2_norm(result.values) == 0.0;
    return result;
}

void ContextualStore::insert(const std::string& id, std::vector<std::vector<double>> vectors) {
    for (const std::vector<double>& v : vectors) {
        if (dim_ == 0) dim_ = v.size();
        if (v.size() != dim_) {
            throw DataError("contextual vectors for question '" + id +
                            "' have inconsistent dimension");
        }
    }
    per_question_[id] = std::move(vectors);
}

const std::vector<std::vector<double>>* ContextualStore::find(const std::string& id) const {
    auto it = per_question_.find(id);
    return it == per_question_.end() ? nullptr : &it->second;
}

ContextualStore load_contextual_store(
    const std::filesystem::path& path,
    const std::map<std::string, std::size_t>& expected_token_counts) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open contextual store: " + path.string());

    ContextualStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (record.is_discarded() || !record.is_object() || !record.contains("id") ||
            !record.contains("vectors")) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": malformed contextual record");
        }
        std::string id = record.at("id").get<std::string>();
        auto expected = expected_token_counts.find(id);
        if (expected == expected_token_counts.end()) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": unknown question id: " + id);
        }
        if (store.contains(id)) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": duplicate contextual record for question id: " + id);
        }
        auto vectors = record.at("vectors").get<std::vector<std::vector<double>>>();
        if (vectors.size() != expected->second) {
            throw DataError("contextual store: question '" + id + "' has " +
                            std::to_string(expected->second) + " tokens but " +
                            std::to_string(vectors.size()) + " vectors");
        }
        store.insert(id, std::move(vectors));
    }
    return store;
}

void save_contextual_store(const ContextualStore& store, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write contextual store: " + path.string());
    for (const auto& [id, vectors] : store.records()) {
        json record;
        record["id"] = id;
        record["vectors"] = vectors;
        out << record.dump() << '\n';
    }
}

QuestionVector contextual_question_vector(const Question& question, const ContextualStore& store,
                                          const std::optional<std::string>& exclude_term) {
    const auto* vectors = store.find(question.id);
    if (!vectors) throw DataError("no contextual vectors for question: " + question.id);
    if (vectors->size() != question.tokens.size()) {
        throw DataError("contextual store misaligned for question: " + question.id);
    }
    QuestionVector result;
    result.values.assign(store.dim(), 0.0);
    std::size_t used = 0;
    for (std::size_t pos = 0; pos < question.tokens.size(); ++pos) {
        if (exclude_term && question.tokens[pos] == *exclude_term) continue;
        const std::vector<double>& v = (*vectors)[pos];
        for (std::size_t i = 0; i < v.size(); ++i) result.values[i] += v[i];
        ++used;
    }
    result.is_zero = used == 0 || l2_norm(result.values) == 0.0;
    return result;
}

std::vector<std::string> top_k_similar_questions(const QuestionVector& input, const Corpus& corpus,
                                                 const ContextualStore& store, std::size_t k,
                                                 const std::optional<std::string>& exclude_term) {
    struct Scored {
        double sim;
        const std::string* id;
    };
    std::vector<Scored> scored;
    scored.reserve(corpus.size());
    for (const Question& candidate : corpus.questions()) {
        QuestionVector vec = contextual_question_vector(candidate, store, exclude_term);
        if (vec.is_zero) continue;
        scored.push_back({cosine(input.values, vec.values), &candidate.id});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.sim != b.sim) return a.sim > b.sim;
        return *a.id < *b.id;
    });
    if (scored.size() > k) scored.resize(k);

    std::vector<std::string> ids;
    ids.reserve(scored.size());
    for (const Scored& s : scored) ids.push_back(*s.id);
    return ids;
}

ContextualStore make_pseudo_contextual_store(const std::vector<const Question*>& questions,
                                             std::size_t dim) {
    ContextualStore store;
    for (const Question* q : questions) {
        std::vector<std::vector<double>> vectors;
        vectors.reserve(q->tokens.size());
        for (std::size_t pos = 0; pos < q->tokens.size(); ++pos) {
            std::vector<double> v = hash_unit_vector(q->tokens[pos], dim);
            if (pos > 0) {
                std::vector<double> left = hash_unit_vector(q->tokens[pos - 1], dim);
                for (std::size_t i = 0; i < dim; ++i) v[i] += 0.25 * left[i];
            }
            if (pos + 1 < q->tokens.size()) {
                std::vector<double> right = hash_unit_vector(q->tokens[pos + 1], dim);
                for (std::size_t i = 0; i < dim; ++i) v[i] += 0.25 * right[i];
            }
            vectors.push_back(std::move(v));
        }
        store.insert(q->id, std::move(vectors));
    }
    return store;
}

}  // namespace qrex
