#include "qrex/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <set>
#include <unordered_set>

#include <json.hpp>

namespace qrex {
namespace {

using nlohmann::json;

const std::unordered_set<std::string>& stopword_set() {
    static const std::unordered_set<std::string> words = {
        "a",    "about", "an",  "and",  "are",   "as",    "at",   "be",   "by",   "can",
        "do",   "for",   "from", "has",  "have",  "how",   "i",    "in",   "is",   "it",
        "my",   "of",    "on",  "or",   "that",  "the",   "this", "to",   "was",  "what",
        "when", "where", "which", "who", "why",  "will",  "with", "you",  "your"};
    return words;
}

bool ends_with(const std::string& word, std::string_view suffix) {
    return word.size() >= suffix.size() &&
           word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Light plural stemmer; only active when TokenizerConfig.stem is set.
std::string stem_light(std::string word) {
    if (word.size() > 4 && ends_with(word, "sses")) {
        word.erase(word.size() - 2);
    } else if (word.size() > 4 && ends_with(word, "ies")) {
        word.replace(word.size() - 3, 3, "y");
    } else if (word.size() > 3 && ends_with(word, "s") && !ends_with(word, "ss") &&
               !ends_with(word, "us") && !ends_with(word, "is")) {
        word.pop_back();
    }
    return word;
}

std::string require_string(const json& record, const char* field, std::size_t line,
                           const std::filesystem::path& path) {
    if (!record.contains(field) || !record.at(field).is_string()) {
        throw DataError(path.string() + " line " + std::to_string(line) +
                        ": malformed record, missing string field '" + field + "'");
    }
    return record.at(field).get<std::string>();
}

Question parse_record(const std::string& line, std::size_t line_no,
                      const std::filesystem::path& path, const FieldConfig& config) {
    json record = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (record.is_discarded() || !record.is_object()) {
        throw DataError(path.string() + " line " + std::to_string(line_no) +
                        ": malformed record");
    }
    Question q;
    q.id = require_string(record, "id", line_no, path);
    q.title = require_string(record, "title", line_no, path);
    if (record.contains("body")) {
        if (!record.at("body").is_string()) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": field 'body' must be a string");
        }
        q.body = record.at("body").get<std::string>();
    }
    if (record.contains("answers")) {
        const json& answers = record.at("answers");
        if (!answers.is_array()) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": field 'answers' must be a list of strings");
        }
        for (const json& a : answers) {
            if (!a.is_string()) {
                throw DataError(path.string() + " line " + std::to_string(line_no) +
                                ": field 'answers' must be a list of strings");
            }
            q.answers.push_back(a.get<std::string>());
        }
    }

    std::string indexed = q.title;
    if (config.index_body && !q.body.empty()) {
        indexed += ' ';
        indexed += q.body;
    }
    if (config.index_answers) {
        for (const std::string& a : q.answers) {
            indexed += ' ';
            indexed += a;
        }
    }
    q.tokens = tokenize(indexed, config.tokenizer);

    std::string answer_text;
    for (const std::string& a : q.answers) {
        answer_text += a;
        answer_text += ' ';
    }
    q.answer_tokens = tokenize(answer_text, config.tokenizer);
    q.term_counts = term_count_pairs(q.tokens);
    return q;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text, const TokenizerConfig& config) {
    std::vector<std::string> out;
    std::string current;
    for (unsigned char c : text) {
        bool keep = c >= 0x80 || std::isalnum(c);
        if (keep) {
            current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c))
                                       : static_cast<char>(c));
        } else if (!current.empty()) {
            out.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) out.push_back(std::move(current));

    if (config.remove_stopwords) {
        std::erase_if(out, [](const std::string& w) { return stopword_set().count(w) > 0; });
    }
    if (config.stem) {
        for (std::string& w : out) w = stem_light(std::move(w));
    }
    return out;
}

std::vector<std::pair<std::string, int>> term_count_pairs(std::span<const std::string> tokens) {
    std::map<std::string, int> counts;
    for (const std::string& t : tokens) ++counts[t];
    return {counts.begin(), counts.end()};
}

Question make_question(std::string id, std::vector<std::string> tokens) {
    Question q;
    q.id = std::move(id);
    q.tokens = std::move(tokens);
    for (std::size_t i = 0; i < q.tokens.size(); ++i) {
        if (i > 0) q.title += ' ';
        q.title += q.tokens[i];
    }
    q.term_counts = term_count_pairs(q.tokens);
    return q;
}

int count_of(const Question& question, const std::string& term) {
    auto it = std::lower_bound(question.term_counts.begin(), question.term_counts.end(), term,
                               [](const auto& entry, const std::string& t) { return entry.first < t; });
    if (it == question.term_counts.end() || it->first != term) return 0;
    return it->second;
}

double CollectionStats::collection_prob(const std::string& term) const {
    if (total_tokens == 0) return 0.0;
    auto it = collection_count.find(term);
    if (it == collection_count.end()) return 0.0;
    return static_cast<double>(it->second) / static_cast<double>(total_tokens);
}

double CollectionStats::average_doc_length() const {
    if (doc_count == 0) return 0.0;
    return static_cast<double>(total_tokens) / static_cast<double>(doc_count);
}

bool CollectionStats::contains(const std::string& term) const {
    return collection_count.count(term) > 0;
}

double idf(const std::string& term, const CollectionStats& stats) {
    auto it = stats.doc_freq.find(term);
    double df = it == stats.doc_freq.end() ? 0.0 : static_cast<double>(it->second);
    return std::log((static_cast<double>(stats.doc_count) + 1.0) / (df + 0.5));
}

Corpus Corpus::from_questions(std::vector<Question> questions, FieldConfig config,
                              IngestReport* report) {
    Corpus corpus;
    corpus.config_ = config;

    std::erase_if(questions, [&](const Question& q) {
        if (!q.tokens.empty()) return false;
        if (report) ++report->skipped_empty;
        return true;
    });
    std::sort(questions.begin(), questions.end(),
              [](const Question& a, const Question& b) { return a.id < b.id; });
    for (std::size_t i = 1; i < questions.size(); ++i) {
        if (questions[i].id == questions[i - 1].id) {
            throw DataError("duplicate question id: " + questions[i].id);
        }
    }

    for (Question& q : questions) {
        if (q.term_counts.empty()) q.term_counts = term_count_pairs(q.tokens);
    }
    corpus.questions_ = std::move(questions);

    for (std::size_t i = 0; i < corpus.questions_.size(); ++i) {
        const Question& q = corpus.questions_[i];
        corpus.index_[q.id] = i;
        corpus.stats_.doc_count += 1;
        corpus.stats_.total_tokens += static_cast<std::int64_t>(q.tokens.size());
        for (const auto& [term, count] : q.term_counts) {
            corpus.stats_.collection_count[term] += count;
            corpus.stats_.doc_freq[term] += 1;
            corpus.postings_[term].push_back({q.id, count});
        }
    }
    if (report) report->accepted = corpus.questions_.size();
    return corpus;
}

const Question* Corpus::find(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &questions_[it->second];
}

const Question& Corpus::at(const std::string& id) const {
    const Question* q = find(id);
    if (!q) throw DataError("unknown question id: " + id);
    return *q;
}

std::vector<Question> read_question_file(const std::filesystem::path& path,
                                         const FieldConfig& config, IngestReport* report) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open question file: " + path.string());

    std::vector<Question> questions;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        Question q = parse_record(line, line_no, path, config);
        if (!seen.insert(q.id).second) {
            throw DataError(path.string() + " line " + std::to_string(line_no) +
                            ": duplicate question id: " + q.id);
        }
        if (q.tokens.empty()) {
            if (report) ++report->skipped_empty;
            continue;
        }
        if (report) ++report->accepted;
        questions.push_back(std::move(q));
    }
    return questions;
}

Corpus ingest_corpus(const std::filesystem::path& path, const FieldConfig& config,
                     IngestReport* report) {
    IngestReport local;
    std::vector<Question> questions = read_question_file(path, config, &local);
    Corpus corpus = Corpus::from_questions(std::move(questions), config);
    if (report) *report = local;
    return corpus;
}

void write_question_records(std::ostream& out, std::span<const Question> questions) {
    for (const Question& q : questions) {
        json record;
        record["id"] = q.id;
        record["title"] = q.title;
        if (!q.body.empty()) record["body"] = q.body;
        if (!q.answers.empty()) record["answers"] = q.answers;
        out << record.dump() << '\n';
    }
}

void save_index(const Corpus& corpus, const std::filesystem::path& file) {
    json j;
    j["format"] = "qrex-index-v1";
    j["field_config"] = {{"index_body", corpus.field_config().index_body},
                         {"index_answers", corpus.field_config().index_answers},
                         {"remove_stopwords", corpus.field_config().tokenizer.remove_stopwords},
                         {"stem", corpus.field_config().tokenizer.stem}};
    json questions = json::array();
    for (const Question& q : corpus.questions()) {
        questions.push_back({{"id", q.id},
                             {"title", q.title},
                             {"tokens", q.tokens},
                             {"answer_tokens", q.answer_tokens}});
    }
    j["questions"] = std::move(questions);

    std::ofstream out(file);
    if (!out) throw DataError("cannot write index file: " + file.string());
    out << j.dump(2) << '\n';
}

Corpus load_index(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw DataError("cannot open index file: " + file.string());
    json j = json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object() || j.value("format", "") != "qrex-index-v1") {
        throw DataError("not a qrex index file: " + file.string());
    }
    FieldConfig config;
    const json& fc = j.at("field_config");
    config.index_body = fc.value("index_body", false);
    config.index_answers = fc.value("index_answers", false);
    config.tokenizer.remove_stopwords = fc.value("remove_stopwords", false);
    config.tokenizer.stem = fc.value("stem", false);

    std::vector<Question> questions;
    for (const json& rec : j.at("questions")) {
        Question q;
        q.id = rec.at("id").get<std::string>();
        q.title = rec.value("title", "");
        q.tokens = rec.at("tokens").get<std::vector<std::string>>();
        q.answer_tokens = rec.at("answer_tokens").get<std::vector<std::string>>();
        q.term_counts = term_count_pairs(q.tokens);
        questions.push_back(std::move(q));
    }
    return Corpus::from_questions(std::move(questions), config);
}

}  // namespace qrex
