#include "haesum/corpus.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>

namespace haesum {

namespace {

bool is_word_char(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

std::string strip_sentence_tags(std::string text) {
    for (const std::string_view tag : {"<S>", "</S>", "<s>", "</s>"}) {
        for (auto pos = text.find(tag); pos != std::string::npos; pos = text.find(tag, pos)) {
            text.replace(pos, tag.size(), " ");
        }
    }
    return text;
}

std::vector<std::string> string_list(const nlohmann::json& value, const char* field) {
    if (!value.is_array()) throw Error("corpus_io", std::string("field '") + field + "' is not a list");
    std::vector<std::string> out;
    out.reserve(value.size());
    for (const auto& item : value) {
        if (!item.is_string()) throw Error("corpus_io", std::string("field '") + field + "' has a non-string entry");
        out.push_back(item.get<std::string>());
    }
    return out;
}

}  // namespace

int Document::section_count() const {
    if (section_ids.empty()) return 0;
    return *std::max_element(section_ids.begin(), section_ids.end()) + 1;
}

Tokens Document::abstract_tokens() const {
    Tokens out;
    for (const auto& s : abstract) out.insert(out.end(), s.begin(), s.end());
    return out;
}

Tokens tokenize(std::string_view text) {
    Tokens out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
        std::size_t lo = i;
        std::size_t hi = j;
        while (lo < hi && !is_word_char(static_cast<unsigned char>(text[lo]))) ++lo;
        while (hi > lo && !is_word_char(static_cast<unsigned char>(text[hi - 1]))) --hi;
        if (hi > lo) {
            std::string token(text.substr(lo, hi - lo));
            for (auto& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            out.push_back(std::move(token));
        }
        i = j;
    }
    return out;
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::train;
    if (name == "val" || name == "validation") return Split::val;
    if (name == "test") return Split::test;
    throw Error("corpus_io", "unknown split '" + std::string(name) + "'");
}

std::string_view split_name(Split split) {
    switch (split) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "train";
}

std::optional<Document> parse_record(std::string_view line, const LoadOptions& options) {
    nlohmann::json rec;
    try {
        rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error("corpus_io", std::string("invalid record: ") + e.what());
    }
    if (!rec.is_object()) throw Error("corpus_io", "record is not an object");

    Document doc;
    if (auto it = rec.find("article_id"); it != rec.end()) {
        doc.id = it->is_string() ? it->get<std::string>() : it->dump();
    }

    // Section-grouped sentences; each non-empty group becomes one section.
    std::vector<std::vector<std::string>> groups;
    if (auto it = rec.find("sections"); it != rec.end() && it->is_array() && !it->empty()) {
        for (const auto& section : *it) groups.push_back(string_list(section, "sections"));
    }
    bool pseudo = false;
    if (groups.empty()) {
        auto it = rec.find("article_text");
        if (it == rec.end()) throw Error("corpus_io", "record has neither 'sections' nor 'article_text'");
        groups.push_back(string_list(*it, "article_text"));
        pseudo = true;
    }

    int section = 0;
    for (const auto& group : groups) {
        bool used = false;
        for (const auto& text : group) {
            Tokens toks = tokenize(text);
            if (toks.empty()) continue;
            doc.sentences.push_back(std::move(toks));
            doc.section_ids.push_back(section);
            used = true;
        }
        if (used) ++section;
    }
    if (pseudo) doc.section_ids = pseudo_sections(doc.sentences.size(), options.pseudo_section_size);

    if (auto it = rec.find("abstract_text"); it != rec.end()) {
        for (const auto& text : string_list(*it, "abstract_text")) {
            Tokens toks = tokenize(strip_sentence_tags(text));
            if (!toks.empty()) doc.abstract.push_back(std::move(toks));
        }
    }

    if (auto it = rec.find("labels"); it != rec.end() && !it->is_null()) {
        std::vector<int> labels;
        try {
            labels = it->get<std::vector<int>>();
        } catch (const nlohmann::json::exception& e) {
            throw Error("corpus_io", std::string("bad 'labels' field: ") + e.what());
        }
        if (labels.size() != doc.sentences.size()) throw Error("corpus_io", "label count does not match sentences");
        doc.oracle_labels = std::move(labels);
    }

    if (doc.sentences.empty()) return std::nullopt;
    return doc;
}

LoadReport load_dataset(const std::string& path, Split split, const std::function<void(Document&&)>& sink,
                        const LoadOptions& options) {
    namespace fs = std::filesystem;
    fs::path file = path;
    if (fs::is_directory(file)) file /= std::string(split_name(split)) + ".txt";
    std::ifstream in(file);
    if (!in) throw Error("corpus_io", "cannot open " + file.string());

    LoadReport report;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::optional<Document> doc;
        try {
            doc = parse_record(line, options);
        } catch (const Error& e) {
            const std::string msg = file.string() + ":" + std::to_string(line_no) + ": " + e.what();
            if (!options.skip_malformed) throw Error("corpus_io", msg);
            ++report.malformed;
            report.warnings.push_back("skipped malformed record at " + msg);
            continue;
        }
        if (!doc) {
            ++report.empty;
            report.warnings.push_back(file.string() + ":" + std::to_string(line_no) + ": skipped empty document");
            continue;
        }
        if (doc->id.empty()) doc->id = std::string(split_name(split)) + "-" + std::to_string(line_no);
        ++report.loaded;
        sink(std::move(*doc));
    }
    return report;
}

std::vector<Document> load_dataset(const std::string& path, Split split, const LoadOptions& options,
                                   LoadReport* report) {
    std::vector<Document> docs;
    LoadReport r = load_dataset(path, split, [&docs](Document&& d) { docs.push_back(std::move(d)); }, options);
    if (report) *report = std::move(r);
    return docs;
}

std::vector<int> pseudo_sections(std::size_t sentences, int chunk) {
    if (chunk < 1) throw Error("corpus_io", "pseudo-section size must be positive");
    std::vector<int> ids(sentences);
    for (std::size_t i = 0; i < sentences; ++i) ids[i] = static_cast<int>(i) / chunk;
    return ids;
}

Document truncate(const Document& doc, int max_sentences, int max_tokens) {
    if (max_sentences < 1 || max_tokens < 1) throw Error("corpus_io", "truncation limits must be positive");
    Document out;
    out.id = doc.id;
    out.abstract = doc.abstract;
    const std::size_t keep = std::min(doc.sentences.size(), static_cast<std::size_t>(max_sentences));
    out.sentences.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) {
        const auto& s = doc.sentences[i];
        const std::size_t len = std::min(s.size(), static_cast<std::size_t>(max_tokens));
        out.sentences.emplace_back(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(len));
    }
    out.section_ids.assign(doc.section_ids.begin(),
                           doc.section_ids.begin() + static_cast<std::ptrdiff_t>(std::min(keep, doc.section_ids.size())));
    if (doc.oracle_labels) {
        const auto& l = *doc.oracle_labels;
        out.oracle_labels = std::vector<int>(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(std::min(keep, l.size())));
    }
    return out;
}

Vocabulary::Vocabulary() {
    push(std::string(pad_token), 0);
    push(std::string(unk_token), 0);
}

void Vocabulary::push(const std::string& token, std::size_t count) {
    index_.emplace(token, static_cast<int>(tokens_.size()));
    tokens_.push_back(token);
    counts_.push_back(count);
}

int Vocabulary::id(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? unk_id : it->second;
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw Error("corpus_io", "cannot write " + path);
    for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << counts_[i] << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("corpus_io", "cannot open vocabulary " + path);
    Vocabulary v;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw Error("corpus_io", path + ":" + std::to_string(line_no) + ": missing count");
        std::string token = line.substr(0, tab);
        const std::size_t count = std::stoull(line.substr(tab + 1));
        if (line_no <= 2) {
            if (token != v.tokens_[line_no - 1]) throw Error("corpus_io", path + ": reserved entries missing");
            continue;
        }
        if (v.contains(token)) throw Error("corpus_io", path + ":" + std::to_string(line_no) + ": duplicate token");
        v.push(token, count);
    }
    return v;
}

Vocabulary build_vocab(const std::vector<Document>& corpus, std::size_t cap) {
    std::unordered_map<std::string, std::size_t> freq;
    for (const auto& doc : corpus) {
        for (const auto& s : doc.sentences) {
            for (const auto& t : s) ++freq[t];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    for (const auto& [token, count] : ranked) {
        if (v.size() >= cap + 2) break;
        if (token == Vocabulary::pad_token || token == Vocabulary::unk_token) continue;
        v.push(token, count);
    }
    return v;
}

std::size_t CorpusStats::bucket(std::size_t value, int width) {
    if (value == 0) return 0;
    return std::min<std::size_t>((value - 1) / static_cast<std::size_t>(width), buckets - 1);
}

std::array<std::string, CorpusStats::buckets> CorpusStats::labels(int width) {
    std::array<std::string, buckets> out;
    for (std::size_t b = 0; b + 1 < buckets; ++b) {
        out[b] = "(" + std::to_string(b * static_cast<std::size_t>(width)) + ", " +
                 std::to_string((b + 1) * static_cast<std::size_t>(width)) + "]";
    }
    out[buckets - 1] = "Over " + std::to_string((buckets - 1) * static_cast<std::size_t>(width));
    return out;
}

void CorpusStats::add(const Document& doc) {
    ++documents;
    sentences += doc.sentences.size();
    ++sentence_count_counts[bucket(doc.sentences.size(), sentence_count_width)];
    for (const auto& s : doc.sentences) {
        tokens += s.size();
        ++sentence_length_counts[bucket(s.size(), sentence_length_width)];
    }
    for (const auto& s : doc.abstract) summary_tokens += s.size();
}

void CorpusStats::merge(const CorpusStats& other) {
    documents += other.documents;
    sentences += other.sentences;
    tokens += other.tokens;
    summary_tokens += other.summary_tokens;
    for (std::size_t b = 0; b < buckets; ++b) {
        sentence_length_counts[b] += other.sentence_length_counts[b];
        sentence_count_counts[b] += other.sentence_count_counts[b];
    }
}

namespace {

std::array<double, CorpusStats::buckets> fractions(const std::array<std::size_t, CorpusStats::buckets>& counts,
                                                  std::size_t total) {
    std::array<double, CorpusStats::buckets> out{};
    if (total == 0) return out;
    for (std::size_t b = 0; b < counts.size(); ++b) out[b] = static_cast<double>(counts[b]) / static_cast<double>(total);
    return out;
}

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double CorpusStats::avg_doc_sentences() const { return ratio(sentences, documents); }
double CorpusStats::avg_doc_tokens() const { return ratio(tokens, documents); }
double CorpusStats::avg_summary_tokens() const { return ratio(summary_tokens, documents); }

std::array<double, CorpusStats::buckets> CorpusStats::sentence_length_fractions() const {
    return fractions(sentence_length_counts, sentences);
}

std::array<double, CorpusStats::buckets> CorpusStats::sentence_count_fractions() const {
    return fractions(sentence_count_counts, documents);
}

CorpusStats corpus_stats(const std::vector<Document>& corpus) {
    CorpusStats stats;
    for (const auto& doc : corpus) stats.add(doc);
    return stats;
}

}  // namespace haesum
