#pragma once

#include "haesum/tensor.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace haesum {

using Tokens = std::vector<std::string>;

struct Document {
    std::string id;
    std::vector<Tokens> sentences;
    std::vector<int> section_ids;  // one per sentence
    std::vector<Tokens> abstract;
    std::optional<std::vector<int>> oracle_labels;

    std::size_t size() const { return sentences.size(); }
    int section_count() const;
    Tokens abstract_tokens() const;
};

// Lowercase, split on whitespace, trim non-alphanumeric characters from both
// ends of every token and drop tokens that end up empty.
Tokens tokenize(std::string_view text);

enum class Split { train, val, test };
Split parse_split(std::string_view name);
std::string_view split_name(Split split);

struct LoadOptions {
    bool skip_malformed = true;
    int pseudo_section_size = 20;
};

struct LoadReport {
    std::size_t loaded = 0;
    std::size_t malformed = 0;
    std::size_t empty = 0;
    std::vector<std::string> warnings;
};

// `path` is either a record file or a directory holding <split>.txt.
// Calls `sink` for every accepted document in file order.
LoadReport load_dataset(const std::string& path, Split split, const std::function<void(Document&&)>& sink,
                        const LoadOptions& options = {});
std::vector<Document> load_dataset(const std::string& path, Split split, const LoadOptions& options = {},
                                   LoadReport* report = nullptr);

// Parses one line-delimited record. Throws Error on malformed input; returns
// nullopt for a record with no usable sentences.
std::optional<Document> parse_record(std::string_view line, const LoadOptions& options = {});

Document truncate(const Document& doc, int max_sentences, int max_tokens);

// Section ids for a document without section metadata: consecutive blocks of `chunk`.
std::vector<int> pseudo_sections(std::size_t sentences, int chunk);

class Vocabulary {
public:
    static constexpr int pad_id = 0;
    static constexpr int unk_id = 1;
    static constexpr std::string_view pad_token = "<pad>";
    static constexpr std::string_view unk_token = "<unk>";

    Vocabulary();

    int id(const std::string& token) const;
    bool contains(const std::string& token) const { return index_.count(token) != 0; }
    const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
    std::size_t size() const { return tokens_.size(); }
    std::size_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }

    void save(const std::string& path) const;
    static Vocabulary load(const std::string& path);

    friend Vocabulary build_vocab(const std::vector<Document>& corpus, std::size_t cap);

private:
    void push(const std::string& token, std::size_t count);

    std::unordered_map<std::string, int> index_;
    std::vector<std::string> tokens_;
    std::vector<std::size_t> counts_;
};

// Frequency-ranked, ties broken lexicographically; at most cap + 2 entries.
Vocabulary build_vocab(const std::vector<Document>& corpus, std::size_t cap);

struct CorpusStats {
    static constexpr std::size_t buckets = 6;
    static constexpr int sentence_length_width = 20;
    static constexpr int sentence_count_width = 50;

    std::size_t documents = 0;
    std::size_t sentences = 0;
    std::size_t tokens = 0;
    std::size_t summary_tokens = 0;
    std::array<std::size_t, buckets> sentence_length_counts{};
    std::array<std::size_t, buckets> sentence_count_counts{};

    double avg_doc_sentences() const;
    double avg_doc_tokens() const;
    double avg_summary_tokens() const;
    std::array<double, buckets> sentence_length_fractions() const;
    std::array<double, buckets> sentence_count_fractions() const;

    // (0,w], (w,2w], ..., (4w,5w], over 5w
    static std::size_t bucket(std::size_t value, int width);
    static std::array<std::string, buckets> labels(int width);

    void add(const Document& doc);
    void merge(const CorpusStats& other);
};

CorpusStats corpus_stats(const std::vector<Document>& corpus);

}  // namespace haesum
