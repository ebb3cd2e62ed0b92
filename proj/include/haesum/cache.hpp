#pragma once

#include "haesum/corpus.hpp"
#include "haesum/graph.hpp"
#include "haesum/model.hpp"

#include <string>
#include <vector>

namespace haesum {

// Line-delimited JSON: a header record followed by one document per line.
// Sentences are stored as space-joined tokens.
struct CacheHeader {
    static constexpr const char* format_name = "haesum-cache";
    static constexpr int current_version = 1;

    int version = current_version;
    std::string split;
    int max_sentences = 0;
    int max_tokens = 0;
    bool labeled = false;
    int oracle_max = 0;
    std::size_t documents = 0;
};

void write_cache(const std::string& path, const std::vector<Document>& docs, CacheHeader header);
std::vector<Document> read_cache(const std::string& path, CacheHeader* header = nullptr);

// Files inside a preprocessed cache directory.
struct CacheLayout {
    std::string dir;

    std::string split_file(Split split) const { return dir + "/" + std::string(split_name(split)) + ".jsonl"; }
    std::string vocab_file() const { return dir + "/vocab.tsv"; }
    std::string idf_file() const { return dir + "/idf.tsv"; }
};

// Builds graphs for every document; `workers` > 1 splits the work over threads
// while keeping the output order.
std::vector<DocumentBundle> make_bundles(const std::vector<Document>& docs, const Vocabulary& vocab,
                                         const IdfTable& idf, const ModelConfig& config, int workers = 1);

// Greedy oracle labels for every document, in place.
void label_documents(std::vector<Document>& docs, int oracle_max, int workers = 1);

}  // namespace haesum
