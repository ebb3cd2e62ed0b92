#pragma once

#include "haesum/corpus.hpp"

#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace haesum {

bool is_stopword(std::string_view token);
// True when the token carries no letter or digit.
bool is_punctuation(std::string_view token);

// Inverse document frequency from the training split:
// idf(t) = max(0, log(N / (1 + df(t)))). Unseen tokens get log(N).
class IdfTable {
public:
    IdfTable() = default;

    static IdfTable build(const std::vector<Document>& corpus);

    double idf(const std::string& token) const;
    std::size_t documents() const { return documents_; }
    std::size_t document_frequency(const std::string& token) const;

    void save(const std::string& path) const;
    static IdfTable load(const std::string& path);

private:
    std::size_t documents_ = 0;
    std::unordered_map<std::string, std::size_t> df_;
};

struct HeteroEdge {
    int sentence = 0;
    int word = 0;
    double weight = 0.0;
    int bin = 0;

    bool operator==(const HeteroEdge&) const = default;
};

struct HeteroGraph {
    std::vector<int> word_ids;       // vocabulary id per word node
    std::vector<std::string> words;  // surface form per word node
    int sentence_count = 0;
    std::vector<HeteroEdge> edges;   // sorted by (sentence, word)
    bool stopword_fallback = false;

    std::size_t word_count() const { return words.size(); }
};

struct GraphOptions {
    int num_bins = 10;
    double bin_width = 0.1;
    bool filter_stopwords = true;
};

int weight_bin(double weight, const GraphOptions& options);

// Word nodes appear in order of first occurrence in the document.
HeteroGraph build_hetero_graph(const Document& doc, const Vocabulary& vocab, const IdfTable& idf,
                               const GraphOptions& options = {});

struct Hypergraph {
    int node_count = 0;
    int edge_count = 0;
    // (node, hyperedge) pairs with H(node, hyperedge) = 1, sorted by node then hyperedge.
    std::vector<std::pair<int, int>> incidence;

    Matrix dense() const;
    std::vector<int> nodes_of_pairs() const;
    std::vector<int> edges_of_pairs() const;
    // Throws when a row or column is empty or an entry is out of range.
    void validate() const;
};

// One hyperedge per distinct section id, numbered in ascending id order.
Hypergraph build_hypergraph(const Document& doc);

}  // namespace haesum
