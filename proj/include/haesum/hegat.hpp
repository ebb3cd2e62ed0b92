#pragma once

#include "haesum/graph.hpp"
#include "haesum/params.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace haesum {

// Message edges for one direction of the word-sentence graph.
struct DirectedEdges {
    std::vector<int> target;
    std::vector<int> source;
    std::vector<int> bin;
    int target_count = 0;
    int source_count = 0;

    std::size_t size() const { return target.size(); }
};

DirectedEdges words_from_sentences(const HeteroGraph& graph);
DirectedEdges sentences_from_words(const HeteroGraph& graph);

struct HeteroAttentionShape {
    int dim = 64;
    int heads = 8;
    int edge_dim = 50;
    int num_bins = 10;
    int ffn_dim = 512;
    double slope = 0.2;

    // Heads are concatenated, so the per-head width is rounded up.
    int head_dim() const { return (dim + heads - 1) / heads; }
    int concat_dim() const { return heads * head_dim(); }
};

// Graph attention with edge-weight features, multi-head ELU aggregation,
// and a residual feed-forward layer. Targets without edges pass through.
class HeteroAttention {
public:
    struct Output {
        ag::Var features;  // target_count x dim
        ag::Var alpha;     // edges x heads
    };

    HeteroAttention() = default;
    HeteroAttention(ParamStore& store, const std::string& name, const HeteroAttentionShape& shape,
                    std::mt19937_64& rng);

    Output forward(Context& ctx, const ag::Var& targets, const ag::Var& sources, const DirectedEdges& edges) const;
    const HeteroAttentionShape& shape() const { return shape_; }

    int slot_ffn_in() const { return ffn_in_; }
    int slot_ffn_out() const { return ffn_out_; }
    int slot_ffn_in_bias() const { return ffn_in_bias_; }
    int slot_ffn_out_bias() const { return ffn_out_bias_; }
    int slot_value() const { return w_value_; }
    int slot_edge_table() const { return edge_table_; }

private:
    HeteroAttentionShape shape_;
    int w_target_ = -1;
    int w_source_ = -1;
    int w_value_ = -1;
    int a_target_ = -1;
    int a_source_ = -1;
    int edge_table_ = -1;
    int a_edge_ = -1;
    int ffn_in_ = -1;
    int ffn_in_bias_ = -1;
    int ffn_out_ = -1;
    int ffn_out_bias_ = -1;
};

// One round of sentence -> word then word -> sentence updates.
class HegatBlock {
public:
    struct Output {
        ag::Var words;
        ag::Var sentences;
        ag::Var word_alpha;
        ag::Var sentence_alpha;
    };

    HegatBlock() = default;
    HegatBlock(ParamStore& store, const std::string& name, const HeteroAttentionShape& shape, std::mt19937_64& rng);

    Output forward(Context& ctx, const ag::Var& words, const ag::Var& sentences, const DirectedEdges& to_words,
                   const DirectedEdges& to_sentences) const;

    const HeteroAttention& word_pass() const { return word_pass_; }
    const HeteroAttention& sentence_pass() const { return sentence_pass_; }

private:
    HeteroAttention word_pass_;
    HeteroAttention sentence_pass_;
};

// Throws Error("hegat", ...) naming the first node with a non-finite feature.
void check_finite(const Matrix& features, const char* role);

}  // namespace haesum
