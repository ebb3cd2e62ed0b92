#include "haesum/hegat.hpp"

namespace haesum {

DirectedEdges words_from_sentences(const HeteroGraph& graph) {
    DirectedEdges d;
    d.target_count = static_cast<int>(graph.word_count());
    d.source_count = graph.sentence_count;
    for (const auto& e : graph.edges) {
        d.target.push_back(e.word);
        d.source.push_back(e.sentence);
        d.bin.push_back(e.bin);
    }
    return d;
}

DirectedEdges sentences_from_words(const HeteroGraph& graph) {
    DirectedEdges d;
    d.target_count = graph.sentence_count;
    d.source_count = static_cast<int>(graph.word_count());
    for (const auto& e : graph.edges) {
        d.target.push_back(e.sentence);
        d.source.push_back(e.word);
        d.bin.push_back(e.bin);
    }
    return d;
}

void check_finite(const Matrix& features, const char* role) {
    for (Index r = 0; r < features.rows(); ++r) {
        if (!features.row(r).allFinite()) {
            throw Error("hegat", std::string("non-finite feature at ") + role + " node " + std::to_string(r));
        }
    }
}

HeteroAttention::HeteroAttention(ParamStore& store, const std::string& name, const HeteroAttentionShape& shape,
                                 std::mt19937_64& rng)
    : shape_(shape) {
    if (shape.heads <= 0 || shape.dim <= 0) throw Error("hegat", "heads and dim must be positive");
    const int wide = shape.concat_dim();
    w_target_ = store.add(name + ".w_target", xavier_uniform(shape.dim, wide, rng));
    w_source_ = store.add(name + ".w_source", xavier_uniform(shape.dim, wide, rng));
    w_value_ = store.add(name + ".w_value", xavier_uniform(shape.dim, wide, rng));
    a_target_ = store.add(name + ".a_target", xavier_uniform(1, wide, rng));
    a_source_ = store.add(name + ".a_source", xavier_uniform(1, wide, rng));
    edge_table_ = store.add(name + ".edge_embedding", xavier_uniform(shape.num_bins, shape.edge_dim, rng));
    a_edge_ = store.add(name + ".a_edge", xavier_uniform(shape.edge_dim, shape.heads, rng));
    ffn_in_ = store.add(name + ".ffn_in", xavier_uniform(wide, shape.ffn_dim, rng));
    ffn_in_bias_ = store.add(name + ".ffn_in_bias", Matrix::Zero(1, shape.ffn_dim));
    ffn_out_ = store.add(name + ".ffn_out", xavier_uniform(shape.ffn_dim, shape.dim, rng));
    ffn_out_bias_ = store.add(name + ".ffn_out_bias", Matrix::Zero(1, shape.dim));
}

HeteroAttention::Output HeteroAttention::forward(Context& ctx, const ag::Var& targets, const ag::Var& sources,
                                                 const DirectedEdges& edges) const {
    using namespace ag;
    check_finite(targets.value(), "target");
    check_finite(sources.value(), "source");
    if (targets.rows() != edges.target_count || sources.rows() != edges.source_count) {
        throw Error("hegat", "feature rows do not match the graph");
    }
    if (targets.cols() != shape_.dim || sources.cols() != shape_.dim) throw Error("hegat", "feature width mismatch");

    const int heads = shape_.heads;
    const int head_dim = shape_.head_dim();

    // z = LeakyReLU(a . [W_t h_i || W_s h_j || emb(e_ij)]); the dot product
    // splits into one term per concatenated part.
    const Var target_score = block_sum(mul_row(matmul(targets, ctx(w_target_)), ctx(a_target_)), heads);
    const Var source_score = block_sum(mul_row(matmul(sources, ctx(w_source_)), ctx(a_source_)), heads);
    const Var edge_score = matmul(gather_rows(ctx(edge_table_), edges.bin), ctx(a_edge_));
    const Var logits = leaky_relu(add(add(gather_rows(target_score, edges.target), gather_rows(source_score, edges.source)),
                                      edge_score),
                                  shape_.slope);
    Var alpha = segment_softmax(logits, edges.target, edges.target_count);

    const Var values = gather_rows(matmul(sources, ctx(w_value_)), edges.source);
    const Var weighted = mul(values, block_expand(dropout(alpha), head_dim));
    const Var aggregated = elu(scatter_add_rows(weighted, edges.target, edges.target_count));

    Var hidden = dropout(relu(add_row(matmul(aggregated, ctx(ffn_in_)), ctx(ffn_in_bias_))));
    Var update = add_row(matmul(hidden, ctx(ffn_out_)), ctx(ffn_out_bias_));

    std::vector<double> connected(static_cast<std::size_t>(edges.target_count), 0.0);
    for (int t : edges.target) connected[static_cast<std::size_t>(t)] = 1.0;
    update = mul_rows(update, connected);

    return {add(update, targets), alpha};
}

HegatBlock::HegatBlock(ParamStore& store, const std::string& name, const HeteroAttentionShape& shape,
                       std::mt19937_64& rng)
    : word_pass_(store, name + ".to_word", shape, rng), sentence_pass_(store, name + ".to_sentence", shape, rng) {}

HegatBlock::Output HegatBlock::forward(Context& ctx, const ag::Var& words, const ag::Var& sentences,
                                       const DirectedEdges& to_words, const DirectedEdges& to_sentences) const {
    const auto w = word_pass_.forward(ctx, words, sentences, to_words);
    const auto s = sentence_pass_.forward(ctx, sentences, w.features, to_sentences);
    return {w.features, s.features, w.alpha, s.alpha};
}

}  // namespace haesum
