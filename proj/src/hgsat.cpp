#include "haesum/hgsat.hpp"

#include <cmath>

namespace haesum {

NodeLevelAttention::NodeLevelAttention(ParamStore& store, const std::string& name, const HypergraphShape& shape,
                                       std::mt19937_64& rng)
    : shape_(shape) {
    w_node_ = store.add(name + ".w_node", xavier_uniform(shape.dim, shape.dim, rng));
    w_score_ = store.add(name + ".w_score", xavier_uniform(shape.dim, 1, rng));
    w_proj_ = store.add(name + ".w_proj", xavier_uniform(shape.dim, shape.dim, rng));
}

NodeLevelAttention::Output NodeLevelAttention::forward(Context& ctx, const ag::Var& nodes,
                                                       const Hypergraph& graph) const {
    using namespace ag;
    if (nodes.rows() != graph.node_count) throw Error("hgsat", "node features do not match the incidence matrix");
    const auto members = graph.nodes_of_pairs();
    const auto owners = graph.edges_of_pairs();

    const Var u = leaky_relu(matmul(nodes, ctx(w_proj_)), shape_.slope);
    const Var scores = gather_rows(matmul(u, ctx(w_score_)), members);
    const Var alpha = segment_softmax(scores, owners, graph.edge_count);
    const Var messages = mul(gather_rows(matmul(nodes, ctx(w_node_)), members), block_expand(alpha, shape_.dim));
    const Var edges = leaky_relu(scatter_add_rows(messages, owners, graph.edge_count), shape_.slope);
    return {edges, alpha};
}

EdgeLevelAttention::EdgeLevelAttention(ParamStore& store, const std::string& name, const HypergraphShape& shape,
                                       std::mt19937_64& rng)
    : shape_(shape) {
    if (shape.heads <= 0 || shape.dim % shape.heads != 0) {
        throw Error("hgsat", "edge-level heads must divide the hidden size");
    }
    w_query_ = store.add(name + ".w_query", xavier_uniform(shape.dim, shape.dim, rng));
    w_key_ = store.add(name + ".w_key", xavier_uniform(shape.dim, shape.dim, rng));
    w_value_ = store.add(name + ".w_value", xavier_uniform(shape.dim, shape.dim, rng));
}

EdgeLevelAttention::Output EdgeLevelAttention::forward(Context& ctx, const ag::Var& nodes, const ag::Var& edges,
                                                       const Hypergraph& graph) const {
    using namespace ag;
    Output out;
    if (shape_.masked) {
        out.pairs = graph.incidence;
    } else {
        out.pairs.reserve(static_cast<std::size_t>(graph.node_count * graph.edge_count));
        for (int i = 0; i < graph.node_count; ++i) {
            for (int j = 0; j < graph.edge_count; ++j) out.pairs.emplace_back(i, j);
        }
    }
    std::vector<int> node_idx;
    std::vector<int> edge_idx;
    for (const auto& [i, j] : out.pairs) {
        node_idx.push_back(i);
        edge_idx.push_back(j);
    }

    const int head_dim = shape_.head_dim();
    const Var queries = matmul(nodes, ctx(w_query_));
    const Var keys = matmul(edges, ctx(w_key_));
    const Var values = matmul(edges, ctx(w_value_));
    const Var logits = scale(block_sum(mul(gather_rows(queries, node_idx), gather_rows(keys, edge_idx)), shape_.heads),
                             1.0 / std::sqrt(static_cast<double>(head_dim)));
    out.alpha = segment_softmax(logits, node_idx, graph.node_count);
    const Var weighted = mul(gather_rows(values, edge_idx), block_expand(dropout(out.alpha), head_dim));
    out.nodes = scatter_add_rows(weighted, node_idx, graph.node_count);
    return out;
}

SharedEdgeAttention::SharedEdgeAttention(ParamStore& store, const std::string& name, const HypergraphShape& shape,
                                         std::mt19937_64& rng)
    : shape_(shape) {
    w_shared_ = store.add(name + ".w_shared", xavier_uniform(shape.dim, shape.dim, rng));
    a_node_ = store.add(name + ".a_node", xavier_uniform(shape.dim, 1, rng));
    a_edge_ = store.add(name + ".a_edge", xavier_uniform(shape.dim, 1, rng));
}

SharedEdgeAttention::Output SharedEdgeAttention::forward(Context& ctx, const ag::Var& nodes, const ag::Var& edges,
                                                         const Hypergraph& graph) const {
    using namespace ag;
    const auto node_idx = graph.nodes_of_pairs();
    const auto edge_idx = graph.edges_of_pairs();
    const Var w = ctx(w_shared_);
    const Var node_proj = matmul(nodes, w);
    const Var edge_proj = matmul(edges, w);
    const Var logits = leaky_relu(add(gather_rows(matmul(node_proj, ctx(a_node_)), node_idx),
                                      gather_rows(matmul(edge_proj, ctx(a_edge_)), edge_idx)),
                                  shape_.slope);
    const Var alpha = segment_softmax(logits, node_idx, graph.node_count);
    const Var weighted = mul(gather_rows(edge_proj, edge_idx), block_expand(dropout(alpha), shape_.dim));
    return {elu(scatter_add_rows(weighted, node_idx, graph.node_count)), alpha};
}

Fusion::Fusion(ParamStore& store, const std::string& name, const HypergraphShape& shape, std::mt19937_64& rng)
    : shape_(shape) {
    w_prev_ = store.add(name + ".w_prev", xavier_uniform(shape.dim, shape.dim, rng));
    w_att_ = store.add(name + ".w_att", xavier_uniform(shape.dim, shape.dim, rng));
    w_out_ = store.add(name + ".w_out", xavier_uniform(2 * shape.dim, shape.dim, rng));
    b_out_ = store.add(name + ".b_out", Matrix::Zero(1, shape.dim));
}

ag::Var Fusion::forward(Context& ctx, const ag::Var& previous, const ag::Var& attended) const {
    using namespace ag;
    if (previous.rows() != attended.rows()) throw Error("hgsat", "fusion inputs have different row counts");
    const Var parts[] = {matmul(previous, ctx(w_prev_)), matmul(attended, ctx(w_att_))};
    const Var fused = leaky_relu(concat_cols(parts), shape_.slope);
    return add_row(matmul(fused, ctx(w_out_)), ctx(b_out_));
}

HypergraphLayer::HypergraphLayer(ParamStore& store, const std::string& name, const HypergraphShape& shape,
                                 HyperLayerKind kind, std::mt19937_64& rng)
    : kind_(kind), node_level_(store, name + ".node_level", shape, rng) {
    if (kind == HyperLayerKind::hgsat) {
        edge_level_ = EdgeLevelAttention(store, name + ".edge_level", shape, rng);
    } else {
        shared_edge_ = SharedEdgeAttention(store, name + ".shared_edge", shape, rng);
    }
    fusion_ = Fusion(store, name + ".fusion", shape, rng);
}

HypergraphLayer::Output HypergraphLayer::forward(Context& ctx, const ag::Var& nodes, const Hypergraph& graph) const {
    const auto edges = node_level_.forward(ctx, nodes, graph);
    Output out;
    out.node_alpha = edges.alpha;
    ag::Var attended;
    if (kind_ == HyperLayerKind::hgsat) {
        auto e = edge_level_.forward(ctx, nodes, edges.edges, graph);
        attended = e.nodes;
        out.edge_alpha = e.alpha;
    } else {
        auto e = shared_edge_.forward(ctx, nodes, edges.edges, graph);
        attended = e.nodes;
        out.edge_alpha = e.alpha;
    }
    out.nodes = fusion_.forward(ctx, nodes, attended);
    return out;
}

}  // namespace haesum
