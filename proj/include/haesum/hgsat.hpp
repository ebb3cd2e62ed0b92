#pragma once

#include "haesum/graph.hpp"
#include "haesum/params.hpp"

#include <random>
#include <string>
#include <utility>
#include <vector>

namespace haesum {

struct HypergraphShape {
    int dim = 64;
    int heads = 4;
    bool masked = true;
    double slope = 0.2;

    int head_dim() const { return dim / heads; }
};

// Builds hyperedge features from their member sentences:
//   u_k = LeakyReLU(W_p h_k), alpha_jk = softmax_{k in e_j}(w_h . u_k),
//   f_j = LeakyReLU(sum_k alpha_jk W_n h_k).
class NodeLevelAttention {
public:
    struct Output {
        ag::Var edges;  // hyperedges x dim
        ag::Var alpha;  // incidence pairs x 1, grouped by hyperedge
    };

    NodeLevelAttention() = default;
    NodeLevelAttention(ParamStore& store, const std::string& name, const HypergraphShape& shape, std::mt19937_64& rng);

    Output forward(Context& ctx, const ag::Var& nodes, const Hypergraph& graph) const;

    int slot_node() const { return w_node_; }
    int slot_score() const { return w_score_; }
    int slot_proj() const { return w_proj_; }

private:
    HypergraphShape shape_;
    int w_node_ = -1;   // W_n
    int w_score_ = -1;  // W_h
    int w_proj_ = -1;   // W_p
};

// Node queries attend over hyperedge keys/values with scaled dot products.
// In masked mode a node only sees its incident hyperedges.
class EdgeLevelAttention {
public:
    struct Output {
        ag::Var nodes;  // sentences x dim
        ag::Var alpha;  // attended pairs x heads
        std::vector<std::pair<int, int>> pairs;
    };

    EdgeLevelAttention() = default;
    EdgeLevelAttention(ParamStore& store, const std::string& name, const HypergraphShape& shape, std::mt19937_64& rng);

    Output forward(Context& ctx, const ag::Var& nodes, const ag::Var& edges, const Hypergraph& graph) const;

    int slot_query() const { return w_query_; }
    int slot_key() const { return w_key_; }
    int slot_value() const { return w_value_; }
    const HypergraphShape& shape() const { return shape_; }

private:
    HypergraphShape shape_;
    int w_query_ = -1;
    int w_key_ = -1;
    int w_value_ = -1;
};

// Additive graph-attention edge-to-node step with one weight matrix shared
// by nodes and hyperedges; the baseline the self-attention layer replaces.
class SharedEdgeAttention {
public:
    struct Output {
        ag::Var nodes;
        ag::Var alpha;  // incidence pairs x 1, grouped by node
    };

    SharedEdgeAttention() = default;
    SharedEdgeAttention(ParamStore& store, const std::string& name, const HypergraphShape& shape, std::mt19937_64& rng);

    Output forward(Context& ctx, const ag::Var& nodes, const ag::Var& edges, const Hypergraph& graph) const;

    int slot_shared() const { return w_shared_; }

private:
    HypergraphShape shape_;
    int w_shared_ = -1;
    int a_node_ = -1;
    int a_edge_ = -1;
};

// LeakyReLU(W_1 h_prev || W_2 h_att) followed by a projection back to dim.
class Fusion {
public:
    Fusion() = default;
    Fusion(ParamStore& store, const std::string& name, const HypergraphShape& shape, std::mt19937_64& rng);

    ag::Var forward(Context& ctx, const ag::Var& previous, const ag::Var& attended) const;

    int slot_prev() const { return w_prev_; }
    int slot_att() const { return w_att_; }
    int slot_out() const { return w_out_; }
    int slot_out_bias() const { return b_out_; }

private:
    HypergraphShape shape_;
    int w_prev_ = -1;
    int w_att_ = -1;
    int w_out_ = -1;
    int b_out_ = -1;
};

enum class HyperLayerKind { hgsat, hgat };

// node-level attention -> edge-to-node attention -> fusion.
class HypergraphLayer {
public:
    struct Output {
        ag::Var nodes;
        ag::Var node_alpha;
        ag::Var edge_alpha;
    };

    HypergraphLayer() = default;
    HypergraphLayer(ParamStore& store, const std::string& name, const HypergraphShape& shape, HyperLayerKind kind,
                    std::mt19937_64& rng);

    Output forward(Context& ctx, const ag::Var& nodes, const Hypergraph& graph) const;

    HyperLayerKind kind() const { return kind_; }
    const NodeLevelAttention& node_level() const { return node_level_; }
    const EdgeLevelAttention& edge_level() const { return edge_level_; }
    const SharedEdgeAttention& shared_edge() const { return shared_edge_; }
    const Fusion& fusion() const { return fusion_; }

private:
    HyperLayerKind kind_ = HyperLayerKind::hgsat;
    NodeLevelAttention node_level_;
    EdgeLevelAttention edge_level_;
    SharedEdgeAttention shared_edge_;
    Fusion fusion_;
};

}  // namespace haesum
