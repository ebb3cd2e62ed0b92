#pragma once

#include "haesum/corpus.hpp"
#include "haesum/features.hpp"
#include "haesum/graph.hpp"
#include "haesum/hegat.hpp"
#include "haesum/hgsat.hpp"
#include "haesum/params.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace haesum {

enum class Wiring { hierarchical, parallel };

std::string to_string(Wiring w);
std::string to_string(HyperLayerKind k);
Wiring parse_wiring(const std::string& s);
HyperLayerKind parse_hyper_layer(const std::string& s);

struct ModelConfig {
    // architecture
    int hidden = 64;
    int edge_dim = 50;
    int word_dim = 300;
    std::vector<int> hegat_heads{8, 6};  // one entry per HEGAT block
    int hgsat_layers = 2;
    int hgsat_heads = 4;
    bool masked_attention = true;
    int ffn_dim = 512;
    int conv_channels = 8;
    int lstm_hidden = 16;
    int num_bins = 10;
    double bin_width = 0.1;
    Wiring wiring = Wiring::hierarchical;
    HyperLayerKind hyper_layer = HyperLayerKind::hgsat;
    bool use_hetero = true;
    bool use_hyper = true;
    bool train_embeddings = false;

    // preprocessing
    int max_sentences = 200;
    int max_tokens = 100;
    int vocab_size = 50000;
    int oracle_max = 7;

    // optimization
    double dropout = 0.1;
    double lr = 1e-4;
    double weight_decay = 0.0;
    int max_epochs = 12;
    int patience = 3;
    int accumulate = 1;
    std::string select_by = "loss";  // or "rouge"
    int top_k = 7;
    std::uint64_t seed = 42;

    int hegat_layers() const { return static_cast<int>(hegat_heads.size()); }
    SentenceEncoderShape encoder_shape() const;
    GraphOptions graph_options() const;

    // Throws Error("model_train", ...) on an inconsistent configuration.
    void validate() const;

    // `key = value` lines, one per field, in a fixed order.
    std::string to_kv() const;
    static ModelConfig from_kv(const std::string& text);
    void set(const std::string& key, const std::string& value);
};

// Everything the network consumes for one (truncated) document.
struct DocumentBundle {
    std::string id;
    TokenMatrix tokens;
    HeteroGraph graph;
    Hypergraph hyper;
    DirectedEdges to_words;
    DirectedEdges to_sentences;
    std::vector<double> labels;  // empty when unlabeled

    int sentence_count() const { return tokens.rows; }
};

DocumentBundle make_bundle(const Document& doc, const Vocabulary& vocab, const IdfTable& idf, const ModelConfig& config);
DocumentBundle make_bundle(const Document& doc, const Vocabulary& vocab, HeteroGraph graph, Hypergraph hyper,
                           const ModelConfig& config);

class Model {
public:
    struct Trace {
        ag::Var logits;
        ag::Var sentence_init;
        ag::Var local;
        ag::Var global;
        std::vector<HegatBlock::Output> hegat;
        std::vector<HypergraphLayer::Output> hyper;
    };

    Model(const ModelConfig& config, std::size_t vocab_size);

    const ModelConfig& config() const { return config_; }
    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }

    void set_embeddings(Matrix table);
    int embedding_slot() const { return embedding_; }

    Trace forward(Context& ctx, const DocumentBundle& bundle) const;

    // Sigmoid scores with dropout off.
    std::vector<double> scores(const DocumentBundle& bundle) const;
    double loss(const DocumentBundle& bundle) const;
    // Training-mode loss; dropout masks come from `dropout_seed`.
    double loss_and_gradients(const DocumentBundle& bundle, Gradients& grads, std::uint64_t dropout_seed) const;

    const SentenceEncoder& encoder() const { return encoder_; }
    const std::vector<HegatBlock>& hegat() const { return hegat_; }
    const std::vector<HypergraphLayer>& hyper() const { return hyper_; }

private:
    // Throws Error("model_train", ...) when the bundle does not fit this model.
    void check_bundle(const DocumentBundle& bundle) const;

    ModelConfig config_;
    ParamStore params_;
    int embedding_ = -1;
    SentenceEncoder encoder_;
    int word_proj_ = -1;
    int word_proj_bias_ = -1;
    std::vector<HegatBlock> hegat_;
    std::vector<HypergraphLayer> hyper_;
    int head_proj_ = -1;
    int head_proj_bias_ = -1;
    int norm_gain_ = -1;
    int norm_bias_ = -1;
    int head_out_ = -1;
    int head_out_bias_ = -1;
};

// -(1/N) sum [y log p + (1 - y) log(1 - p)] with logs clamped away from 0.
double bce_loss(std::span<const double> probs, std::span<const double> labels);

}  // namespace haesum
