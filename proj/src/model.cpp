#include "haesum/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace haesum {

std::string to_string(Wiring w) { return w == Wiring::hierarchical ? "hierarchical" : "parallel"; }

std::string to_string(HyperLayerKind k) { return k == HyperLayerKind::hgsat ? "hgsat" : "hgat"; }

Wiring parse_wiring(const std::string& s) {
    if (s == "hierarchical") return Wiring::hierarchical;
    if (s == "parallel") return Wiring::parallel;
    throw Error("model_train", "unknown wiring '" + s + "'");
}

HyperLayerKind parse_hyper_layer(const std::string& s) {
    if (s == "hgsat") return HyperLayerKind::hgsat;
    if (s == "hgat") return HyperLayerKind::hgat;
    throw Error("model_train", "unknown hyper layer '" + s + "'");
}

SentenceEncoderShape ModelConfig::encoder_shape() const {
    SentenceEncoderShape s;
    s.word_dim = word_dim;
    s.channels = conv_channels;
    s.lstm_hidden = lstm_hidden;
    return s;
}

GraphOptions ModelConfig::graph_options() const {
    GraphOptions g;
    g.num_bins = num_bins;
    g.bin_width = bin_width;
    return g;
}

void ModelConfig::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw Error("model_train", "invalid config: " + what);
    };
    require(hidden > 0 && edge_dim > 0 && word_dim > 0 && ffn_dim > 0, "dimensions must be positive");
    require(!hegat_heads.empty(), "at least one HEGAT block");
    for (int h : hegat_heads) require(h > 0, "HEGAT heads must be positive");
    require(hgsat_layers > 0, "hgsat_layers must be positive");
    require(hgsat_heads > 0 && hidden % hgsat_heads == 0, "hgsat_heads must divide hidden");
    require(conv_channels > 0 && lstm_hidden > 0, "encoder sizes must be positive");
    require(encoder_shape().output_dim() == hidden, "4 * conv_channels + 2 * lstm_hidden must equal hidden");
    require(num_bins > 0 && bin_width > 0.0, "edge bins must be positive");
    require(max_sentences > 0 && max_tokens > 0 && vocab_size > 0, "preprocessing limits must be positive");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
    require(lr > 0.0 && weight_decay >= 0.0, "learning rate must be positive");
    require(max_epochs > 0 && patience > 0 && accumulate > 0, "schedule values must be positive");
    require(select_by == "loss" || select_by == "rouge", "select_by must be loss or rouge");
    require(top_k > 0 && oracle_max > 0, "top_k and oracle_max must be positive");
}

std::string ModelConfig::to_kv() const {
    std::ostringstream out;
    out.precision(17);
    std::string heads;
    for (std::size_t i = 0; i < hegat_heads.size(); ++i) heads += (i ? "," : "") + std::to_string(hegat_heads[i]);
    out << "hidden = " << hidden << '\n'
        << "edge_dim = " << edge_dim << '\n'
        << "word_dim = " << word_dim << '\n'
        << "hegat_heads = " << heads << '\n'
        << "hgsat_layers = " << hgsat_layers << '\n'
        << "hgsat_heads = " << hgsat_heads << '\n'
        << "masked_attention = " << (masked_attention ? "true" : "false") << '\n'
        << "ffn_dim = " << ffn_dim << '\n'
        << "conv_channels = " << conv_channels << '\n'
        << "lstm_hidden = " << lstm_hidden << '\n'
        << "num_bins = " << num_bins << '\n'
        << "bin_width = " << bin_width << '\n'
        << "wiring = " << to_string(wiring) << '\n'
        << "hyper_layer = " << to_string(hyper_layer) << '\n'
        << "use_hetero = " << (use_hetero ? "true" : "false") << '\n'
        << "use_hyper = " << (use_hyper ? "true" : "false") << '\n'
        << "train_embeddings = " << (train_embeddings ? "true" : "false") << '\n'
        << "max_sentences = " << max_sentences << '\n'
        << "max_tokens = " << max_tokens << '\n'
        << "vocab_size = " << vocab_size << '\n'
        << "oracle_max = " << oracle_max << '\n'
        << "dropout = " << dropout << '\n'
        << "lr = " << lr << '\n'
        << "weight_decay = " << weight_decay << '\n'
        << "max_epochs = " << max_epochs << '\n'
        << "patience = " << patience << '\n'
        << "accumulate = " << accumulate << '\n'
        << "select_by = " << select_by << '\n'
        << "top_k = " << top_k << '\n'
        << "seed = " << seed << '\n';
    return out.str();
}

namespace {

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw Error("model_train", "config key '" + key + "' expects a boolean, got '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto lo = s.find_first_not_of(" \t\r\"");
    if (lo == std::string::npos) return "";
    const auto hi = s.find_last_not_of(" \t\r\"");
    return s.substr(lo, hi - lo + 1);
}

}  // namespace

void ModelConfig::set(const std::string& key, const std::string& value) {
    try {
        if (key == "hidden") hidden = std::stoi(value);
        else if (key == "edge_dim") edge_dim = std::stoi(value);
        else if (key == "word_dim") word_dim = std::stoi(value);
        else if (key == "hegat_heads") {
            hegat_heads.clear();
            std::istringstream in(value);
            std::string item;
            while (std::getline(in, item, ',')) {
                if (!trim(item).empty()) hegat_heads.push_back(std::stoi(trim(item)));
            }
        }
        else if (key == "hgsat_layers") hgsat_layers = std::stoi(value);
        else if (key == "hgsat_heads") hgsat_heads = std::stoi(value);
        else if (key == "masked_attention") masked_attention = parse_bool(key, value);
        else if (key == "ffn_dim") ffn_dim = std::stoi(value);
        else if (key == "conv_channels") conv_channels = std::stoi(value);
        else if (key == "lstm_hidden") lstm_hidden = std::stoi(value);
        else if (key == "num_bins") num_bins = std::stoi(value);
        else if (key == "bin_width") bin_width = std::stod(value);
        else if (key == "wiring") wiring = parse_wiring(value);
        else if (key == "hyper_layer") hyper_layer = parse_hyper_layer(value);
        else if (key == "use_hetero") use_hetero = parse_bool(key, value);
        else if (key == "use_hyper") use_hyper = parse_bool(key, value);
        else if (key == "train_embeddings") train_embeddings = parse_bool(key, value);
        else if (key == "max_sentences") max_sentences = std::stoi(value);
        else if (key == "max_tokens") max_tokens = std::stoi(value);
        else if (key == "vocab_size") vocab_size = std::stoi(value);
        else if (key == "oracle_max") oracle_max = std::stoi(value);
        else if (key == "dropout") dropout = std::stod(value);
        else if (key == "lr") lr = std::stod(value);
        else if (key == "weight_decay") weight_decay = std::stod(value);
        else if (key == "max_epochs") max_epochs = std::stoi(value);
        else if (key == "patience") patience = std::stoi(value);
        else if (key == "accumulate") accumulate = std::stoi(value);
        else if (key == "select_by") select_by = value;
        else if (key == "top_k") top_k = std::stoi(value);
        else if (key == "seed") seed = std::stoull(value);
        else throw Error("model_train", "unknown config key '" + key + "'");
    } catch (const std::logic_error&) {
        throw Error("model_train", "config key '" + key + "' has a bad value '" + value + "'");
    }
}

ModelConfig ModelConfig::from_kv(const std::string& text) {
    ModelConfig c;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        if (trim(line).empty() || trim(line).front() == '[') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw Error("model_train", "config line without '=': " + line);
        c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return c;
}

DocumentBundle make_bundle(const Document& doc, const Vocabulary& vocab, HeteroGraph graph, Hypergraph hyper,
                           const ModelConfig& config) {
    DocumentBundle b;
    b.id = doc.id;
    b.tokens = token_matrix(doc, vocab, config.max_tokens);
    if (graph.sentence_count != b.tokens.rows || hyper.node_count != b.tokens.rows) {
        throw Error("model_train", "graphs of document " + doc.id + " do not match its sentences");
    }
    hyper.validate();
    b.graph = std::move(graph);
    b.hyper = std::move(hyper);
    b.to_words = words_from_sentences(b.graph);
    b.to_sentences = sentences_from_words(b.graph);
    if (doc.oracle_labels) {
        b.labels.assign(doc.oracle_labels->begin(), doc.oracle_labels->end());
        if (b.labels.size() != doc.sentences.size()) throw Error("model_train", "label count mismatch in " + doc.id);
    }
    return b;
}

DocumentBundle make_bundle(const Document& doc, const Vocabulary& vocab, const IdfTable& idf, const ModelConfig& config) {
    return make_bundle(doc, vocab, build_hetero_graph(doc, vocab, idf, config.graph_options()), build_hypergraph(doc),
                       config);
}

Model::Model(const ModelConfig& config, std::size_t vocab_size) : config_(config) {
    config_.validate();
    std::mt19937_64 rng(config_.seed);
    embedding_ = params_.add("embedding", random_embeddings(vocab_size, config_.word_dim, config_.seed ^ 0x9e3779b97f4a7c15ULL),
                             config_.train_embeddings);
    encoder_ = SentenceEncoder(params_, config_.encoder_shape(), rng);
    word_proj_ = params_.add("word_proj.weight", xavier_uniform(config_.word_dim, config_.hidden, rng));
    word_proj_bias_ = params_.add("word_proj.bias", Matrix::Zero(1, config_.hidden));

    for (int l = 0; l < config_.hegat_layers(); ++l) {
        HeteroAttentionShape shape;
        shape.dim = config_.hidden;
        shape.heads = config_.hegat_heads[static_cast<std::size_t>(l)];
        shape.edge_dim = config_.edge_dim;
        shape.num_bins = config_.num_bins;
        shape.ffn_dim = config_.ffn_dim;
        hegat_.emplace_back(params_, "hegat" + std::to_string(l), shape, rng);
    }
    HypergraphShape hshape;
    hshape.dim = config_.hidden;
    hshape.heads = config_.hgsat_heads;
    hshape.masked = config_.masked_attention;
    for (int l = 0; l < config_.hgsat_layers; ++l) {
        hyper_.emplace_back(params_, "hyper" + std::to_string(l), hshape, config_.hyper_layer, rng);
    }

    const int head_in = config_.wiring == Wiring::parallel ? 2 * config_.hidden : config_.hidden;
    head_proj_ = params_.add("head.proj", xavier_uniform(head_in, config_.hidden, rng));
    head_proj_bias_ = params_.add("head.proj_bias", Matrix::Zero(1, config_.hidden));
    norm_gain_ = params_.add("head.norm_gain", Matrix::Ones(1, config_.hidden));
    norm_bias_ = params_.add("head.norm_bias", Matrix::Zero(1, config_.hidden));
    head_out_ = params_.add("head.out", xavier_uniform(config_.hidden, 1, rng));
    head_out_bias_ = params_.add("head.out_bias", Matrix::Zero(1, 1));
}

void Model::set_embeddings(Matrix table) {
    Parameter& p = params_[embedding_];
    if (table.rows() != p.value.rows() || table.cols() != p.value.cols()) {
        throw Error("feature_init", "embedding table shape does not match the vocabulary");
    }
    p.value = std::move(table);
}

void Model::check_bundle(const DocumentBundle& b) const {
    auto fail = [&](const std::string& what) { throw Error("model_train", "document " + b.id + ": " + what); };
    const int m = b.sentence_count();
    if (m < 1) fail("no sentences");
    if (b.graph.sentence_count != m || b.hyper.node_count != m) fail("graphs do not match the sentence count");
    if (b.to_words.source_count != m || b.to_sentences.target_count != m) fail("edge lists do not match the graph");
    const auto vocab = static_cast<int>(params_[embedding_].value.rows());
    for (int id : b.tokens.ids) {
        if (id < 0 || id >= vocab) fail("token id outside the vocabulary");
    }
    for (int id : b.graph.word_ids) {
        if (id < 0 || id >= vocab) fail("word node id outside the vocabulary");
    }
    for (const auto* edges : {&b.to_words, &b.to_sentences}) {
        for (int bin : edges->bin) {
            if (bin < 0 || bin >= config_.num_bins) fail("edge bin outside the configured range");
        }
    }
}

Model::Trace Model::forward(Context& ctx, const DocumentBundle& bundle) const {
    using namespace ag;
    check_bundle(bundle);
    Trace t;
    const Var table = ctx(embedding_);
    t.sentence_init = encoder_.encode(ctx, table, bundle.tokens).combined;

    t.local = t.sentence_init;
    if (config_.use_hetero) {
        Var words = add_row(matmul(gather_rows(table, bundle.graph.word_ids), ctx(word_proj_)), ctx(word_proj_bias_));
        for (const auto& block : hegat_) {
            auto out = block.forward(ctx, words, t.local, bundle.to_words, bundle.to_sentences);
            words = out.words;
            t.local = out.sentences;
            t.hegat.push_back(out);
        }
    }

    t.global = config_.wiring == Wiring::hierarchical ? t.local : t.sentence_init;
    if (config_.use_hyper) {
        for (const auto& layer : hyper_) {
            auto out = layer.forward(ctx, t.global, bundle.hyper);
            t.global = out.nodes;
            t.hyper.push_back(out);
        }
    }

    Var rep = t.global;
    if (config_.wiring == Wiring::parallel) {
        const Var parts[] = {t.local, t.global};
        rep = concat_cols(parts);
    }
    const Var hidden = add_row(matmul(rep, ctx(head_proj_)), ctx(head_proj_bias_));
    const Var normed = layer_norm(hidden, ctx(norm_gain_), ctx(norm_bias_));
    t.logits = add_row(matmul(normed, ctx(head_out_)), ctx(head_out_bias_));
    return t;
}

std::vector<double> Model::scores(const DocumentBundle& bundle) const {
    ag::Tape tape;
    Context ctx(tape, params_);
    const auto trace = forward(ctx, bundle);
    const Matrix p = ag::sigmoid(trace.logits).value();
    return std::vector<double>(p.data(), p.data() + p.size());
}

double Model::loss(const DocumentBundle& bundle) const {
    ag::Tape tape;
    Context ctx(tape, params_);
    const auto trace = forward(ctx, bundle);
    return ag::bce_with_logits(trace.logits, bundle.labels).value()(0, 0);
}

double Model::loss_and_gradients(const DocumentBundle& bundle, Gradients& grads, std::uint64_t dropout_seed) const {
    if (bundle.labels.size() != static_cast<std::size_t>(bundle.sentence_count())) {
        throw Error("model_train", "document " + bundle.id + " has no oracle labels");
    }
    ag::Tape tape;
    tape.training = true;
    tape.dropout = config_.dropout;
    tape.rng.seed(dropout_seed);
    Context ctx(tape, params_);
    const auto trace = forward(ctx, bundle);
    const ag::Var loss = ag::bce_with_logits(trace.logits, bundle.labels);
    tape.backward(loss);
    grads = ctx.gradients();
    return loss.value()(0, 0);
}

double bce_loss(std::span<const double> probs, std::span<const double> labels) {
    if (probs.size() != labels.size()) throw Error("model_train", "loss: predictions and labels differ in length");
    if (probs.empty()) throw Error("model_train", "loss: empty input");
    constexpr double eps = 1e-12;
    double total = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], eps, 1.0 - eps);
        total += labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    return -total / static_cast<double>(probs.size());
}

}  // namespace haesum
