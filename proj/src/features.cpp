#include "haesum/features.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace haesum {

TokenMatrix token_matrix(const Document& doc, const Vocabulary& vocab, int max_tokens) {
    TokenMatrix tm;
    tm.rows = static_cast<int>(doc.sentences.size());
    for (const auto& s : doc.sentences) tm.cols = std::max(tm.cols, std::min(static_cast<int>(s.size()), max_tokens));
    tm.ids.assign(static_cast<std::size_t>(tm.rows * tm.cols), Vocabulary::pad_id);
    tm.lengths.resize(static_cast<std::size_t>(tm.rows));
    for (int r = 0; r < tm.rows; ++r) {
        const auto& s = doc.sentences[static_cast<std::size_t>(r)];
        const int len = std::min(static_cast<int>(s.size()), max_tokens);
        tm.lengths[static_cast<std::size_t>(r)] = len;
        for (int c = 0; c < len; ++c) tm.ids[static_cast<std::size_t>(r * tm.cols + c)] = vocab.id(s[static_cast<std::size_t>(c)]);
    }
    return tm;
}

Matrix random_embeddings(std::size_t vocab_size, int dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.1);
    Matrix table(static_cast<Index>(vocab_size), dim);
    for (Index i = 0; i < table.size(); ++i) table.data()[i] = normal(rng);
    if (table.rows() > 0) table.row(Vocabulary::pad_id).setZero();
    return table;
}

Matrix load_embeddings(const std::string& path, const Vocabulary& vocab, int dim, std::uint64_t seed,
                       EmbeddingLoadReport* report) {
    std::ifstream in(path);
    if (!in) throw Error("feature_init", "cannot open embeddings " + path);
    Matrix table = random_embeddings(vocab.size(), dim, seed);
    std::vector<bool> seen(vocab.size(), false);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream fields(line);
        std::string token;
        if (!(fields >> token)) continue;
        std::vector<double> values;
        values.reserve(static_cast<std::size_t>(dim));
        double v = 0.0;
        while (fields >> v) values.push_back(v);
        if (!fields.eof()) {
            throw Error("feature_init", path + ":" + std::to_string(line_no) + ": non-numeric vector component");
        }
        if (static_cast<int>(values.size()) != dim) {
            throw Error("feature_init", path + ":" + std::to_string(line_no) + ": expected " + std::to_string(dim) +
                                            " components, found " + std::to_string(values.size()));
        }
        if (!vocab.contains(token)) continue;
        const int id = vocab.id(token);
        if (id == Vocabulary::pad_id) continue;
        for (int c = 0; c < dim; ++c) table(id, c) = values[static_cast<std::size_t>(c)];
        seen[static_cast<std::size_t>(id)] = true;
    }
    if (report) {
        report->found = static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true));
        report->missing = vocab.size() - 1 - report->found;
    }
    return table;
}

SentenceEncoder::SentenceEncoder(ParamStore& store, const SentenceEncoderShape& shape, std::mt19937_64& rng)
    : shape_(shape) {
    for (int k : shape.kernels) {
        const std::string name = "encoder.conv" + std::to_string(k);
        conv_weight_.push_back(store.add(name + ".weight", xavier_uniform(shape.word_dim, shape.channels * k, rng)));
        conv_bias_.push_back(store.add(name + ".bias", Matrix::Zero(1, shape.channels)));
    }
    const int gates = 4 * shape.lstm_hidden;
    for (auto [lstm, name] : {std::pair{&forward_, "encoder.lstm_fwd"}, std::pair{&backward_, "encoder.lstm_bwd"}}) {
        lstm->w_ih = store.add(std::string(name) + ".w_ih", xavier_uniform(shape.word_dim, gates, rng));
        lstm->w_hh = store.add(std::string(name) + ".w_hh", xavier_uniform(shape.lstm_hidden, gates, rng));
        Matrix bias = Matrix::Zero(1, gates);
        bias.middleCols(shape.lstm_hidden, shape.lstm_hidden).setOnes();  // forget gate
        lstm->bias = store.add(std::string(name) + ".bias", std::move(bias));
    }
}

SentenceEncoder::Output SentenceEncoder::encode(Context& ctx, const ag::Var& table, const TokenMatrix& tokens) const {
    using namespace ag;
    if (table.cols() != shape_.word_dim) throw Error("feature_init", "embedding width does not match encoder");
    const int m = tokens.rows;
    const int width = tokens.cols;
    const Var embedded = gather_rows(table, tokens.ids);  // (m * width) x word_dim

    std::vector<Var> pooled;
    for (std::size_t ki = 0; ki < shape_.kernels.size(); ++ki) {
        const int k = shape_.kernels[ki];
        const Var proj = matmul(embedded, ctx(conv_weight_[ki]));
        // Every sentence contributes at least one window; windows past the end see zeros.
        std::vector<int> group;
        std::vector<std::vector<int>> rows(static_cast<std::size_t>(k));
        for (int i = 0; i < m; ++i) {
            const int len = tokens.lengths[static_cast<std::size_t>(i)];
            const int windows = std::max(1, len - k + 1);
            for (int p = 0; p < windows; ++p) {
                group.push_back(i);
                for (int o = 0; o < k; ++o) rows[static_cast<std::size_t>(o)].push_back(p + o < len ? i * width + p + o : -1);
            }
        }
        Var conv;
        for (int o = 0; o < k; ++o) {
            const Var part = gather_rows(slice_cols(proj, o * shape_.channels, shape_.channels), rows[static_cast<std::size_t>(o)]);
            conv = conv.valid() ? add(conv, part) : part;
        }
        conv = relu(add_row(conv, ctx(conv_bias_[ki])));
        pooled.push_back(segment_max(conv, group, m));
    }

    Output out;
    out.conv = concat_cols(pooled);
    const Var recurrent_parts[] = {run_lstm(ctx, forward_, embedded, tokens, false),
                                   run_lstm(ctx, backward_, embedded, tokens, true)};
    out.recurrent = concat_cols(recurrent_parts);
    const Var all[] = {out.conv, out.recurrent};
    out.combined = concat_cols(all);
    return out;
}

ag::Var SentenceEncoder::run_lstm(Context& ctx, const Lstm& lstm, const ag::Var& embedded, const TokenMatrix& tokens,
                                  bool reverse) const {
    using namespace ag;
    Tape& tape = ctx.tape();
    const int m = tokens.rows;
    const int width = tokens.cols;
    const int hdim = shape_.lstm_hidden;
    const Var inputs = add_row(matmul(embedded, ctx(lstm.w_ih)), ctx(lstm.bias));
    const Var w_hh = ctx(lstm.w_hh);

    Var h = tape.constant(Matrix::Zero(m, hdim));
    Var c = tape.constant(Matrix::Zero(m, hdim));
    std::vector<int> rows(static_cast<std::size_t>(m));
    std::vector<double> active(static_cast<std::size_t>(m));
    std::vector<double> idle(static_cast<std::size_t>(m));
    for (int step = 0; step < width; ++step) {
        const int t = reverse ? width - 1 - step : step;
        for (int i = 0; i < m; ++i) {
            const bool on = t < tokens.lengths[static_cast<std::size_t>(i)];
            rows[static_cast<std::size_t>(i)] = on ? i * width + t : -1;
            active[static_cast<std::size_t>(i)] = on ? 1.0 : 0.0;
            idle[static_cast<std::size_t>(i)] = on ? 0.0 : 1.0;
        }
        const Var gates = add(gather_rows(inputs, rows), matmul(h, w_hh));
        const Var in_gate = sigmoid(slice_cols(gates, 0, hdim));
        const Var forget_gate = sigmoid(slice_cols(gates, hdim, hdim));
        const Var cell_in = tanh(slice_cols(gates, 2 * hdim, hdim));
        const Var out_gate = sigmoid(slice_cols(gates, 3 * hdim, hdim));
        const Var c_next = add(mul(forget_gate, c), mul(in_gate, cell_in));
        const Var h_next = mul(out_gate, tanh(c_next));
        // Padding positions leave the state untouched.
        c = add(mul_rows(c_next, active), mul_rows(c, idle));
        h = add(mul_rows(h_next, active), mul_rows(h, idle));
    }
    return h;
}

}  // namespace haesum
