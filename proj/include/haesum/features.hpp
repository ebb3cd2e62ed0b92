#pragma once

#include "haesum/corpus.hpp"
#include "haesum/params.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace haesum {

// Row-major m x cols matrix of vocabulary ids; 0 marks padding.
struct TokenMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> ids;
    std::vector<int> lengths;

    int at(int r, int c) const { return ids[static_cast<std::size_t>(r * cols + c)]; }
};

TokenMatrix token_matrix(const Document& doc, const Vocabulary& vocab, int max_tokens);

// |vocab| x dim table with Normal(0, 0.1) rows and a zero padding row.
Matrix random_embeddings(std::size_t vocab_size, int dim, std::uint64_t seed);

struct EmbeddingLoadReport {
    std::size_t found = 0;
    std::size_t missing = 0;
};

// Reads `token v1 ... v_dim` lines. Tokens absent from the file keep their
// seeded random vector; a line with the wrong width aborts with its line number.
Matrix load_embeddings(const std::string& path, const Vocabulary& vocab, int dim, std::uint64_t seed,
                       EmbeddingLoadReport* report = nullptr);

struct SentenceEncoderShape {
    int word_dim = 300;
    int channels = 8;
    std::vector<int> kernels{2, 3, 4, 5};
    int lstm_hidden = 16;

    int conv_dim() const { return channels * static_cast<int>(kernels.size()); }
    int recurrent_dim() const { return 2 * lstm_hidden; }
    int output_dim() const { return conv_dim() + recurrent_dim(); }
};

// n-gram convolutions with max pooling, concatenated with the final states of
// a forward and a backward LSTM run inside each sentence.
class SentenceEncoder {
public:
    struct Output {
        ag::Var conv;       // m x conv_dim
        ag::Var recurrent;  // m x recurrent_dim
        ag::Var combined;   // m x output_dim
    };

    SentenceEncoder() = default;
    SentenceEncoder(ParamStore& store, const SentenceEncoderShape& shape, std::mt19937_64& rng);

    Output encode(Context& ctx, const ag::Var& table, const TokenMatrix& tokens) const;
    const SentenceEncoderShape& shape() const { return shape_; }

private:
    struct Lstm {
        int w_ih = -1;
        int w_hh = -1;
        int bias = -1;
    };

    ag::Var run_lstm(Context& ctx, const Lstm& lstm, const ag::Var& embedded, const TokenMatrix& tokens,
                     bool reverse) const;

    SentenceEncoderShape shape_;
    std::vector<int> conv_weight_;
    std::vector<int> conv_bias_;
    Lstm forward_;
    Lstm backward_;
};

}  // namespace haesum
