#pragma once

#include "haesum/corpus.hpp"

#include <span>
#include <string>
#include <vector>

namespace haesum {

struct RougeScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    static RougeScore from_counts(double overlap, double candidate_total, double reference_total);
};

struct RougeOptions {
    bool stem = false;
};

// Porter (1980) suffix stripping. Expects a lowercase ASCII word.
std::string porter_stem(std::string word);

RougeScore rouge_n(const Tokens& candidate, const Tokens& reference, int n, const RougeOptions& options = {});
// Multiple reference sentences are concatenated into a single reference.
RougeScore rouge_n(const Tokens& candidate, std::span<const Tokens> references, int n,
                   const RougeOptions& options = {});
RougeScore rouge_l(const Tokens& candidate, const Tokens& reference, const RougeOptions& options = {});

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeTriple {
    RougeScore r1, r2, rl;
};

RougeTriple rouge_all(const Tokens& candidate, const Tokens& reference, const RougeOptions& options = {});

// Concatenates the chosen sentences in document order.
Tokens join_sentences(const Document& doc, std::span<const int> indices);

struct OracleLabels {
    std::vector<int> labels;
    double achieved_score = 0.0;
    std::vector<int> selection_order;
    // Objective after each selection step.
    std::vector<double> step_scores;
};

// Mean of ROUGE-1 and ROUGE-2 f1 of the selection against the abstract.
double oracle_objective(const Document& doc, std::span<const int> indices, const RougeOptions& options = {});

OracleLabels greedy_oracle(const Document& doc, int max_selected = 7, const RougeOptions& options = {});

}  // namespace haesum
