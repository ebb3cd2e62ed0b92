#pragma once

#include "haesum/model.hpp"
#include "haesum/rouge.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace haesum {

struct SummaryResult {
    std::string id;
    std::vector<int> indices;  // document order
    std::string text;
    RougeTriple rouge;
};

// Top-k by score, ties to the lower index, returned in document order. With
// trigram blocking a candidate sharing a trigram with the selected text is skipped.
SummaryResult select_sentences(std::span<const double> scores, int k, const Document& doc,
                               bool trigram_blocking = false);

std::vector<int> lead_indices(const Document& doc, int k);
std::vector<int> oracle_indices(const Document& doc, int oracle_max, const RougeOptions& options = {});

// ROUGE of the selected sentences against the reference abstract.
RougeTriple score_selection(const Document& doc, std::span<const int> indices, const RougeOptions& options = {});

struct MetricSummary {
    double mean = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

struct SystemRow {
    std::string name;
    MetricSummary r1, r2, rl;
    std::vector<RougeTriple> per_doc;
};

struct EvalOptions {
    int k = 7;
    int oracle_max = 7;
    bool trigram_blocking = false;
    bool stem = false;
    int bootstrap_resamples = 1000;
    std::uint64_t bootstrap_seed = 7;
};

// Mean f1 with a percentile bootstrap 95% interval over documents.
SystemRow summarize_row(std::string name, std::vector<RougeTriple> per_doc, const EvalOptions& options);

struct EvalReport {
    std::size_t documents = 0;
    int k = 0;
    std::vector<SystemRow> rows;

    const SystemRow& row(const std::string& name) const;
    nlohmann::json to_json() const;
    std::string table() const;
};

// Rows: "model" (given selections), "LEAD-k", "ORACLE". Documents with stored
// oracle labels use them; the rest are labeled on the fly.
EvalReport evaluate_selections(const std::vector<Document>& docs, const std::vector<std::vector<int>>& selections,
                               const EvalOptions& options);

EvalReport evaluate(const Model& model, const std::vector<Document>& docs, const std::vector<DocumentBundle>& bundles,
                    const EvalOptions& options, std::vector<SummaryResult>* summaries = nullptr);

std::vector<SummaryResult> summarize(const Model& model, const std::vector<Document>& docs,
                                     const std::vector<DocumentBundle>& bundles, int k, bool trigram_blocking = false);

// Mean ROUGE-1 f1 of the model's top-k selections; the validation metric.
double mean_rouge1(const Model& model, const std::vector<Document>& docs, const std::vector<DocumentBundle>& bundles,
                   int k);

nlohmann::json to_json(const SummaryResult& s);

}  // namespace haesum
