#pragma once

#include "haesum/cache.hpp"
#include "haesum/summarize.hpp"
#include "haesum/train.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace haesum {

struct SplitData {
    std::vector<Document> docs;  // truncated to the model limits
    std::vector<DocumentBundle> bundles;
};

// Truncates to the configured limits and adds oracle labels where missing.
std::vector<Document> prepare_documents(std::vector<Document> docs, const ModelConfig& config, int workers = 1);

SplitData make_split(std::vector<Document> docs, const Vocabulary& vocab, const IdfTable& idf,
                     const ModelConfig& config, int workers = 1);

Model make_model(const ModelConfig& config, const Vocabulary& vocab, const Matrix* embeddings = nullptr);

struct VariantResult {
    std::string name;
    ModelConfig config;
    TrainResult training;
    EvalReport report;
};

struct VariantData {
    const Vocabulary* vocab = nullptr;
    const IdfTable* idf = nullptr;
    const Matrix* embeddings = nullptr;
    // Raw (labeled) documents; graphs are rebuilt per variant because the
    // truncation limits and edge bins come from its config.
    const std::vector<Document>* train = nullptr;
    const std::vector<Document>* val = nullptr;
    const std::vector<Document>* test = nullptr;
    int workers = 1;
};

// Trains on train/val, restores the selected checkpoint and evaluates on test.
VariantResult run_variant(const std::string& name, const ModelConfig& config, const VariantData& data,
                          const EvalOptions& eval, const std::string& log_path = "");

// full, w/o heterogeneous block, w/o hypergraph attention, parallel wiring
std::vector<std::pair<std::string, ModelConfig>> ablation_variants(const ModelConfig& base);

nlohmann::json ablation_json(const std::vector<VariantResult>& results);
std::string ablation_table(const std::vector<VariantResult>& results);

}  // namespace haesum
