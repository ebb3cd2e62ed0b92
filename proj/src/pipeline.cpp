#include "haesum/pipeline.hpp"

#include <cstdio>

namespace haesum {

std::vector<Document> prepare_documents(std::vector<Document> docs, const ModelConfig& config, int workers) {
    std::vector<Document> unlabeled;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        docs[i] = truncate(docs[i], config.max_sentences, config.max_tokens);
        if (!docs[i].oracle_labels) {
            where.push_back(i);
            unlabeled.push_back(docs[i]);
        }
    }
    label_documents(unlabeled, config.oracle_max, workers);
    for (std::size_t j = 0; j < where.size(); ++j) docs[where[j]].oracle_labels = unlabeled[j].oracle_labels;
    return docs;
}

SplitData make_split(std::vector<Document> docs, const Vocabulary& vocab, const IdfTable& idf,
                     const ModelConfig& config, int workers) {
    SplitData s;
    for (auto& d : docs) d = truncate(d, config.max_sentences, config.max_tokens);
    s.bundles = make_bundles(docs, vocab, idf, config, workers);
    s.docs = std::move(docs);
    return s;
}

Model make_model(const ModelConfig& config, const Vocabulary& vocab, const Matrix* embeddings) {
    Model model(config, vocab.size());
    if (embeddings) model.set_embeddings(*embeddings);
    return model;
}

VariantResult run_variant(const std::string& name, const ModelConfig& config, const VariantData& data,
                          const EvalOptions& eval, const std::string& log_path) {
    if (!data.vocab || !data.idf || !data.train || !data.val || !data.test) {
        throw Error("model_train", "variant data is incomplete");
    }
    const SplitData train_split = make_split(*data.train, *data.vocab, *data.idf, config, data.workers);
    const SplitData val_split = make_split(*data.val, *data.vocab, *data.idf, config, data.workers);
    const SplitData test_split = make_split(*data.test, *data.vocab, *data.idf, config, data.workers);

    VariantResult r;
    r.name = name;
    r.config = config;
    Model model = make_model(config, *data.vocab, data.embeddings);
    TrainOptions opts;
    opts.log_path = log_path;
    if (!val_split.docs.empty()) {
        opts.val_metric = [&](const Model& m) { return mean_rouge1(m, val_split.docs, val_split.bundles, config.top_k); };
    }
    r.training = train(model, train_split.bundles, val_split.bundles, opts);
    const Model best = r.training.best.restore();
    r.report = evaluate(best, test_split.docs, test_split.bundles, eval);
    return r;
}

std::vector<std::pair<std::string, ModelConfig>> ablation_variants(const ModelConfig& base) {
    ModelConfig full = base;
    full.wiring = Wiring::hierarchical;
    full.use_hetero = true;
    full.use_hyper = true;
    ModelConfig no_hetero = full;
    no_hetero.use_hetero = false;
    ModelConfig no_hyper = full;
    no_hyper.use_hyper = false;
    ModelConfig parallel = full;
    parallel.wiring = Wiring::parallel;
    return {{"full", full}, {"w/o hetero", no_hetero}, {"w/o hyper", no_hyper}, {"parallel", parallel}};
}

nlohmann::json ablation_json(const std::vector<VariantResult>& results) {
    auto rows = nlohmann::json::array();
    for (const auto& r : results) {
        const auto& m = r.report.row("model");
        rows.push_back({{"variant", r.name},
                        {"rouge1", m.r1.mean},
                        {"rouge2", m.r2.mean},
                        {"rougeL", m.rl.mean},
                        {"best_epoch", r.training.best.epoch},
                        {"epochs", r.training.history.size()}});
    }
    return rows;
}

std::string ablation_table(const std::vector<VariantResult>& results) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof(line), "%-12s %8s %8s %8s\n", "variant", "R-1", "R-2", "R-L");
    out += line;
    for (const auto& r : results) {
        const auto& m = r.report.row("model");
        std::snprintf(line, sizeof(line), "%-12s %8.2f %8.2f %8.2f\n", r.name.c_str(), 100 * m.r1.mean,
                      100 * m.r2.mean, 100 * m.rl.mean);
        out += line;
    }
    return out;
}

}  // namespace haesum
