#include "haesum/summarize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

namespace haesum {

namespace {

using Trigram = std::tuple<std::string, std::string, std::string>;

std::vector<Trigram> trigrams(const Tokens& s) {
    std::vector<Trigram> out;
    for (std::size_t i = 0; i + 2 < s.size(); ++i) out.emplace_back(s[i], s[i + 1], s[i + 2]);
    return out;
}

std::string join_text(const Document& doc, std::span<const int> indices) {
    std::string text;
    for (int i : indices) {
        for (const auto& tok : doc.sentences[static_cast<std::size_t>(i)]) {
            if (!text.empty()) text += ' ';
            text += tok;
        }
    }
    return text;
}

}  // namespace

SummaryResult select_sentences(std::span<const double> scores, int k, const Document& doc, bool trigram_blocking) {
    if (k < 1) throw Error("summarize_eval", "k must be at least 1");
    if (scores.size() != doc.size()) {
        throw Error("summarize_eval", "document " + doc.id + " has " + std::to_string(doc.size()) +
                                          " sentences but " + std::to_string(scores.size()) + " scores");
    }
    for (double s : scores) {
        if (std::isnan(s)) throw Error("summarize_eval", "NaN score in document " + doc.id);
    }
    std::vector<int> ranked(scores.size());
    std::iota(ranked.begin(), ranked.end(), 0);
    std::stable_sort(ranked.begin(), ranked.end(), [&](int a, int b) {
        return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
    });

    const auto budget = std::min<std::size_t>(static_cast<std::size_t>(k), scores.size());
    SummaryResult out;
    out.id = doc.id;
    std::set<Trigram> seen;
    for (int idx : ranked) {
        if (out.indices.size() == budget) break;
        const auto grams = trigrams(doc.sentences[static_cast<std::size_t>(idx)]);
        if (trigram_blocking &&
            std::any_of(grams.begin(), grams.end(), [&](const Trigram& g) { return seen.count(g) != 0; })) {
            continue;
        }
        seen.insert(grams.begin(), grams.end());
        out.indices.push_back(idx);
    }
    std::sort(out.indices.begin(), out.indices.end());
    out.text = join_text(doc, out.indices);
    return out;
}

std::vector<int> lead_indices(const Document& doc, int k) {
    std::vector<int> out(std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), doc.size()));
    std::iota(out.begin(), out.end(), 0);
    return out;
}

std::vector<int> oracle_indices(const Document& doc, int oracle_max, const RougeOptions& options) {
    std::vector<int> labels;
    if (doc.oracle_labels) labels = *doc.oracle_labels;
    else labels = greedy_oracle(doc, oracle_max, options).labels;
    std::vector<int> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0) out.push_back(static_cast<int>(i));
    }
    return out;
}

RougeTriple score_selection(const Document& doc, std::span<const int> indices, const RougeOptions& options) {
    return rouge_all(join_sentences(doc, indices), doc.abstract_tokens(), options);
}

SystemRow summarize_row(std::string name, std::vector<RougeTriple> per_doc, const EvalOptions& options) {
    SystemRow row;
    row.name = std::move(name);
    row.per_doc = std::move(per_doc);
    const std::size_t n = row.per_doc.size();
    if (n == 0) return row;

    auto mean_of = [&](auto metric, const std::vector<std::size_t>* sample) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += metric(row.per_doc[sample ? (*sample)[i] : i]);
        return total / static_cast<double>(n);
    };
    auto f1 = [](int which) {
        return [which](const RougeTriple& t) { return which == 0 ? t.r1.f1 : which == 1 ? t.r2.f1 : t.rl.f1; };
    };

    MetricSummary* targets[] = {&row.r1, &row.r2, &row.rl};
    std::vector<std::vector<double>> boot(3);
    std::mt19937_64 rng(options.bootstrap_seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> sample(n);
    for (int b = 0; b < options.bootstrap_resamples; ++b) {
        for (auto& s : sample) s = pick(rng);
        for (int m = 0; m < 3; ++m) boot[static_cast<std::size_t>(m)].push_back(mean_of(f1(m), &sample));
    }
    for (int m = 0; m < 3; ++m) {
        MetricSummary& t = *targets[m];
        t.mean = mean_of(f1(m), nullptr);
        auto& values = boot[static_cast<std::size_t>(m)];
        if (values.empty()) {
            t.ci_low = t.ci_high = t.mean;
            continue;
        }
        std::sort(values.begin(), values.end());
        const auto at = [&](double q) {
            return values[static_cast<std::size_t>(std::floor(q * static_cast<double>(values.size() - 1)))];
        };
        t.ci_low = at(0.025);
        t.ci_high = at(0.975);
    }
    return row;
}

const SystemRow& EvalReport::row(const std::string& name) const {
    for (const auto& r : rows) {
        if (r.name == name) return r;
    }
    throw Error("summarize_eval", "report has no row '" + name + "'");
}

nlohmann::json EvalReport::to_json() const {
    nlohmann::json j;
    j["documents"] = documents;
    j["k"] = k;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : rows) {
        auto metric = [](const MetricSummary& m) {
            return nlohmann::json{{"f1", m.mean}, {"ci95", {m.ci_low, m.ci_high}}};
        };
        j["rows"].push_back({{"system", r.name}, {"rouge1", metric(r.r1)}, {"rouge2", metric(r.r2)},
                             {"rougeL", metric(r.rl)}});
    }
    return j;
}

std::string EvalReport::table() const {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-10s %-22s %-22s %-22s\n", "system", "ROUGE-1", "ROUGE-2", "ROUGE-L");
    out += line;
    for (const auto& r : rows) {
        auto cell = [](const MetricSummary& m) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.2f [%.2f, %.2f]", 100 * m.mean, 100 * m.ci_low, 100 * m.ci_high);
            return std::string(buf);
        };
        std::snprintf(line, sizeof(line), "%-10s %-22s %-22s %-22s\n", r.name.c_str(), cell(r.r1).c_str(),
                      cell(r.r2).c_str(), cell(r.rl).c_str());
        out += line;
    }
    out += "documents: " + std::to_string(documents) + ", k = " + std::to_string(k) + "\n";
    return out;
}

EvalReport evaluate_selections(const std::vector<Document>& docs, const std::vector<std::vector<int>>& selections,
                               const EvalOptions& options) {
    if (docs.empty()) throw Error("summarize_eval", "empty test stream");
    if (selections.size() != docs.size()) throw Error("summarize_eval", "one selection per document is required");
    RougeOptions ro;
    ro.stem = options.stem;

    std::vector<RougeTriple> model, lead, oracle;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        model.push_back(score_selection(docs[i], selections[i], ro));
        lead.push_back(score_selection(docs[i], lead_indices(docs[i], options.k), ro));
        oracle.push_back(score_selection(docs[i], oracle_indices(docs[i], options.oracle_max, ro), ro));
    }
    EvalReport report;
    report.documents = docs.size();
    report.k = options.k;
    report.rows.push_back(summarize_row("model", std::move(model), options));
    report.rows.push_back(summarize_row("LEAD-" + std::to_string(options.k), std::move(lead), options));
    report.rows.push_back(summarize_row("ORACLE", std::move(oracle), options));
    return report;
}

std::vector<SummaryResult> summarize(const Model& model, const std::vector<Document>& docs,
                                     const std::vector<DocumentBundle>& bundles, int k, bool trigram_blocking) {
    if (docs.size() != bundles.size()) throw Error("summarize_eval", "documents and graphs differ in count");
    std::vector<SummaryResult> out;
    out.reserve(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) {
        const auto scores = model.scores(bundles[i]);
        out.push_back(select_sentences(scores, k, docs[i], trigram_blocking));
    }
    return out;
}

EvalReport evaluate(const Model& model, const std::vector<Document>& docs, const std::vector<DocumentBundle>& bundles,
                    const EvalOptions& options, std::vector<SummaryResult>* summaries) {
    if (docs.empty()) throw Error("summarize_eval", "empty test stream");
    auto results = summarize(model, docs, bundles, options.k, options.trigram_blocking);
    std::vector<std::vector<int>> selections;
    for (const auto& r : results) selections.push_back(r.indices);
    EvalReport report = evaluate_selections(docs, selections, options);
    if (summaries) {
        const auto& row = report.rows.front();
        for (std::size_t i = 0; i < results.size(); ++i) results[i].rouge = row.per_doc[i];
        *summaries = std::move(results);
    }
    return report;
}

double mean_rouge1(const Model& model, const std::vector<Document>& docs, const std::vector<DocumentBundle>& bundles,
                   int k) {
    if (docs.empty()) return 0.0;
    double total = 0.0;
    const auto results = summarize(model, docs, bundles, k);
    for (std::size_t i = 0; i < docs.size(); ++i) total += score_selection(docs[i], results[i].indices).r1.f1;
    return total / static_cast<double>(docs.size());
}

nlohmann::json to_json(const SummaryResult& s) {
    auto score = [](const RougeScore& r) {
        return nlohmann::json{{"p", r.precision}, {"r", r.recall}, {"f1", r.f1}};
    };
    return {{"id", s.id},
            {"indices", s.indices},
            {"text", s.text},
            {"rouge1", score(s.rouge.r1)},
            {"rouge2", score(s.rouge.r2)},
            {"rougeL", score(s.rouge.rl)}};
}

}  // namespace haesum
