// Acceptance run: one PASS/FAIL line per criterion.
//
// Criteria 6 and 7 train on real PubMed records when HAESUM_PUBMED_DIR points
// at a directory with train.txt, val.txt and test.txt (and optionally
// vectors.txt); otherwise a synthetic corpus in the same format is generated.
// Criterion 9 checks the (20, 40] sentence-length share on the full PubMed
// training split only when that directory is set.

#include "haesum/cli.hpp"
#include "haesum/gradcheck.hpp"
#include "haesum/pipeline.hpp"
#include "haesum/synth.hpp"
#include "layer_fixtures.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <sstream>

using namespace haesum;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;  // 0 = no runtime bound
    std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

std::string pubmed_dir() {
    const char* dir = std::getenv("HAESUM_PUBMED_DIR");
    return dir && *dir ? dir : "";
}

// Corpus directory for the training criteria; synthetic unless PubMed is set.
std::string corpus_dir(const test::TempDir& scratch, const SynthCounts& counts) {
    if (!pubmed_dir().empty()) return pubmed_dir();
    const std::string dir = scratch.file("synth");
    write_synthetic_corpus(dir, counts, {});
    return dir;
}

std::optional<Matrix> maybe_embeddings(const std::string& dir, const Vocabulary& vocab, const ModelConfig& cfg) {
    const std::string path = dir + "/vectors.txt";
    if (!fs::exists(path)) return std::nullopt;
    return load_embeddings(path, vocab, cfg.word_dim, cfg.seed);
}

// ---- 1 ----

Outcome attention_normalization() {
    std::mt19937_64 rng(1001);
    ModelConfig cfg;
    Model model(cfg, 10);
    const auto& hegat = model.hegat().front();
    const auto& hyper = model.hyper().front();
    const Index dim = cfg.hidden;
    double worst = 0.0;
    std::size_t rows = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto inst = random_instance(rng);
        ag::Tape tape;
        Context ctx(tape, model.params());
        const auto h = hegat.forward(ctx, tape.constant(test::random_matrix(rng, inst.to_words.target_count, dim)),
                                     tape.constant(test::random_matrix(rng, inst.graph.sentence_count, dim)),
                                     inst.to_words, inst.to_sentences);
        worst = std::max(worst, test::max_normalization_error(h.word_alpha.value(), inst.to_words.target,
                                                              inst.to_words.target_count));
        worst = std::max(worst, test::max_normalization_error(h.sentence_alpha.value(), inst.to_sentences.target,
                                                              inst.to_sentences.target_count));

        // odd trials use overlapping hyperedges instead of the section partition
        Hypergraph g = inst.hyper;
        if (trial % 2 == 1) {
            const int m = inst.graph.sentence_count;
            g = test::random_overlapping_hypergraph(rng, m, 1 + static_cast<int>(rng() % std::min(3, m)));
        }
        const auto nodes = tape.constant(test::random_matrix(rng, g.node_count, dim));
        const auto node_level = hyper.node_level().forward(ctx, nodes, g);
        worst = std::max(worst, test::max_normalization_error(node_level.alpha.value(), g.edges_of_pairs(), g.edge_count));
        const auto edge_level = hyper.edge_level().forward(ctx, nodes, node_level.edges, g);
        std::vector<int> by_node;
        for (const auto& p : edge_level.pairs) by_node.push_back(p.first);
        worst = std::max(worst, test::max_normalization_error(edge_level.alpha.value(), by_node, g.node_count));
        if (edge_level.pairs != g.incidence) return {false, "edge-level attention is not masked to the incidence"};
        rows += static_cast<std::size_t>(h.word_alpha.value().rows() + node_level.alpha.value().rows() +
                                         edge_level.alpha.value().rows());
    }
    return {worst < 1e-6, "1000 instances, max |row sum - 1| = " + fmt("%.2e", worst) + " over " +
                              std::to_string(rows) + " attention entries"};
}

// ---- 2 ----

Outcome gradient_oracle() {
    bool ok = true;
    std::string detail;
    for (const auto& r : run_gradcheck_suites(2002)) {
        const double tol = r.suite == "full" ? 1e-3 : 1e-4;
        ok = ok && r.checked > 0 && r.max_rel_error < tol;
        detail += r.suite + " " + fmt("%.2e", r.max_rel_error) + " (" + std::to_string(r.checked) + " entries) ";
    }
    return {ok, detail};
}

// ---- 3 ----

Outcome oracle_equivalence() {
    std::mt19937_64 rng(3003);
    int matched = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto doc = test::random_oracle_document(rng);
        if (greedy_oracle(doc, 3).selection_order == test::exhaustive_greedy_trace(doc, 3)) ++matched;
    }
    return {matched == 200, std::to_string(matched) + "/200 traces identical"};
}

// ---- 4 ----

Outcome rouge_correctness() {
    double worst = 0.0;
    const auto cases = test::hand_rouge_cases();
    for (const auto& c : cases) {
        const RougeScore s = c.n == 0 ? rouge_l(c.candidate, c.references.at(0))
                                      : rouge_n(c.candidate, std::span<const Tokens>(c.references), c.n);
        worst = std::max({worst, std::abs(s.precision - c.precision), std::abs(s.recall - c.recall),
                          std::abs(s.f1 - c.f1)});
    }
    std::mt19937_64 rng(4004);
    bool identity = true;
    for (int trial = 0; trial < 500; ++trial) {
        Tokens t(1 + rng() % 30);
        for (auto& w : t) w = "w" + std::to_string(rng() % 6);
        const auto r = rouge_all(t, t);
        identity = identity && r.r1.f1 == 1.0 && r.rl.f1 == 1.0 && (t.size() < 2 || r.r2.f1 == 1.0);
    }
    return {cases.size() >= 10 && worst < 1e-12 && identity,
            std::to_string(cases.size()) + " hand cases, max error " + fmt("%.1e", worst) +
                (identity ? ", identity = 1 on 500 sequences" : ", identity check failed")};
}

// ---- 5 ----

Outcome equivariance() {
    std::mt19937_64 rng(5005);
    std::vector<Document> corpus;
    for (int i = 0; i < 20; ++i) corpus.push_back(tiny_document(rng, 2 + i % 7));
    const auto vocab = build_vocab(corpus, 1000);
    const auto idf = IdfTable::build(corpus);
    ModelConfig hier;
    ModelConfig par = hier;
    par.wiring = Wiring::parallel;
    const Model a(hier, vocab.size());
    const Model b(par, vocab.size());
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto& doc = corpus[static_cast<std::size_t>(trial) % corpus.size()];
        const Model& model = trial % 2 == 0 ? a : b;
        const auto perm = test::random_permutation(rng, static_cast<int>(doc.size()));
        const auto s = model.scores(make_bundle(doc, vocab, idf, model.config()));
        const auto t = model.scores(make_bundle(test::permute_document(doc, perm), vocab, idf, model.config()));
        for (std::size_t i = 0; i < perm.size(); ++i) worst = std::max(worst, std::abs(t[i] - s[static_cast<std::size_t>(perm[i])]));
    }
    return {worst < 1e-9, "100 trials, max |diff| = " + fmt("%.2e", worst)};
}

// ---- 6 ----

double label_agreement(const Model& model, const std::vector<DocumentBundle>& bundles) {
    std::size_t agree = 0, total = 0;
    for (const auto& b : bundles) {
        const auto s = model.scores(b);
        for (std::size_t i = 0; i < s.size(); ++i) {
            agree += (s[i] > 0.5) == (b.labels[i] > 0.5);
            ++total;
        }
    }
    return static_cast<double>(agree) / static_cast<double>(total);
}

Outcome overfit_smoke() {
    test::TempDir scratch("overfit");
    const std::string dir = corpus_dir(scratch, {32, 0, 0});
    ModelConfig cfg;
    cfg.max_epochs = 200;
    cfg.patience = cfg.max_epochs;  // the target, not early stopping, ends the run
    auto docs = load_dataset(dir, Split::train);
    if (docs.size() < 32) return {false, "need 32 training documents, found " + std::to_string(docs.size())};
    docs.resize(32);
    docs = prepare_documents(std::move(docs), cfg);
    const auto vocab = build_vocab(docs, cfg.vocab_size);
    const auto idf = IdfTable::build(docs);
    const auto emb = maybe_embeddings(dir, vocab, cfg);
    const auto split = make_split(docs, vocab, idf, cfg);
    Model model = make_model(cfg, vocab, emb ? &*emb : nullptr);

    double loss = 0.0, agreement = 0.0;
    TrainOptions opts;
    opts.stop_when = [&](const Model& m, const EpochRecord& rec) {
        loss = rec.val_loss;  // dropout-off loss on the training documents
        agreement = label_agreement(m, split.bundles);
        return loss < 0.1 && agreement > 0.95;
    };
    const auto r = train(model, split.bundles, {}, opts);
    const int epochs = r.history.back().epoch;
    return {loss < 0.1 && agreement > 0.95 && epochs <= 200,
            std::string(pubmed_dir().empty() ? "synthetic" : "PubMed") + " documents, epoch " + std::to_string(epochs) +
                ": loss " + fmt("%.4f", loss) + ", label agreement " + fmt("%.4f", agreement)};
}

// ---- 7 ----

Outcome scaled_down_signal() {
    test::TempDir scratch("signal");
    const std::string dir = corpus_dir(scratch, {2000, 200, 500});
    ModelConfig cfg;
    auto limit = [](std::vector<Document> d, std::size_t n) {
        if (d.size() > n) d.resize(n);
        return d;
    };
    const auto train_docs = prepare_documents(limit(load_dataset(dir, Split::train), 2000), cfg);
    const auto val_docs = prepare_documents(limit(load_dataset(dir, Split::val), 200), cfg);
    const auto test_docs = prepare_documents(limit(load_dataset(dir, Split::test), 500), cfg);
    const auto vocab = build_vocab(train_docs, cfg.vocab_size);
    const auto idf = IdfTable::build(train_docs);
    const auto emb = maybe_embeddings(dir, vocab, cfg);
    VariantData data{&vocab, &idf, emb ? &*emb : nullptr, &train_docs, &val_docs, &test_docs, 1};
    EvalOptions eval;
    eval.k = 7;

    std::vector<VariantResult> results;
    for (const auto& [name, variant] : ablation_variants(cfg)) {
        if (name == "parallel") continue;
        results.push_back(run_variant(name, variant, data, eval));
    }
    const double full = results[0].report.row("model").r1.mean;
    const double lead = results[0].report.row("LEAD-7").r1.mean;
    bool ordered = true;
    std::string detail = std::to_string(train_docs.size()) + " train / " + std::to_string(test_docs.size()) +
                         " test (" + (pubmed_dir().empty() ? "synthetic" : "PubMed") + "), R-1: LEAD-7 " +
                         fmt("%.2f", 100 * lead);
    for (const auto& r : results) {
        const double v = r.report.row("model").r1.mean;
        detail += ", " + r.name + " " + fmt("%.2f", 100 * v);
        if (&r != &results[0]) ordered = ordered && full > v;
    }
    return {full >= lead + 0.01 && ordered, detail};
}

// ---- 8 ----

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
    test::TempDir scratch("determinism");
    std::mt19937_64 rng(8008);
    SynthOptions so;
    std::string records;
    for (int i = 0; i < 10; ++i) records += synth_record(rng, "d" + std::to_string(i), so) + "\n";
    scratch.write("train.txt", records);
    ModelConfig cfg;
    cfg.max_epochs = 2;
    const auto docs = prepare_documents(load_dataset(scratch.path(), Split::train), cfg);
    const auto vocab = build_vocab(docs, cfg.vocab_size);
    const auto idf = IdfTable::build(docs);
    const auto train_split = make_split({docs.begin(), docs.begin() + 8}, vocab, idf, cfg);
    const auto val_split = make_split({docs.begin() + 8, docs.end()}, vocab, idf, cfg);

    std::vector<Model> models;
    for (const char* name : {"a", "b"}) {
        Model model = make_model(cfg, vocab);
        const auto r = train(model, train_split.bundles, val_split.bundles);
        r.best.save(scratch.file(std::string(name) + "_best.ckpt"));
        r.last.save(scratch.file(std::string(name) + "_last.ckpt"));
        models.push_back(std::move(model));
    }
    const bool identical = slurp(scratch.file("a_best.ckpt")) == slurp(scratch.file("b_best.ckpt")) &&
                           slurp(scratch.file("a_last.ckpt")) == slurp(scratch.file("b_last.ckpt"));
    const Model reloaded = Checkpoint::load(scratch.file("a_last.ckpt")).restore();
    bool exact = true;
    for (const auto* split : {&train_split, &val_split}) {
        for (const auto& b : split->bundles) exact = exact && models[0].scores(b) == reloaded.scores(b);
    }
    return {identical && exact, std::string(identical ? "checkpoints bit-identical" : "checkpoints differ") +
                                    (exact ? ", reload reproduces scores bit-exactly" : ", reloaded scores differ")};
}

// ---- 9 ----

Outcome stats_reproduction() {
    test::TempDir scratch("stats");
    auto run_stats = [&](const std::string& data, const std::string& out) {
        std::ostringstream o, e;
        const int code = cli::run({"stats", "--data", data, "--split", "train", "--out", out}, o, e);
        if (code != 0) throw std::runtime_error("stats failed: " + e.str());
        std::ifstream in(out + "/stats.json");
        return nlohmann::json::parse(in);
    };
    auto words = [](int n) {
        std::string s;
        for (int i = 0; i < n; ++i) s += (i ? " w" : "w") + std::to_string(i % 9);
        return s;
    };
    // fixture: sentence lengths [5, 25, 105] in one record, 60 sentences of 30 tokens in another
    nlohmann::json a = {{"article_id", "a"},
                        {"article_text", {words(5), words(25), words(105)}},
                        {"abstract_text", {"<S> w0 w1 </S>"}}};
    std::vector<std::string> long_doc(60, words(30));
    nlohmann::json b = {{"article_id", "b"}, {"article_text", long_doc}, {"abstract_text", {"<S> w2 </S>"}}};
    fs::create_directories(scratch.file("fixture"));
    scratch.write("fixture/train.txt", a.dump() + "\n" + b.dump() + "\n");
    const auto j = run_stats(scratch.file("fixture"), scratch.file("out"));

    const std::vector<std::string> length_labels{"(0, 20]", "(20, 40]", "(40, 60]", "(60, 80]", "(80, 100]", "Over 100"};
    const std::vector<std::string> count_labels{"(0, 50]",    "(50, 100]",  "(100, 150]",
                                                "(150, 200]", "(200, 250]", "Over 250"};
    // by hand: 63 sentences -> (0,20]: 1, (20,40]: 61, >100: 1; two docs -> 3 and 60 sentences
    const std::vector<double> length_expect{1.0 / 63, 61.0 / 63, 0, 0, 0, 1.0 / 63};
    const std::vector<double> count_expect{0.5, 0.5, 0, 0, 0, 0};
    bool ok = j["sentence_length"].size() == 6 && j["sentence_count"].size() == 6;
    for (std::size_t i = 0; ok && i < 6; ++i) {
        ok = j["sentence_length"][i]["bucket"] == length_labels[i] && j["sentence_count"][i]["bucket"] == count_labels[i] &&
             j["sentence_length"][i]["fraction"].get<double>() == length_expect[i] &&
             j["sentence_count"][i]["fraction"].get<double>() == count_expect[i];
    }
    std::string detail = ok ? "bucket boundaries and fixture fractions exact" : "fixture mismatch";

    if (!pubmed_dir().empty()) {
        const auto full = run_stats(pubmed_dir(), scratch.file("pubmed"));
        const double share = 100 * full["sentence_length"][1]["fraction"].get<double>();
        ok = ok && std::abs(share - 51.08) <= 0.5;
        detail += "; PubMed (20, 40] = " + fmt("%.2f", share) + "%";
    } else {
        detail += "; PubMed share not checked (HAESUM_PUBMED_DIR unset)";
    }
    return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app("acceptance criteria");
    std::vector<int> only;
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{
        {1, "attention normalization", 60, attention_normalization},
        {2, "gradient oracle", 300, gradient_oracle},
        {3, "oracle equivalence", 60, oracle_equivalence},
        {4, "ROUGE correctness", 0, rouge_correctness},
        {5, "permutation equivariance", 0, equivariance},
        {6, "overfit smoke", 600, overfit_smoke},
        {7, "scaled-down signal", 3600, scaled_down_signal},
        {8, "determinism and checkpoint round trip", 0, determinism},
        {9, "stats reproduction", 0, stats_reproduction},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (c.limit_seconds > 0 && seconds > c.limit_seconds) {
            o.pass = false;
            o.detail += "; over the " + fmt("%.0f", c.limit_seconds) + " s budget";
        }
        std::printf("%s %d %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), o.detail.c_str(), seconds);
        std::fflush(stdout);
        failed += o.pass ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}
