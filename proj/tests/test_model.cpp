#include "haesum/gradcheck.hpp"
#include "haesum/model.hpp"
#include "layer_fixtures.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace haesum;

namespace {

struct Fixture {
    std::vector<Document> corpus;
    Vocabulary vocab;
    IdfTable idf;

    explicit Fixture(std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        for (int n : {6, 5, 4, 6}) corpus.push_back(tiny_document(rng, n));
        vocab = build_vocab(corpus, 100);
        idf = IdfTable::build(corpus);
    }

    DocumentBundle bundle(const Document& doc, const ModelConfig& cfg) const { return make_bundle(doc, vocab, idf, cfg); }
};

double max_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

}  // namespace

TEST_CASE("scores have one value per sentence, strictly inside (0, 1)") {
    Fixture f(1);
    ModelConfig cfg;
    Model model(cfg, f.vocab.size());
    for (const auto& doc : f.corpus) {
        const auto s = model.scores(f.bundle(doc, cfg));
        CHECK(s.size() == doc.size());
        for (double p : s) {
            CHECK(p > 0.0);
            CHECK(p < 1.0);
        }
    }
}

TEST_CASE("every variant shares the initialization of common blocks") {
    Fixture f(2);
    ModelConfig base;
    const Model full(base, f.vocab.size());
    for (auto change : {+[](ModelConfig& c) { c.wiring = Wiring::parallel; }, +[](ModelConfig& c) { c.use_hetero = false; },
                        +[](ModelConfig& c) { c.use_hyper = false; }}) {
        ModelConfig cfg = base;
        change(cfg);
        const Model other(cfg, f.vocab.size());
        for (const auto& p : full.params().all()) {
            const int slot = other.params().find(p.name);
            if (slot < 0 || other.params()[slot].value.rows() != p.value.rows() ||
                other.params()[slot].value.cols() != p.value.cols()) {
                continue;
            }
            CAPTURE(p.name);
            if (p.name.rfind("head.", 0) == 0) continue;  // the head input widens under parallel wiring
            CHECK(other.params()[slot].value == p.value);
        }
    }
}

TEST_CASE("parallel wiring changes the scores") {
    Fixture f(3);
    ModelConfig h;
    ModelConfig p = h;
    p.wiring = Wiring::parallel;
    const Model a(h, f.vocab.size());
    const Model b(p, f.vocab.size());
    const auto bundle = f.bundle(f.corpus[0], h);
    CHECK(max_diff(a.scores(bundle), b.scores(bundle)) > 1e-9);
}

TEST_CASE("both ablations reduce the model to the head over sentence features") {
    Fixture f(4);
    ModelConfig cfg;
    cfg.use_hetero = false;
    cfg.use_hyper = false;
    Model model(cfg, f.vocab.size());
    const auto bundle = f.bundle(f.corpus[0], cfg);

    ag::Tape tape;
    Context ctx(tape, model.params());
    const auto trace = model.forward(ctx, bundle);
    CHECK(trace.hegat.empty());
    CHECK(trace.hyper.empty());
    CHECK(trace.global.value() == trace.sentence_init.value());

    // head by hand: W_o LayerNorm(W_p x + b_p) + b_o
    const auto& ps = model.params();
    const Matrix x = trace.sentence_init.value();
    Matrix hidden = x * ps[ps.find("head.proj")].value;
    hidden.rowwise() += RowVector(ps[ps.find("head.proj_bias")].value);
    Matrix normed(hidden.rows(), hidden.cols());
    for (Index r = 0; r < hidden.rows(); ++r) {
        const double mean = hidden.row(r).mean();
        const double var = (hidden.row(r).array() - mean).square().mean();
        normed.row(r) = (hidden.row(r).array() - mean) / std::sqrt(var + 1e-5);
    }
    const Matrix logits = normed * ps[ps.find("head.out")].value;
    const auto scores = model.scores(bundle);
    for (Index r = 0; r < logits.rows(); ++r) {
        CHECK(std::abs(scores[static_cast<std::size_t>(r)] - 1.0 / (1.0 + std::exp(-logits(r, 0)))) < 1e-12);
    }

    // the bypassed blocks have no influence
    for (auto& p : model.params().all()) {
        if (p.name.rfind("hegat", 0) == 0 || p.name.rfind("hyper", 0) == 0) p.value.setConstant(3.0);
    }
    CHECK(model.scores(bundle) == scores);
}

TEST_CASE("scores permute with the sentences") {
    Fixture f(5);
    for (auto wiring : {Wiring::hierarchical, Wiring::parallel}) {
        ModelConfig cfg;
        cfg.wiring = wiring;
        Model model(cfg, f.vocab.size());
        std::mt19937_64 rng(6);
        for (const auto& doc : f.corpus) {
            const auto perm = test::random_permutation(rng, static_cast<int>(doc.size()));
            const auto a = model.scores(f.bundle(doc, cfg));
            const auto b = model.scores(f.bundle(test::permute_document(doc, perm), cfg));
            double worst = 0.0;
            for (std::size_t i = 0; i < perm.size(); ++i) {
                worst = std::max(worst, std::abs(b[i] - a[static_cast<std::size_t>(perm[i])]));
            }
            CHECK(worst < 1e-9);
        }
    }
}

TEST_CASE("mismatched bundles fail fast") {
    Fixture f(7);
    ModelConfig cfg;
    Model model(cfg, f.vocab.size());
    auto bundle = f.bundle(f.corpus[0], cfg);
    bundle.to_words.bin[0] = cfg.num_bins;
    try {
        model.scores(bundle);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.module() == "model_train");
    }
    auto other = f.bundle(f.corpus[0], cfg);
    other.graph.sentence_count += 1;
    CHECK_THROWS_AS(model.scores(other), Error);
    CHECK_THROWS_AS(model.set_embeddings(Matrix::Zero(3, 300)), Error);

    auto unlabeled = f.bundle(f.corpus[0], cfg);
    unlabeled.labels.clear();
    Gradients g;
    CHECK_THROWS_AS(model.loss_and_gradients(unlabeled, g, 1), Error);
}

TEST_CASE("binary cross-entropy") {
    const std::vector<double> half(5, 0.5);
    const std::vector<double> labels{1, 0, 1, 1, 0};
    CHECK(std::abs(bce_loss(half, labels) - std::log(2.0)) < 1e-15);

    std::vector<double> near(labels);
    for (auto& p : near) p = p > 0.5 ? 1.0 - 1e-13 : 1e-13;
    CHECK(bce_loss(near, labels) < 1e-9);
    CHECK(bce_loss(labels, labels) < 1e-9);  // clamped, finite

    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.01, 0.99);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> p(1 + trial % 9), y(p.size());
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            p[i] = u(rng);
            y[i] = static_cast<double>(rng() % 2);
            sum += y[i] == 1.0 ? -std::log(p[i]) : -std::log(1.0 - p[i]);
        }
        const double expect = sum / static_cast<double>(p.size());
        CHECK(std::abs(bce_loss(p, y) - expect) < 1e-12);
        CHECK(bce_loss(p, y) > 0.0);

        // the logit form used in training agrees
        Matrix logits(static_cast<Index>(p.size()), 1);
        for (std::size_t i = 0; i < p.size(); ++i) logits(static_cast<Index>(i), 0) = std::log(p[i] / (1.0 - p[i]));
        ag::Tape tape;
        CHECK(std::abs(ag::bce_with_logits(tape.constant(logits), y).value()(0, 0) - expect) < 1e-12);
    }
    CHECK_THROWS_AS(bce_loss(half, std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(bce_loss(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("config key-value round trip and validation") {
    ModelConfig c;
    c.hegat_heads = {4, 2, 2};
    c.wiring = Wiring::parallel;
    c.hyper_layer = HyperLayerKind::hgat;
    c.use_hyper = false;
    c.lr = 3.25e-4;
    c.dropout = 0.0;
    c.select_by = "rouge";
    c.seed = 123456789012345ULL;
    const auto text = c.to_kv();
    const auto back = ModelConfig::from_kv("# comment\n[model]\n" + text);
    CHECK(back.to_kv() == text);
    CHECK(back.lr == c.lr);
    CHECK(back.hegat_heads == c.hegat_heads);
    CHECK(back.wiring == Wiring::parallel);
    CHECK(back.seed == c.seed);

    ModelConfig d;
    try {
        d.set("no_such_key", "1");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.module() == "model_train");
    }
    CHECK_THROWS_AS(d.set("hidden", "abc"), Error);
    CHECK_THROWS_AS(d.set("use_hyper", "maybe"), Error);
    CHECK_THROWS_AS(ModelConfig::from_kv("hidden 64\n"), Error);
    CHECK_THROWS_AS(parse_wiring("diagonal"), Error);

    ModelConfig bad;
    bad.hidden = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = ModelConfig{};
    bad.select_by = "accuracy";
    CHECK_THROWS_AS(bad.validate(), Error);
    ModelConfig{}.validate();
}

TEST_CASE("full-model gradient matches finite differences on a sample") {
    const auto r = gradcheck_full(31);
    CAPTURE(r.worst);
    CHECK(r.checked > 0);
    CHECK(r.max_rel_error < 1e-3);
}
