#include "haesum/gradcheck.hpp"
#include "haesum/rouge.hpp"
#include "haesum/train.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <random>

using namespace haesum;

namespace {

struct TinyData {
    Vocabulary vocab;
    std::vector<DocumentBundle> train;
    std::vector<DocumentBundle> val;
};

ModelConfig tiny_config(std::uint64_t seed = 5) {
    ModelConfig c;
    c.hidden = 16;
    c.conv_channels = 2;
    c.lstm_hidden = 4;
    c.word_dim = 12;
    c.edge_dim = 6;
    c.ffn_dim = 24;
    c.hegat_heads = {4, 3};
    c.hgsat_heads = 2;
    c.max_epochs = 3;
    c.lr = 1e-3;
    c.seed = seed;
    return c;
}

TinyData tiny_data(const ModelConfig& cfg, std::uint64_t seed = 9) {
    std::mt19937_64 rng(seed);
    std::vector<Document> docs;
    for (int i = 0; i < 6; ++i) {
        auto d = tiny_document(rng, 3 + i % 4);
        d.id = "d" + std::to_string(i);
        d.oracle_labels = greedy_oracle(d, 3).labels;
        docs.push_back(d);
    }
    TinyData t;
    t.vocab = build_vocab(docs, 100);
    const auto idf = IdfTable::build(docs);
    for (std::size_t i = 0; i < docs.size(); ++i) {
        (i < 4 ? t.train : t.val).push_back(make_bundle(docs[i], t.vocab, idf, cfg));
    }
    return t;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("early stopping waits for three non-improving epochs") {
    EarlyStopping s(3);
    const double losses[] = {2.0, 1.9, 1.95, 1.96, 1.97};
    int stopped_at = 0;
    for (int e = 1; e <= 5; ++e) {
        s.update(e, losses[e - 1]);
        if (s.should_stop()) {
            stopped_at = e;
            break;
        }
    }
    CHECK(stopped_at == 5);
    CHECK(s.best_epoch() == 2);
    CHECK(s.best_value() == 1.9);

    EarlyStopping equal(2);
    CHECK(equal.update(1, 1.0));
    CHECK_FALSE(equal.update(2, 1.0));  // ties are not improvements
    CHECK(equal.update(3, 0.5));
    CHECK(equal.bad_epochs() == 0);
}

TEST_CASE("AdamW first step by hand") {
    ParamStore store;
    const int a = store.add("a", (Matrix(1, 3) << 1.0, -2.0, 0.5).finished());
    const int frozen = store.add("frozen", Matrix::Ones(1, 2), false);
    const int idle = store.add("idle", Matrix::Ones(2, 2));
    AdamW opt(store, 0.01, 0.1);
    Gradients g(3);
    g[static_cast<std::size_t>(a)] = (Matrix(1, 3) << 0.2, -4.0, 0.0).finished();
    g[static_cast<std::size_t>(frozen)] = Matrix::Ones(1, 2);
    opt.step(store, g);

    // bias-corrected moments equal g and g^2 after one step
    const double expect[] = {1.0 - 0.01 * (0.2 / (0.2 + 1e-8) + 0.1 * 1.0), -2.0 - 0.01 * (-4.0 / (4.0 + 1e-8) + 0.1 * -2.0),
                             0.5 - 0.01 * (0.0 + 0.1 * 0.5)};
    for (int i = 0; i < 3; ++i) CHECK(std::abs(store[a].value(0, i) - expect[i]) < 1e-15);
    CHECK(store[frozen].value == Matrix::Ones(1, 2));
    CHECK(store[idle].value == Matrix::Ones(2, 2));
    CHECK(opt.state().step == 1);
}

TEST_CASE("step seeds are a pure function of their inputs") {
    CHECK(step_seed(1, 2, 3) == step_seed(1, 2, 3));
    CHECK(step_seed(1, 2, 3) != step_seed(1, 2, 4));
    CHECK(step_seed(1, 2, 3) != step_seed(1, 3, 3));
    CHECK(step_seed(1, 2, 3) != step_seed(2, 2, 3));
}

TEST_CASE("training is bit-reproducible and checkpoints round-trip") {
    const auto cfg = tiny_config();
    const auto data = tiny_data(cfg);
    test::TempDir dir("train");

    auto run = [&](const std::string& name) {
        Model model(cfg, data.vocab.size());
        TrainOptions opts;
        opts.log_path = dir.file(name + ".jsonl");
        auto r = train(model, data.train, data.val, opts);
        r.best.save(dir.file(name + ".ckpt"));
        return r;
    };
    const auto a = run("a");
    const auto b = run("b");
    CHECK(slurp(dir.file("a.ckpt")) == slurp(dir.file("b.ckpt")));
    CHECK(slurp(dir.file("a.ckpt")).size() > 1000);
    CHECK(a.history.size() == 3);
    for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].train_loss == b.history[i].train_loss);

    std::ifstream log(dir.file("a.jsonl"));
    int lines = 0;
    for (std::string line; std::getline(log, line);) ++lines;
    CHECK(lines == 3);

    const Checkpoint loaded = Checkpoint::load(dir.file("a.ckpt"));
    CHECK(loaded.epoch == a.best.epoch);
    CHECK(loaded.val_loss == a.best.val_loss);
    CHECK(loaded.rng_state == a.best.rng_state);
    CHECK(loaded.config.to_kv() == cfg.to_kv());
    REQUIRE(loaded.params.size() == a.best.params.size());
    for (std::size_t i = 0; i < loaded.params.size(); ++i) CHECK(loaded.params[i].value == a.best.params[i].value);
    REQUIRE(loaded.optimizer.m.size() == a.best.optimizer.m.size());
    for (std::size_t i = 0; i < loaded.optimizer.m.size(); ++i) {
        CHECK(loaded.optimizer.m[i] == a.best.optimizer.m[i]);
        CHECK(loaded.optimizer.v[i] == a.best.optimizer.v[i]);
    }
    loaded.save(dir.file("again.ckpt"));
    CHECK(slurp(dir.file("again.ckpt")) == slurp(dir.file("a.ckpt")));

    const Model original = a.best.restore();
    const Model reloaded = loaded.restore();
    for (const auto& bundle : data.val) CHECK(original.scores(bundle) == reloaded.scores(bundle));

    ModelConfig other = cfg;
    other.seed = 6;
    Model different(other, data.vocab.size());
    const auto c = train(different, data.train, data.val);
    c.best.save(dir.file("c.ckpt"));
    CHECK(slurp(dir.file("c.ckpt")) != slurp(dir.file("a.ckpt")));
}

TEST_CASE("corrupt checkpoints are rejected") {
    test::TempDir dir("ckpt");
    const auto cfg = tiny_config();
    Model model(cfg, 10);
    std::mt19937_64 rng(1);
    Checkpoint::capture(model, nullptr, 1, 0.5, 0.0, rng).save(dir.file("ok.ckpt"));
    const std::string bytes = slurp(dir.file("ok.ckpt"));
    {
        std::ofstream out(dir.file("short.ckpt"), std::ios::binary);
        out << bytes.substr(0, bytes.size() / 2);
    }
    dir.write("junk.ckpt", "not a checkpoint at all");
    CHECK_THROWS_AS(Checkpoint::load(dir.file("short.ckpt")), Error);
    CHECK_THROWS_AS(Checkpoint::load(dir.file("junk.ckpt")), Error);
    CHECK_THROWS_AS(Checkpoint::load(dir.file("missing.ckpt")), Error);
    CHECK(Checkpoint::load(dir.file("ok.ckpt")).restore().params().size() == model.params().size());
}

TEST_CASE("early stopping ends a run and the best checkpoint is kept") {
    auto cfg = tiny_config();
    cfg.max_epochs = 40;
    cfg.patience = 1;
    cfg.lr = 0.05;  // large steps overshoot quickly
    const auto data = tiny_data(cfg);
    Model model(cfg, data.vocab.size());
    const auto r = train(model, data.train, data.val);
    REQUIRE_FALSE(r.history.empty());
    double best = std::numeric_limits<double>::infinity();
    int best_epoch = 0;
    for (const auto& h : r.history) {
        if (h.val_loss < best) {
            best = h.val_loss;
            best_epoch = h.epoch;
        }
    }
    CHECK(r.best.epoch == best_epoch);
    CHECK(r.best.val_loss == best);
    if (r.early_stopped) CHECK(r.history.back().epoch == best_epoch + cfg.patience);
    CHECK(r.last.epoch == r.history.back().epoch);
}

TEST_CASE("selection by validation metric and gradient accumulation") {
    auto cfg = tiny_config();
    cfg.select_by = "rouge";
    cfg.accumulate = 3;
    const auto data = tiny_data(cfg);
    Model model(cfg, data.vocab.size());
    CHECK_THROWS_AS(train(model, data.train, data.val), Error);

    int calls = 0;
    TrainOptions opts;
    const double metric[] = {0.2, 0.5, 0.4};
    opts.val_metric = [&](const Model&) { return metric[calls++]; };
    const auto r = train(model, data.train, data.val, opts);
    CHECK(calls == 3);
    CHECK(r.best.epoch == 2);
    CHECK(r.best.val_metric == 0.5);
}

TEST_CASE("non-finite loss aborts with diagnostics") {
    const auto cfg = tiny_config();
    const auto data = tiny_data(cfg);
    Model model(cfg, data.vocab.size());
    auto& p = model.params();
    p[p.find("head.out_bias")].value(0, 0) = std::numeric_limits<double>::quiet_NaN();
    try {
        train(model, data.train, data.val);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.module() == "model_train");
        const std::string msg = e.what();
        CHECK(msg.find("epoch 1") != std::string::npos);
        CHECK(msg.find("batch 0") != std::string::npos);
        CHECK(msg.find("head.out_bias=") != std::string::npos);
    }

    std::vector<DocumentBundle> unlabeled = data.train;
    unlabeled[0].labels.clear();
    Model fresh(cfg, data.vocab.size());
    CHECK_THROWS_AS(train(fresh, unlabeled, data.val), Error);
    CHECK_THROWS_AS(train(fresh, {}, data.val), Error);
}

TEST_CASE("training lowers the loss on a small set") {
    auto cfg = tiny_config();
    cfg.max_epochs = 15;
    cfg.dropout = 0.0;
    const auto data = tiny_data(cfg);
    Model model(cfg, data.vocab.size());
    const double before = mean_loss(model, data.train);
    train(model, data.train, {});
    CHECK(mean_loss(model, data.train) < before);
}
