#include "haesum/gradcheck.hpp"

#include "haesum/hgsat.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace haesum {

double relative_error(double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    return std::abs(analytic - numeric) / denom;
}

GradCheckResult check_gradients(std::string suite, ParamStore& store,
                                const std::function<ag::Var(Context&)>& loss, const GradCheckOptions& options) {
    GradCheckResult result;
    result.suite = std::move(suite);
    result.tolerance = options.tolerance;

    Gradients grads;
    {
        ag::Tape tape;
        Context ctx(tape, store);
        const ag::Var l = loss(ctx);
        tape.backward(l);
        grads = ctx.gradients();
    }
    auto evaluate = [&]() {
        ag::Tape tape;
        Context ctx(tape, store);
        return loss(ctx).value()(0, 0);
    };

    const double base = evaluate();
    std::mt19937_64 rng(options.seed);
    for (int slot = 0; slot < store.size(); ++slot) {
        Parameter& p = store[slot];
        if (!p.trainable) continue;
        const auto n = static_cast<std::size_t>(p.value.size());
        std::vector<std::size_t> entries(n);
        std::iota(entries.begin(), entries.end(), 0);
        if (options.fraction < 1.0) {
            const auto take = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(options.fraction * n)));
            std::shuffle(entries.begin(), entries.end(), rng);
            entries.resize(std::min(take, n));
            std::sort(entries.begin(), entries.end());
        }
        const Matrix* g = static_cast<std::size_t>(slot) < grads.size() && grads[slot].size() > 0 ? &grads[slot] : nullptr;
        for (std::size_t e : entries) {
            double& x = p.value.data()[e];
            const double original = x;
            x = original + options.step;
            const double up = evaluate();
            x = original - options.step;
            const double down = evaluate();
            x = original;
            const double numeric = (up - down) / (2.0 * options.step);
            const double analytic = g ? g->data()[e] : 0.0;
            double err = relative_error(analytic, numeric);
            // A ReLU/max switch inside the probe window makes the central
            // difference meaningless; then the gradient must match the
            // one-sided derivative on one side of the switch.
            const double forward = (up - base) / options.step;
            const double backward = (base - down) / options.step;
            if (relative_error(forward, backward) >= options.tolerance) {
                err = std::min({err, relative_error(analytic, forward), relative_error(analytic, backward)});
                ++result.kinks;
            }
            ++result.checked;
            if (err > result.max_rel_error || result.worst.empty()) {
                result.max_rel_error = err;
                const auto cols = static_cast<std::size_t>(p.value.cols());
                result.worst = p.name + "[" + std::to_string(e / cols) + "," + std::to_string(e % cols) + "]";
            }
        }
    }
    return result;
}

TinyInstance random_instance(std::mt19937_64& rng, int max_sentences, int max_words, int num_bins) {
    std::uniform_int_distribution<int> sentence_count(1, max_sentences);
    std::uniform_int_distribution<int> word_count(1, max_words);
    std::uniform_int_distribution<int> bin(0, num_bins - 1);
    std::bernoulli_distribution link(0.4);

    const int m = sentence_count(rng);
    const int w = word_count(rng);
    std::set<std::pair<int, int>> pairs;
    for (int s = 0; s < m; ++s) {
        for (int j = 0; j < w; ++j) {
            if (link(rng)) pairs.emplace(s, j);
        }
    }
    std::uniform_int_distribution<int> any_sentence(0, m - 1);
    for (int j = 0; j < w; ++j) {
        const bool used = std::any_of(pairs.begin(), pairs.end(), [j](const auto& p) { return p.second == j; });
        if (!used) pairs.emplace(any_sentence(rng), j);
    }

    TinyInstance inst;
    inst.graph.sentence_count = m;
    for (int j = 0; j < w; ++j) {
        inst.graph.word_ids.push_back(2 + j);
        inst.graph.words.push_back("w" + std::to_string(j));
    }
    for (const auto& [s, j] : pairs) {
        const int b = bin(rng);
        inst.graph.edges.push_back({s, j, (b + 0.5) * 0.1, b});
    }

    Document doc;
    std::uniform_int_distribution<int> sections(1, std::min(3, m));
    const int k = sections(rng);
    std::uniform_int_distribution<int> section(0, k - 1);
    for (int s = 0; s < m; ++s) {
        doc.sentences.push_back({"x"});
        doc.section_ids.push_back(section(rng));
    }
    // renumber to a contiguous range
    std::vector<int> ids(doc.section_ids);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (int& s : doc.section_ids) s = static_cast<int>(std::lower_bound(ids.begin(), ids.end(), s) - ids.begin());

    inst.hyper = build_hypergraph(doc);
    inst.to_words = words_from_sentences(inst.graph);
    inst.to_sentences = sentences_from_words(inst.graph);
    return inst;
}

Document tiny_document(std::mt19937_64& rng, int sentences) {
    static const char* const pool[] = {"cell", "protein", "gene", "patients", "tumor", "growth", "signal",
                                       "the",  "of",      "dose", "result",   "trial", "effect", "model"};
    constexpr int pool_size = sizeof(pool) / sizeof(pool[0]);
    std::uniform_int_distribution<int> word(0, pool_size - 1);
    std::uniform_int_distribution<int> length(3, 7);

    Document doc;
    doc.id = "tiny";
    for (int s = 0; s < sentences; ++s) {
        Tokens t;
        const int len = length(rng);
        for (int i = 0; i < len; ++i) t.push_back(pool[word(rng)]);
        doc.sentences.push_back(std::move(t));
        doc.section_ids.push_back(s < (sentences + 1) / 2 ? 0 : 1);
    }
    doc.abstract.push_back({doc.sentences[0][0], doc.sentences[0][1], pool[word(rng)], pool[word(rng)]});
    return doc;
}

namespace {

// sum(out .* R) with a fixed random R, so every output entry matters.
ag::Var projected(const ag::Var& out, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix r(out.rows(), out.cols());
    for (Index i = 0; i < r.size(); ++i) r.data()[i] = n(rng);
    return ag::sum_all(ag::mul_const(out, r));
}

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
}

GradCheckResult hyper_suite(const std::string& name, HyperLayerKind kind, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TinyInstance inst = random_instance(rng, 6, 8);
    // at least two hyperedges so edge-level attention has a choice
    while (inst.hyper.edge_count < 2) inst = random_instance(rng, 6, 8);

    HypergraphShape shape;
    shape.dim = 8;
    shape.heads = 2;
    ParamStore store;
    const int input = store.add("input.nodes", random_matrix(inst.hyper.node_count, shape.dim, rng));
    std::vector<HypergraphLayer> layers;
    for (int l = 0; l < 2; ++l) layers.emplace_back(store, "layer" + std::to_string(l), shape, kind, rng);

    const std::uint64_t proj_seed = rng();
    auto loss = [&](Context& ctx) {
        ag::Var h = ctx(input);
        for (const auto& layer : layers) h = layer.forward(ctx, h, inst.hyper).nodes;
        std::mt19937_64 r(proj_seed);
        return projected(h, r);
    };
    GradCheckOptions opts;
    opts.tolerance = 1e-4;
    return check_gradients(name, store, loss, opts);
}

}  // namespace

GradCheckResult gradcheck_hegat(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const TinyInstance inst = random_instance(rng, 6, 8);

    HeteroAttentionShape shape;
    shape.dim = 8;
    shape.heads = 3;  // per-head width rounds up: concat width 9
    shape.edge_dim = 4;
    shape.num_bins = 10;
    shape.ffn_dim = 16;
    ParamStore store;
    const int words = store.add("input.words", random_matrix(static_cast<Index>(inst.graph.word_count()), shape.dim, rng));
    const int sentences = store.add("input.sentences", random_matrix(inst.graph.sentence_count, shape.dim, rng));
    std::vector<HegatBlock> blocks;
    for (int l = 0; l < 2; ++l) blocks.emplace_back(store, "block" + std::to_string(l), shape, rng);

    const std::uint64_t proj_seed = rng();
    auto loss = [&](Context& ctx) {
        ag::Var w = ctx(words);
        ag::Var s = ctx(sentences);
        for (const auto& b : blocks) {
            const auto out = b.forward(ctx, w, s, inst.to_words, inst.to_sentences);
            w = out.words;
            s = out.sentences;
        }
        std::mt19937_64 r(proj_seed);
        const ag::Var parts[] = {projected(w, r), projected(s, r)};
        return ag::sum_all(ag::concat_cols(parts));
    };
    GradCheckOptions opts;
    opts.tolerance = 1e-4;
    return check_gradients("hegat", store, loss, opts);
}

GradCheckResult gradcheck_hgsat(std::uint64_t seed) { return hyper_suite("hgsat", HyperLayerKind::hgsat, seed); }

GradCheckResult gradcheck_hgat(std::uint64_t seed) { return hyper_suite("hgat", HyperLayerKind::hgat, seed); }

GradCheckResult gradcheck_full(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Document doc = tiny_document(rng, 6);
    const std::vector<Document> corpus{doc, tiny_document(rng, 5), tiny_document(rng, 4)};
    const Vocabulary vocab = build_vocab(corpus, 100);
    const IdfTable idf = IdfTable::build(corpus);

    ModelConfig cfg;
    cfg.seed = seed;
    Model model(cfg, vocab.size());
    DocumentBundle bundle = make_bundle(doc, vocab, idf, cfg);
    bundle.labels.assign(static_cast<std::size_t>(bundle.sentence_count()), 0.0);
    bundle.labels[0] = 1.0;
    bundle.labels[3] = 1.0;

    auto loss = [&](Context& ctx) {
        const auto trace = model.forward(ctx, bundle);
        return ag::bce_with_logits(trace.logits, bundle.labels);
    };
    GradCheckOptions opts;
    opts.tolerance = 1e-3;
    opts.fraction = 0.01;
    opts.seed = seed;
    return check_gradients("full", model.params(), loss, opts);
}

std::vector<GradCheckResult> run_gradcheck_suites(std::uint64_t seed) {
    return {gradcheck_hegat(seed), gradcheck_hgsat(seed + 1), gradcheck_hgat(seed + 2), gradcheck_full(seed + 3)};
}

}  // namespace haesum
