#include "haesum/cli.hpp"

#include "haesum/cache.hpp"
#include "haesum/gradcheck.hpp"
#include "haesum/pipeline.hpp"
#include "haesum/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

namespace haesum::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string dashed(std::string key) {
    std::replace(key.begin(), key.end(), '_', '-');
    return key;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> keys;
    std::istringstream in(ModelConfig{}.to_kv());
    std::string line;
    while (std::getline(in, line)) keys.push_back(line.substr(0, line.find(' ')));
    return keys;
}

json config_json(const ModelConfig& c) {
    json j = json::object();
    std::istringstream in(c.to_kv());
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find(" = ");
        j[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cli", "cannot read " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw Error("cli", "cannot write " + path);
    out << text;
}

std::string utc_now() {
    const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

// Model flags: every ModelConfig key becomes --dashed-key; values given on
// the command line override the config file.
struct ConfigFlags {
    std::string file;
    std::map<std::string, std::string> values;
    CLI::App* app = nullptr;

    void attach(CLI::App* sub) {
        app = sub;
        sub->add_option("--config", file, "config file with `key = value` lines")->check(CLI::ExistingFile);
        for (const auto& key : config_keys()) {
            sub->add_option("--" + dashed(key), values[key], "model setting " + key)->group("Model settings");
        }
    }

    ModelConfig resolve() const {
        ModelConfig c = file.empty() ? ModelConfig{} : ModelConfig::from_kv(read_file(file));
        for (const auto& [key, value] : values) {
            if (app->count("--" + dashed(key)) > 0) c.set(key, value);
        }
        c.validate();
        return c;
    }
};

struct Manifest {
    std::string command;
    std::vector<std::string> args;
    std::string started = utc_now();
    Clock::time_point start = Clock::now();
    json config;
    json inputs = json::object();
    json outputs = json::object();
    json extra = json::object();

    void write(const std::string& dir) const {
        fs::create_directories(dir);
        const std::string path = dir + "/manifest.json";
        json m = {{"command", command},
                  {"args", args},
                  {"versions", {{"code", version},
                                {"cache_format", CacheHeader::current_version},
                                {"checkpoint_format", Checkpoint::format_version}}},
                  {"inputs", inputs},
                  {"outputs", outputs},
                  {"timings", {{"started", started},
                               {"seconds", std::chrono::duration<double>(Clock::now() - start).count()}}}};
        if (!config.is_null()) {
            m["config"] = config;
            m["seed"] = config.value("seed", "");
        }
        for (const auto& [k, v] : extra.items()) m[k] = v;
        // a later stage in the same directory keeps the earlier record
        if (fs::exists(path)) {
            try {
                const json previous = json::parse(read_file(path));
                if (previous.value("command", "") != command) m["previous"] = previous;
                else if (previous.contains("previous")) m["previous"] = previous["previous"];
            } catch (const json::exception&) {
            }
        }
        write_file(path, m.dump(2) + "\n");
    }
};

class Runner {
public:
    Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    void log(const std::string& msg) { err_ << "[haesum] " << msg << std::endl; }

    std::ostream& out() { return out_; }

private:
    std::ostream& out_;
    std::ostream& err_;
};

std::vector<Document> limit(std::vector<Document> docs, std::size_t n) {
    if (n > 0 && docs.size() > n) docs.resize(n);
    return docs;
}

std::vector<Document> load_cache_split(const std::string& cache, Split split, std::size_t max_docs) {
    const CacheLayout layout{cache};
    if (!fs::exists(layout.split_file(split))) {
        throw Error("corpus_io", "cache has no " + std::string(split_name(split)) + " split; run preprocess first");
    }
    return limit(read_cache(layout.split_file(split)), max_docs);
}

void require_cache(const std::string& cache) {
    if (cache.empty()) throw Error("cli", "no cache directory: pass --cache or set HAESUM_CACHE_DIR");
}

std::vector<Split> parse_splits(const std::string& list) {
    std::vector<Split> out;
    std::istringstream in(list);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(parse_split(item));
    }
    return out;
}

// ---- subcommands ---------------------------------------------------------

struct PreprocessArgs {
    std::string data;
    std::string cache;
    std::string splits = "train,val,test";
    std::size_t max_docs = 0;
    int workers = 1;
    ConfigFlags flags;
};

void preprocess(Runner& r, const PreprocessArgs& a, const Manifest& base) {
    require_cache(a.cache);
    const ModelConfig cfg = a.flags.resolve();
    const CacheLayout layout{a.cache};
    fs::create_directories(a.cache);
    Manifest m = base;
    m.config = config_json(cfg);
    m.inputs["data"] = a.data;

    std::vector<Document> train_docs;
    for (Split split : parse_splits(a.splits)) {
        const std::string name(split_name(split));
        LoadReport report;
        std::vector<Document> docs;
        try {
            docs = limit(load_dataset(a.data, split, {}, &report), a.max_docs);
        } catch (const Error& e) {
            if (split == Split::train) throw;
            r.log("skipping " + name + ": " + e.what());
            continue;
        }
        for (const auto& w : report.warnings) r.log(w);
        for (auto& d : docs) d = truncate(d, cfg.max_sentences, cfg.max_tokens);
        CacheHeader h;
        h.split = name;
        h.max_sentences = cfg.max_sentences;
        h.max_tokens = cfg.max_tokens;
        write_cache(layout.split_file(split), docs, h);
        r.log(name + ": " + std::to_string(docs.size()) + " documents (" + std::to_string(report.malformed) +
              " malformed, " + std::to_string(report.empty) + " empty)");
        m.outputs[name] = layout.split_file(split);
        if (split == Split::train) train_docs = std::move(docs);
    }
    if (train_docs.empty()) throw Error("corpus_io", "training split is empty");
    const Vocabulary vocab = build_vocab(train_docs, static_cast<std::size_t>(cfg.vocab_size));
    vocab.save(layout.vocab_file());
    IdfTable::build(train_docs).save(layout.idf_file());
    r.log("vocabulary: " + std::to_string(vocab.size()) + " entries");
    m.outputs["vocab"] = layout.vocab_file();
    m.outputs["idf"] = layout.idf_file();
    m.write(a.cache);
}

struct LabelArgs {
    std::string cache;
    int workers = 1;
    ConfigFlags flags;
};

void label(Runner& r, const LabelArgs& a, const Manifest& base) {
    require_cache(a.cache);
    const ModelConfig cfg = a.flags.resolve();
    const CacheLayout layout{a.cache};
    Manifest m = base;
    m.config = config_json(cfg);
    m.inputs["cache"] = a.cache;
    bool any = false;
    for (Split split : {Split::train, Split::val, Split::test}) {
        const auto path = layout.split_file(split);
        if (!fs::exists(path)) continue;
        CacheHeader h;
        auto docs = read_cache(path, &h);
        label_documents(docs, cfg.oracle_max, a.workers);
        std::size_t positives = 0;
        std::size_t sentences = 0;
        for (const auto& d : docs) {
            positives += static_cast<std::size_t>(std::count(d.oracle_labels->begin(), d.oracle_labels->end(), 1));
            sentences += d.size();
        }
        h.labeled = true;
        h.oracle_max = cfg.oracle_max;
        write_cache(path, docs, h);
        r.log(std::string(split_name(split)) + ": labeled " + std::to_string(docs.size()) + " documents, " +
              std::to_string(positives) + " of " + std::to_string(sentences) + " sentences selected");
        m.outputs[std::string(split_name(split))] = path;
        any = true;
    }
    if (!any) throw Error("corpus_io", "no cache splits found in " + a.cache);
    m.write(a.cache);
}

struct StatsArgs {
    std::string data;
    std::string split = "train";
    std::string out_dir;
    std::size_t max_docs = 0;
};

void stats(Runner& r, const StatsArgs& a, const Manifest& base) {
    LoadReport report;
    const auto docs = limit(load_dataset(a.data, parse_split(a.split), {}, &report), a.max_docs);
    const CorpusStats s = corpus_stats(docs);

    std::ostringstream table;
    table << std::fixed << std::setprecision(2);
    table << "documents: " << s.documents << "\n"
          << "avg sentences per document: " << s.avg_doc_sentences() << "\n"
          << "avg tokens per document: " << s.avg_doc_tokens() << "\n"
          << "avg summary tokens: " << s.avg_summary_tokens() << "\n\n";
    auto histogram = [&](const char* title, int width, const auto& fractions) {
        table << title << "\n";
        const auto labels = CorpusStats::labels(width);
        for (std::size_t b = 0; b < CorpusStats::buckets; ++b) {
            table << "  " << std::left << std::setw(12) << labels[b] << std::right << std::setw(8)
                  << 100.0 * fractions[b] << "%\n";
        }
    };
    histogram("sentence length (tokens)", CorpusStats::sentence_length_width, s.sentence_length_fractions());
    histogram("document length (sentences)", CorpusStats::sentence_count_width, s.sentence_count_fractions());
    r.out() << table.str();

    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        json j = {{"documents", s.documents},
                  {"sentences", s.sentences},
                  {"avg_doc_sentences", s.avg_doc_sentences()},
                  {"avg_doc_tokens", s.avg_doc_tokens()},
                  {"avg_summary_tokens", s.avg_summary_tokens()}};
        auto buckets = [](int width, const auto& counts, const auto& fractions) {
            json arr = json::array();
            const auto labels = CorpusStats::labels(width);
            for (std::size_t b = 0; b < CorpusStats::buckets; ++b) {
                arr.push_back({{"bucket", labels[b]}, {"count", counts[b]}, {"fraction", fractions[b]}});
            }
            return arr;
        };
        j["sentence_length"] =
            buckets(CorpusStats::sentence_length_width, s.sentence_length_counts, s.sentence_length_fractions());
        j["sentence_count"] =
            buckets(CorpusStats::sentence_count_width, s.sentence_count_counts, s.sentence_count_fractions());
        write_file(a.out_dir + "/stats.json", j.dump(2) + "\n");
        write_file(a.out_dir + "/stats.txt", table.str());
        Manifest m = base;
        m.inputs["data"] = a.data;
        m.inputs["split"] = a.split;
        m.outputs["stats"] = a.out_dir + "/stats.json";
        m.write(a.out_dir);
    }
    if (report.malformed > 0) r.log(std::to_string(report.malformed) + " malformed records skipped");
}

struct TrainArgs {
    std::string cache;
    std::string out_dir;
    std::string embeddings;
    std::size_t max_train = 0;
    std::size_t max_val = 0;
    int workers = 1;
    bool val_rouge = true;
    ConfigFlags flags;
};

struct Resources {
    Vocabulary vocab;
    IdfTable idf;
    std::optional<Matrix> embeddings;
};

Resources load_resources(Runner& r, const std::string& cache, const std::string& embeddings, const ModelConfig& cfg) {
    const CacheLayout layout{cache};
    Resources res;
    res.vocab = Vocabulary::load(layout.vocab_file());
    res.idf = IdfTable::load(layout.idf_file());
    if (!embeddings.empty()) {
        EmbeddingLoadReport rep;
        res.embeddings = load_embeddings(embeddings, res.vocab, cfg.word_dim, cfg.seed, &rep);
        r.log("word vectors: " + std::to_string(rep.found) + " found, " + std::to_string(rep.missing) + " missing");
    }
    return res;
}

void train_command(Runner& r, const TrainArgs& a, const Manifest& base) {
    require_cache(a.cache);
    const ModelConfig cfg = a.flags.resolve();
    const Resources res = load_resources(r, a.cache, a.embeddings, cfg);
    const auto train_docs = prepare_documents(load_cache_split(a.cache, Split::train, a.max_train), cfg, a.workers);
    std::vector<Document> val_docs;
    if (fs::exists(CacheLayout{a.cache}.split_file(Split::val))) {
        val_docs = prepare_documents(load_cache_split(a.cache, Split::val, a.max_val), cfg, a.workers);
    }
    const SplitData train_split = make_split(train_docs, res.vocab, res.idf, cfg, a.workers);
    const SplitData val_split = make_split(val_docs, res.vocab, res.idf, cfg, a.workers);
    r.log("training on " + std::to_string(train_split.docs.size()) + " documents, validating on " +
          std::to_string(val_split.docs.size()));

    fs::create_directories(a.out_dir);
    Model model = make_model(cfg, res.vocab, res.embeddings ? &*res.embeddings : nullptr);
    TrainOptions opts;
    opts.log_path = a.out_dir + "/train_log.jsonl";
    if (a.val_rouge && !val_split.docs.empty()) {
        opts.val_metric = [&](const Model& m) { return mean_rouge1(m, val_split.docs, val_split.bundles, cfg.top_k); };
    }
    opts.on_epoch = [&](const EpochRecord& e) {
        std::ostringstream s;
        s << std::fixed << std::setprecision(4) << "epoch " << e.epoch << " train " << e.train_loss << " val "
          << e.val_loss << " val-R1 " << e.val_metric << (e.improved ? " *" : "") << " (" << std::setprecision(1)
          << e.seconds << "s)";
        r.log(s.str());
    };
    const TrainResult result = train(model, train_split.bundles, val_split.bundles, opts);
    result.best.save(a.out_dir + "/best.ckpt");
    result.last.save(a.out_dir + "/last.ckpt");
    write_file(a.out_dir + "/config.txt", cfg.to_kv());

    Manifest m = base;
    m.config = config_json(cfg);
    m.inputs = {{"cache", a.cache}, {"embeddings", a.embeddings}};
    m.outputs = {{"best", a.out_dir + "/best.ckpt"},
                 {"last", a.out_dir + "/last.ckpt"},
                 {"log", opts.log_path},
                 {"config", a.out_dir + "/config.txt"}};
    m.extra = {{"best_epoch", result.best.epoch},
               {"best_val_loss", result.best.val_loss},
               {"epochs_run", result.history.size()},
               {"early_stopped", result.early_stopped}};
    m.write(a.out_dir);
    r.out() << "best epoch " << result.best.epoch << ", validation loss " << result.best.val_loss << "\n";
}

struct EvalArgs {
    std::string checkpoint;
    std::string cache;
    std::string out_dir;
    std::string split = "test";
    int k = 0;
    bool trigram_blocking = false;
    bool stem = false;
    int bootstrap = 1000;
    std::size_t max_docs = 0;
    int workers = 1;
};

struct Loaded {
    Model model;
    SplitData data;
};

Loaded load_for_inference(const EvalArgs& a) {
    require_cache(a.cache);
    const Checkpoint ckpt = Checkpoint::load(a.checkpoint);
    const CacheLayout layout{a.cache};
    const Vocabulary vocab = Vocabulary::load(layout.vocab_file());
    if (vocab.size() != ckpt.vocab_size) {
        throw Error("summarize_eval", "checkpoint vocabulary (" + std::to_string(ckpt.vocab_size) +
                                          ") does not match the cache (" + std::to_string(vocab.size()) + ")");
    }
    const IdfTable idf = IdfTable::load(layout.idf_file());
    auto docs = prepare_documents(load_cache_split(a.cache, parse_split(a.split), a.max_docs), ckpt.config, a.workers);
    return {ckpt.restore(), make_split(std::move(docs), vocab, idf, ckpt.config, a.workers)};
}

void eval_command(Runner& r, const EvalArgs& a, const Manifest& base) {
    const Loaded l = load_for_inference(a);
    EvalOptions opts;
    opts.k = a.k > 0 ? a.k : l.model.config().top_k;
    opts.oracle_max = l.model.config().oracle_max;
    opts.trigram_blocking = a.trigram_blocking;
    opts.stem = a.stem;
    opts.bootstrap_resamples = a.bootstrap;
    opts.bootstrap_seed = l.model.config().seed;
    std::vector<SummaryResult> summaries;
    const EvalReport report = evaluate(l.model, l.data.docs, l.data.bundles, opts, &summaries);

    fs::create_directories(a.out_dir);
    write_file(a.out_dir + "/report.json", report.to_json().dump(2) + "\n");
    write_file(a.out_dir + "/report.txt", report.table());
    std::ofstream per_doc(a.out_dir + "/summaries.jsonl");
    for (const auto& s : summaries) per_doc << to_json(s).dump() << '\n';
    Manifest m = base;
    m.config = config_json(l.model.config());
    m.inputs = {{"checkpoint", a.checkpoint}, {"cache", a.cache}, {"split", a.split}};
    m.outputs = {{"report", a.out_dir + "/report.json"},
                 {"table", a.out_dir + "/report.txt"},
                 {"summaries", a.out_dir + "/summaries.jsonl"}};
    m.write(a.out_dir);
    r.out() << report.table();
}

void summarize_command(Runner& r, const EvalArgs& a, const Manifest& base) {
    const Loaded l = load_for_inference(a);
    const int k = a.k > 0 ? a.k : l.model.config().top_k;
    const auto results = summarize(l.model, l.data.docs, l.data.bundles, k, a.trigram_blocking);
    fs::create_directories(a.out_dir);
    std::ofstream out(a.out_dir + "/summaries.jsonl");
    for (const auto& s : results) {
        out << json{{"id", s.id}, {"indices", s.indices}, {"text", s.text}}.dump() << '\n';
    }
    Manifest m = base;
    m.config = config_json(l.model.config());
    m.inputs = {{"checkpoint", a.checkpoint}, {"cache", a.cache}, {"split", a.split}};
    m.outputs = {{"summaries", a.out_dir + "/summaries.jsonl"}};
    m.write(a.out_dir);
    r.log("wrote " + std::to_string(results.size()) + " summaries");
}

struct GradcheckArgs {
    std::uint64_t seed = 1;
    std::string out_dir;
};

void gradcheck_command(Runner& r, const GradcheckArgs& a, const Manifest& base) {
    const auto results = run_gradcheck_suites(a.seed);
    json j = json::array();
    std::string failed;
    for (const auto& g : results) {
        std::ostringstream line;
        line << (g.passed() ? "PASS " : "FAIL ") << std::left << std::setw(6) << g.suite << " checked "
             << g.checked << "  max relative error " << std::scientific << std::setprecision(3) << g.max_rel_error
             << " (tolerance " << g.tolerance << ")  worst " << g.worst << "\n";
        r.out() << line.str();
        j.push_back({{"suite", g.suite},
                     {"checked", g.checked},
                     {"one_sided", g.kinks},
                     {"max_rel_error", g.max_rel_error},
                     {"tolerance", g.tolerance},
                     {"worst", g.worst},
                     {"passed", g.passed()}});
        if (!g.passed() && failed.empty()) failed = g.suite;
    }
    if (!a.out_dir.empty()) {
        fs::create_directories(a.out_dir);
        write_file(a.out_dir + "/gradcheck.json", j.dump(2) + "\n");
        Manifest m = base;
        m.extra = {{"seed", a.seed}};
        m.outputs = {{"results", a.out_dir + "/gradcheck.json"}};
        m.write(a.out_dir);
    }
    if (!failed.empty()) {
        const std::string module = failed == "full" ? "model_train" : failed == "hegat" ? "hegat" : "hgsat";
        throw Error(module, "gradient check failed for suite " + failed);
    }
    r.log("all gradient checks passed");
}

struct AblateArgs {
    std::string cache;
    std::string out_dir;
    std::string embeddings;
    std::size_t max_train = 0;
    std::size_t max_val = 0;
    std::size_t max_test = 0;
    int k = 0;
    int workers = 1;
    ConfigFlags flags;
};

void ablate_command(Runner& r, const AblateArgs& a, const Manifest& base) {
    require_cache(a.cache);
    const ModelConfig cfg = a.flags.resolve();
    const Resources res = load_resources(r, a.cache, a.embeddings, cfg);
    const auto train_docs = prepare_documents(load_cache_split(a.cache, Split::train, a.max_train), cfg, a.workers);
    const auto val_docs = prepare_documents(load_cache_split(a.cache, Split::val, a.max_val), cfg, a.workers);
    const auto test_docs = prepare_documents(load_cache_split(a.cache, Split::test, a.max_test), cfg, a.workers);
    VariantData data{&res.vocab, &res.idf, res.embeddings ? &*res.embeddings : nullptr,
                     &train_docs, &val_docs, &test_docs, a.workers};
    EvalOptions eval;
    eval.k = a.k > 0 ? a.k : cfg.top_k;
    eval.oracle_max = cfg.oracle_max;
    eval.bootstrap_seed = cfg.seed;

    fs::create_directories(a.out_dir);
    std::vector<VariantResult> results;
    Manifest m = base;
    m.config = config_json(cfg);
    m.inputs = {{"cache", a.cache}, {"embeddings", a.embeddings}};
    for (const auto& [name, variant] : ablation_variants(cfg)) {
        r.log("variant " + name);
        std::string file = name;
        std::replace(file.begin(), file.end(), ' ', '_');
        std::replace(file.begin(), file.end(), '/', '_');
        auto result = run_variant(name, variant, data, eval, a.out_dir + "/" + file + "_log.jsonl");
        result.training.best.save(a.out_dir + "/" + file + ".ckpt");
        m.outputs[name] = a.out_dir + "/" + file + ".ckpt";
        results.push_back(std::move(result));
    }
    const auto& reference = results.front().report;
    json j = {{"variants", ablation_json(results)},
              {"lead", reference.row("LEAD-" + std::to_string(eval.k)).r1.mean},
              {"oracle", reference.row("ORACLE").r1.mean},
              {"documents", reference.documents},
              {"k", eval.k}};
    write_file(a.out_dir + "/ablation.json", j.dump(2) + "\n");
    write_file(a.out_dir + "/ablation.txt", ablation_table(results));
    m.outputs["table"] = a.out_dir + "/ablation.txt";
    m.outputs["results"] = a.out_dir + "/ablation.json";
    m.write(a.out_dir);
    r.out() << ablation_table(results);
}

struct SynthArgs {
    std::string out_dir;
    std::size_t train = 2000;
    std::size_t val = 200;
    std::size_t test = 500;
    std::uint64_t seed = 1;
};

void synth_command(Runner& r, const SynthArgs& a, const Manifest& base) {
    SynthOptions opts;
    opts.seed = a.seed;
    write_synthetic_corpus(a.out_dir, {a.train, a.val, a.test}, opts);
    Manifest m = base;
    m.extra = {{"seed", a.seed}};
    m.outputs = {{"train", a.out_dir + "/train.txt"},
                 {"val", a.out_dir + "/val.txt"},
                 {"test", a.out_dir + "/test.txt"},
                 {"vectors", a.out_dir + "/vectors.txt"}};
    m.write(a.out_dir);
    r.log("wrote synthetic corpus to " + a.out_dir);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Extractive summarization of long section-structured documents", "haesum"};
    app.require_subcommand(1);
    app.set_version_flag("--version", version);

    PreprocessArgs pre;
    auto* pre_cmd = app.add_subcommand("preprocess", "tokenize, truncate and cache a corpus; build vocabulary and idf");
    pre_cmd->add_option("--data", pre.data, "record file or directory with <split>.txt")->required();
    pre_cmd->add_option("--cache", pre.cache, "cache directory")->envname("HAESUM_CACHE_DIR");
    pre_cmd->add_option("--splits", pre.splits, "comma-separated splits")->capture_default_str();
    pre_cmd->add_option("--limit", pre.max_docs, "keep only the first N documents per split");
    pre_cmd->add_option("--workers", pre.workers, "preprocessing threads")->check(CLI::PositiveNumber);
    pre.flags.attach(pre_cmd);

    LabelArgs lab;
    auto* lab_cmd = app.add_subcommand("label", "add greedy ROUGE oracle labels to a cache");
    lab_cmd->add_option("--cache", lab.cache, "cache directory")->envname("HAESUM_CACHE_DIR");
    lab_cmd->add_option("--workers", lab.workers, "labeling threads")->check(CLI::PositiveNumber);
    lab.flags.attach(lab_cmd);

    StatsArgs st;
    auto* st_cmd = app.add_subcommand("stats", "corpus statistics before truncation");
    st_cmd->add_option("--data", st.data, "record file or directory with <split>.txt")->required();
    st_cmd->add_option("--split", st.split, "train, val or test");
    st_cmd->add_option("--out", st.out_dir, "write stats.json here");
    st_cmd->add_option("--limit", st.max_docs, "only the first N documents");

    TrainArgs tr;
    auto* tr_cmd = app.add_subcommand("train", "train a model on a labeled cache");
    tr_cmd->add_option("--cache", tr.cache, "cache directory")->envname("HAESUM_CACHE_DIR");
    tr_cmd->add_option("--out", tr.out_dir, "run directory")->required();
    tr_cmd->add_option("--embeddings", tr.embeddings, "word vectors in text format")->check(CLI::ExistingFile);
    tr_cmd->add_option("--limit-train", tr.max_train, "only the first N training documents");
    tr_cmd->add_option("--limit-val", tr.max_val, "only the first N validation documents");
    tr_cmd->add_option("--workers", tr.workers, "graph-building threads")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--val-rouge", tr.val_rouge, "log validation ROUGE-1 each epoch");
    tr.flags.attach(tr_cmd);

    EvalArgs ev;
    auto* ev_cmd = app.add_subcommand("eval", "ROUGE report with LEAD-k and ORACLE rows");
    EvalArgs sm;
    auto* sm_cmd = app.add_subcommand("summarize", "write extractive summaries");
    for (auto [cmd, a] : {std::pair{ev_cmd, &ev}, std::pair{sm_cmd, &sm}}) {
        cmd->add_option("--checkpoint", a->checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
        cmd->add_option("--cache", a->cache, "cache directory")->envname("HAESUM_CACHE_DIR");
        cmd->add_option("--out", a->out_dir, "output directory")->required();
        cmd->add_option("--split", a->split, "train, val or test");
        cmd->add_option("--k", a->k, "sentences per summary (default: checkpoint top_k)");
        cmd->add_flag("--trigram-blocking", a->trigram_blocking, "skip candidates repeating a selected trigram");
        cmd->add_option("--limit", a->max_docs, "only the first N documents");
        cmd->add_option("--workers", a->workers, "graph-building threads")->check(CLI::PositiveNumber);
    }
    ev_cmd->add_flag("--stem", ev.stem, "Porter-stem tokens before ROUGE");
    ev_cmd->add_option("--bootstrap", ev.bootstrap, "bootstrap resamples for confidence intervals");

    GradcheckArgs gc;
    auto* gc_cmd = app.add_subcommand("gradcheck", "finite-difference checks of every layer and the full model");
    gc_cmd->add_option("--seed", gc.seed, "seed for the random instances");
    gc_cmd->add_option("--out", gc.out_dir, "write gradcheck.json here");

    AblateArgs ab;
    auto* ab_cmd = app.add_subcommand("ablate", "train and compare full, w/o hetero, w/o hyper and parallel variants");
    ab_cmd->add_option("--cache", ab.cache, "cache directory")->envname("HAESUM_CACHE_DIR");
    ab_cmd->add_option("--out", ab.out_dir, "output directory")->required();
    ab_cmd->add_option("--embeddings", ab.embeddings, "word vectors in text format")->check(CLI::ExistingFile);
    ab_cmd->add_option("--limit-train", ab.max_train, "only the first N training documents");
    ab_cmd->add_option("--limit-val", ab.max_val, "only the first N validation documents");
    ab_cmd->add_option("--limit-test", ab.max_test, "only the first N test documents");
    ab_cmd->add_option("--k", ab.k, "sentences per summary (default: top_k)");
    ab_cmd->add_option("--workers", ab.workers, "graph-building threads")->check(CLI::PositiveNumber);
    ab.flags.attach(ab_cmd);

    SynthArgs sy;
    auto* sy_cmd = app.add_subcommand("synth", "generate a synthetic corpus in the public record format");
    sy_cmd->add_option("--out", sy.out_dir, "output directory")->required();
    sy_cmd->add_option("--train", sy.train, "training documents");
    sy_cmd->add_option("--val", sy.val, "validation documents");
    sy_cmd->add_option("--test", sy.test, "test documents");
    sy_cmd->add_option("--seed", sy.seed, "generator seed");

    std::vector<const char*> argv{"haesum"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::Success& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        err << "error: cli: " << e.what() << "\n\n";
        CLI::App* shown = &app;
        for (auto* sub : app.get_subcommands()) shown = sub;
        err << shown->help();
        return 2;
    }

    Runner runner(out, err);
    Manifest base;
    base.args = args;
    try {
        auto* sub = app.get_subcommands().front();
        base.command = sub->get_name();
        if (sub == pre_cmd) preprocess(runner, pre, base);
        else if (sub == lab_cmd) label(runner, lab, base);
        else if (sub == st_cmd) stats(runner, st, base);
        else if (sub == tr_cmd) train_command(runner, tr, base);
        else if (sub == ev_cmd) eval_command(runner, ev, base);
        else if (sub == sm_cmd) summarize_command(runner, sm, base);
        else if (sub == gc_cmd) gradcheck_command(runner, gc, base);
        else if (sub == ab_cmd) ablate_command(runner, ab, base);
        else if (sub == sy_cmd) synth_command(runner, sy, base);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: cli: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace haesum::cli
