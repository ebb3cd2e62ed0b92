#include "haesum/train.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

namespace haesum {

AdamW::AdamW(const ParamStore& params, double lr, double weight_decay, double beta1, double beta2, double eps)
    : lr_(lr), weight_decay_(weight_decay), beta1_(beta1), beta2_(beta2), eps_(eps) {
    state_.m.resize(static_cast<std::size_t>(params.size()));
    state_.v.resize(static_cast<std::size_t>(params.size()));
}

void AdamW::step(ParamStore& params, const Gradients& grads) {
    ++state_.step;
    const double t = static_cast<double>(state_.step);
    const double c1 = 1.0 - std::pow(beta1_, t);
    const double c2 = 1.0 - std::pow(beta2_, t);
    for (int slot = 0; slot < params.size(); ++slot) {
        Parameter& p = params[slot];
        const auto s = static_cast<std::size_t>(slot);
        if (!p.trainable || s >= grads.size() || grads[s].size() == 0) continue;
        Matrix& m = state_.m[s];
        Matrix& v = state_.v[s];
        if (m.size() == 0) {
            m = Matrix::Zero(p.value.rows(), p.value.cols());
            v = Matrix::Zero(p.value.rows(), p.value.cols());
        }
        const Matrix& g = grads[s];
        m = beta1_ * m + (1.0 - beta1_) * g;
        v = beta2_ * v + (1.0 - beta2_) * g.cwiseProduct(g);
        const Matrix update = (m / c1).array() / ((v / c2).array().sqrt() + eps_);
        p.value -= lr_ * (update + weight_decay_ * p.value);
    }
}

bool EarlyStopping::update(int epoch, double value) {
    if (!seen_ || value < best_value_) {
        seen_ = true;
        best_value_ = value;
        best_epoch_ = epoch;
        bad_epochs_ = 0;
        return true;
    }
    ++bad_epochs_;
    return false;
}

namespace {

constexpr char kMagic[8] = {'H', 'A', 'E', 'S', 'C', 'K', 'P', 'T'};

class Writer {
public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw Error("model_train", "cannot write checkpoint " + path);
    }
    template <typename T>
    void pod(const T& v) { out_.write(reinterpret_cast<const char*>(&v), sizeof(T)); }
    void str(const std::string& s) {
        pod<std::uint64_t>(s.size());
        out_.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    void matrix(const Matrix& m) {
        pod<std::int64_t>(m.rows());
        pod<std::int64_t>(m.cols());
        out_.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    }
    void raw(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
    void finish() {
        out_.flush();
        if (!out_) throw Error("model_train", "checkpoint write failed");
    }

private:
    std::ofstream out_;
};

class Reader {
public:
    explicit Reader(const std::string& path) : in_(path, std::ios::binary), path_(path) {
        if (!in_) throw Error("model_train", "cannot open checkpoint " + path);
    }
    template <typename T>
    T pod() {
        T v{};
        in_.read(reinterpret_cast<char*>(&v), sizeof(T));
        check();
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint64_t>();
        if (n > (1ULL << 32)) throw Error("model_train", "corrupt checkpoint " + path_);
        std::string s(n, '\0');
        in_.read(s.data(), static_cast<std::streamsize>(n));
        check();
        return s;
    }
    Matrix matrix() {
        const auto r = pod<std::int64_t>();
        const auto c = pod<std::int64_t>();
        if (r < 0 || c < 0 || r * c > (1LL << 31)) throw Error("model_train", "corrupt checkpoint " + path_);
        Matrix m(r, c);
        in_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
        check();
        return m;
    }
    void raw(char* data, std::size_t n) {
        in_.read(data, static_cast<std::streamsize>(n));
        check();
    }

private:
    void check() {
        if (!in_) throw Error("model_train", "truncated checkpoint " + path_);
    }
    std::ifstream in_;
    std::string path_;
};

std::string rng_to_string(const std::mt19937_64& rng) {
    std::ostringstream out;
    out << rng;
    return out.str();
}

}  // namespace

Checkpoint Checkpoint::capture(const Model& model, const AdamW* optimizer, int epoch, double val_loss,
                               double val_metric, const std::mt19937_64& rng) {
    Checkpoint c;
    c.config = model.config();
    c.vocab_size = static_cast<std::uint64_t>(model.params()[model.embedding_slot()].value.rows());
    c.epoch = epoch;
    c.val_loss = val_loss;
    c.val_metric = val_metric;
    c.rng_state = rng_to_string(rng);
    c.params = model.params().all();
    if (optimizer) c.optimizer = optimizer->state();
    return c;
}

void Checkpoint::save(const std::string& path) const {
    Writer w(path);
    w.raw(kMagic, sizeof(kMagic));
    w.pod<std::uint32_t>(format_version);
    w.str(config.to_kv());
    w.pod<std::uint64_t>(vocab_size);
    w.pod<std::int32_t>(epoch);
    w.pod<double>(val_loss);
    w.pod<double>(val_metric);
    w.str(rng_state);
    w.pod<std::uint64_t>(params.size());
    for (const auto& p : params) {
        w.str(p.name);
        w.pod<std::uint8_t>(p.trainable ? 1 : 0);
        w.matrix(p.value);
    }
    w.pod<std::int64_t>(optimizer.step);
    w.pod<std::uint64_t>(optimizer.m.size());
    for (std::size_t i = 0; i < optimizer.m.size(); ++i) {
        w.matrix(optimizer.m[i]);
        w.matrix(optimizer.v[i]);
    }
    w.raw(kMagic, sizeof(kMagic));
    w.finish();
}

Checkpoint Checkpoint::load(const std::string& path) {
    Reader r(path);
    char magic[sizeof(kMagic)];
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error("model_train", path + " is not a checkpoint");
    const auto version = r.pod<std::uint32_t>();
    if (version != format_version) {
        throw Error("model_train", "checkpoint format version " + std::to_string(version) + " is not supported");
    }
    Checkpoint c;
    c.config = ModelConfig::from_kv(r.str());
    c.vocab_size = r.pod<std::uint64_t>();
    c.epoch = r.pod<std::int32_t>();
    c.val_loss = r.pod<double>();
    c.val_metric = r.pod<double>();
    c.rng_state = r.str();
    const auto count = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < count; ++i) {
        Parameter p;
        p.name = r.str();
        p.trainable = r.pod<std::uint8_t>() != 0;
        p.value = r.matrix();
        c.params.push_back(std::move(p));
    }
    c.optimizer.step = r.pod<std::int64_t>();
    const auto slots = r.pod<std::uint64_t>();
    for (std::uint64_t i = 0; i < slots; ++i) {
        c.optimizer.m.push_back(r.matrix());
        c.optimizer.v.push_back(r.matrix());
    }
    r.raw(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw Error("model_train", "corrupt checkpoint trailer");
    return c;
}

Model Checkpoint::restore() const {
    Model model(config, static_cast<std::size_t>(vocab_size));
    auto& store = model.params();
    if (static_cast<std::size_t>(store.size()) != params.size()) {
        throw Error("model_train", "checkpoint has " + std::to_string(params.size()) + " tensors, model expects " +
                                       std::to_string(store.size()));
    }
    for (int i = 0; i < store.size(); ++i) {
        const auto& saved = params[static_cast<std::size_t>(i)];
        Parameter& p = store[i];
        if (p.name != saved.name || p.value.rows() != saved.value.rows() || p.value.cols() != saved.value.cols()) {
            throw Error("model_train", "checkpoint tensor '" + saved.name + "' does not match the model");
        }
        p.value = saved.value;
        p.trainable = saved.trainable;
    }
    return model;
}

std::uint64_t step_seed(std::uint64_t seed, int epoch, std::size_t position) {
    // splitmix64 over the packed inputs
    std::uint64_t z = seed ^ (static_cast<std::uint64_t>(epoch) << 40) ^ static_cast<std::uint64_t>(position);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double mean_loss(const Model& model, const std::vector<DocumentBundle>& docs) {
    if (docs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& d : docs) total += model.loss(d);
    return total / static_cast<double>(docs.size());
}

namespace {

[[noreturn]] void abort_non_finite(const Model& model, int epoch, std::size_t batch, const std::string& doc_id) {
    std::ostringstream msg;
    msg << "non-finite loss at epoch " << epoch << ", batch " << batch << " (document " << doc_id
        << "); parameter norms:";
    for (const auto& p : model.params().all()) msg << ' ' << p.name << '=' << p.value.norm();
    throw Error("model_train", msg.str());
}

}  // namespace

TrainResult train(Model& model, const std::vector<DocumentBundle>& train_set, const std::vector<DocumentBundle>& val_set,
                  const TrainOptions& options) {
    const ModelConfig& cfg = model.config();
    if (train_set.empty()) throw Error("model_train", "training set is empty");
    for (const auto& d : train_set) {
        if (d.labels.size() != static_cast<std::size_t>(d.sentence_count())) {
            throw Error("model_train", "training document " + d.id + " has no oracle labels");
        }
    }
    const bool by_metric = cfg.select_by == "rouge";
    if (by_metric && !options.val_metric) throw Error("model_train", "select_by=rouge needs a validation metric");

    std::ofstream log;
    if (!options.log_path.empty()) {
        log.open(options.log_path);
        if (!log) throw Error("model_train", "cannot write training log " + options.log_path);
    }

    AdamW optimizer(model.params(), cfg.lr, cfg.weight_decay);
    EarlyStopping stopper(cfg.patience);
    std::mt19937_64 order_rng(cfg.seed);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    TrainResult result;
    double best_metric = -1.0;
    bool have_best = false;
    const int np = model.params().size();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto start = std::chrono::steady_clock::now();
        std::shuffle(order.begin(), order.end(), order_rng);

        double total = 0.0;
        Gradients accum(static_cast<std::size_t>(np));
        int pending = 0;
        auto flush = [&]() {
            if (pending == 0) return;
            if (pending > 1) {
                for (auto& g : accum) {
                    if (g.size() > 0) g /= static_cast<double>(pending);
                }
            }
            optimizer.step(model.params(), accum);
            for (auto& g : accum) g.resize(0, 0);
            pending = 0;
        };

        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            const auto& doc = train_set[order[pos]];
            Gradients grads;
            const double loss = model.loss_and_gradients(doc, grads, step_seed(cfg.seed, epoch, pos));
            if (!std::isfinite(loss)) abort_non_finite(model, epoch, pos, doc.id);
            total += loss;
            for (std::size_t s = 0; s < grads.size(); ++s) {
                if (grads[s].size() == 0) continue;
                if (accum[s].size() == 0) accum[s] = grads[s];
                else accum[s] += grads[s];
            }
            if (++pending == cfg.accumulate) flush();
        }
        flush();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = total / static_cast<double>(train_set.size());
        rec.val_loss = val_set.empty() ? rec.train_loss : mean_loss(model, val_set);
        if (!std::isfinite(rec.val_loss)) abort_non_finite(model, epoch, order.size(), "<validation>");
        if (options.val_metric) rec.val_metric = options.val_metric(model);
        rec.improved = stopper.update(epoch, rec.val_loss);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

        const bool select = by_metric ? (!have_best || rec.val_metric > best_metric) : rec.improved;
        if (select) {
            result.best = Checkpoint::capture(model, &optimizer, epoch, rec.val_loss, rec.val_metric, order_rng);
            best_metric = rec.val_metric;
            have_best = true;
        }
        result.history.push_back(rec);

        if (log) {
            nlohmann::json j = {{"epoch", rec.epoch},         {"train_loss", rec.train_loss},
                                {"val_loss", rec.val_loss},   {"val_rouge1", rec.val_metric},
                                {"improved", rec.improved},   {"seconds", rec.seconds}};
            log << j.dump() << '\n';
            log.flush();
        }
        if (options.on_epoch) options.on_epoch(rec);

        const bool target_met = options.stop_when && options.stop_when(model, rec);
        if (stopper.should_stop() || target_met) {
            result.early_stopped = !target_met;
            result.last = Checkpoint::capture(model, &optimizer, epoch, rec.val_loss, rec.val_metric, order_rng);
            return result;
        }
    }
    const auto& last = result.history.back();
    result.last = Checkpoint::capture(model, &optimizer, last.epoch, last.val_loss, last.val_metric, order_rng);
    return result;
}

}  // namespace haesum
