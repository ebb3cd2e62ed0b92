#pragma once

#include "haesum/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace haesum {

struct AdamState {
    std::vector<Matrix> m;
    std::vector<Matrix> v;
    std::int64_t step = 0;
};

// Adam with decoupled weight decay: p -= lr * (m_hat / (sqrt(v_hat) + eps) + decay * p).
class AdamW {
public:
    AdamW(const ParamStore& params, double lr, double weight_decay, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8);

    // Parameters without a gradient (or frozen ones) are left untouched.
    void step(ParamStore& params, const Gradients& grads);

    AdamState& state() { return state_; }
    const AdamState& state() const { return state_; }
    double lr() const { return lr_; }

private:
    double lr_;
    double weight_decay_;
    double beta1_;
    double beta2_;
    double eps_;
    AdamState state_;
};

// Stops after `patience` consecutive epochs without a strict decrease.
class EarlyStopping {
public:
    explicit EarlyStopping(int patience) : patience_(patience) {}

    // Returns true when this epoch improved on the best value.
    bool update(int epoch, double value);
    bool should_stop() const { return bad_epochs_ >= patience_; }
    int best_epoch() const { return best_epoch_; }
    double best_value() const { return best_value_; }
    int bad_epochs() const { return bad_epochs_; }

private:
    int patience_;
    int best_epoch_ = 0;
    double best_value_ = 0.0;
    bool seen_ = false;
    int bad_epochs_ = 0;
};

struct Checkpoint {
    static constexpr std::uint32_t format_version = 1;

    ModelConfig config;
    std::uint64_t vocab_size = 0;
    int epoch = 0;
    double val_loss = 0.0;
    double val_metric = 0.0;
    std::string rng_state;
    std::vector<Parameter> params;
    AdamState optimizer;

    static Checkpoint capture(const Model& model, const AdamW* optimizer, int epoch, double val_loss,
                              double val_metric, const std::mt19937_64& rng);

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    Model restore() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_metric = 0.0;  // validation ROUGE-1 f1 when a metric is supplied
    double seconds = 0.0;
    bool improved = false;
};

struct TrainOptions {
    // Validation score where higher is better; used for logging and, with
    // select_by = "rouge", for checkpoint selection.
    std::function<double(const Model&)> val_metric;
    std::string log_path;  // line-delimited JSON, one record per epoch
    std::function<void(const EpochRecord&)> on_epoch;
    // Ends training after the current epoch when it returns true.
    std::function<bool(const Model&, const EpochRecord&)> stop_when;
};

struct TrainResult {
    Checkpoint best;
    Checkpoint last;
    std::vector<EpochRecord> history;
    bool early_stopped = false;
};

// Mean training-mode loss is reported per epoch; validation loss is computed
// with dropout off. Throws Error("model_train", ...) on a non-finite loss.
TrainResult train(Model& model, const std::vector<DocumentBundle>& train_set, const std::vector<DocumentBundle>& val_set,
                  const TrainOptions& options = {});

double mean_loss(const Model& model, const std::vector<DocumentBundle>& docs);

// Dropout seed for one training step; pure function of its inputs.
std::uint64_t step_seed(std::uint64_t seed, int epoch, std::size_t position);

}  // namespace haesum
