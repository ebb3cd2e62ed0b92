#include "haesum/params.hpp"

#include <cmath>

namespace haesum {

int ParamStore::add(std::string name, Matrix value, bool trainable) {
    if (find(name) >= 0) throw Error("model_train", "duplicate parameter " + name);
    params_.push_back({std::move(name), std::move(value), trainable});
    return static_cast<int>(params_.size() - 1);
}

int ParamStore::find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

std::size_t ParamStore::scalar_count(bool trainable_only) const {
    std::size_t n = 0;
    for (const auto& p : params_) {
        if (!trainable_only || p.trainable) n += static_cast<std::size_t>(p.value.size());
    }
    return n;
}

Matrix xavier_uniform(Index rows, Index cols, std::mt19937_64& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
    return m;
}

ag::Var Context::operator()(int slot) {
    auto& v = bound_.at(static_cast<std::size_t>(slot));
    if (!v.valid()) {
        const Parameter& p = params_[slot];
        v = tape_.parameter(p.value, slot, p.trainable);
    }
    return v;
}

Gradients Context::gradients() const {
    Gradients grads(static_cast<std::size_t>(params_.size()));
    tape_.for_each_parameter_grad([&grads](int slot, const Matrix& g) {
        auto& dst = grads[static_cast<std::size_t>(slot)];
        if (dst.size() == 0) {
            dst = g;
        } else {
            dst += g;
        }
    });
    return grads;
}

}  // namespace haesum
