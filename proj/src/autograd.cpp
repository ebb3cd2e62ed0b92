#include "haesum/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace haesum::ag {

namespace {

void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error("autograd", std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
    }
}

}  // namespace

Var Tape::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::parameter(const Matrix& value, int slot, bool trainable) {
    Node n;
    n.external = &value;
    n.slot = slot;
    n.needs_grad = trainable;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::record(Matrix value, std::span<const Var> parents, Backward backward) {
    Node n;
    n.value = std::move(value);
    for (const auto& p : parents) {
        if (nodes_[p.id()].needs_grad) {
            n.needs_grad = true;
            break;
        }
    }
    if (n.needs_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

const Matrix& Tape::value(int id) const {
    const Node& n = nodes_[id];
    return n.external ? *n.external : n.value;
}

Matrix& Tape::grad_buffer(const Var& v) {
    Node& n = nodes_[v.id()];
    if (n.grad.size() == 0) {
        const Matrix& val = value(v.id());
        n.grad = Matrix::Zero(val.rows(), val.cols());
    }
    return n.grad;
}

void Tape::accumulate(const Var& v, const Matrix& contribution) {
    Node& n = nodes_[v.id()];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
        n.grad = contribution;
    } else {
        n.grad += contribution;
    }
}

void Tape::backward(const Var& loss) {
    if (loss.rows() != 1 || loss.cols() != 1) throw Error("autograd", "backward() expects a scalar");
    Node& root = nodes_[loss.id()];
    if (!root.needs_grad) return;
    root.grad = Matrix::Ones(1, 1);
    for (int id = loss.id(); id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.backward || n.grad.size() == 0) continue;
        n.backward(*this, n.grad);
    }
}

const Matrix* Tape::grad(const Var& v) const {
    const Node& n = nodes_[v.id()];
    return n.grad.size() == 0 ? nullptr : &n.grad;
}

Var matmul(const Var& a, const Var& b) {
    if (a.cols() != b.rows()) {
        throw Error("autograd", "matmul: inner dimensions " + std::to_string(a.cols()) + " and " +
                                    std::to_string(b.rows()));
    }
    Matrix out = a.value() * b.value();
    const Var parents[] = {a, b};
    return a.tape().record(std::move(out), parents, [a, b](Tape& t, const Matrix& g) {
        if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
        if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
    });
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    const Var parents[] = {a, b};
    return a.tape().record(a.value() + b.value(), parents, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    const Var parents[] = {a, b};
    return a.tape().record(a.value() - b.value(), parents, [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        if (t.needs_grad(b)) t.accumulate(b, -g);
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    const Var parents[] = {a, b};
    return a.tape().record(a.value().cwiseProduct(b.value()), parents, [a, b](Tape& t, const Matrix& g) {
        if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
        if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
    });
}

Var scale(const Var& a, double s) {
    const Var parents[] = {a};
    return a.tape().record(a.value() * s, parents, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, g * s); });
}

Var add_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw Error("autograd", "add_row: bias shape mismatch");
    Matrix out = a.value().rowwise() + row.value().row(0);
    const Var parents[] = {a, row};
    return a.tape().record(std::move(out), parents, [a, row](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
    });
}

Var mul_row(const Var& a, const Var& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw Error("autograd", "mul_row: shape mismatch");
    Matrix out = (a.value().array().rowwise() * row.value().row(0).array()).matrix();
    const Var parents[] = {a, row};
    return a.tape().record(std::move(out), parents, [a, row](Tape& t, const Matrix& g) {
        if (t.needs_grad(a)) t.accumulate(a, (g.array().rowwise() * row.value().row(0).array()).matrix());
        if (t.needs_grad(row)) t.accumulate(row, g.cwiseProduct(a.value()).colwise().sum());
    });
}

Var leaky_relu(const Var& a, double slope) {
    Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a, slope](Tape& t, const Matrix& g) {
        Matrix d = a.value().unaryExpr([slope](double x) { return x > 0.0 ? 1.0 : slope; });
        t.accumulate(a, g.cwiseProduct(d));
    });
}

Var relu(const Var& a) { return leaky_relu(a, 0.0); }

Var elu(const Var& a) {
    Matrix out = a.value().unaryExpr([](double x) { return x > 0.0 ? x : std::expm1(x); });
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a](Tape& t, const Matrix& g) {
        Matrix d = a.value().unaryExpr([](double x) { return x > 0.0 ? 1.0 : std::exp(x); });
        t.accumulate(a, g.cwiseProduct(d));
    });
}

Var sigmoid(const Var& a) {
    Matrix out = a.value().unaryExpr([](double x) {
        return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    });
    const Var parents[] = {a};
    Tape& tape = a.tape();
    const int self = static_cast<int>(tape.size());
    return tape.record(std::move(out), parents, [a, self](Tape& t, const Matrix& g) {
        const Matrix& y = t.value(self);
        t.accumulate(a, g.cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
    });
}

Var tanh(const Var& a) {
    Matrix out = a.value().array().tanh().matrix();
    const Var parents[] = {a};
    Tape& tape = a.tape();
    const int self = static_cast<int>(tape.size());
    return tape.record(std::move(out), parents, [a, self](Tape& t, const Matrix& g) {
        const Matrix& y = t.value(self);
        t.accumulate(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw Error("autograd", "concat_cols: no inputs");
    const Index rows = parts[0].rows();
    Index cols = 0;
    for (const auto& p : parts) {
        if (p.rows() != rows) throw Error("autograd", "concat_cols: row mismatch");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    Index at = 0;
    for (const auto& p : parts) {
        out.middleCols(at, p.cols()) = p.value();
        at += p.cols();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return parts[0].tape().record(std::move(out), parts, [inputs](Tape& t, const Matrix& g) {
        Index offset = 0;
        for (const auto& p : inputs) {
            if (t.needs_grad(p)) t.accumulate(p, g.middleCols(offset, p.cols()));
            offset += p.cols();
        }
    });
}

Var slice_cols(const Var& a, Index start, Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw Error("autograd", "slice_cols: out of range");
    const Var parents[] = {a};
    return a.tape().record(a.value().middleCols(start, count), parents,
                           [a, start, count](Tape& t, const Matrix& g) {
                               if (t.needs_grad(a)) t.grad_buffer(a).middleCols(start, count) += g;
                           });
}

Var gather_rows(const Var& a, std::span<const int> index) {
    const Matrix& src = a.value();
    Matrix out(static_cast<Index>(index.size()), src.cols());
    for (std::size_t r = 0; r < index.size(); ++r) {
        const int i = index[r];
        if (i < 0) {
            out.row(static_cast<Index>(r)).setZero();
        } else {
            if (i >= src.rows()) throw Error("autograd", "gather_rows: index out of range");
            out.row(static_cast<Index>(r)) = src.row(i);
        }
    }
    std::vector<int> idx(index.begin(), index.end());
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a, idx = std::move(idx)](Tape& t, const Matrix& g) {
        if (!t.needs_grad(a)) return;
        Matrix& ga = t.grad_buffer(a);
        for (std::size_t r = 0; r < idx.size(); ++r) {
            if (idx[r] >= 0) ga.row(idx[r]) += g.row(static_cast<Index>(r));
        }
    });
}

Var scatter_add_rows(const Var& a, std::span<const int> index, Index out_rows) {
    if (static_cast<Index>(index.size()) != a.rows()) throw Error("autograd", "scatter_add_rows: index size");
    const Matrix& src = a.value();
    Matrix out = Matrix::Zero(out_rows, src.cols());
    for (std::size_t r = 0; r < index.size(); ++r) {
        if (index[r] < 0 || index[r] >= out_rows) throw Error("autograd", "scatter_add_rows: index out of range");
        out.row(index[r]) += src.row(static_cast<Index>(r));
    }
    std::vector<int> idx(index.begin(), index.end());
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a, idx = std::move(idx)](Tape& t, const Matrix& g) {
        Matrix ga(static_cast<Index>(idx.size()), g.cols());
        for (std::size_t r = 0; r < idx.size(); ++r) ga.row(static_cast<Index>(r)) = g.row(idx[r]);
        t.accumulate(a, ga);
    });
}

Var segment_softmax(const Var& a, std::span<const int> group, Index groups) {
    const Matrix& x = a.value();
    if (static_cast<Index>(group.size()) != x.rows()) throw Error("autograd", "segment_softmax: group size");
    const Index cols = x.cols();
    Matrix peak = Matrix::Constant(groups, cols, -std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < group.size(); ++r) {
        peak.row(group[r]) = peak.row(group[r]).cwiseMax(x.row(static_cast<Index>(r)));
    }
    Matrix out(x.rows(), cols);
    Matrix denom = Matrix::Zero(groups, cols);
    for (std::size_t r = 0; r < group.size(); ++r) {
        const auto ri = static_cast<Index>(r);
        out.row(ri) = (x.row(ri) - peak.row(group[r])).array().exp().matrix();
        denom.row(group[r]) += out.row(ri);
    }
    for (std::size_t r = 0; r < group.size(); ++r) {
        const auto ri = static_cast<Index>(r);
        out.row(ri) = out.row(ri).cwiseQuotient(denom.row(group[r]));
    }
    std::vector<int> grp(group.begin(), group.end());
    const Var parents[] = {a};
    Tape& tape = a.tape();
    const int self = static_cast<int>(tape.size());
    return tape.record(std::move(out), parents,
                       [a, self, groups, grp = std::move(grp)](Tape& t, const Matrix& g) {
                           const Matrix& y = t.value(self);
                           Matrix dot = Matrix::Zero(groups, y.cols());
                           for (std::size_t r = 0; r < grp.size(); ++r) {
                               const auto ri = static_cast<Index>(r);
                               dot.row(grp[r]) += y.row(ri).cwiseProduct(g.row(ri));
                           }
                           Matrix ga(y.rows(), y.cols());
                           for (std::size_t r = 0; r < grp.size(); ++r) {
                               const auto ri = static_cast<Index>(r);
                               ga.row(ri) = y.row(ri).cwiseProduct(g.row(ri) - dot.row(grp[r]));
                           }
                           t.accumulate(a, ga);
                       });
}

Var segment_max(const Var& a, std::span<const int> group, Index groups) {
    const Matrix& x = a.value();
    if (static_cast<Index>(group.size()) != x.rows()) throw Error("autograd", "segment_max: group size");
    const Index cols = x.cols();
    Matrix out = Matrix::Constant(groups, cols, -std::numeric_limits<double>::infinity());
    std::vector<int> arg(static_cast<std::size_t>(groups * cols), -1);
    for (std::size_t r = 0; r < group.size(); ++r) {
        for (Index c = 0; c < cols; ++c) {
            const double v = x(static_cast<Index>(r), c);
            if (v > out(group[r], c)) {
                out(group[r], c) = v;
                arg[static_cast<std::size_t>(group[r] * cols + c)] = static_cast<int>(r);
            }
        }
    }
    for (int g : arg) {
        if (g < 0) throw Error("autograd", "segment_max: empty group");
    }
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a, cols, arg = std::move(arg)](Tape& t, const Matrix& g) {
        if (!t.needs_grad(a)) return;
        Matrix& ga = t.grad_buffer(a);
        for (std::size_t k = 0; k < arg.size(); ++k) {
            const auto grp = static_cast<Index>(k) / cols;
            const auto c = static_cast<Index>(k) % cols;
            ga(arg[k], c) += g(grp, c);
        }
    });
}

Var block_sum(const Var& a, Index blocks) {
    const Matrix& x = a.value();
    if (blocks <= 0 || x.cols() % blocks != 0) throw Error("autograd", "block_sum: width not divisible");
    const Index width = x.cols() / blocks;
    Matrix out(x.rows(), blocks);
    for (Index b = 0; b < blocks; ++b) out.col(b) = x.middleCols(b * width, width).rowwise().sum();
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a, blocks, width](Tape& t, const Matrix& g) {
        Matrix ga(g.rows(), blocks * width);
        for (Index b = 0; b < blocks; ++b) ga.middleCols(b * width, width) = g.col(b).replicate(1, width);
        t.accumulate(a, ga);
    });
}

Var block_expand(const Var& a, Index width) {
    const Matrix& x = a.value();
    const Index blocks = x.cols();
    Matrix out(x.rows(), blocks * width);
    for (Index b = 0; b < blocks; ++b) out.middleCols(b * width, width) = x.col(b).replicate(1, width);
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a, blocks, width](Tape& t, const Matrix& g) {
        Matrix ga(g.rows(), blocks);
        for (Index b = 0; b < blocks; ++b) ga.col(b) = g.middleCols(b * width, width).rowwise().sum();
        t.accumulate(a, ga);
    });
}

Var mul_rows(const Var& a, std::span<const double> weights) {
    if (static_cast<Index>(weights.size()) != a.rows()) throw Error("autograd", "mul_rows: size mismatch");
    Eigen::Map<const Eigen::VectorXd> w(weights.data(), static_cast<Index>(weights.size()));
    Matrix out = w.asDiagonal() * a.value();
    std::vector<double> wv(weights.begin(), weights.end());
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a, wv = std::move(wv)](Tape& t, const Matrix& g) {
        Eigen::Map<const Eigen::VectorXd> w2(wv.data(), static_cast<Index>(wv.size()));
        t.accumulate(a, w2.asDiagonal() * g);
    });
}

Var mul_const(const Var& a, const Matrix& mask) {
    if (mask.rows() != a.rows() || mask.cols() != a.cols()) throw Error("autograd", "mul_const: shape mismatch");
    const Var parents[] = {a};
    return a.tape().record(a.value().cwiseProduct(mask), parents,
                           [a, mask](Tape& t, const Matrix& g) { t.accumulate(a, g.cwiseProduct(mask)); });
}

Var dropout(const Var& a) {
    Tape& t = a.tape();
    if (!t.training || t.dropout <= 0.0) return a;
    const double keep = 1.0 - t.dropout;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix mask(a.rows(), a.cols());
    for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = unit(t.rng) < keep ? 1.0 / keep : 0.0;
    return mul_const(a, mask);
}

Var layer_norm(const Var& a, const Var& gain, const Var& bias, double eps) {
    const Matrix& x = a.value();
    const Index n = x.cols();
    Matrix xhat(x.rows(), n);
    Eigen::VectorXd inv_std(x.rows());
    for (Index r = 0; r < x.rows(); ++r) {
        const double mean = x.row(r).mean();
        const double var = (x.row(r).array() - mean).square().mean();
        inv_std(r) = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (x.row(r).array() - mean) * inv_std(r);
    }
    Matrix out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
    out.rowwise() += bias.value().row(0);
    const Var parents[] = {a, gain, bias};
    return a.tape().record(std::move(out), parents, [a, gain, bias, xhat, inv_std, n](Tape& t, const Matrix& g) {
        if (t.needs_grad(gain)) t.accumulate(gain, g.cwiseProduct(xhat).colwise().sum());
        if (t.needs_grad(bias)) t.accumulate(bias, g.colwise().sum());
        if (t.needs_grad(a)) {
            Matrix gx = (g.array().rowwise() * gain.value().row(0).array()).matrix();
            Matrix ga(g.rows(), n);
            for (Index r = 0; r < g.rows(); ++r) {
                const double mean_g = gx.row(r).mean();
                const double mean_gx = gx.row(r).cwiseProduct(xhat.row(r)).mean();
                ga.row(r) = inv_std(r) * (gx.row(r).array() - mean_g - xhat.row(r).array() * mean_gx).matrix();
            }
            t.accumulate(a, ga);
        }
    });
}

Var bce_with_logits(const Var& logits, std::span<const double> labels) {
    const Matrix& z = logits.value();
    if (z.cols() != 1 || z.rows() != static_cast<Index>(labels.size())) {
        throw Error("autograd", "bce_with_logits: logits must be N x 1 matching labels");
    }
    const auto count = static_cast<double>(labels.size());
    double total = 0.0;
    for (Index i = 0; i < z.rows(); ++i) {
        const double x = z(i, 0);
        // log(1 + exp(-|x|)) + max(x, 0) - x*y
        total += std::max(x, 0.0) - x * labels[static_cast<std::size_t>(i)] + std::log1p(std::exp(-std::abs(x)));
    }
    Matrix out(1, 1);
    out(0, 0) = total / count;
    std::vector<double> y(labels.begin(), labels.end());
    const Var parents[] = {logits};
    return logits.tape().record(std::move(out), parents, [logits, y = std::move(y), count](Tape& t, const Matrix& g) {
        const Matrix& zz = logits.value();
        Matrix gz(zz.rows(), 1);
        for (Index i = 0; i < zz.rows(); ++i) {
            const double x = zz(i, 0);
            const double p = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
            gz(i, 0) = g(0, 0) * (p - y[static_cast<std::size_t>(i)]) / count;
        }
        t.accumulate(logits, gz);
    });
}

Var sum_all(const Var& a) {
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    const Var parents[] = {a};
    return a.tape().record(std::move(out), parents, [a](Tape& t, const Matrix& g) {
        t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
    });
}

}  // namespace haesum::ag
