#pragma once

#include "haesum/autograd.hpp"

#include <random>
#include <string>
#include <vector>

namespace haesum {

struct Parameter {
    std::string name;
    Matrix value;
    bool trainable = true;
};

// Ordered collection of named tensors; the slot index is the stable handle.
class ParamStore {
public:
    int add(std::string name, Matrix value, bool trainable = true);

    Parameter& operator[](int slot) { return params_.at(static_cast<std::size_t>(slot)); }
    const Parameter& operator[](int slot) const { return params_.at(static_cast<std::size_t>(slot)); }
    int size() const { return static_cast<int>(params_.size()); }
    int find(const std::string& name) const;

    std::vector<Parameter>& all() { return params_; }
    const std::vector<Parameter>& all() const { return params_; }

    std::size_t scalar_count(bool trainable_only = true) const;

private:
    std::vector<Parameter> params_;
};

using Gradients = std::vector<Matrix>;  // aligned with ParamStore slots; empty = no gradient

Matrix xavier_uniform(Index rows, Index cols, std::mt19937_64& rng);

// Binds parameters to a tape once per forward pass.
class Context {
public:
    Context(ag::Tape& tape, const ParamStore& params) : tape_(tape), params_(params), bound_(params.size()) {}

    ag::Var operator()(int slot);
    ag::Tape& tape() { return tape_; }
    const ParamStore& params() const { return params_; }

    Gradients gradients() const;

private:
    ag::Tape& tape_;
    const ParamStore& params_;
    std::vector<ag::Var> bound_;
};

}  // namespace haesum
