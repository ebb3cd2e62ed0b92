#pragma once

#include "haesum/graph.hpp"
#include "haesum/hegat.hpp"
#include "haesum/model.hpp"
#include "haesum/params.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace haesum {

// |a - n| / max(|a|, |n|, 1e-6)
double relative_error(double analytic, double numeric);

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    // Fraction of entries checked per tensor (at least one each).
    double fraction = 1.0;
    std::uint64_t seed = 0;
};

struct GradCheckResult {
    std::string suite;
    std::size_t checked = 0;
    std::size_t kinks = 0;  // entries judged by one-sided differences
    double max_rel_error = 0.0;
    std::string worst;  // "tensor[row,col]"
    double tolerance = 0.0;

    bool passed() const { return checked > 0 && max_rel_error < tolerance; }
};

// Compares reverse-mode gradients of `loss` with central differences over the
// trainable tensors of `store`. The loss is rebuilt on a fresh tape per probe.
// When the central difference straddles a non-differentiable point (the two
// one-sided differences disagree) the entry is compared against the closer
// one-sided difference instead.
GradCheckResult check_gradients(std::string suite, ParamStore& store,
                                const std::function<ag::Var(Context&)>& loss, const GradCheckOptions& options);

// Small random graphs for property and gradient tests.
struct TinyInstance {
    HeteroGraph graph;
    Hypergraph hyper;
    DirectedEdges to_words;
    DirectedEdges to_sentences;
};

TinyInstance random_instance(std::mt19937_64& rng, int max_sentences = 6, int max_words = 8, int num_bins = 10);

// A small document whose words repeat across sentences and sections.
Document tiny_document(std::mt19937_64& rng, int sentences = 6);

GradCheckResult gradcheck_hegat(std::uint64_t seed);
GradCheckResult gradcheck_hgsat(std::uint64_t seed);
GradCheckResult gradcheck_hgat(std::uint64_t seed);
// Default-size model, 1% of entries sampled.
GradCheckResult gradcheck_full(std::uint64_t seed);

std::vector<GradCheckResult> run_gradcheck_suites(std::uint64_t seed);

}  // namespace haesum
