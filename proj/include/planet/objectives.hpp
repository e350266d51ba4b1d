#pragma once

#include <array>

#include "planet/autodiff.hpp"
#include "planet/tensor.hpp"

namespace planet::obj {

struct LossConfig {
    double lambda = 1.0;
    std::array<double, 3> branch_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // color, structure, texture
    bool symmetric_itc = false;
    bool learn_tau_p = true;

    /// Throws ConfigError on a negative weight.
    void validate() const;
};

// Plain evaluation on finished embeddings.

/// -(1/N) sum_i log softmax_j(sim(i, j) / tau)[i]; DomainError unless tau > 0.
double info_nce(const Tensor& sim, double tau);

/// Rows of V and T are compared by cosine similarity. Image-anchored unless
/// `symmetric`, which averages with the text-anchored direction.
double itc_loss(const Tensor& V, const Tensor& T, double tau, bool symmetric = false);

struct PhyTerms {
    std::array<double, 3> branch{};  // unweighted per-branch InfoNCE
    double total = 0.0;              // sum_k w_k * branch[k]
};
/// DegenerateInputError on a zero-norm descriptor row.
PhyTerms phy_loss(const std::array<Tensor, 3>& descriptors, const std::array<Tensor, 3>& signatures, double tau_p,
                  const std::array<double, 3>& weights);

double total_loss(double itc, double phy, double lambda);

// Recording versions. Temperatures enter as log-values.

ad::Var itc_loss(const ad::Var& V, const ad::Var& T, const ad::Var& log_tau, bool symmetric = false);

struct PhyGraph {
    std::array<ad::Var, 3> branch;
    ad::Var total;
};
/// Signatures are recorded as constants and never receive a gradient.
PhyGraph phy_loss(const std::array<ad::Var, 3>& descriptors, const std::array<Tensor, 3>& signatures,
                  const ad::Var& log_tau_p, const std::array<double, 3>& weights);

ad::Var total_loss(const ad::Var& itc, const ad::Var& phy, double lambda);

}  // namespace planet::obj
