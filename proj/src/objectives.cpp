#include "planet/objectives.hpp"

#include <cmath>

#include "planet/errors.hpp"

namespace planet::obj {

void LossConfig::validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be a finite non-negative number");
    for (double w : branch_weights)
        if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("branch weights must be finite and non-negative");
}

double info_nce(const Tensor& sim, double tau) {
    if (!(tau > 0.0)) throw DomainError("temperature must be positive");
    if (sim.rank() != 2 || sim.rows() != sim.cols()) throw DimensionError("info_nce: square similarity matrix required");
    const std::size_t n = sim.rows();
    if (n < 2) throw DimensionError("info_nce: a contrastive batch needs at least two pairs");
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double mx = -INFINITY;
        for (std::size_t j = 0; j < n; ++j) mx = std::max(mx, sim.at(i, j) / tau);
        double z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::exp(sim.at(i, j) / tau - mx);
        total += mx + std::log(z) - sim.at(i, i) / tau;
    }
    return total / static_cast<double>(n);
}

namespace {

Tensor cosine_matrix(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw DimensionError("cosine matrix: operand shapes differ");
    return matmul_nt(l2_normalize(a), l2_normalize(b));
}

}  // namespace

double itc_loss(const Tensor& V, const Tensor& T, double tau, bool symmetric) {
    const Tensor sim = cosine_matrix(V, T);
    const double forward = info_nce(sim, tau);
    return symmetric ? 0.5 * (forward + info_nce(transpose(sim), tau)) : forward;
}

PhyTerms phy_loss(const std::array<Tensor, 3>& descriptors, const std::array<Tensor, 3>& signatures, double tau_p,
                  const std::array<double, 3>& weights) {
    PhyTerms out;
    for (std::size_t k = 0; k < 3; ++k) {
        out.branch[k] = info_nce(cosine_matrix(descriptors[k], signatures[k]), tau_p);
        out.total += weights[k] * out.branch[k];
    }
    return out;
}

double total_loss(double itc, double phy, double lambda) { return itc + lambda * phy; }

ad::Var itc_loss(const ad::Var& V, const ad::Var& T, const ad::Var& log_tau, bool symmetric) {
    if (V.shape() != T.shape()) throw DimensionError("itc_loss: image and text batches differ in shape");
    if (V.value().rows() < 2) throw DimensionError("itc_loss: a contrastive batch needs at least two pairs");
    const ad::Var logits = ad::mul_scalar(ad::matmul_nt(ad::l2_normalize(V), ad::l2_normalize(T)),
                                          ad::exp(ad::scale(log_tau, -1.0)));
    const ad::Var forward = ad::cross_entropy_diag(logits);
    if (!symmetric) return forward;
    return ad::scale(ad::add(forward, ad::cross_entropy_diag(ad::transpose(logits))), 0.5);
}

PhyGraph phy_loss(const std::array<ad::Var, 3>& descriptors, const std::array<Tensor, 3>& signatures,
                  const ad::Var& log_tau_p, const std::array<double, 3>& weights) {
    ad::Tape& tape = *log_tau_p.tape();
    const ad::Var inv_tau = ad::exp(ad::scale(log_tau_p, -1.0));
    PhyGraph g;
    for (std::size_t k = 0; k < 3; ++k) {
        const Tensor& f = signatures[k];
        if (f.rows() != descriptors[k].value().rows() || f.cols() != descriptors[k].value().cols())
            throw DimensionError("phy_loss: descriptor and signature shapes differ");
        if (f.rows() < 2) throw DimensionError("phy_loss: a contrastive batch needs at least two pairs");
        const ad::Var anchors = tape.constant(l2_normalize(f));
        const ad::Var sim = ad::matmul_nt(ad::l2_normalize(descriptors[k]), anchors);
        g.branch[k] = ad::cross_entropy_diag(ad::mul_scalar(sim, inv_tau));
        const ad::Var term = ad::scale(g.branch[k], weights[k]);
        g.total = k == 0 ? term : ad::add(g.total, term);
    }
    return g;
}

ad::Var total_loss(const ad::Var& itc, const ad::Var& phy, double lambda) {
    return ad::add(itc, ad::scale(phy, lambda));
}

}  // namespace planet::obj
