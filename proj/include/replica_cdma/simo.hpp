// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "replica_cdma/quadrature.hpp"

#include <complex>
#include <functional>
#include <span>

namespace replica_cdma {

// Decoupled single-user channel z = hhat*b + v seen by one stream. The
// estimate hhat has per-component variance 1 - xi2, v has variance
// sigma_v2 = (P/M)*xi2 + sigma2.
class SimoContext {
public:
    static SimoContext make(double xi2, double sigma2, double P, int M, int N);

    double xi2() const noexcept { return xi2_; }
    double sigma2() const noexcept { return sigma2_; }
    double P() const noexcept { return P_; }
    int M() const noexcept { return M_; }
    int N() const noexcept { return N_; }
    double stream_power() const noexcept { return P_ / M_; }
    double sigma_v2() const noexcept { return stream_power() * xi2_ + sigma2_; }
    double hhat_var() const noexcept { return 1.0 - xi2_; }
    // Per-component SNR is snr_scale() * X with X ~ Gamma(N, 1).
    double snr_scale() const noexcept { return stream_power() * hhat_var() / sigma_v2(); }

private:
    SimoContext(double xi2, double sigma2, double P, int M, int N)
        : xi2_(xi2), sigma2_(sigma2), P_(P), M_(M), N_(N) {}
    double xi2_, sigma2_, P_;
    int M_, N_;
};

// Posterior mean of a QPSK symbol with |b|^2 = P/M given z = hhat*b + v.
std::complex<double> qpsk_posterior_mean(std::span<const std::complex<double>> z,
                                         std::span<const std::complex<double>> hhat, double sigma_v2,
                                         double P, int M);

// 1 - E[tanh(rho + sqrt(rho) w)], w ~ N(0,1).
double mmse_bpsk(double rho, int gauss_nodes = 64);
// 1 - E[log2(1 + exp(-2 rho - 2 sqrt(rho) w))].
double bpsk_capacity(double rho, int gauss_nodes = 64);
// Same as bpsk_capacity but in nats.
double bpsk_capacity_nats(double rho, int gauss_nodes = 64);
// P(sign error on one real component) = Q(sqrt(rho)).
double gaussian_tail(double x);

// E[|hhat|^2 |b - <b>|^2] with the exact QPSK posterior mean.
double mmse_term_optimal(const SimoContext& ctx, const QuadratureSpec& quad = {});
// Same with the linear MMSE estimate of b.
double mmse_term_lmmse(const SimoContext& ctx, const QuadratureSpec& quad = {});
// QPSK mutual information I(b; z | hhat) in bits per stream, in [0, 2].
double decoupled_mutual_info(const SimoContext& ctx, const QuadratureSpec& quad = {});
// QPSK symbol error probability of componentwise sign decisions on hhat^H z.
double ser_large_system(const SimoContext& ctx, const QuadratureSpec& quad = {});

// Gaussian divergence D(CN(0,a) || CN(0,b)) in bits.
double gaussian_divergence_bits(double a, double b);
// Selection functional in bits for a candidate of the data-phase fixed point.
double free_energy(const SimoContext& ctx, double kappa, double C, double N0, double beta);

struct NodeDoublingCheck {
    double base;
    double doubled;
    double rel_diff;
    bool stable;
};

// Re-evaluates f with doubled node counts; stable if the relative change is <= tol.
NodeDoublingCheck check_node_doubling(const std::function<double(const SimoContext&, const QuadratureSpec&)>& f,
                                      const SimoContext& ctx, const QuadratureSpec& quad = {},
                                      double tol = 1e-8);

} // namespace replica_cdma
