// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/simo.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace replica_cdma {
namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399460599343819;

// Below this SNR the BPSK integrals use Gauss-Hermite directly; above it the
// mass sits near z = 0 relative to the mean, and the integrals are rewritten
// over u = -z > 0 with an e^{-u} weight (Gauss-Laguerre, alpha = 0).
constexpr double kTiltSwitch = 1.0;

struct TailTable {
    std::vector<double> u2;   // u_i^2
    std::vector<double> mmse; // w_i / (1 + e^{-2u_i})
    std::vector<double> loss; // w_i [(1 + e^{2u_i}) log1p(e^{-2u_i}) + 2u_i]
};

const TailTable& tail_table(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<TailTable>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[n];
    if (!slot) {
        const GaussRule& r = laguerre_rule(n, 1.0);
        auto t = std::make_unique<TailTable>();
        for (std::size_t i = 0; i < r.size(); ++i) {
            const double u = r.nodes[i];
            const double e = std::exp(-2.0 * u);
            const double l1p = std::log1p(e);
            const double ratio = e > 0.0 ? l1p / e : 1.0;
            t->u2.push_back(u * u);
            t->mmse.push_back(r.weights[i] / (1.0 + e));
            t->loss.push_back(r.weights[i] * (l1p + ratio + 2.0 * u));
        }
        slot = std::move(t);
    }
    return *slot;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double mmse_hermite(double rho, int n) {
    const GaussRule& r = hermite_rule(n);
    const double s = std::sqrt(rho);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i)
        acc += r.weights[i] * 2.0 / (1.0 + std::exp(2.0 * (rho + s * r.nodes[i])));
    return acc;
}

double loss_hermite(double rho, int n) {
    const GaussRule& r = hermite_rule(n);
    const double s = std::sqrt(rho);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r.weights[i] * softplus(-2.0 * (rho + s * r.nodes[i]));
    return acc;
}

// mmse_bpsk(rho) * e^{rho/2}
double mmse_tilted(double rho, int n) {
    if (rho <= 0.0) return 1.0;
    if (rho < kTiltSwitch) return mmse_hermite(rho, n) * std::exp(0.5 * rho);
    const TailTable& t = tail_table(n);
    const double c = -0.5 / rho;
    double acc = 0.0;
    for (std::size_t i = 0; i < t.u2.size(); ++i) acc += t.mmse[i] * std::exp(c * t.u2[i]);
    return 4.0 * kInvSqrt2Pi / std::sqrt(rho) * acc;
}

// E[log(1 + e^{-2z})] * e^{rho/2}, z ~ N(rho, rho), in nats.
double loss_tilted(double rho, int n) {
    if (rho <= 0.0) return kLn2;
    if (rho < kTiltSwitch) return loss_hermite(rho, n) * std::exp(0.5 * rho);
    const TailTable& t = tail_table(n);
    const double c = -0.5 / rho;
    double acc = 0.0;
    for (std::size_t i = 0; i < t.u2.size(); ++i) acc += t.loss[i] * std::exp(c * t.u2[i]);
    return kInvSqrt2Pi / std::sqrt(rho) * acc;
}

// E[h(aX)], X ~ Gamma(N,1), for h(rho) = e^{-rho/2} g(rho, x). The e^{-ax/2}
// factor is folded into the Gamma weight by rescaling x = y/lambda. The rest
// grows like sqrt(y), so the y integral is taken in u = sqrt(y) with
// Gauss-Legendre on [0, sqrt(y_max)]; the Gamma mass beyond y_max is below 1e-20.
template <class G>
double gamma_mean_tilted(const SimoContext& ctx, const QuadratureSpec& quad, G&& g) {
    const double a = ctx.snr_scale();
    const double lambda = 1.0 + 0.5 * a;
    const int N = ctx.N();
    const double u_max = std::sqrt(N + 12.0 * std::sqrt(static_cast<double>(N)) + 60.0);
    const double log_norm = std::log(2.0 * u_max) - std::lgamma(static_cast<double>(N));
    const GaussRule& r = legendre_rule(quad.gamma_nodes);
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double u = u_max * r.nodes[i];
        const double y = u * u;
        const double x = y / lambda;
        // Gamma(N) density in y times dy/du = 2u.
        const double w = r.weights[i] * u * std::exp(log_norm + (2 * N - 2) * std::log(u) - y);
        acc += w * g(a * x, x);
    }
    return acc * std::exp(-N * std::log(lambda));
}

// e^b E1(b) for b in (0, 1].
double exp_e1(double b) { return -std::exp(b) * std::expint(-b); }

} // namespace

SimoContext SimoContext::make(double xi2, double sigma2, double P, int M, int N) {
    if (!(xi2 >= 0.0 && xi2 <= 1.0)) throw std::domain_error("SimoContext: xi2 must lie in [0, 1]");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::domain_error("SimoContext: sigma2 must be positive");
    if (!(P > 0.0)) throw std::domain_error("SimoContext: power must be positive");
    if (M < 1 || N < 1) throw std::domain_error("SimoContext: antenna counts must be positive");
    return SimoContext(xi2, sigma2, P, M, N);
}

std::complex<double> qpsk_posterior_mean(std::span<const std::complex<double>> z,
                                         std::span<const std::complex<double>> hhat, double sigma_v2,
                                         double P, int M) {
    if (!(sigma_v2 > 0.0)) throw std::domain_error("qpsk_posterior_mean: sigma_v2 must be positive");
    if (z.size() != hhat.size()) throw std::invalid_argument("qpsk_posterior_mean: size mismatch");
    std::complex<double> u = 0.0;
    for (std::size_t n = 0; n < z.size(); ++n) u += std::conj(hhat[n]) * z[n];
    const double a = std::sqrt(P / (2.0 * M));
    const double g = 2.0 * a / sigma_v2;
    return {a * std::tanh(g * u.real()), a * std::tanh(g * u.imag())};
}

double mmse_bpsk(double rho, int gauss_nodes) {
    if (rho <= 0.0) return 1.0;
    if (rho < kTiltSwitch) return mmse_hermite(rho, gauss_nodes);
    return std::exp(-0.5 * rho) * mmse_tilted(rho, gauss_nodes);
}

double bpsk_capacity_nats(double rho, int gauss_nodes) {
    if (rho <= 0.0) return 0.0;
    const double loss =
        rho < kTiltSwitch ? loss_hermite(rho, gauss_nodes) : std::exp(-0.5 * rho) * loss_tilted(rho, gauss_nodes);
    return kLn2 - loss;
}

double bpsk_capacity(double rho, int gauss_nodes) { return bpsk_capacity_nats(rho, gauss_nodes) / kLn2; }

double gaussian_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double mmse_term_optimal(const SimoContext& ctx, const QuadratureSpec& quad) {
    if (ctx.hhat_var() == 0.0) return 0.0;
    const int n = quad.gauss_nodes;
    const double m = gamma_mean_tilted(ctx, quad, [n](double rho, double x) { return x * mmse_tilted(rho, n); });
    return ctx.stream_power() * ctx.hhat_var() * m;
}

double mmse_term_lmmse(const SimoContext& ctx, const QuadratureSpec& quad) {
    if (ctx.hhat_var() == 0.0) return 0.0;
    const double a = ctx.snr_scale();
    const int N = ctx.N();
    if (a >= 1.0) {
        // E[1/(1+aX)] = b K_{N-1}(b), K_0 = e^b E1(b), K_n = (1 - b K_{n-1}) / n, b = 1/a.
        const double b = 1.0 / a;
        double K = exp_e1(b);
        for (int k = 1; k < N; ++k) K = (1.0 - b * K) / k;
        return ctx.sigma_v2() * (1.0 - b * K);
    }
    const GaussRule& r = laguerre_rule(quad.gamma_nodes, static_cast<double>(N));
    double acc = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) acc += r.weights[i] * r.nodes[i] / (1.0 + a * r.nodes[i]);
    return ctx.stream_power() * ctx.hhat_var() * acc;
}

double decoupled_mutual_info(const SimoContext& ctx, const QuadratureSpec& quad) {
    if (ctx.hhat_var() == 0.0) return 0.0;
    const int n = quad.gauss_nodes;
    const double loss = gamma_mean_tilted(ctx, quad, [n](double rho, double) { return loss_tilted(rho, n); });
    return std::clamp(2.0 * (1.0 - loss / kLn2), 0.0, 2.0);
}

double ser_large_system(const SimoContext& ctx, const QuadratureSpec& quad) {
    if (ctx.hhat_var() == 0.0) return 0.75;
    // Craig form: Q(sqrt(rho)) = (1/pi) int_0^{pi/2} e^{-rho/(2 sin^2 phi)} dphi and
    // Q^2 the same over [0, pi/4]; the Gamma average of e^{-c X} is (1 + c)^{-N}.
    const double a = ctx.snr_scale();
    const int N = ctx.N();
    const GaussRule& r = legendre_rule(quad.gauss_nodes);
    auto mgf = [&](double phi) {
        const double s2 = std::sin(phi) * std::sin(phi);
        return std::pow(s2 / (s2 + 0.5 * a), N);
    };
    double q1 = 0.0, q2 = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        q1 += r.weights[i] * mgf(0.5 * std::numbers::pi * r.nodes[i]);
        q2 += r.weights[i] * mgf(0.25 * std::numbers::pi * r.nodes[i]);
    }
    // (2/pi)(pi/2) q1 - (1/pi)(pi/4) q2
    return q1 - 0.25 * q2;
}

double gaussian_divergence_bits(double a, double b) {
    if (!(a > 0.0) || !(b > 0.0)) throw std::domain_error("gaussian_divergence_bits: variances must be positive");
    const double r = a / b;
    // log(1/r) + r - 1, written to stay accurate for r near 1.
    return (r - 1.0 - std::log1p(r - 1.0)) / kLn2;
}

double free_energy(const SimoContext& ctx, double kappa, double C, double N0, double beta) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::domain_error("free_energy: kappa must lie in [0, 1]");
    const double Ih = ctx.N() * std::log1p(ctx.stream_power() * ctx.xi2() / ctx.sigma2()) / kLn2;
    return beta * ctx.M() * (Ih + (1.0 - kappa) * C) + ctx.N() * gaussian_divergence_bits(N0, ctx.sigma2());
}

NodeDoublingCheck check_node_doubling(const std::function<double(const SimoContext&, const QuadratureSpec&)>& f,
                                      const SimoContext& ctx, const QuadratureSpec& quad, double tol) {
    const double v1 = f(ctx, quad);
    const double v2 = f(ctx, quad.doubled());
    const double scale = std::max(std::abs(v2), 1e-300);
    const double rel = std::abs(v1 - v2) / scale;
    return {v1, v2, rel, rel <= tol || std::abs(v1 - v2) <= 1e-300};
}

} // namespace replica_cdma
