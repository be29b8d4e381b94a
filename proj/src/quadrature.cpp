// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

namespace replica_cdma {
namespace {

// Orthonormal three-term recurrence x p_k = b_{k+1} p_{k+1} + a_k p_k + b_k p_{k-1}.
struct Jacobi {
    std::vector<double> a; // size n
    std::vector<double> b; // size n + 1, b[0] unused
};

struct PolyEval {
    double p;         // p_n(x), scaled
    double dp;        // p_n'(x), same scale
    double log_sumsq; // log of sum_{k<n} p_k(x)^2, unscaled
};

PolyEval eval_orthonormal(const Jacobi& J, int n, double x) {
    constexpr double kBig = 1e150;
    constexpr double kShrink = 1e-150;
    const double log_shrink = std::log(kShrink);
    double p_prev = 0.0, p = 1.0, dp_prev = 0.0, dp = 0.0;
    double sumsq = 0.0, log_scale = 0.0;
    for (int k = 0; k < n; ++k) {
        sumsq += p * p;
        const double bk = k > 0 ? J.b[k] : 0.0;
        const double p_next = ((x - J.a[k]) * p - bk * p_prev) / J.b[k + 1];
        const double dp_next = (p + (x - J.a[k]) * dp - bk * dp_prev) / J.b[k + 1];
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
        if (std::abs(p) > kBig || std::abs(dp) > kBig) {
            p *= kShrink;
            p_prev *= kShrink;
            dp *= kShrink;
            dp_prev *= kShrink;
            sumsq *= kShrink * kShrink;
            log_scale -= log_shrink;
        }
    }
    return {p, dp, std::log(sumsq) + 2.0 * log_scale};
}

GaussRule golub_welsch(const Jacobi& J, int n) {
    if (n < 1) throw std::invalid_argument("quadrature rule needs at least one node");
    Eigen::VectorXd diag(n);
    Eigen::VectorXd sub(std::max(n - 1, 1));
    for (int k = 0; k < n; ++k) diag[k] = J.a[k];
    for (int k = 1; k < n; ++k) sub[k - 1] = J.b[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::EigenvaluesOnly);

    GaussRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        double x = es.eigenvalues()[i];
        for (int it = 0; it < 3; ++it) {
            const PolyEval e = eval_orthonormal(J, n, x);
            if (e.dp == 0.0) break;
            const double step = e.p / e.dp;
            x -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
        }
        rule.nodes[i] = x;
        rule.weights[i] = std::exp(-eval_orthonormal(J, n, x).log_sumsq);
        total += rule.weights[i];
    }
    for (double& w : rule.weights) w /= total;
    return rule;
}

} // namespace

GaussRule gauss_hermite_normal(int n) {
    Jacobi J{std::vector<double>(n, 0.0), std::vector<double>(n + 1, 0.0)};
    for (int k = 1; k <= n; ++k) J.b[k] = std::sqrt(static_cast<double>(k));
    GaussRule r = golub_welsch(J, n);
    // Enforce exact symmetry.
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
        const double w = 0.5 * (r.weights[n - 1 - i] + r.weights[i]);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    return r;
}

GaussRule gauss_laguerre_gamma(int n, double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma shape must be positive");
    const double alpha = shape - 1.0;
    Jacobi J{std::vector<double>(n), std::vector<double>(n + 1, 0.0)};
    for (int k = 0; k < n; ++k) J.a[k] = 2.0 * k + alpha + 1.0;
    for (int k = 1; k <= n; ++k) J.b[k] = std::sqrt(k * (k + alpha));
    return golub_welsch(J, n);
}

GaussRule gauss_legendre_unit(int n) {
    Jacobi J{std::vector<double>(n, 0.0), std::vector<double>(n + 1, 0.0)};
    for (int k = 1; k <= n; ++k) J.b[k] = k / std::sqrt(4.0 * k * k - 1.0);
    GaussRule r = golub_welsch(J, n);
    for (int i = 0; i < n / 2; ++i) {
        const double x = 0.5 * (r.nodes[n - 1 - i] - r.nodes[i]);
        const double w = 0.5 * (r.weights[n - 1 - i] + r.weights[i]);
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = r.weights[n - 1 - i] = w;
    }
    if (n % 2 == 1) r.nodes[n / 2] = 0.0;
    for (double& x : r.nodes) x = 0.5 * (x + 1.0);
    return r;
}

namespace {

enum class Family { Hermite, Laguerre, Legendre };

const GaussRule& cached(Family f, int n, double shape) {
    static std::mutex mu;
    static std::map<std::tuple<Family, int, double>, std::unique_ptr<GaussRule>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{f, n, shape}];
    if (!slot) {
        switch (f) {
        case Family::Hermite: slot = std::make_unique<GaussRule>(gauss_hermite_normal(n)); break;
        case Family::Laguerre: slot = std::make_unique<GaussRule>(gauss_laguerre_gamma(n, shape)); break;
        case Family::Legendre: slot = std::make_unique<GaussRule>(gauss_legendre_unit(n)); break;
        }
    }
    return *slot;
}

} // namespace

const GaussRule& hermite_rule(int n) { return cached(Family::Hermite, n, 0.0); }
const GaussRule& laguerre_rule(int n, double shape) { return cached(Family::Laguerre, n, shape); }
const GaussRule& legendre_rule(int n) { return cached(Family::Legendre, n, 0.0); }

} // namespace replica_cdma
