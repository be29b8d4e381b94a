// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/training.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace replica_cdma {

double xi_squared(double sigma_tr2, double pilots, double P, int M) {
    if (!(sigma_tr2 > 0.0)) throw std::domain_error("xi_squared: sigma_tr2 must be positive");
    if (!(pilots >= 0.0)) throw std::domain_error("xi_squared: pilots must be nonnegative");
    if (pilots == 0.0) return 1.0;
    if (std::isinf(pilots)) return 0.0;
    return sigma_tr2 / (pilots * (P / M) + sigma_tr2);
}

TrainingSolution solve_training(const SystemConfig& config, double pilots) {
    if (!(pilots >= 0.0)) throw std::domain_error("solve_training: pilots must be nonnegative");
    const double N0 = config.N0();
    const double bP = config.beta() * config.P();
    if (pilots == 0.0) return TrainingSolution(N0 + bP, 1.0, 0.0);
    if (std::isinf(pilots)) return perfect_csi(config);

    // s^2 + b s - c = 0 with c > 0; pick the cancellation-free form of the root.
    const double tq = pilots * config.stream_power();
    const double b = tq - N0 - bP;
    const double c = N0 * tq;
    const double disc = std::sqrt(b * b + 4.0 * c);
    const double s = b > 0.0 ? 2.0 * c / (b + disc) : 0.5 * (disc - b);
    return TrainingSolution(s, xi_squared(s, pilots, config.P(), config.M()), pilots);
}

TrainingSolution perfect_csi(const SystemConfig& config) {
    return TrainingSolution(config.N0(), 0.0, std::numeric_limits<double>::infinity());
}

double solve_training_bisection(const SystemConfig& config, double pilots, double rel_tol) {
    const double N0 = config.N0();
    const double bP = config.beta() * config.P();
    auto g = [&](double s) { return N0 + bP * xi_squared(s, pilots, config.P(), config.M()) - s; };
    double lo = N0, hi = N0 + bP;
    if (g(hi) >= 0.0) return hi;
    for (int i = 0; i < 400 && hi - lo > rel_tol * lo; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace replica_cdma
