// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "replica_cdma/config.hpp"

namespace replica_cdma {

// Per-component estimation error variance sigma2 / (pilots*(P/M) + sigma2).
// pilots may be fractional or +inf; pilots = 0 gives exactly 1.
double xi_squared(double sigma_tr2, double pilots, double P, int M);

// Training-phase solution. Only built by the solvers below, so
// xi2 == xi_squared(sigma_tr2, pilots, P, M) always holds.
class TrainingSolution {
public:
    double sigma_tr2() const noexcept { return sigma_tr2_; }
    double xi2() const noexcept { return xi2_; }
    double pilots() const noexcept { return pilots_; }
    bool perfect() const noexcept { return xi2_ == 0.0; }

    friend TrainingSolution solve_training(const SystemConfig&, double);
    friend TrainingSolution perfect_csi(const SystemConfig&);

private:
    TrainingSolution(double s, double xi2, double pilots) : sigma_tr2_(s), xi2_(xi2), pilots_(pilots) {}
    double sigma_tr2_;
    double xi2_;
    double pilots_;
};

// Positive root of sigma2 = N0 + beta*P*xi_squared(sigma2, pilots). Fractional
// pilot counts are accepted for continuity diagnostics.
TrainingSolution solve_training(const SystemConfig& config, double pilots);

// Known-channel limit: sigma_tr2 = N0, xi2 = 0, pilots = +inf.
TrainingSolution perfect_csi(const SystemConfig& config);

// Same root by bisection on [N0, N0 + beta*P]; used as a cross-check.
double solve_training_bisection(const SystemConfig& config, double pilots, double rel_tol = 1e-14);

} // namespace replica_cdma
