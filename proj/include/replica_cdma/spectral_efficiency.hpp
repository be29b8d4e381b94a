// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "replica_cdma/config.hpp"
#include "replica_cdma/fixed_point.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace replica_cdma {

struct EvalOptions {
    SolverSpec solver;
    KappaRule kappa;
};

// Spectral efficiency (bits/chip) with the selected data-phase variance that
// produced it.
struct SePoint {
    double se;
    double sigma2_selected;
    std::size_t n_candidates;
};

struct CurvePoint {
    double x;
    double se;
    double sigma2_selected;
    std::size_t n_candidates;
    std::string error; // empty on success
};

struct ReceiverCurve {
    ReceiverKind receiver;
    std::string axis; // tau | snr_db | antennas
    std::vector<CurvePoint> points;
};

struct TauOptimum {
    int tau;
    double se;
};

// Evaluates every receiver for one (beta, M, N, P, N0, Tc) and any tau.
// Per-pilot-count quantities (kappa integrals, fixed points) are memoized, so
// sweeping tau or several receivers reuses work. Thread-safe.
class SeEvaluator {
public:
    explicit SeEvaluator(const SystemConfig& base, EvalOptions options = {});

    const SystemConfig& base() const noexcept { return base_; }
    const EvalOptions& options() const noexcept { return options_; }

    SePoint evaluate(ReceiverKind receiver, int tau);
    // Pilot count and prefactor taken at a real-valued tau. Continuity
    // diagnostic only; not defined for the joint receiver.
    SePoint evaluate_fractional(ReceiverKind receiver, double tau);

    // Integral over kappa of the selected-branch mutual information with
    // the given number of pilots (bits per stream). +inf means perfect CSI.
    double stage_integral(double pilots);
    // Data-phase outcome at kappa = 0 for the given detector.
    const FixedPointOutcome& outcome(double pilots, Detector detector);

    // Fills the stage cache for pilots 0..Tc in parallel.
    void precompute(bool integrals, bool fixed_points);

private:
    struct Stage {
        std::unique_ptr<KappaIntegral> integral;
        std::unique_ptr<FixedPointOutcome> optimal;
        std::unique_ptr<FixedPointOutcome> lmmse;
    };
    TrainingSolution training(double pilots) const;
    Stage& stage(double pilots);

    SystemConfig base_;
    EvalOptions options_;
    std::mutex mu_;
    std::map<double, Stage> stages_;
};

double se_optimum_separated(const SystemConfig& config, const EvalOptions& options = {});
double se_one_shot(const SystemConfig& config, const EvalOptions& options = {});
double se_joint(const SystemConfig& config, const EvalOptions& options = {});
double se_lmmse(const SystemConfig& config, const EvalOptions& options = {});
double se_perfect_csi_bound(const SystemConfig& config, const EvalOptions& options = {});

// Exhaustive scan over integer tau in [0, Tc]; ties go to the smaller tau.
TauOptimum optimize_tau(SeEvaluator& evaluator, ReceiverKind receiver);
TauOptimum optimize_tau(const SystemConfig& config, ReceiverKind receiver, const EvalOptions& options = {});

// Curve over integer tau in [tau_min, tau_max]; solver failures are recorded
// per point and the sweep continues.
ReceiverCurve sweep_tau(SeEvaluator& evaluator, ReceiverKind receiver, int tau_min, int tau_max);

} // namespace replica_cdma
