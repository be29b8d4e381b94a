// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/spectral_efficiency.hpp"

#include "replica_cdma/parallel.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace replica_cdma {

SeEvaluator::SeEvaluator(const SystemConfig& base, EvalOptions options)
    : base_(validate(base)), options_(std::move(options)) {}

TrainingSolution SeEvaluator::training(double pilots) const {
    return std::isinf(pilots) ? perfect_csi(base_) : solve_training(base_, pilots);
}

SeEvaluator::Stage& SeEvaluator::stage(double pilots) {
    std::lock_guard<std::mutex> lock(mu_);
    return stages_[pilots];
}

double SeEvaluator::stage_integral(double pilots) {
    Stage& s = stage(pilots);
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (s.integral) return s.integral->value;
    }
    auto ki = std::make_unique<KappaIntegral>(
        integrate_over_kappa(base_, training(pilots), options_.solver, options_.kappa));
    std::lock_guard<std::mutex> lock(mu_);
    if (!s.integral) s.integral = std::move(ki);
    return s.integral->value;
}

const FixedPointOutcome& SeEvaluator::outcome(double pilots, Detector detector) {
    Stage& s = stage(pilots);
    auto& slot = detector == Detector::Optimal ? s.optimal : s.lmmse;
    {
        std::lock_guard<std::mutex> lock(mu_);
        if (slot) return *slot;
    }
    auto o = std::make_unique<FixedPointOutcome>(
        data_fixed_point(base_, training(pilots), 0.0, detector, options_.solver));
    std::lock_guard<std::mutex> lock(mu_);
    if (!slot) slot = std::move(o);
    return *slot;
}

void SeEvaluator::precompute(bool integrals, bool fixed_points) {
    std::vector<double> pilots;
    for (int p = 0; p <= base_.Tc(); ++p) pilots.push_back(p);
    pilots.push_back(std::numeric_limits<double>::infinity());
    parallel_for(pilots.size(), [&](std::size_t i) {
        if (integrals) stage_integral(pilots[i]);
        if (fixed_points) {
            outcome(pilots[i], Detector::Optimal);
            outcome(pilots[i], Detector::Lmmse);
        }
    });
}

namespace {

SePoint from_outcome(double se, const FixedPointOutcome& o) { return {se, o.sigma2(), o.n_converged()}; }

} // namespace

SePoint SeEvaluator::evaluate(ReceiverKind receiver, int tau) {
    const SystemConfig cfg = base_.with_tau(tau);
    if (receiver == ReceiverKind::JointCeMudd) {
        double acc = 0.0;
        for (int p = tau; p < cfg.Tc(); ++p) acc += stage_integral(p);
        const double se = cfg.beta() * cfg.M() / cfg.Tc() * acc;
        return from_outcome(se, outcome(tau, Detector::Optimal));
    }
    return evaluate_fractional(receiver, static_cast<double>(tau));
}

SePoint SeEvaluator::evaluate_fractional(ReceiverKind receiver, double tau) {
    if (!(tau >= 0.0 && tau <= base_.Tc())) throw ConfigError("tau", "tau exceeds coherence time");
    const double scale = base_.beta() * base_.M() * (1.0 - tau / base_.Tc());
    const double inf = std::numeric_limits<double>::infinity();
    switch (receiver) {
    case ReceiverKind::OptimumSeparated: {
        const FixedPointOutcome& o = outcome(tau, Detector::Optimal);
        return from_outcome(scale * o.selected().mutual_info, o);
    }
    case ReceiverKind::OneShotCeMudd:
        return from_outcome(scale * stage_integral(tau), outcome(tau, Detector::Optimal));
    case ReceiverKind::LmmseReceiver: {
        const FixedPointOutcome& o = outcome(tau, Detector::Lmmse);
        return from_outcome(scale * o.selected().mutual_info, o);
    }
    case ReceiverKind::PerfectCsiBound:
        return from_outcome(scale * stage_integral(inf), outcome(inf, Detector::Optimal));
    case ReceiverKind::JointCeMudd:
        break;
    }
    throw std::invalid_argument("evaluate_fractional: joint receiver needs an integer tau");
}

double se_optimum_separated(const SystemConfig& config, const EvalOptions& options) {
    return SeEvaluator(config, options).evaluate(ReceiverKind::OptimumSeparated, config.tau()).se;
}

double se_one_shot(const SystemConfig& config, const EvalOptions& options) {
    return SeEvaluator(config, options).evaluate(ReceiverKind::OneShotCeMudd, config.tau()).se;
}

double se_joint(const SystemConfig& config, const EvalOptions& options) {
    return SeEvaluator(config, options).evaluate(ReceiverKind::JointCeMudd, config.tau()).se;
}

double se_lmmse(const SystemConfig& config, const EvalOptions& options) {
    return SeEvaluator(config, options).evaluate(ReceiverKind::LmmseReceiver, config.tau()).se;
}

double se_perfect_csi_bound(const SystemConfig& config, const EvalOptions& options) {
    return SeEvaluator(config, options).evaluate(ReceiverKind::PerfectCsiBound, config.tau()).se;
}

TauOptimum optimize_tau(SeEvaluator& evaluator, ReceiverKind receiver) {
    TauOptimum best{0, -std::numeric_limits<double>::infinity()};
    for (int tau = 0; tau <= evaluator.base().Tc(); ++tau) {
        const double se = evaluator.evaluate(receiver, tau).se;
        if (se > best.se + 1e-12) best = {tau, se};
    }
    return best;
}

TauOptimum optimize_tau(const SystemConfig& config, ReceiverKind receiver, const EvalOptions& options) {
    SeEvaluator ev(config, options);
    return optimize_tau(ev, receiver);
}

ReceiverCurve sweep_tau(SeEvaluator& evaluator, ReceiverKind receiver, int tau_min, int tau_max) {
    ReceiverCurve curve{receiver, "tau", {}};
    for (int tau = tau_min; tau <= tau_max; ++tau) {
        try {
            const SePoint p = evaluator.evaluate(receiver, tau);
            curve.points.push_back({static_cast<double>(tau), p.se, p.sigma2_selected, p.n_candidates, {}});
        } catch (const std::exception& e) {
            curve.points.push_back({static_cast<double>(tau), NAN, NAN, 0, e.what()});
        }
    }
    return curve;
}

} // namespace replica_cdma
