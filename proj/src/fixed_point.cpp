// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/fixed_point.hpp"

#include "replica_cdma/simo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace replica_cdma {

std::string_view to_string(Detector d) { return d == Detector::Optimal ? "optimal" : "lmmse"; }

std::size_t FixedPointOutcome::n_converged() const {
    return static_cast<std::size_t>(
        std::count_if(candidates_.begin(), candidates_.end(), [](const Candidate& c) { return c.converged; }));
}

std::size_t FixedPointOutcome::select(const std::vector<Candidate>& candidates) {
    std::size_t best = candidates.size();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const Candidate& c = candidates[i];
        if (!c.converged) continue;
        if (best == candidates.size()) {
            best = i;
            continue;
        }
        const Candidate& b = candidates[best];
        const double tie = 1e-12 * std::max(std::abs(b.free_energy), 1.0);
        if (c.free_energy < b.free_energy - tie ||
            (std::abs(c.free_energy - b.free_energy) <= tie && c.sigma2 < b.sigma2))
            best = i;
    }
    if (best == candidates.size()) throw std::logic_error("FixedPointOutcome::select: no converged candidate");
    return best;
}

namespace {

SimoContext context_for(const SystemConfig& config, const TrainingSolution& training, double sigma2) {
    return SimoContext::make(training.xi2(), sigma2, config.P(), config.M(), config.N());
}

} // namespace

double data_rhs(const SystemConfig& config, const TrainingSolution& training, double kappa, Detector detector,
                double sigma2, const QuadratureSpec& quad) {
    const SimoContext ctx = context_for(config, training, sigma2);
    const double beta = config.beta();
    const double ratio = sigma2 / ctx.sigma_v2();
    double rhs = config.N0() + beta * config.P() * training.xi2() * ratio;
    const double weight = detector == Detector::Optimal ? 1.0 - kappa : 1.0;
    if (weight > 0.0 && ctx.hhat_var() > 0.0) {
        const double m = detector == Detector::Optimal ? mmse_term_optimal(ctx, quad) : mmse_term_lmmse(ctx, quad);
        rhs += beta * weight * (static_cast<double>(config.M()) / config.N()) * ratio * ratio * m;
    }
    return rhs;
}

double stream_mutual_info(const SystemConfig& config, const TrainingSolution& training, double sigma2,
                          const QuadratureSpec& quad) {
    return decoupled_mutual_info(context_for(config, training, sigma2), quad);
}

double candidate_free_energy(const SystemConfig& config, const TrainingSolution& training, double kappa,
                             double sigma2, const QuadratureSpec& quad) {
    const SimoContext ctx = context_for(config, training, sigma2);
    return free_energy(ctx, kappa, decoupled_mutual_info(ctx, quad), config.N0(), config.beta());
}

namespace {

// Secant steps on RHS(s) - s from a converged iterate; each step is kept only
// if it lowers the residual.
double polish(const SystemConfig& config, const TrainingSolution& training, double kappa, Detector detector,
              const QuadratureSpec& quad, double s, double res, double s_prev, double res_prev, double& rel) {
    for (int k = 0; k < 3 && res != 0.0 && res != res_prev; ++k) {
        const double t = s - res * (s - s_prev) / (res - res_prev);
        if (!(t >= config.N0()) || !std::isfinite(t)) break;
        const double rt = data_rhs(config, training, kappa, detector, t, quad) - t;
        if (!(std::abs(rt) < std::abs(res))) break;
        s_prev = s;
        res_prev = res;
        s = t;
        res = rt;
        rel = std::abs(res) / s;
    }
    return s;
}

Candidate iterate_from(const SystemConfig& config, const TrainingSolution& training, double kappa, Detector detector,
                       const SolverSpec& spec, double seed) {
    const double N0 = config.N0();
    double s = std::max(seed, N0);
    double d = spec.damping;
    bool oscillated = false;
    int prev_sign = 0, flips = 0, same_sign_run = 0;
    double rel = std::numeric_limits<double>::infinity();
    double s_prev = NAN, res_prev = NAN;
    for (int it = 1; it <= spec.max_iters; ++it) {
        const double r = data_rhs(config, training, kappa, detector, s, spec.quad);
        const double res = r - s;
        rel = std::abs(res) / s;
        if (rel <= spec.tol) {
            if (std::isnan(s_prev)) {
                s_prev = s * (1.0 + 1e-7);
                res_prev = data_rhs(config, training, kappa, detector, s_prev, spec.quad) - s_prev;
            }
            s = polish(config, training, kappa, detector, spec.quad, s, res, s_prev, res_prev, rel);
            return {s, NAN, NAN, rel, true, it, seed};
        }
        const int sign = res > 0.0 ? 1 : -1;
        if (prev_sign != 0 && sign != prev_sign) {
            same_sign_run = 0;
            if (++flips >= 2) {
                oscillated = true;
                d = std::max(0.5 * d, 1.0 / 64.0);
                flips = 0;
            }
        } else if (!oscillated && ++same_sign_run >= 4 && d < 1.0) {
            // Monotone approach cannot overshoot with d <= 1.
            d = std::min(1.0, 2.0 * d);
            same_sign_run = 0;
        }
        prev_sign = sign;
        s_prev = s;
        res_prev = res;
        s = std::max(s + d * res, N0);
    }
    return {s, NAN, NAN, rel, false, spec.max_iters, seed};
}

std::vector<double> seeds_for(const SystemConfig& config, const SolverSpec& spec) {
    std::vector<double> seeds{config.N0(), config.N0() + config.beta() * config.P()};
    for (double s : spec.extra_seeds) {
        if (!(s > 0.0) || !std::isfinite(s)) continue;
        const bool dup = std::any_of(seeds.begin(), seeds.end(),
                                     [&](double t) { return std::abs(t - s) <= 1e-12 * std::max(s, t); });
        if (!dup) seeds.push_back(s);
    }
    return seeds;
}

} // namespace

FixedPointOutcome data_fixed_point(const SystemConfig& config, const TrainingSolution& training, double kappa,
                                   Detector detector, const SolverSpec& spec) {
    if (!(kappa >= 0.0 && kappa <= 1.0)) throw std::domain_error("data_fixed_point: kappa must lie in [0, 1]");
    if (!(spec.damping > 0.0 && spec.damping <= 1.0)) throw std::domain_error("SolverSpec: damping must lie in (0, 1]");

    std::vector<Candidate> converged, failed;
    for (double seed : seeds_for(config, spec)) {
        Candidate c = iterate_from(config, training, kappa, detector, spec, seed);
        (c.converged ? converged : failed).push_back(c);
    }
    if (converged.empty()) {
        std::ostringstream msg;
        msg << "data fixed point did not converge at kappa=" << kappa << " (" << to_string(detector) << "); residuals:";
        for (const Candidate& c : failed) msg << ' ' << c.residual;
        throw NoConvergence(msg.str(), failed, kappa);
    }

    std::sort(converged.begin(), converged.end(), [](const Candidate& a, const Candidate& b) { return a.sigma2 < b.sigma2; });
    std::vector<Candidate> unique;
    for (const Candidate& c : converged) {
        if (!unique.empty() && std::abs(c.sigma2 - unique.back().sigma2) <= spec.dedup_rel * c.sigma2) {
            if (c.residual < unique.back().residual) unique.back() = c;
            continue;
        }
        unique.push_back(c);
    }
    for (Candidate& c : unique) {
        const SimoContext ctx = context_for(config, training, c.sigma2);
        c.mutual_info = decoupled_mutual_info(ctx, spec.quad);
        c.free_energy = free_energy(ctx, kappa, c.mutual_info, config.N0(), config.beta());
    }

    FixedPointOutcome out;
    out.candidates_ = std::move(unique);
    out.candidates_.insert(out.candidates_.end(), failed.begin(), failed.end());
    out.selected_ = FixedPointOutcome::select(out.candidates_);
    out.kappa_ = kappa;
    out.detector_ = detector;
    out.xi2_ = training.xi2();
    return out;
}

namespace {

std::vector<double> converged_sigma2(const FixedPointOutcome& o) {
    std::vector<double> s;
    for (const Candidate& c : o.candidates())
        if (c.converged) s.push_back(c.sigma2);
    return s;
}

} // namespace

std::vector<FixedPointOutcome> kappa_continuation(const SystemConfig& config, const TrainingSolution& training,
                                                  Detector detector, const std::vector<double>& nodes,
                                                  const SolverSpec& spec) {
    if (!std::is_sorted(nodes.begin(), nodes.end())) throw std::invalid_argument("kappa_continuation: nodes must be sorted");
    std::vector<FixedPointOutcome> out;
    out.reserve(nodes.size());
    SolverSpec local = spec;
    for (double kappa : nodes) {
        try {
            out.push_back(data_fixed_point(config, training, kappa, detector, local));
        } catch (const NoConvergence& e) {
            std::ostringstream msg;
            msg << "kappa continuation failed at node kappa=" << kappa << ": " << e.what();
            throw NoConvergence(msg.str(), e.attempts(), kappa);
        }
        local.extra_seeds = spec.extra_seeds;
        for (double s : converged_sigma2(out.back())) local.extra_seeds.push_back(s);
    }
    return out;
}

namespace {

struct Sample {
    double kappa;
    double sigma2;
    double C;
    std::size_t n_candidates;
    std::vector<double> seeds;
    std::vector<double> energies; // free energy per entry of seeds
};

class KappaIntegrator {
public:
    KappaIntegrator(const SystemConfig& config, const TrainingSolution& training, const SolverSpec& spec,
                    const KappaRule& rule)
        : config_(config), training_(training), spec_(spec), rule_(rule) {}

    double piece(double a, double b, int depth) {
        const GaussRule& gl = legendre_rule(rule_.nodes);
        std::vector<double> kappas{a};
        for (double x : gl.nodes) kappas.push_back(a + (b - a) * x);
        kappas.push_back(b);

        std::vector<Sample> samples;
        std::vector<double> warm;
        for (double k : kappas) {
            samples.push_back(solve(k, warm));
            warm = samples.back().seeds;
        }
        if (depth < rule_.max_splits) {
            for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
                const Split sp = locate(samples[i], samples[i + 1]);
                if (!sp.found) continue;
                // A jump already split at this piece's edge shows up again
                // between the edge sample and its neighbour.
                if ((a > 0.0 && sp.kappa - a < 2.0 * rule_.locate_tol) ||
                    (b < 1.0 && b - sp.kappa < 2.0 * rule_.locate_tol))
                    continue;
                if (sp.jump) transitions.push_back(sp.kappa);
                return piece(a, sp.kappa, depth + 1) + piece(sp.kappa, b, depth + 1);
            }
        }
        double acc = 0.0;
        for (std::size_t i = 0; i < gl.size(); ++i) acc += gl.weights[i] * samples[i + 1].C;
        return (b - a) * acc;
    }

    std::vector<double> transitions;
    int solves = 0;

private:
    Sample solve(double kappa, const std::vector<double>& warm) {
        SolverSpec s = spec_;
        s.extra_seeds.insert(s.extra_seeds.end(), warm.begin(), warm.end());
        const FixedPointOutcome o = data_fixed_point(config_, training_, kappa, Detector::Optimal, s);
        ++solves;
        Sample smp{kappa, o.sigma2(), o.selected().mutual_info, o.n_converged(), {}, {}};
        for (const Candidate& c : o.candidates()) {
            if (!c.converged) continue;
            smp.seeds.push_back(c.sigma2);
            smp.energies.push_back(c.free_energy);
        }
        return smp;
    }

    static double log_gap(const Sample& x, const Sample& y) { return std::abs(std::log(y.sigma2 / x.sigma2)); }

    struct Split {
        bool found = false;
        bool jump = false;
        double kappa = 0.0;
    };

    // Bisects toward the larger log-gap. A jump survives the narrowing and
    // is split there; a steep continuous stretch is split at its steepest
    // point without being reported as a transition.
    Split locate(Sample lo, Sample hi) {
        const double g0 = log_gap(lo, hi);
        const bool steep = g0 > 0.05;
        if (lo.n_candidates < 2 && hi.n_candidates < 2 && !steep) return {};
        while (hi.kappa - lo.kappa > rule_.locate_tol) {
            std::vector<double> warm = lo.seeds;
            warm.insert(warm.end(), hi.seeds.begin(), hi.seeds.end());
            Sample mid = solve(0.5 * (lo.kappa + hi.kappa), warm);
            if (log_gap(lo, mid) >= log_gap(mid, hi))
                hi = std::move(mid);
            else
                lo = std::move(mid);
        }
        const double gf = log_gap(lo, hi);
        const bool jump = gf > 1e-3 && gf >= 0.25 * g0;
        if (!jump && !steep) return {};
        return {true, jump, jump ? crossing(lo, hi) : 0.5 * (lo.kappa + hi.kappa)};
    }

    // Free energy of the candidate in s closest to sigma2.
    static double energy_near(const Sample& s, double sigma2) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < s.seeds.size(); ++i)
            if (std::abs(std::log(s.seeds[i] / sigma2)) < std::abs(std::log(s.seeds[best] / sigma2))) best = i;
        return s.energies[best];
    }

    // Linear zero of F_lo-branch - F_hi-branch across the final bracket.
    static double crossing(const Sample& lo, const Sample& hi) {
        const double mid = 0.5 * (lo.kappa + hi.kappa);
        if (lo.n_candidates < 2 || hi.n_candidates < 2) return mid;
        const double d_lo = energy_near(lo, lo.sigma2) - energy_near(lo, hi.sigma2);
        const double d_hi = energy_near(hi, lo.sigma2) - energy_near(hi, hi.sigma2);
        if (!(d_lo <= 0.0 && d_hi >= 0.0 && d_hi > d_lo)) return mid;
        return lo.kappa + (hi.kappa - lo.kappa) * (-d_lo) / (d_hi - d_lo);
    }

    const SystemConfig& config_;
    const TrainingSolution& training_;
    const SolverSpec& spec_;
    const KappaRule& rule_;
};

} // namespace

KappaIntegral integrate_over_kappa(const SystemConfig& config, const TrainingSolution& training,
                                   const SolverSpec& spec, const KappaRule& rule) {
    if (training.xi2() >= 1.0) return {0.0, {}, 0};
    KappaIntegrator integ(config, training, spec, rule);
    const double v = integ.piece(0.0, 1.0, 0);
    std::sort(integ.transitions.begin(), integ.transitions.end());
    return {v, integ.transitions, integ.solves};
}

} // namespace replica_cdma
