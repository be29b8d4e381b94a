// SPDX-License-Identifier: Apache-2.0
// Acceptance checks. Each criterion prints indented detail lines followed by
// one summary line "criterion N: PASS|FAIL ...". Exit status is nonzero if any
// selected criterion fails.
#include "replica_cdma/config.hpp"
#include "replica_cdma/fixed_point.hpp"
#include "replica_cdma/parallel.hpp"
#include "replica_cdma/sim/mc.hpp"
#include "replica_cdma/simo.hpp"
#include "replica_cdma/spectral_efficiency.hpp"
#include "replica_cdma/training.hpp"

#include "oracles.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

using namespace replica_cdma;

namespace {

SystemConfig make(double beta, double snr_db, int M = 1, int N = 1, int Tc = 20, int tau = 0) {
    SystemParams p;
    p.beta = beta;
    p.M = M;
    p.N = N;
    p.P = 1.0;
    p.N0 = noise_for_snr_db(1.0, snr_db);
    p.Tc = Tc;
    p.tau = tau;
    return validate(p);
}

void detail(const char* fmt, auto... args) {
    std::printf("  ");
    std::printf(fmt, args...);
    std::printf("\n");
}

bool report(int id, bool ok, std::string summary) {
    while (!summary.empty() && (summary.back() == ' ' || summary.back() == ';')) summary.pop_back();
    std::printf("criterion %d: %s %s\n", id, ok ? "PASS" : "FAIL", summary.c_str());
    std::fflush(stdout);
    return ok;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double best_se(SeEvaluator& ev, ReceiverKind r) { return optimize_tau(ev, r).se; }

// ---------------------------------------------------------------------------

bool criterion1() {
    bool ok = true;
    std::string summary;
    for (double beta : {0.5, 1.5}) {
        SeEvaluator ev(make(beta, 6.0));
        const double j0 = ev.evaluate(ReceiverKind::JointCeMudd, 0).se;
        const double j1 = ev.evaluate(ReceiverKind::JointCeMudd, 1).se;
        double best_rest = -INFINITY;
        for (int tau = 2; tau <= 20; ++tau) best_rest = std::max(best_rest, ev.evaluate(ReceiverKind::JointCeMudd, tau).se);
        const bool pass = std::abs(j0 - j1) <= 1e-6 && std::min(j0, j1) > best_rest;
        detail("beta=%.2f joint(0)=%.10f joint(1)=%.10f |diff|=%.2e max_{tau>=2}=%.10f", beta, j0, j1,
               std::abs(j0 - j1), best_rest);
        ok &= pass;
        summary += fmt("beta=%.1f: |joint(0)-joint(1)|=%.1e, margin over tau>=2 %.4f; ", beta, std::abs(j0 - j1),
                       std::min(j0, j1) - best_rest);
    }
    return report(1, ok, "joint pilot collapse at 6 dB (tol 1e-6): " + summary);
}

bool criterion2() {
    bool ok = true;
    std::string summary;
    const struct {
        double beta, target;
    } cases[] = {{0.5, 8.2}, {1.5, 8.5}};
    for (const auto& c : cases) {
        SeEvaluator joint_ev(make(c.beta, 6.0));
        const double joint6 = best_se(joint_ev, ReceiverKind::JointCeMudd);
        auto gap = [&](double snr) {
            SeEvaluator ev(make(c.beta, snr));
            return best_se(ev, ReceiverKind::OneShotCeMudd) - joint6;
        };
        double lo = 6.0, hi = 14.0;
        double glo = gap(lo), ghi = gap(hi);
        if (!(glo < 0.0 && ghi > 0.0)) {
            detail("beta=%.2f bracket failed: gap(6)=%.4f gap(14)=%.4f", c.beta, glo, ghi);
            ok = false;
            summary += fmt("beta=%.1f: no bracket; ", c.beta);
            continue;
        }
        while (hi - lo > 1e-3) {
            const double mid = 0.5 * (lo + hi);
            (gap(mid) < 0.0 ? lo : hi) = mid;
        }
        const double snr = 0.5 * (lo + hi);
        const bool pass = std::abs(snr - c.target) <= 0.3;
        detail("beta=%.2f joint(6 dB)=%.6f one-shot reaches it at %.3f dB (target %.1f +/- 0.3)", c.beta, joint6, snr,
               c.target);
        ok &= pass;
        summary += fmt("beta=%.1f: %.3f dB vs %.1f; ", c.beta, snr, c.target);
    }
    return report(2, ok, "one-shot SNR matching joint at 6 dB: " + summary);
}

bool criterion3() {
    bool ok = true;
    std::string summary;
    const struct {
        double beta, target;
    } cases[] = {{0.5, 1.47}, {1.5, 2.88}};
    for (const auto& c : cases) {
        SeEvaluator ev(make(c.beta, 6.0, 8, 8));
        ev.precompute(true, false);
        const TauOptimum j = optimize_tau(ev, ReceiverKind::JointCeMudd);
        const TauOptimum o = optimize_tau(ev, ReceiverKind::OneShotCeMudd);
        const double gap = j.se - o.se;
        const bool pass = std::abs(gap - c.target) <= 0.05 * c.target;
        detail("beta=%.2f M=N=8 joint tau=%d se=%.6f, one-shot tau=%d se=%.6f, gap=%.4f (target %.2f +/- 5%%)", c.beta,
               j.tau, j.se, o.tau, o.se, gap, c.target);
        ok &= pass;
        summary += fmt("beta=%.1f: gap %.4f vs %.2f (%+.1f%%); ", c.beta, gap, c.target, 100.0 * (gap / c.target - 1.0));
    }
    return report(3, ok, "eight-antenna joint vs one-shot gap at 6 dB: " + summary);
}

bool criterion4() {
    const SystemConfig base = make(2.75, 15.0);
    SeEvaluator ev(base);
    ev.precompute(true, true);

    // Separated receiver: look for coexisting candidates whose free energies cross.
    double prev_diff = NAN, prev_tau = NAN;
    double tau_c = NAN;
    int coexist = 0;
    auto energy_gap = [&](double pilots, std::size_t& n) {
        const FixedPointOutcome& o = ev.outcome(pilots, Detector::Optimal);
        n = o.n_converged();
        if (n < 2) return std::numeric_limits<double>::quiet_NaN();
        return o.candidates()[0].free_energy - o.candidates()[n - 1].free_energy;
    };
    double max_sep_jump = 0.0;
    for (int tau = 1; tau <= 19; ++tau) {
        std::size_t n = 0;
        const double d = energy_gap(tau, n);
        const SePoint sp = ev.evaluate(ReceiverKind::OptimumSeparated, tau);
        if (n >= 2)
            detail("tau=%2d separated se=%.6f candidates=%zu F(low)-F(high)=%+.6f", tau, sp.se, n, d);
        else
            detail("tau=%2d separated se=%.6f candidates=%zu", tau, sp.se, n);
        if (n >= 2) {
            ++coexist;
            if (!std::isnan(prev_diff) && prev_tau == tau - 1 && (prev_diff > 0.0) != (d > 0.0)) {
                // Refine the crossing over fractional pilots.
                double lo = tau - 1, hi = tau;
                for (int k = 0; k < 30; ++k) {
                    const double mid = 0.5 * (lo + hi);
                    const TrainingSolution t = solve_training(base, mid);
                    const FixedPointOutcome o = data_fixed_point(base, t, 0.0, Detector::Optimal);
                    if (o.n_converged() < 2) break;
                    const double dm = o.candidates()[0].free_energy - o.candidates()[o.n_converged() - 1].free_energy;
                    ((dm > 0.0) == (prev_diff > 0.0) ? lo : hi) = mid;
                }
                tau_c = 0.5 * (lo + hi);
            }
            prev_diff = d;
            prev_tau = tau;
        }
    }
    // Separated and one-shot on a fractional grid.
    const int steps = 1000;
    std::vector<double> sep(steps + 1), one(steps + 1);
    parallel_for(sep.size(), [&](std::size_t i) {
        const double tau = 0.02 * static_cast<double>(i);
        sep[i] = ev.evaluate_fractional(ReceiverKind::OptimumSeparated, tau).se;
        one[i] = ev.evaluate_fractional(ReceiverKind::OneShotCeMudd, tau).se;
    });
    double max_one_jump = 0.0;
    for (int i = 1; i <= steps; ++i) {
        max_sep_jump = std::max(max_sep_jump, std::abs(sep[i] - sep[i - 1]));
        max_one_jump = std::max(max_one_jump, std::abs(one[i] - one[i - 1]));
    }
    double max_int_jump = 0.0;
    for (int tau = 0; tau < 20; ++tau)
        max_int_jump = std::max(max_int_jump, std::abs(ev.evaluate(ReceiverKind::OneShotCeMudd, tau + 1).se -
                                                       ev.evaluate(ReceiverKind::OneShotCeMudd, tau).se));
    detail("coexisting taus=%d, free-energy crossing tau_c=%.4f", coexist, tau_c);
    detail("fractional grid step 0.02: max separated jump=%.4f, max one-shot jump=%.4f", max_sep_jump, max_one_jump);
    detail("integer grid: max adjacent one-shot change=%.4f", max_int_jump);
    const bool ok = coexist > 0 && std::isfinite(tau_c) && tau_c > 0.0 && tau_c < 20.0 && max_one_jump < 0.05 &&
                    max_sep_jump > 0.05;
    return report(4, ok,
                  fmt("beta=2.75 15 dB: separated crossing at tau_c=%.3f with jump %.3f; one-shot max step %.4f "
                      "(< 0.05 on the 0.02 grid)",
                      tau_c, max_sep_jump, max_one_jump));
}

bool criterion5() {
    const std::vector<double> grid{0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0};
    int within = 0, total = 0;
    std::string summary;
    auto run_curve = [&](int K, int L, bool counted) {
        const SystemConfig c = make(static_cast<double>(K) / L, 0.0, 1, 1, 20, 4);
        const sim::McConfig mc = sim::McConfig::make(K, L, c, grid, 6250, 2024);
        const auto points = sim::run_ser(mc);
        int hit = 0;
        for (const sim::SerPoint& p : points) {
            const double asym = sim::asymptotic_ser(c.with_snr_db(p.snr_db));
            const double se = std::sqrt(asym * (1.0 - asym) / p.ser.decisions);
            const bool in = std::abs(p.ser.p_hat - asym) <= 3.0 * se;
            hit += in;
            detail("K=%d L=%2d snr=%4.1f dB mc=%.5f asym=%.5f z=%+.2f decisions=%lld%s", K, L, p.snr_db, p.ser.p_hat,
                   asym, (p.ser.p_hat - asym) / se, static_cast<long long>(p.ser.decisions), in ? "" : " *");
        }
        if (counted) {
            within += hit;
            total += static_cast<int>(points.size());
            summary += fmt("L=%d %d/%zu; ", L, hit, points.size());
        } else {
            summary += fmt("K=8 L=%d %d/%zu (not scored); ", L, hit, points.size());
        }
    };
    for (int L : {32, 16, 8}) run_curve(16, L, true);
    run_curve(8, 8, false);
    const double frac = static_cast<double>(within) / total;
    return report(5, frac >= 0.9,
                  fmt("MC SER within 3 binomial SE of the large-system value at %d/%d points (%.0f%%, need 90%%): ", within,
                      total, 100.0 * frac) +
                      summary);
}

bool criterion6() {
    bool ok = true;
    double worst_quad = 0.0;
    int mc_in = 0, mc_total = 0;
    for (double beta : {0.25, 0.5, 1.0, 2.0, 2.75})
        for (double snr : {0.0, 6.0, 12.0, 18.0})
            for (int tau : {1, 2, 4, 10}) {
                const SystemConfig c = make(beta, snr);
                const TrainingSolution t = solve_training(c, tau);
                const double ours = data_fixed_point(c, t, 0.0, Detector::Lmmse).sigma2();
                const double ref = oracle::scalar_lmmse_fixed_point(
                    beta, 1.0, c.N0(), t.xi2(), [](double xi2, double s) { return oracle::quad_mmse_linear_n1(xi2, s, 1.0); });
                worst_quad = std::max(worst_quad, std::abs(ours - ref) / ref);
            }
    ok &= worst_quad <= 1e-8;
    detail("80-point grid, adaptive-quadrature MSE: max relative difference %.2e (tol 1e-8)", worst_quad);

    // Monte Carlo MSE term: bracket the scalar recursion by the MSE estimate +/- 3 standard errors.
    const struct {
        double beta, snr;
        int tau;
    } mc_cases[] = {{0.5, 6.0, 2}, {1.0, 12.0, 4}, {2.0, 6.0, 4}};
    for (const auto& k : mc_cases) {
        const SystemConfig c = make(k.beta, k.snr);
        const TrainingSolution t = solve_training(c, k.tau);
        const double ours = data_fixed_point(c, t, 0.0, Detector::Lmmse).sigma2();
        auto solve = [&](double shift) {
            return oracle::scalar_lmmse_fixed_point(k.beta, 1.0, c.N0(), t.xi2(), [&](double xi2, double s) {
                const oracle::McResult r = oracle::mc_mmse_linear(xi2, s, 1.0, 1, 1'000'000, 606);
                return r.mean + shift * r.se;
            });
        };
        const double lo = solve(-3.0), mid = solve(0.0), hi = solve(3.0);
        const bool in = ours >= lo && ours <= hi;
        mc_in += in;
        ++mc_total;
        detail("beta=%.2f snr=%.0f dB tau=%d: library %.10f, MC recursion %.10f in [%.10f, %.10f]%s", k.beta, k.snr, k.tau,
               ours, mid, lo, hi, in ? "" : " *");
    }
    ok &= mc_in == mc_total;
    return report(6, ok,
                  fmt("LMMSE fixed point vs scalar recursion: quadrature max rel diff %.1e (tol 1e-8); 10^6-sample MC "
                      "brackets %d/%d",
                      worst_quad, mc_in, mc_total));
}

bool criterion7() {
    const auto start = std::chrono::steady_clock::now();
    int failures = 0;
    std::string summary;

    // Training closed form vs bisection.
    double worst_tr = 0.0;
    for (double beta : {0.1, 0.5, 1.5, 2.75, 10.0})
        for (double snr : {-5.0, 0.0, 6.0, 15.0, 30.0})
            for (int M : {1, 4, 16})
                for (int p = 1; p <= 20; ++p) {
                    const SystemConfig c = make(beta, snr, M, M);
                    const double a = solve_training(c, p).sigma_tr2();
                    worst_tr = std::max(worst_tr, std::abs(a - solve_training_bisection(c, p)) / a);
                }
    failures += worst_tr > 1e-12;
    detail("training closed form vs bisection: max rel diff %.1e (tol 1e-12)", worst_tr);

    // BPSK MMSE identity from the QPSK posterior mean.
    double worst_id = 0.0;
    for (double rho : {0.1, 1.0, 10.0}) {
        auto f = [&](double w) {
            const std::complex<double> z[1]{{1.0 + w / std::sqrt(rho), 1.0}}, h[1]{{1.0, 0.0}};
            const double e = 1.0 - qpsk_posterior_mean(z, h, 2.0 / rho, 2.0, 1).real();
            return std::exp(-0.5 * w * w) / std::sqrt(2.0 * M_PI) * e * e;
        };
        const double direct = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15, 1e-14);
        worst_id = std::max(worst_id, std::abs(direct - mmse_bpsk(rho)));
    }
    failures += worst_id > 1e-9;
    detail("BPSK MMSE identity: max abs diff %.1e (tol 1e-9)", worst_id);

    // I-MMSE by central differences.
    double worst_immse = 0.0;
    for (double rho : {0.05, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0}) {
        const double h = 1e-4;
        const double d = (bpsk_capacity_nats(rho + h) - bpsk_capacity_nats(rho - h)) / (2.0 * h);
        worst_immse = std::max(worst_immse, std::abs(d - 0.5 * mmse_bpsk(rho)));
    }
    failures += worst_immse > 1e-5;
    detail("I-MMSE finite difference: max abs diff %.1e (tol 1e-5)", worst_immse);

    // Receiver ordering on a 3x3x3 grid, plus node doubling on the resulting contexts.
    int order_bad = 0, order_total = 0;
    double worst_double = 0.0;
    for (double beta : {0.5, 1.5, 2.75})
        for (double snr : {0.0, 6.0, 15.0}) {
            SeEvaluator ev(make(beta, snr));
            for (int tau : {2, 6, 12}) {
                const double lm = ev.evaluate(ReceiverKind::LmmseReceiver, tau).se;
                const double sep = ev.evaluate(ReceiverKind::OptimumSeparated, tau).se;
                const double one = ev.evaluate(ReceiverKind::OneShotCeMudd, tau).se;
                const double joint = ev.evaluate(ReceiverKind::JointCeMudd, tau).se;
                const double perf = ev.evaluate(ReceiverKind::PerfectCsiBound, tau).se;
                const double eps = 1e-10;
                const bool good = lm <= sep + eps && sep <= one + eps && one <= joint + eps && joint <= perf + eps;
                order_bad += !good;
                ++order_total;
                if (!good)
                    detail("ordering violated at beta=%.2f snr=%.0f tau=%d: %.6f %.6f %.6f %.6f %.6f", beta, snr, tau, lm,
                           sep, one, joint, perf);
                const TrainingSolution t = solve_training(ev.base(), tau);
                for (Detector d : {Detector::Optimal, Detector::Lmmse}) {
                    const SimoContext ctx = SimoContext::make(t.xi2(), ev.outcome(tau, d).sigma2(), 1.0, 1, 1);
                    for (auto f : {mmse_term_optimal, mmse_term_lmmse, decoupled_mutual_info, ser_large_system}) {
                        const NodeDoublingCheck chk = check_node_doubling(f, ctx);
                        worst_double = std::max(worst_double, chk.rel_diff);
                    }
                }
            }
        }
    failures += order_bad > 0;
    failures += worst_double > 1e-8;
    detail("receiver ordering: %d/%d grid points violate", order_bad, order_total);
    detail("node doubling on fixed-point contexts: max rel change %.1e (tol 1e-8)", worst_double);

    // MC determinism under a fixed seed, across thread counts.
    const SystemConfig c = make(1.0, 0.0, 1, 1, 10, 3);
    const sim::McConfig mc = sim::McConfig::make(8, 8, c, {2.0, 8.0}, 200, 31);
    setenv("REPLICA_CDMA_THREADS", "1", 1);
    const auto a = sim::run_ser(mc);
    setenv("REPLICA_CDMA_THREADS", "7", 1);
    const auto b = sim::run_ser(mc);
    unsetenv("REPLICA_CDMA_THREADS");
    const auto d = sim::run_ser(mc);
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        same &= a[i].ser.errors == b[i].ser.errors && a[i].ser.errors == d[i].ser.errors;
    failures += !same;
    detail("MC determinism across 1/7/default threads: %s", same ? "identical" : "DIFFERENT");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += secs >= 60.0;
    return report(7, failures == 0,
                  fmt("property suite: training %.0e, MMSE identity %.0e, I-MMSE %.0e, ordering %d/%d ok, doubling %.0e, "
                      "determinism %s, %.1f s (< 60 s)",
                      worst_tr, worst_id, worst_immse, order_total - order_bad, order_total, worst_double,
                      same ? "ok" : "broken", secs));
}

bool criterion8() {
    bool ok = true;
    std::string summary;
    const int antennas[] = {1, 2, 4, 8, 16};
    const ReceiverKind receivers[] = {ReceiverKind::OneShotCeMudd, ReceiverKind::OptimumSeparated,
                                      ReceiverKind::LmmseReceiver};
    for (double beta : {0.5, 1.5}) {
        std::vector<std::vector<int>> taus(3);
        for (int M : antennas) {
            SeEvaluator ev(make(beta, 6.0, M, M));
            ev.precompute(true, true);
            for (int r = 0; r < 3; ++r) taus[r].push_back(optimize_tau(ev, receivers[r]).tau);
        }
        for (int r = 0; r < 3; ++r) {
            bool mono = true;
            for (std::size_t i = 1; i < taus[r].size(); ++i) mono &= taus[r][i] >= taus[r][i - 1];
            const double last = taus[r].back() / 20.0;
            const bool pass = mono && last >= 0.4;
            ok &= pass;
            std::string row;
            for (int t : taus[r]) row += fmt(" %d", t);
            detail("beta=%.2f %-9s tau_opt over M=1,2,4,8,16:%s (M=16 ratio %.2f)%s", beta,
                   std::string(to_string(receivers[r])).c_str(), row.c_str(), last, pass ? "" : " *");
            summary += fmt("beta=%.1f %s%s ->%.2f; ", beta, std::string(to_string(receivers[r])).c_str(), row.c_str(), last);
        }
    }
    return report(8, ok, "tau_opt/Tc nondecreasing in M=N and >= 0.4 at 16: " + summary);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    int only = 0;
    app.add_option("--criterion", only, "run a single criterion (1-8); all when omitted")->check(CLI::Range(0, 8));
    CLI11_PARSE(app, argc, argv);

    const std::function<bool()> all[] = {criterion1, criterion2, criterion3, criterion4,
                                         criterion5, criterion6, criterion7, criterion8};
    bool ok = true;
    for (int i = 1; i <= 8; ++i) {
        if (only != 0 && only != i) continue;
        const auto start = std::chrono::steady_clock::now();
        try {
            ok &= all[i - 1]();
        } catch (const std::exception& e) {
            ok &= report(i, false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("  (%.1f s)\n", secs);
    }
    return ok ? 0 : 1;
}
