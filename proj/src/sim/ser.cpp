// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/parallel.hpp"
#include "replica_cdma/sim/mc.hpp"
#include "replica_cdma/simo.hpp"
#include "replica_cdma/training.hpp"

#include <numeric>

namespace replica_cdma::sim {

namespace {

struct BlockTally {
    int errors = 0;
    int decisions = 0;
    int regularized = 0;
};

bool same_quadrant(std::complex<double> soft, std::complex<double> truth) {
    return (soft.real() >= 0.0) == (truth.real() > 0.0) && (soft.imag() >= 0.0) == (truth.imag() > 0.0);
}

} // namespace

std::vector<SerPoint> run_ser(const McConfig& mc) {
    const SystemConfig& c = mc.config();
    if (c.tau() < 1) throw ConfigError("tau", "simulation needs at least one pilot period");
    std::vector<SerPoint> out;
    for (std::size_t i = 0; i < mc.snr_db_grid().size(); ++i) {
        const double snr = mc.snr_db_grid()[i];
        const double N0 = noise_for_snr_db(c.P(), snr);
        std::vector<BlockTally> tallies(static_cast<std::size_t>(mc.trials()));
        parallel_for(tallies.size(), [&](std::size_t blk) {
            Rng rng = block_stream(mc.seed(), i, blk);
            const Block b = generate_block(mc, N0, rng);
            const ChannelEstimate est = lmmse_channel_estimate(b);
            BlockTally& tally = tallies[blk];
            for (int t = c.tau(); t < c.Tc(); ++t) {
                const DetectResult d = lmmse_detect(b, est, t);
                tally.regularized += d.regularized;
                tally.errors += !same_quadrant(d.soft(0), b.U(t, 0));
                ++tally.decisions;
            }
        });
        std::int64_t errors = 0, decisions = 0, regularized = 0;
        for (const BlockTally& t : tallies) {
            errors += t.errors;
            decisions += t.decisions;
            regularized += t.regularized;
        }
        out.push_back({snr, SerEstimate::from_counts(errors, decisions), regularized});
    }
    return out;
}

double asymptotic_ser(const SystemConfig& config, const SolverSpec& spec) {
    const TrainingSolution tr = solve_training(config, config.tau());
    const FixedPointOutcome fp = data_fixed_point(config, tr, 0.0, Detector::Lmmse, spec);
    const SimoContext ctx = SimoContext::make(tr.xi2(), fp.sigma2(), config.P(), config.M(), config.N());
    return ser_large_system(ctx, spec.quad);
}

} // namespace replica_cdma::sim
