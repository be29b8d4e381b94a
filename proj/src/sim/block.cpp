// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/sim/mc.hpp"

#include <cmath>
#include <stdexcept>

namespace replica_cdma::sim {

std::string_view to_string(Spreading s) { return s == Spreading::QpskChips ? "qpsk" : "gaussian"; }

Spreading parse_spreading(std::string_view name) {
    if (name == "qpsk") return Spreading::QpskChips;
    if (name == "gaussian") return Spreading::GaussianChips;
    throw ConfigError("spreading", "unknown spreading '" + std::string(name) + "'");
}

McConfig McConfig::make(int K, int L, const SystemConfig& config, std::vector<double> grid, std::int64_t trials,
                        std::uint64_t seed, Spreading spreading) {
    if (K < 1) throw ConfigError("K", "user count must be at least 1");
    if (L < 1) throw ConfigError("L", "spreading factor must be at least 1");
    if (trials < 1) throw ConfigError("trials", "trials must be at least 1");
    const double ratio = static_cast<double>(K) / L;
    if (std::abs(config.beta() - ratio) > 1e-12 * ratio)
        throw ConfigError("beta", "beta must equal K/L");
    for (double s : grid)
        if (!std::isfinite(s)) throw ConfigError("snr_db", "SNR grid entries must be finite");
    return McConfig(K, L, validate(config), std::move(grid), trials, seed, spreading);
}

Rng block_stream(std::uint64_t seed, std::uint64_t point, std::uint64_t block) {
    auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v); };
    auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
    std::seed_seq seq{lo(seed), hi(seed), lo(point), hi(point), lo(block), hi(block)};
    return Rng(seq);
}

namespace {

class BitSource {
public:
    explicit BitSource(Rng& rng) : rng_(rng) {}
    double sign() {
        if (left_ == 0) {
            word_ = rng_();
            left_ = 64;
        }
        const double s = (word_ & 1u) ? 1.0 : -1.0;
        word_ >>= 1;
        --left_;
        return s;
    }

private:
    Rng& rng_;
    std::uint64_t word_ = 0;
    int left_ = 0;
};

} // namespace

Block generate_block(const McConfig& mc, double N0, Rng& rng) {
    const SystemConfig& c = mc.config();
    const int KM = mc.streams();
    const int L = mc.L();
    const int N = c.N();
    const int Tc = c.Tc();
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    const double amp = std::sqrt(c.stream_power() / 2.0);

    BitSource bits(rng);
    std::normal_distribution<double> normal(0.0, inv_sqrt2);
    auto cn = [&](double sd) { return std::complex<double>{sd * normal(rng), sd * normal(rng)}; };

    Block b;
    b.L = L;
    b.tau = c.tau();
    b.N0 = N0;
    b.stream_power = c.stream_power();
    b.H.resize(N, KM);
    for (int j = 0; j < KM; ++j)
        for (int n = 0; n < N; ++n) b.H(n, j) = cn(1.0);

    b.S.resize(Tc);
    for (int t = 0; t < Tc; ++t) {
        b.S[t].resize(L, KM);
        for (int j = 0; j < KM; ++j)
            for (int l = 0; l < L; ++l) {
                if (mc.spreading() == Spreading::QpskChips) {
                    const double re = bits.sign();
                    b.S[t](l, j) = {re * inv_sqrt2, bits.sign() * inv_sqrt2};
                } else {
                    b.S[t](l, j) = cn(1.0);
                }
            }
    }

    b.U.resize(Tc, KM);
    for (int t = 0; t < Tc; ++t)
        for (int j = 0; j < KM; ++j) {
            const double re = bits.sign();
            b.U(t, j) = {re * amp, bits.sign() * amp};
        }

    const double noise_sd = std::sqrt(N0);
    b.Y.resize(Tc);
    for (int t = 0; t < Tc; ++t) {
        b.Y[t] = noiseless_received(b, t);
        for (int n = 0; n < N; ++n)
            for (int l = 0; l < L; ++l) b.Y[t](l, n) += cn(noise_sd);
    }
    return b;
}

Eigen::MatrixXcd noiseless_received(const Block& b, int t) {
    const Eigen::MatrixXcd weighted = b.S[t] * b.U.row(t).transpose().asDiagonal();
    return weighted * b.H.transpose() / std::sqrt(static_cast<double>(b.L));
}

SerEstimate SerEstimate::from_counts(std::int64_t errors, std::int64_t decisions) {
    if (decisions <= 0 || errors < 0 || errors > decisions) throw std::invalid_argument("SerEstimate: bad counts");
    const double p = static_cast<double>(errors) / decisions;
    return {p, errors, decisions, 1.96 * std::sqrt(p * (1.0 - p) / decisions)};
}

} // namespace replica_cdma::sim
