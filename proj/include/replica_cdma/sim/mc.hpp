// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "replica_cdma/config.hpp"
#include "replica_cdma/fixed_point.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace replica_cdma::sim {

enum class Spreading { QpskChips, GaussianChips };

std::string_view to_string(Spreading s);
Spreading parse_spreading(std::string_view name);

// Finite-size Monte Carlo setup. config.beta() must equal K/L; its N0 is
// ignored in favour of the SNR grid.
class McConfig {
public:
    static McConfig make(int K, int L, const SystemConfig& config, std::vector<double> snr_db_grid,
                         std::int64_t trials, std::uint64_t seed, Spreading spreading = Spreading::QpskChips);

    int K() const noexcept { return K_; }
    int L() const noexcept { return L_; }
    const SystemConfig& config() const noexcept { return config_; }
    const std::vector<double>& snr_db_grid() const noexcept { return grid_; }
    std::int64_t trials() const noexcept { return trials_; }
    std::uint64_t seed() const noexcept { return seed_; }
    Spreading spreading() const noexcept { return spreading_; }
    int streams() const noexcept { return K_ * config_.M(); }

private:
    McConfig(int K, int L, SystemConfig c, std::vector<double> g, std::int64_t t, std::uint64_t s, Spreading sp)
        : K_(K), L_(L), config_(std::move(c)), grid_(std::move(g)), trials_(t), seed_(s), spreading_(sp) {}
    int K_, L_;
    SystemConfig config_;
    std::vector<double> grid_;
    std::int64_t trials_;
    std::uint64_t seed_;
    Spreading spreading_;
};

using Rng = std::mt19937_64;

// Independent stream for (seed, grid point, block); depends on nothing else,
// so results do not depend on scheduling.
Rng block_stream(std::uint64_t seed, std::uint64_t point, std::uint64_t block);

// One coherence block. Streams are indexed j = k*M + m.
struct Block {
    int L = 0;
    int tau = 0;
    double N0 = 0.0;
    double stream_power = 0.0;
    Eigen::MatrixXcd H;              // N x KM channel
    std::vector<Eigen::MatrixXcd> S; // Tc entries, L x KM spreading chips
    Eigen::MatrixXcd U;              // Tc x KM symbols; rows < tau are pilots
    std::vector<Eigen::MatrixXcd> Y; // Tc entries, L x N received chips
};

Block generate_block(const McConfig& mc, double N0, Rng& rng);

// Received chips for period t from (H, S, U) without noise.
Eigen::MatrixXcd noiseless_received(const Block& block, int t);

struct ChannelEstimate {
    Eigen::MatrixXcd Hhat;     // N x KM posterior mean
    Eigen::MatrixXcd error_cov; // KM x KM, shared by all receive antennas
    Eigen::VectorXd error_var;  // diagonal of error_cov
};

// Pilot coefficient matrix, rows t*L + l, entries s_{l,t,j} x_{t,j} / sqrt(L).
Eigen::MatrixXcd pilot_matrix(const Block& block);
ChannelEstimate lmmse_channel_estimate(const Block& block);

struct DetectResult {
    Eigen::VectorXcd soft; // KM linear MMSE symbol estimates
    bool regularized = false;
};

DetectResult lmmse_detect(const Block& block, const ChannelEstimate& est, int t);

struct SerEstimate {
    double p_hat;
    std::int64_t errors;
    std::int64_t decisions;
    double ci95;

    static SerEstimate from_counts(std::int64_t errors, std::int64_t decisions);
};

struct SerPoint {
    double snr_db;
    SerEstimate ser;
    std::int64_t regularized;
};

// SER of stream (k=1, m=1) per SNR grid point.
std::vector<SerPoint> run_ser(const McConfig& mc);

// Large-system SER of the LMMSE receiver with config.tau() pilots.
double asymptotic_ser(const SystemConfig& config, const SolverSpec& spec = {});

} // namespace replica_cdma::sim
