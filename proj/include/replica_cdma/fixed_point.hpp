// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "replica_cdma/config.hpp"
#include "replica_cdma/quadrature.hpp"
#include "replica_cdma/training.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace replica_cdma {

enum class Detector { Optimal, Lmmse };

std::string_view to_string(Detector d);

struct SolverSpec {
    double damping = 0.5;
    double tol = 1e-10;
    int max_iters = 10000;
    // Seeds tried in addition to N0 and N0 + beta*P, which are always used.
    std::vector<double> extra_seeds;
    double dedup_rel = 1e-6;
    QuadratureSpec quad;
};

struct Candidate {
    double sigma2;
    double mutual_info; // bits per stream at sigma2; NaN when not converged
    double free_energy; // bits; NaN when not converged
    double residual;    // |sigma2 - RHS(sigma2)| / sigma2
    bool converged;
    int iterations;
    double seed;
};

class NoConvergence : public std::runtime_error {
public:
    NoConvergence(const std::string& what, std::vector<Candidate> attempts, double kappa)
        : std::runtime_error(what), attempts_(std::move(attempts)), kappa_(kappa) {}
    const std::vector<Candidate>& attempts() const noexcept { return attempts_; }
    double kappa() const noexcept { return kappa_; }

private:
    std::vector<Candidate> attempts_;
    double kappa_;
};

// Result of one data-phase fixed-point solve. Converged candidates are
// deduplicated and sorted by sigma2; failed seeds are kept for diagnostics.
class FixedPointOutcome {
public:
    const std::vector<Candidate>& candidates() const noexcept { return candidates_; }
    std::size_t selected_index() const noexcept { return selected_; }
    const Candidate& selected() const { return candidates_.at(selected_); }
    double sigma2() const { return selected().sigma2; }
    std::size_t n_converged() const;
    double kappa() const noexcept { return kappa_; }
    Detector detector() const noexcept { return detector_; }
    double xi2() const noexcept { return xi2_; }

    // Index of the converged candidate with least free energy; ties go to
    // the smaller sigma2.
    static std::size_t select(const std::vector<Candidate>& candidates);

    friend FixedPointOutcome data_fixed_point(const SystemConfig&, const TrainingSolution&, double, Detector,
                                              const SolverSpec&);

private:
    FixedPointOutcome() = default;
    std::vector<Candidate> candidates_;
    std::size_t selected_ = 0;
    double kappa_ = 0.0;
    Detector detector_ = Detector::Optimal;
    double xi2_ = 1.0;
};

// Right-hand side of the data-phase fixed-point equation at sigma2.
double data_rhs(const SystemConfig& config, const TrainingSolution& training, double kappa, Detector detector,
                double sigma2, const QuadratureSpec& quad = {});

// Free energy of a data-phase candidate, in bits.
double candidate_free_energy(const SystemConfig& config, const TrainingSolution& training, double kappa,
                             double sigma2, const QuadratureSpec& quad = {});

// Mutual information per stream at a data-phase variance.
double stream_mutual_info(const SystemConfig& config, const TrainingSolution& training, double sigma2,
                          const QuadratureSpec& quad = {});

FixedPointOutcome data_fixed_point(const SystemConfig& config, const TrainingSolution& training, double kappa,
                                   Detector detector, const SolverSpec& spec = {});

// Solves at every node (sorted in [0,1]), seeding each from the previous
// node's candidates. NoConvergence carries the failing node in kappa().
std::vector<FixedPointOutcome> kappa_continuation(const SystemConfig& config, const TrainingSolution& training,
                                                  Detector detector, const std::vector<double>& nodes,
                                                  const SolverSpec& spec = {});

struct KappaRule {
    int nodes = 33;          // Gauss-Legendre nodes per smooth piece
    double locate_tol = 1e-4; // width to which a branch jump is bracketed
    int max_splits = 4;
};

struct KappaIntegral {
    double value;                        // integral over [0,1] of C(sigma2(kappa)), bits per stream
    std::vector<double> transitions;     // located jump points kappa_c
    int solves;                          // fixed-point solves used
};

// Integral of the selected-branch mutual information over kappa in [0,1],
// split at any branch jump of the selected solution.
KappaIntegral integrate_over_kappa(const SystemConfig& config, const TrainingSolution& training,
                                   const SolverSpec& spec = {}, const KappaRule& rule = {});

} // namespace replica_cdma
