// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace replica_cdma {

// Raised when a configuration violates a model invariant. violation() names
// the broken constraint, what() carries a human readable message.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string violation, const std::string& message)
        : std::invalid_argument(message), violation_(std::move(violation)) {}
    const std::string& violation() const noexcept { return violation_; }

private:
    std::string violation_;
};

// Unvalidated parameter bag. Anything goes here; validate() turns it into a
// SystemConfig or throws.
struct SystemParams {
    double beta = 1.0;
    int M = 1;
    int N = 1;
    double P = 1.0;
    double N0 = 0.25;
    int Tc = 20;
    int tau = 0;
};

class SystemConfig;
SystemConfig validate(const SystemParams& params);

// Validated system description. All variances are linear.
class SystemConfig {
public:
    double beta() const noexcept { return p_.beta; }
    int M() const noexcept { return p_.M; }
    int N() const noexcept { return p_.N; }
    double P() const noexcept { return p_.P; }
    double N0() const noexcept { return p_.N0; }
    int Tc() const noexcept { return p_.Tc; }
    int tau() const noexcept { return p_.tau; }

    // Per-stream power P/M.
    double stream_power() const noexcept { return p_.P / p_.M; }
    double snr_db() const;
    const SystemParams& params() const noexcept { return p_; }

    SystemConfig with_tau(int tau) const;
    SystemConfig with_beta(double beta) const;
    SystemConfig with_antennas(int M, int N) const;
    // Keeps P and moves N0 so that P/N0 hits the requested SNR.
    SystemConfig with_snr_db(double snr_db) const;

    friend SystemConfig validate(const SystemParams& params);

private:
    explicit SystemConfig(const SystemParams& p) : p_(p) {}
    SystemParams p_;
};

// Validates an existing config; returns it unchanged.
SystemConfig validate(const SystemConfig& config);

double db_to_linear(double db);
double linear_to_db(double ratio);
// Noise variance giving P/N0 = 10^(snr_db/10).
double noise_for_snr_db(double P, double snr_db);

enum class ReceiverKind { JointCeMudd, OneShotCeMudd, OptimumSeparated, LmmseReceiver, PerfectCsiBound };

inline constexpr ReceiverKind kAllReceivers[] = {
    ReceiverKind::JointCeMudd, ReceiverKind::OneShotCeMudd, ReceiverKind::OptimumSeparated,
    ReceiverKind::LmmseReceiver, ReceiverKind::PerfectCsiBound};

std::string_view to_string(ReceiverKind kind);
// Accepts joint, one-shot, separated, lmmse, perfect.
ReceiverKind parse_receiver(std::string_view name);

} // namespace replica_cdma
