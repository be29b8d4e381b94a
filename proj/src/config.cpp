// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/config.hpp"

#include <cmath>

namespace replica_cdma {

SystemConfig validate(const SystemParams& p) {
    if (!(p.beta > 0.0) || !std::isfinite(p.beta))
        throw ConfigError("beta", "system load must be positive");
    if (p.M < 1)
        throw ConfigError("M", "transmit antennas must be at least 1");
    if (p.N < 1)
        throw ConfigError("N", "receive antennas must be at least 1");
    if (!(p.P > 0.0) || !std::isfinite(p.P))
        throw ConfigError("P", "power must be positive");
    if (!(p.N0 > 0.0) || !std::isfinite(p.N0))
        throw ConfigError("N0", "noise variance must be positive");
    if (p.Tc < 2)
        throw ConfigError("Tc", "coherence time must be at least 2");
    if (p.tau < 0)
        throw ConfigError("tau", "tau must be nonnegative");
    if (p.tau > p.Tc)
        throw ConfigError("tau", "tau exceeds coherence time");
    return SystemConfig(p);
}

SystemConfig validate(const SystemConfig& config) { return validate(config.params()); }

double SystemConfig::snr_db() const { return linear_to_db(p_.P / p_.N0); }

SystemConfig SystemConfig::with_tau(int tau) const {
    SystemParams p = p_;
    p.tau = tau;
    return validate(p);
}

SystemConfig SystemConfig::with_beta(double beta) const {
    SystemParams p = p_;
    p.beta = beta;
    return validate(p);
}

SystemConfig SystemConfig::with_antennas(int M, int N) const {
    SystemParams p = p_;
    p.M = M;
    p.N = N;
    return validate(p);
}

SystemConfig SystemConfig::with_snr_db(double snr_db) const {
    SystemParams p = p_;
    p.N0 = noise_for_snr_db(p.P, snr_db);
    return validate(p);
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }

double noise_for_snr_db(double P, double snr_db) { return P / db_to_linear(snr_db); }

std::string_view to_string(ReceiverKind kind) {
    switch (kind) {
    case ReceiverKind::JointCeMudd: return "joint";
    case ReceiverKind::OneShotCeMudd: return "one-shot";
    case ReceiverKind::OptimumSeparated: return "separated";
    case ReceiverKind::LmmseReceiver: return "lmmse";
    case ReceiverKind::PerfectCsiBound: return "perfect";
    }
    return "unknown";
}

ReceiverKind parse_receiver(std::string_view name) {
    for (ReceiverKind k : kAllReceivers)
        if (to_string(k) == name) return k;
    throw ConfigError("receiver", "unknown receiver '" + std::string(name) + "'");
}

} // namespace replica_cdma
