// SPDX-License-Identifier: Apache-2.0
#include "replica_cdma/sim/mc.hpp"

#include <cmath>
#include <stdexcept>

namespace replica_cdma::sim {

Eigen::MatrixXcd pilot_matrix(const Block& b) {
    const int L = b.L;
    const int KM = static_cast<int>(b.H.cols());
    const double scale = 1.0 / std::sqrt(static_cast<double>(L));
    Eigen::MatrixXcd A(L * b.tau, KM);
    for (int t = 0; t < b.tau; ++t)
        A.middleRows(t * L, L) = b.S[t] * b.U.row(t).transpose().asDiagonal() * scale;
    return A;
}

ChannelEstimate lmmse_channel_estimate(const Block& b) {
    if (b.tau < 1) throw std::invalid_argument("lmmse_channel_estimate: at least one pilot period is required");
    const int L = b.L;
    const int N = static_cast<int>(b.H.rows());
    const int KM = static_cast<int>(b.H.cols());
    const Eigen::MatrixXcd A = pilot_matrix(b);

    Eigen::MatrixXcd obs(L * b.tau, N);
    for (int t = 0; t < b.tau; ++t) obs.middleRows(t * L, L) = b.Y[t];

    Eigen::MatrixXcd gram = A.adjoint() * A;
    gram.diagonal().array() += b.N0;
    const Eigen::LLT<Eigen::MatrixXcd> llt(gram);
    if (llt.info() != Eigen::Success) throw std::runtime_error("lmmse_channel_estimate: Gram matrix not positive definite");

    ChannelEstimate est;
    est.Hhat = llt.solve(A.adjoint() * obs).transpose();
    est.error_cov = b.N0 * llt.solve(Eigen::MatrixXcd::Identity(KM, KM));
    est.error_var = est.error_cov.diagonal().real();
    return est;
}

DetectResult lmmse_detect(const Block& b, const ChannelEstimate& est, int t) {
    if (t < b.tau || t >= static_cast<int>(b.S.size()))
        throw std::out_of_range("lmmse_detect: period outside the communication phase");
    const int L = b.L;
    const int N = static_cast<int>(b.H.rows());
    const int KM = static_cast<int>(b.H.cols());
    const int LN = L * N;
    const double q = b.stream_power;
    const double scale = 1.0 / std::sqrt(static_cast<double>(L));
    const Eigen::MatrixXcd& S = b.S[t];

    // Signal columns kron(s_j, hhat_j) / sqrt(L), row index l*N + n.
    Eigen::MatrixXcd G(LN, KM);
    for (int j = 0; j < KM; ++j)
        for (int l = 0; l < L; ++l) G.block(l * N, j, N, 1) = S(l, j) * scale * est.Hhat.col(j);

    Eigen::MatrixXcd CL = (S * est.error_var.cwiseMax(0.0).asDiagonal() * S.adjoint()) * (q / L);
    CL.diagonal().array() += b.N0;

    Eigen::MatrixXcd R = q * G * G.adjoint();
    for (int l = 0; l < L; ++l)
        for (int m = 0; m < L; ++m)
            for (int n = 0; n < N; ++n) R(l * N + n, m * N + n) += CL(l, m);

    Eigen::VectorXcd y(LN);
    for (int l = 0; l < L; ++l)
        for (int n = 0; n < N; ++n) y(l * N + n) = b.Y[t](l, n);

    DetectResult out;
    Eigen::LLT<Eigen::MatrixXcd> llt(R);
    if (llt.info() != Eigen::Success) {
        const double reg = 1e-12 * R.trace().real();
        R.diagonal().array() += reg;
        llt.compute(R);
        out.regularized = true;
        if (llt.info() != Eigen::Success) throw std::runtime_error("lmmse_detect: covariance is singular");
    }
    out.soft = q * G.adjoint() * llt.solve(y);
    return out;
}

} // namespace replica_cdma::sim
