// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

namespace replica_cdma {

// Gaussian rule for a probability weight: weights sum to one, so
// sum(w_i f(x_i)) approximates E[f(X)].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
    std::size_t size() const noexcept { return nodes.size(); }
};

// X ~ N(0, 1).
GaussRule gauss_hermite_normal(int n);
// X ~ Gamma(shape, 1), i.e. generalized Gauss-Laguerre with alpha = shape - 1.
GaussRule gauss_laguerre_gamma(int n, double shape);
// X ~ Uniform(0, 1).
GaussRule gauss_legendre_unit(int n);

// Process-wide memoized versions; references stay valid for the program lifetime.
const GaussRule& hermite_rule(int n);
const GaussRule& laguerre_rule(int n, double shape);
const GaussRule& legendre_rule(int n);

// Node counts for the decoupled-channel expectations: gamma_nodes for the
// channel-norm law, gauss_nodes for the scalar Gaussian noise integrals.
struct QuadratureSpec {
    int gamma_nodes = 64;
    int gauss_nodes = 64;

    QuadratureSpec doubled() const { return {2 * gamma_nodes, 2 * gauss_nodes}; }
};

} // namespace replica_cdma
