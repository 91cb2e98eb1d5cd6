#pragma once

#include <cstdint>
#include <vector>

#include "qpf/noise.hpp"

// Set-partition combinatorics, analytic and Monte-Carlo Schwinger functions,
// and the p-adic Brownian sheet.

namespace qpf {

/// Partition of {0..m-1} into disjoint non-empty blocks covering everything;
/// blocks are sorted by least element, elements ascending within a block.
struct SetPartition {
    std::vector<std::vector<int>> blocks;
};

/// All partitions of an m-element set in canonical order; count is the Bell
/// number B_m. Allows m = 0 (the empty partition) for the S_0 convention.
std::vector<SetPartition> set_partitions(int m);

/// S_m(g_1 x ... x g_m) = sum over partitions of prod over blocks of
/// c_|block| int prod_k (G * g_jk) d^N x. Exactly symmetric in the g's:
/// per-partition contributions are accumulated in sorted order.
double schwinger_analytic(const std::vector<GridFn>& gs, const LevyTriple& levy, const GreenKernel& G,
                          const BilinearForm& form);

struct McEstimate {
    double estimate = 0.0;
    double stderror = 0.0;
    i64 nsamples = 0;
};

/// Monte-Carlo mean of prod_j Phi(g_j) over field samples.
McEstimate schwinger_mc(const std::vector<GridFn>& gs, const LevyTriple& levy, const GreenKernel& G,
                        const BilinearForm& form, i64 nsamples, uint64_t seed);

/// W evaluated at an increasing ladder of radii.
struct SheetPath {
    std::vector<double> radii;  ///< strictly increasing p-powers
    std::vector<double> values; ///< values[r] = W(radii[r])
};

/// Radial construction of W(t) = noise(ball indicator of radius ||t||):
/// W(rho_0) ~ N(0, sigma^2 rho_0^N) and independent Gaussian increments with
/// variance sigma^2 (rho_{r+1}^N - rho_r^N); W(0) = 0 by convention.
SheetPath sheet_sample(const std::vector<double>& radii, int dim, double sigma, uint64_t seed,
                       uint64_t path_index = 0);

} // namespace qpf
