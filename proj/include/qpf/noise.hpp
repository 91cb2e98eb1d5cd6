#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "qpf/lattice.hpp"
#include "qpf/operators.hpp"

// Levy characteristics with finite atomic jump measures, their characteristic
// functionals, lattice sampling of the generalized white noise, and the
// convolved Euclidean field.

namespace qpf {

struct LevyAtom {
    double jump = 0.0;      ///< s != 0
    double intensity = 0.0; ///< lambda > 0
};

/// (a, sigma, M) with M a finite atomic measure; all moments finite.
struct LevyTriple {
    double drift = 0.0;
    double sigma = 0.0;
    std::vector<LevyAtom> atoms;

    LevyTriple() = default;
    LevyTriple(double a, double s, std::vector<LevyAtom> at);

    static LevyTriple gaussian(double sigma) { return LevyTriple(0.0, sigma, {}); }
};

/// Psi(t) = i a t - sigma^2 t^2 / 2 + sum_i lambda_i (e^{i s_i t} - 1 - i s_i t/(1+s_i^2)).
std::complex<double> psi_eval(double t, const LevyTriple& levy);

/// C(f) = exp( int Psi(f(x)) d^N x ), evaluated as the exact lattice Haar sum.
std::complex<double> char_functional(const GridFn& f, const LevyTriple& levy);

/// c_1 = a + sum lambda s^3/(1+s^2); c_2 = sigma^2 + sum lambda s^2;
/// c_m = sum lambda s^m for m >= 3. Returned as c_1..c_mmax.
std::vector<double> moment_constants(const LevyTriple& levy, int mmax);

/// Per-cell pairings <1_cell, noise>, independent across cells.
struct NoiseSample {
    Lattice lat;
    std::vector<double> increments;
};

/// Cell law with characteristic function exp(v Psi(t)), realized as
/// v (a - sum lambda_i s_i/(1+s_i^2)) + Normal(0, sigma^2 v) + sum_i s_i Poisson(v lambda_i).
/// Streams are keyed by (seed, sample_index, cell), so parallel fills and
/// repeated runs agree exactly.
NoiseSample sample_noise(const Lattice& lat, const LevyTriple& levy, uint64_t seed,
                         uint64_t sample_index = 0);

/// Density of Phi = G * noise on the lattice.
struct FieldSample {
    Lattice lat;
    std::vector<double> values;
};

/// values = G convolved with the increment density (increments / cell volume),
/// computed spectrally; pairing against any g then matches <G*g, noise>.
FieldSample sample_field(const NoiseSample& noise, const GreenKernel& G, const BilinearForm& form);

/// Phi(g) = Haar sum of g * field density.
double field_pair(const FieldSample& field, const GridFn& g);

/// <G*g, noise> = sum_cells (G*g)(x_cell) increment_cell; the fast pairing
/// used by the Monte-Carlo loops (precompute G*g once).
double noise_pair(const NoiseSample& noise, const GridFn& g_convolved);

/// (1/n) sum_j exp(i Phi_j(f)); compare against char_functional(G * f).
std::complex<double> empirical_char_field(const GridFn& f, const LevyTriple& levy, const GreenKernel& G,
                                          const BilinearForm& form, i64 nsamples, uint64_t seed);

} // namespace qpf
