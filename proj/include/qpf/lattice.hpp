#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qpf/prational.hpp"

// Finite-resolution model of Q_p^N: functions supported in the ball B_j^N and
// constant on cosets of B_{-k}^N, with Haar integration, the self-dual
// Fourier transform attached to a bilinear form, and the weighted Sobolev
// norms built on top of it.

namespace qpf {

using cplx = std::complex<double>;

/// Index space [0, p^(j+k))^N; index vector m embeds as the point m * p^-j.
/// Haar measure gives each cell volume p^-kN, normalized so vol(B_0^N) = 1.
struct Lattice {
    int prime = 2;
    int dim = 1;
    int jexp = 0; ///< support ball B_j^N, radius p^j
    int kexp = 0; ///< locally constant at scale p^-k
    i64 side = 1; ///< p^(j+k)
    i64 point_count = 1;

    Lattice() = default;
    Lattice(int p, int n, int j, int k);

    bool operator==(const Lattice& o) const {
        return prime == o.prime && dim == o.dim && jexp == o.jexp && kexp == o.kexp;
    }
    bool operator!=(const Lattice& o) const { return !(*this == o); }

    double cell_volume() const { return std::pow(static_cast<double>(prime), -static_cast<double>(kexp) * dim); }

    /// Row-major order over index vectors: axis 0 is the slowest stride.
    void index_to_multi(i64 idx, i64* m) const;
    i64 multi_to_index(const i64* m) const;

    PVector point(i64 idx) const;

    /// Exponent e with ||x_idx||_p = p^e; nullopt for the origin.
    std::optional<int> point_norm_exponent(i64 idx) const;

    /// Index of -x (negation mod the lattice group).
    i64 reflect_index(i64 idx) const;
};

enum class Domain { position, frequency };

inline const char* domain_name(Domain d) { return d == Domain::position ? "position" : "frequency"; }

struct GridFn {
    Lattice lat;
    Domain tag = Domain::position;
    std::vector<cplx> values;

    GridFn() = default;
    GridFn(const Lattice& l, Domain d) : lat(l), tag(d), values(static_cast<size_t>(l.point_count)) {}
    GridFn(const Lattice& l, Domain d, std::vector<cplx> v);

    cplx& operator[](i64 i) { return values[static_cast<size_t>(i)]; }
    const cplx& operator[](i64 i) const { return values[static_cast<size_t>(i)]; }
};

/// Indicator of the ball ||x||_p <= p^r on a position lattice.
GridFn ball_indicator(const Lattice& lat, int radius_exp);
/// Indicator of the sphere ||x||_p = p^r.
GridFn sphere_indicator(const Lattice& lat, int radius_exp);
/// Indicators of the translated regions ||x - a||_p <= p^r and = p^r, with
/// the center given by its lattice index.
GridFn ball_indicator_at(const Lattice& lat, int radius_exp, i64 center_idx);
GridFn sphere_indicator_at(const Lattice& lat, int radius_exp, i64 center_idx);
/// Discrete delta of height p^(kN) at the given index (unit Haar mass).
GridFn delta_fn(const Lattice& lat, i64 idx);

/// Symmetric non-degenerate bilinear form, scale-split as [B] = p^beta [Bt]
/// with ||[Bt]||_p = 1. The transform kernel on a lattice is
/// chi_p(B(x, xi)) = omega^(m . Bt n) with omega a primitive p^(j+k)-th root.
struct BilinearForm {
    int prime = 2;
    int dim = 1;
    std::vector<PRational> entries; ///< N x N, symmetric, det != 0
    int beta = 0;                   ///< min_ij ord(B_ij)
    std::vector<i64> unit_part;     ///< Bt, integer entries, at least one unit
    PRational det;
    double cq = 1.0;                ///< self-dual constant C(q) = |det B|_p^(1/2)
    bool transform_capable = false; ///< unit part invertible mod p; probe passed

    /// B(x, y) = sum_ij x_i B_ij y_j, exact.
    PRational bilinear(const PVector& x, const PVector& y) const;
    /// q(x) = B(x, x).
    PRational quadratic(const PVector& x) const;

    const PRational& at(int r, int c) const { return entries[static_cast<size_t>(r) * dim + c]; }

    /// Identity matrix: beta = 0, C(q) = 1.
    static BilinearForm standard(int p, int n);

    /// Full construction for transform use. Refuses a form whose computed
    /// C(q) fails the double-transform roundtrip on a probe lattice.
    static BilinearForm make(int p, int n, const std::vector<PRational>& matrix);

    /// Matrix-only construction for the symmetry checks; transforms refuse it.
    static BilinearForm quadratic_only(int p, int n, const std::vector<PRational>& matrix);
};

/// Lattice carrying the transform of a function on `lat`: (k + beta, j - beta).
/// Throws if either exponent would be negative (the transform would alias).
Lattice dual_lattice(const Lattice& lat, const BilinearForm& form);

/// sum_x f(x) p^-kN over the position lattice.
cplx haar_integral(const GridFn& f);

/// (F f)(xi) = sum_x f(x) chi_p(B(x, xi)) C(q) p^-kN on the dual lattice.
/// Double application gives (F(Ff))(x) = f(-x) to 1e-12.
GridFn fourier_forward(const GridFn& f, const BilinearForm& form);

/// Inverse transform: forward composed with reflection.
GridFn fourier_inverse(const GridFn& f, const BilinearForm& form);

/// Direct O(M^2) character sum, the oracle for the factored transform.
GridFn fourier_forward_direct(const GridFn& f, const BilinearForm& form);

/// Haar convolution (f * g)(x) = sum_y f(x-y) g(y) p^-kN, computed spectrally.
GridFn convolve(const GridFn& f, const GridFn& g, const BilinearForm& form);

struct SobolevParams {
    double alpha = 1.0; ///< > 0
    int level = 0;

    SobolevParams(double a, int l);
};

/// <f,g>_l = sum_xi [max(1,||xi||_p)]^(2 alpha l) Ff conj(Fg) p^-k'N.
cplx sobolev_inner(const GridFn& f, const GridFn& g, const SobolevParams& sp, const BilinearForm& form);

double sobolev_norm(const GridFn& f, const SobolevParams& sp, const BilinearForm& form);

/// d(f,g) = max_{0<=l<=lmax} 2^-l ||f-g||_l / (1 + ||f-g||_l).
double sobolev_metric(const GridFn& f, const GridFn& g, double alpha, int lmax, const BilinearForm& form);

/// Exact evaluation of the ball character integral
/// int_{Z_p^N} chi_p(p^-e u . y) d^N y for a unit vector u: 1 for e <= 0 and
/// 0 for e >= 1, decided by integer residue counting, no floating point.
double exact_ball_character_integral(int p, int n, int e, const std::vector<i64>& unit);

/// CSV with a `# p N j k tag` header line and (index_0..index_{N-1}, re, im)
/// columns; header integers round-trip bit-exactly.
void write_grid_csv(std::ostream& os, const GridFn& f, const std::string& extra_header = "");
GridFn read_grid_csv(std::istream& is);
void write_grid_csv_file(const std::string& path, const GridFn& f, const std::string& extra_header = "");
GridFn read_grid_csv_file(const std::string& path);

} // namespace qpf
