#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "qpf/lattice.hpp"
#include "qpf/prational.hpp"

// Elliptic polynomials with sphere-covering certificates, smooth-symbol
// pseudodifferential operators, the fractional Klein-Gordon solver, and the
// Green function computed two independent ways: the spectral lattice
// transform and the analytic shell series with its explicit tail bound.

namespace qpf {

/// Homogeneous integer-coefficient polynomial l(xi_1..xi_N) of degree d.
struct EllipticPolynomial {
    struct Term {
        std::vector<int> exps; ///< length N, entries sum to the degree
        i64 coeff = 0;
    };

    int prime = 2;
    int dim = 1;
    int degree = 1;
    std::vector<Term> terms;

    EllipticPolynomial(int p, int n, std::vector<Term> t);

    /// Exact integer evaluation at an integer vector.
    i64 eval_int(const std::vector<i64>& z) const;

    /// Exact rational evaluation.
    PRational eval(const PVector& x) const;

    /// ord_p of l at a frequency point n * p^-jexp via homogeneity:
    /// ord(l(n p^-j)) = ord_p(l(n)) - j d. Returns nullopt when l(n) = 0.
    std::optional<int> ord_at_scaled(const std::vector<i64>& n, int jexp) const;

    /// Literal syntax `c*x1^a1*x2^a2 + ...`; coefficients are integers.
    static EllipticPolynomial parse(const std::string& text, int p, int n);
    std::string to_string() const;
};

/// Covering proof data for the unit sphere: on each cell z_i + (p^L Z_p)^N
/// the norm |l(z)|_p is the constant p^-ord_i.
struct EllipticityCertificate {
    int level = 1;              ///< L
    i64 rep_count = 0;          ///< M
    std::vector<std::vector<i64>> reps;
    std::vector<int> rep_ord;   ///< ord_p(l(z_i)), each < level
    int min_ord = 0;            ///< gamma = p^-max_ord ... c1 = p^-min_ord
    int max_ord = 0;

    /// min_i |l(z_i)|_p^alpha, the gamma of the shell-series tail bound.
    double gamma(double alpha, int p) const;
    /// Two-sided constants: c0(alpha) ||xi||^(alpha d) <= |l|^alpha <= c1(alpha) ||xi||^(alpha d).
    double c0(double alpha, int p) const;
    double c1(double alpha, int p) const;
};

struct EllipticityRejection {
    std::vector<i64> witness; ///< sphere representative with ord_p(l) >= level
    int level = 1;
};

using CertifyResult = std::variant<EllipticityCertificate, EllipticityRejection>;

/// Enumerates all unit-sphere representatives mod p^L, evaluates |l| exactly,
/// and accepts iff ord_p(l(z)) < L everywhere (which forces local constancy
/// on each covering cell); agreement of the norm profile at level L+1 is
/// re-verified as a guard. Rejection carries the witness representative.
CertifyResult certify_elliptic(const EllipticPolynomial& poly, int level);

/// Positive frequency multiplier with two-sided power bounds.
struct SmoothSymbol {
    std::function<double(const Lattice& freq, i64 idx)> eval;
    double lower_bound = 0.0; ///< C with a(xi) >= C > 0
    double c0 = 0.0, c1 = 0.0, alpha = 0.0;
    int m0 = 0;
};

SmoothSymbol symbol_one();
/// a(xi) = max(1, ||xi||_p)^alpha.
SmoothSymbol symbol_max_norm_pow(double alpha);
/// a(xi) = |l(xi)|_p^alpha + m^2 (the Klein-Gordon symbol; m > 0).
SmoothSymbol symbol_klein_gordon(const EllipticPolynomial& poly, double alpha, double mass);
/// a(xi) = (|l(xi)|_p + m^2)^alpha, the variant operator.
SmoothSymbol symbol_klein_gordon_alt(const EllipticPolynomial& poly, double alpha, double mass);

/// (A f)(x) = Finv(a(xi) F f). Throws if the symbol evaluates <= 0 anywhere.
GridFn apply_symbol(const GridFn& f, const SmoothSymbol& a, const BilinearForm& form);

/// u = Finv(F g / a); apply_symbol(invert_symbol(g)) = g to 1e-10.
GridFn invert_symbol(const GridFn& g, const SmoothSymbol& a, const BilinearForm& form);

/// Unique lattice solution of (L_alpha + m^2) u = g.
GridFn klein_gordon_solve(const GridFn& g, const EllipticPolynomial& poly, double alpha, double mass,
                          const BilinearForm& form);

/// G(.; m, alpha) restricted to a lattice, with the origin cell carrying the
/// lattice-average value (excluded from pointwise decay/positivity claims).
struct GreenKernel {
    Lattice lat;
    double mass = 1.0;
    double alpha = 1.0;
    EllipticPolynomial poly;
    GridFn values; ///< position domain, real to 1e-10
    bool origin_excluded = true;
};

/// Inverse transform of 1/(|l(xi)|^alpha + m^2) sampled on the frequency
/// lattice; the frequency origin cell gets its exact ball average so that the
/// unresolved low shells carry their true mass.
GreenKernel green_spectral(const Lattice& lat, const EllipticPolynomial& poly, double alpha, double mass,
                           const BilinearForm& form);

struct SeriesValue {
    double value = 0.0;
    double tail_bound = 0.0; ///< geometric majorant of the truncated shells
    int l_min = 0, l_max = 0;
};

/// Analytic shell series at x != 0: sums the exact covering character sums
/// over shells l <= L - k_x + beta (all higher shells vanish identically) and
/// truncates the lower tail once the geometric bound drops below tol.
SeriesValue green_series(const PVector& x, const EllipticPolynomial& poly, double alpha, double mass,
                         const BilinearForm& form, const EllipticityCertificate& cert, double tol = 1e-8);

/// One shell term g^(l)(x), exact finite character sum (0 above the cutoff).
double green_series_shell(const PVector& x, int l, const EllipticPolynomial& poly, double alpha, double mass,
                          const BilinearForm& form, const EllipticityCertificate& cert);

enum class DecayRegime { near_zero, infinity };

struct DecayFit {
    double slope = 0.0;    ///< d log G / d log ||x|| over shell averages
    double expected = 0.0; ///< alpha d - N near zero (when divergent), -(alpha d + N) at infinity
    int shells = 0;
    bool flat = false;     ///< near zero with alpha d >= N: kernel is bounded, no power law
};

/// Slope of log(shell average of G) against log ||x||, estimated from the
/// two shells deepest in the regime with one Richardson step at the known
/// geometric rate of the corrections (the asymptotic power law is exact only
/// in the regime limit). near_zero uses shells ||x|| <= 1, infinity uses
/// ||x|| > 1; needs >= 4 shells.
DecayFit decay_fit(const GreenKernel& G, DecayRegime regime);

/// Z(alpha) = int_{S_0^N} |l(z)|^alpha dz as the exact covering sum.
double z_alpha(const EllipticPolynomial& poly, double alpha, const EllipticityCertificate& cert, int p);

/// int over the ball ||xi|| <= p^e of dxi / (|l|^alpha + m^2), by exact shell
/// decomposition; used for the frequency-origin cell of green_spectral.
double reciprocal_symbol_ball_integral(const EllipticPolynomial& poly, double alpha, double mass,
                                       int ball_exp, double rel_tol = 1e-15);

} // namespace qpf
