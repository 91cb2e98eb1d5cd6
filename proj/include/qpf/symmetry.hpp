#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qpf/moments.hpp"
#include "qpf/operators.hpp"

// The Euclidean group of a (quadratic form, elliptic polynomial) pair: exact
// preservation checks, lattice actions, and numerical invariance reports for
// Green kernels and Schwinger functions.

namespace qpf {

/// Affine map x -> a + g x with p-rational matrix entries.
struct EuclideanElement {
    int prime = 2;
    int dim = 1;
    std::vector<PRational> matrix; ///< N x N, row-major
    PVector translation;
    std::string name;

    EuclideanElement(int p, int n, std::vector<PRational> g, PVector a, std::string label = "");

    static EuclideanElement identity(int p, int n);
    static EuclideanElement permutation(int p, int n, const std::vector<int>& perm);
    static EuclideanElement diagonal(int p, int n, const std::vector<i64>& signs);

    PVector apply(const PVector& x) const;   ///< a + g x
    /// g^-1 exists over the p-rationals iff every inverse entry has a p-power
    /// denominator; otherwise the element cannot act on any lattice.
    std::optional<std::vector<PRational>> inverse_matrix() const;

    EuclideanElement compose(const EuclideanElement& other) const; ///< (a,g)(b,h) = (a + g b, g h)
};

/// Exact rational check g^T [B] g = [B].
bool preserves_quadratic(const std::vector<PRational>& g, const BilinearForm& form);

/// Exact coefficient comparison of l(g xi) against l(xi).
bool preserves_polynomial(const std::vector<PRational>& g, const EllipticPolynomial& poly);

/// |det g|_p (exact exponent); preservers of a quadratic form have norm 1.
int det_norm_exponent(const std::vector<PRational>& g, int p);

/// ((a,g) f)(x) = f(g^-1 (x - a)). The element must map the lattice point
/// set bijectively onto itself; anything else is rejected, not interpolated.
GridFn act_on_function(const GridFn& f, const EuclideanElement& e);

struct InvarianceRow {
    std::string element;
    bool preserves_q = false;
    bool preserves_l = false;
    double green_deviation = 0.0; ///< max |G(gx) - G(x)| over lattice points
    double s2_deviation = 0.0;    ///< |S2(g1, g2) - S2((a,g)g1, (a,g)g2)|
    bool checks_passed = false;   ///< both preservation checks
};

struct InvarianceReport {
    std::vector<InvarianceRow> rows;
};

/// For each element: exact preservation checks (failures are reported, never
/// silently skipped), pointwise Green-kernel deviation under the linear part,
/// and the m = 2 Schwinger deviation under the full affine action.
InvarianceReport invariance_report(const GreenKernel& G, const BilinearForm& form,
                                   const std::vector<EuclideanElement>& elements,
                                   const LevyTriple& levy, const GridFn& g1, const GridFn& g2);

} // namespace qpf
