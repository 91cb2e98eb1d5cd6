#include "qpf/symmetry.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace qpf {

namespace {

// Exact fractions for the matrix inversion; entries re-enter the p-rational
// ring only when the denominator is a pure p-power.
struct Rat {
    i64 num = 0;
    i64 den = 1;

    Rat() = default;
    Rat(i64 n, i64 d) : num(n), den(d) {
        if (den == 0) throw std::invalid_argument("Rat: zero denominator");
        if (den < 0) { num = -num; den = -den; }
        i64 g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) { num /= g; den /= g; }
    }

    static Rat from_prational(const PRational& x) {
        return Rat(x.num, checked_pow(x.prime, x.kexp));
    }

    bool is_zero() const { return num == 0; }

    Rat operator+(const Rat& o) const {
        return Rat(checked_add(checked_mul(num, o.den), checked_mul(o.num, den)), checked_mul(den, o.den));
    }
    Rat operator-(const Rat& o) const {
        return Rat(checked_add(checked_mul(num, o.den), -checked_mul(o.num, den)), checked_mul(den, o.den));
    }
    Rat operator*(const Rat& o) const { return Rat(checked_mul(num, o.num), checked_mul(den, o.den)); }
    Rat operator/(const Rat& o) const {
        if (o.num == 0) throw std::invalid_argument("Rat: division by zero");
        return Rat(checked_mul(num, o.den), checked_mul(den, o.num));
    }

    /// Back to m/p^k form when the denominator is a p-power.
    std::optional<PRational> to_prational(int p) const {
        i64 d = den;
        int k = 0;
        while (d % p == 0) { d /= p; ++k; }
        if (d != 1) return std::nullopt;
        return PRational(num, k, p);
    }
};

std::optional<std::vector<Rat>> rat_matrix_inverse(const std::vector<Rat>& m, int n) {
    std::vector<Rat> a = m;
    std::vector<Rat> inv(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = Rat(1, 1);
    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        for (int r = col; r < n; ++r)
            if (!a[static_cast<size_t>(r) * n + col].is_zero()) { pivot = r; break; }
        if (pivot < 0) return std::nullopt;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a[static_cast<size_t>(pivot) * n + c], a[static_cast<size_t>(col) * n + c]);
                std::swap(inv[static_cast<size_t>(pivot) * n + c], inv[static_cast<size_t>(col) * n + c]);
            }
        }
        Rat d = a[static_cast<size_t>(col) * n + col];
        for (int c = 0; c < n; ++c) {
            a[static_cast<size_t>(col) * n + c] = a[static_cast<size_t>(col) * n + c] / d;
            inv[static_cast<size_t>(col) * n + c] = inv[static_cast<size_t>(col) * n + c] / d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            Rat f = a[static_cast<size_t>(r) * n + col];
            if (f.is_zero()) continue;
            for (int c = 0; c < n; ++c) {
                a[static_cast<size_t>(r) * n + c] = a[static_cast<size_t>(r) * n + c] - f * a[static_cast<size_t>(col) * n + c];
                inv[static_cast<size_t>(r) * n + c] = inv[static_cast<size_t>(r) * n + c] - f * inv[static_cast<size_t>(col) * n + c];
            }
        }
    }
    return inv;
}

} // namespace

EuclideanElement::EuclideanElement(int p, int n, std::vector<PRational> g, PVector a, std::string label)
    : prime(p), dim(n), matrix(std::move(g)), translation(std::move(a)), name(std::move(label)) {
    if (static_cast<int>(matrix.size()) != n * n)
        throw std::invalid_argument("EuclideanElement: matrix must be N x N");
    for (const auto& e : matrix)
        if (e.prime != p) throw std::invalid_argument("EuclideanElement: entry prime mismatch");
    if (translation.dim() != n || translation.prime != p)
        throw std::invalid_argument("EuclideanElement: translation mismatch");
    if (name.empty()) name = "element";
}

EuclideanElement EuclideanElement::identity(int p, int n) {
    std::vector<PRational> g(static_cast<size_t>(n) * n, PRational::zero(p));
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i) * n + i] = PRational::integer(1, p);
    return EuclideanElement(p, n, std::move(g), PVector::zero(p, n), "identity");
}

EuclideanElement EuclideanElement::permutation(int p, int n, const std::vector<int>& perm) {
    if (static_cast<int>(perm.size()) != n) throw std::invalid_argument("permutation: bad size");
    std::vector<PRational> g(static_cast<size_t>(n) * n, PRational::zero(p));
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i) * n + perm[static_cast<size_t>(i)]] = PRational::integer(1, p);
    return EuclideanElement(p, n, std::move(g), PVector::zero(p, n), "permutation");
}

EuclideanElement EuclideanElement::diagonal(int p, int n, const std::vector<i64>& signs) {
    if (static_cast<int>(signs.size()) != n) throw std::invalid_argument("diagonal: bad size");
    std::vector<PRational> g(static_cast<size_t>(n) * n, PRational::zero(p));
    for (int i = 0; i < n; ++i) g[static_cast<size_t>(i) * n + i] = PRational::integer(signs[static_cast<size_t>(i)], p);
    return EuclideanElement(p, n, std::move(g), PVector::zero(p, n), "diagonal");
}

PVector EuclideanElement::apply(const PVector& x) const {
    if (x.dim() != dim) throw std::invalid_argument("apply: dimension mismatch");
    std::vector<PRational> out(static_cast<size_t>(dim), PRational::zero(prime));
    for (int r = 0; r < dim; ++r) {
        PRational acc = translation.coords[static_cast<size_t>(r)];
        for (int c = 0; c < dim; ++c)
            acc = acc + matrix[static_cast<size_t>(r) * dim + c] * x.coords[static_cast<size_t>(c)];
        out[static_cast<size_t>(r)] = acc;
    }
    return PVector(prime, std::move(out));
}

std::optional<std::vector<PRational>> EuclideanElement::inverse_matrix() const {
    std::vector<Rat> m;
    m.reserve(matrix.size());
    for (const auto& e : matrix) m.push_back(Rat::from_prational(e));
    auto inv = rat_matrix_inverse(m, dim);
    if (!inv) return std::nullopt;
    std::vector<PRational> out;
    out.reserve(inv->size());
    for (const auto& r : *inv) {
        auto pr = r.to_prational(prime);
        if (!pr) return std::nullopt; // inverse leaves the p-rational ring
        out.push_back(*pr);
    }
    return out;
}

EuclideanElement EuclideanElement::compose(const EuclideanElement& other) const {
    if (prime != other.prime || dim != other.dim) throw std::invalid_argument("compose: mismatch");
    std::vector<PRational> g(static_cast<size_t>(dim) * dim, PRational::zero(prime));
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) {
            PRational acc = PRational::zero(prime);
            for (int t = 0; t < dim; ++t)
                acc = acc + matrix[static_cast<size_t>(r) * dim + t] * other.matrix[static_cast<size_t>(t) * dim + c];
            g[static_cast<size_t>(r) * dim + c] = acc;
        }
    PVector a = apply(other.translation);
    return EuclideanElement(prime, dim, std::move(g), std::move(a), name + "*" + other.name);
}

bool preserves_quadratic(const std::vector<PRational>& g, const BilinearForm& form) {
    int n = form.dim;
    if (static_cast<int>(g.size()) != n * n) throw std::invalid_argument("preserves_quadratic: bad matrix");
    {
        // singular matrices are not group elements
        std::vector<Rat> m;
        m.reserve(g.size());
        for (const auto& e : g) m.push_back(Rat::from_prational(e));
        if (!rat_matrix_inverse(m, n)) throw std::invalid_argument("preserves_quadratic: singular matrix");
    }
    // exact g^T [B] g == [B]
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            PRational acc = PRational::zero(form.prime);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    acc = acc + g[static_cast<size_t>(i) * n + r] * form.at(i, j) * g[static_cast<size_t>(j) * n + c];
            if (acc != form.at(r, c)) return false;
        }
    return true;
}

namespace {

using Poly = std::map<std::vector<int>, PRational>;

Poly poly_mul(const Poly& a, const Poly& b) {
    Poly out;
    for (const auto& [ea, ca] : a)
        for (const auto& [eb, cb] : b) {
            std::vector<int> e(ea.size());
            for (size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
            PRational prod = ca * cb;
            auto it = out.find(e);
            if (it == out.end())
                out.emplace(std::move(e), prod);
            else {
                it->second = it->second + prod;
                if (it->second.is_zero()) out.erase(it);
            }
        }
    return out;
}

} // namespace

bool preserves_polynomial(const std::vector<PRational>& g, const EllipticPolynomial& poly) {
    int n = poly.dim;
    int p = poly.prime;
    if (static_cast<int>(g.size()) != n * n) throw std::invalid_argument("preserves_polynomial: bad matrix");
    {
        std::vector<Rat> m;
        m.reserve(g.size());
        for (const auto& e : g) m.push_back(Rat::from_prational(e));
        if (!rat_matrix_inverse(m, n)) throw std::invalid_argument("preserves_polynomial: singular matrix");
    }
    // substituted variables: xi_i -> sum_j g_ij xi_j
    std::vector<Poly> rows(static_cast<size_t>(n));
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (g[static_cast<size_t>(r) * n + c].is_zero()) continue;
            std::vector<int> e(static_cast<size_t>(n), 0);
            e[static_cast<size_t>(c)] = 1;
            rows[static_cast<size_t>(r)][e] = g[static_cast<size_t>(r) * n + c];
        }
    Poly composed;
    for (const auto& term : poly.terms) {
        Poly t;
        t[std::vector<int>(static_cast<size_t>(n), 0)] = PRational::integer(term.coeff, p);
        for (int d = 0; d < n; ++d)
            for (int e = 0; e < term.exps[static_cast<size_t>(d)]; ++e)
                t = poly_mul(t, rows[static_cast<size_t>(d)]);
        for (const auto& [e, c] : t) {
            auto it = composed.find(e);
            if (it == composed.end())
                composed.emplace(e, c);
            else {
                it->second = it->second + c;
                if (it->second.is_zero()) composed.erase(it);
            }
        }
    }
    Poly original;
    for (const auto& term : poly.terms) original[term.exps] = PRational::integer(term.coeff, p);
    return composed == original;
}

int det_norm_exponent(const std::vector<PRational>& g, int p) {
    int n = static_cast<int>(std::lround(std::sqrt(static_cast<double>(g.size()))));
    if (n * n != static_cast<int>(g.size())) throw std::invalid_argument("det_norm_exponent: bad matrix");
    // determinant by exact expansion over permutations (n <= 5 in practice)
    std::vector<int> perm(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<size_t>(i)] = i;
    PRational det = PRational::zero(p);
    do {
        int inversions = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (perm[static_cast<size_t>(i)] > perm[static_cast<size_t>(j)]) ++inversions;
        PRational prod = PRational::integer(inversions % 2 == 0 ? 1 : -1, p);
        for (int i = 0; i < n; ++i) prod = prod * g[static_cast<size_t>(i) * n + perm[static_cast<size_t>(i)]];
        det = det + prod;
    } while (std::next_permutation(perm.begin(), perm.end()));
    if (det.is_zero()) throw std::invalid_argument("det_norm_exponent: singular matrix");
    return -det.order();
}

GridFn act_on_function(const GridFn& f, const EuclideanElement& e) {
    const Lattice& lat = f.lat;
    if (e.prime != lat.prime || e.dim != lat.dim)
        throw std::invalid_argument("act_on_function: element does not match lattice");
    auto inv = e.inverse_matrix();
    if (!inv) throw std::invalid_argument("act_on_function: element does not stabilize the lattice");
    EuclideanElement back(e.prime, e.dim, *inv, PVector::zero(e.prime, e.dim), "inv");

    std::vector<i64> perm(static_cast<size_t>(lat.point_count), -1);
    std::vector<bool> hit(static_cast<size_t>(lat.point_count), false);
    std::vector<i64> multi(static_cast<size_t>(lat.dim));
    for (i64 idx = 0; idx < lat.point_count; ++idx) {
        PVector x = lat.point(idx);
        std::vector<PRational> shifted(static_cast<size_t>(lat.dim), PRational::zero(lat.prime));
        for (int d = 0; d < lat.dim; ++d)
            shifted[static_cast<size_t>(d)] = x.coords[static_cast<size_t>(d)] - e.translation.coords[static_cast<size_t>(d)];
        PVector y = back.apply(PVector(lat.prime, std::move(shifted)));
        for (int d = 0; d < lat.dim; ++d) {
            const PRational& c = y.coords[static_cast<size_t>(d)];
            if (c.kexp > lat.jexp)
                throw std::invalid_argument("act_on_function: element does not stabilize the lattice");
            i64 num = checked_mul(c.num, checked_pow(lat.prime, lat.jexp - c.kexp));
            i64 m = num % lat.side;
            if (m < 0) m += lat.side;
            multi[static_cast<size_t>(d)] = m;
        }
        i64 src = lat.multi_to_index(multi.data());
        perm[static_cast<size_t>(idx)] = src;
        if (hit[static_cast<size_t>(src)])
            throw std::invalid_argument("act_on_function: element does not stabilize the lattice");
        hit[static_cast<size_t>(src)] = true;
    }
    GridFn out(lat, f.tag);
    for (i64 idx = 0; idx < lat.point_count; ++idx)
        out[idx] = f[perm[static_cast<size_t>(idx)]];
    return out;
}

InvarianceReport invariance_report(const GreenKernel& G, const BilinearForm& form,
                                   const std::vector<EuclideanElement>& elements,
                                   const LevyTriple& levy, const GridFn& g1, const GridFn& g2) {
    InvarianceReport report;
    double s2_base = schwinger_analytic({g1, g2}, levy, G, form);
    for (const auto& e : elements) {
        InvarianceRow row;
        row.element = e.name;
        row.preserves_q = preserves_quadratic(e.matrix, form);
        row.preserves_l = preserves_polynomial(e.matrix, G.poly);
        row.checks_passed = row.preserves_q && row.preserves_l;
        if (!row.checks_passed) {
            row.green_deviation = std::numeric_limits<double>::quiet_NaN();
            row.s2_deviation = std::numeric_limits<double>::quiet_NaN();
            report.rows.push_back(row);
            continue;
        }
        try {
            // pointwise kernel deviation under the linear part
            EuclideanElement lin(e.prime, e.dim, e.matrix, PVector::zero(e.prime, e.dim), e.name);
            GridFn moved = act_on_function(G.values, lin);
            double dev = 0.0;
            for (i64 i = 0; i < G.lat.point_count; ++i) {
                if (i == 0) continue; // origin cell excluded from pointwise claims
                dev = std::max(dev, std::abs(moved[i] - G.values[i]));
            }
            row.green_deviation = dev;

            double s2_moved = schwinger_analytic({act_on_function(g1, e), act_on_function(g2, e)}, levy, G, form);
            row.s2_deviation = std::abs(s2_moved - s2_base);
        } catch (const std::invalid_argument&) {
            row.green_deviation = std::numeric_limits<double>::quiet_NaN();
            row.s2_deviation = std::numeric_limits<double>::quiet_NaN();
            row.checks_passed = false;
        }
        report.rows.push_back(row);
    }
    return report;
}

} // namespace qpf
