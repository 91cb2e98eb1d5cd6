#include "qpf/operators.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>

#include "qpf/parallel.hpp"

namespace qpf {

// ---------------------------------------------------------------------------
// EllipticPolynomial

EllipticPolynomial::EllipticPolynomial(int p, int n, std::vector<Term> t)
    : prime(p), dim(n), terms(std::move(t)) {
    if (!is_prime(p)) throw std::invalid_argument("EllipticPolynomial: bad prime");
    if (n < 1) throw std::invalid_argument("EllipticPolynomial: bad dimension");
    if (terms.empty()) throw std::invalid_argument("EllipticPolynomial: no terms");
    degree = -1;
    for (const auto& term : terms) {
        if (static_cast<int>(term.exps.size()) != n)
            throw std::invalid_argument("EllipticPolynomial: exponent vector length mismatch");
        if (term.coeff == 0) throw std::invalid_argument("EllipticPolynomial: zero coefficient");
        int d = 0;
        for (int e : term.exps) {
            if (e < 0) throw std::invalid_argument("EllipticPolynomial: negative exponent");
            d += e;
        }
        if (degree == -1) degree = d;
        if (d != degree) throw std::invalid_argument("EllipticPolynomial: not homogeneous");
    }
    if (degree < 1) throw std::invalid_argument("EllipticPolynomial: degree must be >= 1");
}

i64 EllipticPolynomial::eval_int(const std::vector<i64>& z) const {
    if (static_cast<int>(z.size()) != dim) throw std::invalid_argument("eval_int: dimension mismatch");
    i64 acc = 0;
    for (const auto& term : terms) {
        i64 v = term.coeff;
        for (int d = 0; d < dim; ++d)
            for (int e = 0; e < term.exps[static_cast<size_t>(d)]; ++e)
                v = checked_mul(v, z[static_cast<size_t>(d)]);
        acc = checked_add(acc, v);
    }
    return acc;
}

PRational EllipticPolynomial::eval(const PVector& x) const {
    if (x.dim() != dim) throw std::invalid_argument("eval: dimension mismatch");
    PRational acc = PRational::zero(prime);
    for (const auto& term : terms) {
        PRational v = PRational::integer(term.coeff, prime);
        for (int d = 0; d < dim; ++d)
            for (int e = 0; e < term.exps[static_cast<size_t>(d)]; ++e)
                v = v * x.coords[static_cast<size_t>(d)];
        acc = acc + v;
    }
    return acc;
}

std::optional<int> EllipticPolynomial::ord_at_scaled(const std::vector<i64>& n, int jexp) const {
    i64 v = eval_int(n);
    if (v == 0) return std::nullopt;
    return p_multiplicity(v, prime) - jexp * degree;
}

namespace {

void skip_ws(const std::string& s, size_t& i) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
}

i64 parse_int(const std::string& s, size_t& i) {
    skip_ws(s, i);
    size_t start = i;
    if (i < s.size() && (s[i] == '-' || s[i] == '+')) ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i;
    if (i == start || (i == start + 1 && !std::isdigit(static_cast<unsigned char>(s[start]))))
        throw std::invalid_argument("polynomial: expected integer at position " + std::to_string(start));
    return std::stoll(s.substr(start, i - start));
}

} // namespace

EllipticPolynomial EllipticPolynomial::parse(const std::string& text, int p, int n) {
    std::vector<Term> terms;
    size_t i = 0;
    skip_ws(text, i);
    if (i >= text.size()) throw std::invalid_argument("polynomial: empty literal");
    bool first = true;
    while (i < text.size()) {
        i64 sign = 1;
        skip_ws(text, i);
        if (!first || text[i] == '+' || text[i] == '-') {
            if (i >= text.size() || (text[i] != '+' && text[i] != '-'))
                throw std::invalid_argument("polynomial: expected + or - at position " + std::to_string(i));
            sign = text[i] == '-' ? -1 : 1;
            ++i;
        }
        first = false;
        skip_ws(text, i);
        i64 coeff = 1;
        if (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            coeff = parse_int(text, i);
            skip_ws(text, i);
            if (i < text.size() && text[i] == '*') { ++i; skip_ws(text, i); }
        }
        Term term;
        term.exps.assign(static_cast<size_t>(n), 0);
        term.coeff = checked_mul(sign, coeff);
        bool any_var = false;
        while (i < text.size() && text[i] == 'x') {
            ++i;
            i64 var = parse_int(text, i);
            if (var < 1 || var > n)
                throw std::invalid_argument("polynomial: variable x" + std::to_string(var) + " out of range");
            int exp = 1;
            skip_ws(text, i);
            if (i < text.size() && text[i] == '^') {
                ++i;
                exp = static_cast<int>(parse_int(text, i));
                if (exp < 1) throw std::invalid_argument("polynomial: exponent must be positive");
            }
            term.exps[static_cast<size_t>(var - 1)] += exp;
            any_var = true;
            skip_ws(text, i);
            if (i < text.size() && text[i] == '*') { ++i; skip_ws(text, i); }
        }
        if (!any_var) throw std::invalid_argument("polynomial: term without variable");
        terms.push_back(std::move(term));
        skip_ws(text, i);
    }
    // merge duplicate monomials; x1-major term order
    std::map<std::vector<int>, i64, std::greater<std::vector<int>>> merged;
    for (const auto& t : terms) merged[t.exps] = checked_add(merged.count(t.exps) ? merged[t.exps] : 0, t.coeff);
    std::vector<Term> out;
    for (const auto& [e, c] : merged)
        if (c != 0) out.push_back(Term{e, c});
    return EllipticPolynomial(p, n, std::move(out));
}

std::string EllipticPolynomial::to_string() const {
    std::ostringstream os;
    bool first = true;
    for (const auto& term : terms) {
        i64 c = term.coeff;
        if (first) {
            if (c < 0) { os << "-"; c = -c; }
        } else {
            os << (c < 0 ? "-" : "+");
            if (c < 0) c = -c;
        }
        first = false;
        bool printed = false;
        if (c != 1) { os << c; printed = true; }
        for (int d = 0; d < dim; ++d) {
            int e = term.exps[static_cast<size_t>(d)];
            if (e == 0) continue;
            if (printed) os << "*";
            os << "x" << (d + 1);
            if (e > 1) os << "^" << e;
            printed = true;
        }
        if (!printed) os << c; // cannot happen for validated polynomials
    }
    return os.str();
}

// ---------------------------------------------------------------------------
// Certification

double EllipticityCertificate::gamma(double alpha, int p) const {
    return std::pow(static_cast<double>(p), -alpha * max_ord);
}
double EllipticityCertificate::c0(double alpha, int p) const { return gamma(alpha, p); }
double EllipticityCertificate::c1(double alpha, int p) const {
    return std::pow(static_cast<double>(p), -alpha * min_ord);
}

namespace {

// Enumerate z in [0, p^L)^N with at least one coordinate a unit, invoking
// visit(z, l_value_ord) where ord is p-multiplicity of l(z) (or -1 for zero).
template <class Visit>
void for_each_sphere_rep(const EllipticPolynomial& poly, int level, Visit&& visit) {
    int p = poly.prime;
    int n = poly.dim;
    i64 mod = checked_pow(p, level);
    i64 total = 1;
    for (int d = 0; d < n; ++d) total = checked_mul(total, mod);
    std::vector<i64> z(static_cast<size_t>(n), 0);
    for (i64 idx = 0; idx < total; ++idx) {
        i64 t = idx;
        bool unit = false;
        for (int d = n - 1; d >= 0; --d) {
            z[static_cast<size_t>(d)] = t % mod;
            t /= mod;
            unit = unit || (z[static_cast<size_t>(d)] % p != 0);
        }
        if (!unit) continue;
        i64 v = poly.eval_int(z);
        int ord = v == 0 ? -1 : p_multiplicity(v, p);
        visit(z, ord);
    }
}

} // namespace

CertifyResult certify_elliptic(const EllipticPolynomial& poly, int level) {
    if (level < 1) throw std::invalid_argument("certify_elliptic: level must be >= 1");
    int p = poly.prime;

    EllipticityCertificate cert;
    cert.level = level;
    cert.min_ord = std::numeric_limits<int>::max();
    cert.max_ord = -1;
    std::optional<EllipticityRejection> reject;

    for_each_sphere_rep(poly, level, [&](const std::vector<i64>& z, int ord) {
        if (reject) return;
        if (ord < 0 || ord >= level) {
            reject = EllipticityRejection{z, level};
            return;
        }
        cert.reps.push_back(z);
        cert.rep_ord.push_back(ord);
        cert.min_ord = std::min(cert.min_ord, ord);
        cert.max_ord = std::max(cert.max_ord, ord);
    });
    if (reject) return *reject;
    cert.rep_count = static_cast<i64>(cert.reps.size());

    // guard: the norm profile must agree between levels L and L+1
    i64 mod = checked_pow(p, level);
    bool agree = true;
    for_each_sphere_rep(poly, level + 1, [&](const std::vector<i64>& z, int ord) {
        if (!agree) return;
        std::vector<i64> zr(z.size());
        for (size_t d = 0; d < z.size(); ++d) zr[d] = z[d] % mod;
        i64 v = poly.eval_int(zr);
        int base_ord = v == 0 ? -1 : p_multiplicity(v, p);
        if (ord != base_ord) agree = false;
    });
    if (!agree)
        throw std::logic_error("certify_elliptic: norm profile not locally constant despite ord < level");
    return cert;
}

// ---------------------------------------------------------------------------
// Smooth symbols

SmoothSymbol symbol_one() {
    SmoothSymbol s;
    s.eval = [](const Lattice&, i64) { return 1.0; };
    s.lower_bound = 1.0;
    s.c0 = s.c1 = 1.0;
    s.alpha = 0.0;
    return s;
}

SmoothSymbol symbol_max_norm_pow(double alpha) {
    SmoothSymbol s;
    s.eval = [alpha](const Lattice& lat, i64 idx) {
        auto e = lat.point_norm_exponent(idx);
        double base = (!e || *e <= 0) ? 1.0 : std::pow(static_cast<double>(lat.prime), static_cast<double>(*e));
        return std::pow(base, alpha);
    };
    s.lower_bound = 1.0;
    s.c0 = s.c1 = 1.0;
    s.alpha = alpha;
    return s;
}

namespace {

double abs_poly_pow(const EllipticPolynomial& poly, const Lattice& lat, i64 idx, double alpha) {
    thread_local std::vector<i64> m;
    m.assign(static_cast<size_t>(lat.dim), 0);
    lat.index_to_multi(idx, m.data());
    auto o = poly.ord_at_scaled(m, lat.jexp);
    if (!o) return 0.0; // |l| = 0
    return std::pow(static_cast<double>(lat.prime), -alpha * *o);
}

} // namespace

SmoothSymbol symbol_klein_gordon(const EllipticPolynomial& poly, double alpha, double mass) {
    if (!(mass > 0.0)) throw std::invalid_argument("klein-gordon symbol: mass must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("klein-gordon symbol: alpha must be positive");
    SmoothSymbol s;
    double m2 = mass * mass;
    s.eval = [poly, alpha, m2](const Lattice& lat, i64 idx) {
        return abs_poly_pow(poly, lat, idx, alpha) + m2;
    };
    s.lower_bound = m2;
    s.alpha = alpha * poly.degree;
    return s;
}

SmoothSymbol symbol_klein_gordon_alt(const EllipticPolynomial& poly, double alpha, double mass) {
    if (!(mass > 0.0)) throw std::invalid_argument("klein-gordon symbol: mass must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("klein-gordon symbol: alpha must be positive");
    SmoothSymbol s;
    double m2 = mass * mass;
    s.eval = [poly, alpha, m2](const Lattice& lat, i64 idx) {
        return std::pow(abs_poly_pow(poly, lat, idx, 1.0) + m2, alpha);
    };
    s.lower_bound = std::pow(m2, alpha);
    s.alpha = alpha * poly.degree;
    return s;
}

GridFn apply_symbol(const GridFn& f, const SmoothSymbol& a, const BilinearForm& form) {
    GridFn fh = fourier_forward(f, form);
    for (i64 i = 0; i < fh.lat.point_count; ++i) {
        double v = a.eval(fh.lat, i);
        // multipliers like |l(xi)|^alpha legitimately vanish at xi = 0; only
        // negative or non-finite evaluations are symbol bugs
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("apply_symbol: symbol evaluator returned an invalid value");
        fh[i] *= v;
    }
    return fourier_inverse(fh, form);
}

GridFn invert_symbol(const GridFn& g, const SmoothSymbol& a, const BilinearForm& form) {
    GridFn gh = fourier_forward(g, form);
    for (i64 i = 0; i < gh.lat.point_count; ++i) {
        double v = a.eval(gh.lat, i);
        if (!(v > 0.0)) throw std::invalid_argument("invert_symbol: symbol evaluator returned non-positive value");
        gh[i] /= v;
    }
    return fourier_inverse(gh, form);
}

GridFn klein_gordon_solve(const GridFn& g, const EllipticPolynomial& poly, double alpha, double mass,
                          const BilinearForm& form) {
    return invert_symbol(g, symbol_klein_gordon(poly, alpha, mass), form);
}

// ---------------------------------------------------------------------------
// Green functions

namespace {

// Decomposition of the unit sphere into cells on which |l| is constant:
// (mass = p^(-lambda N) per cell, ord of l there, cell count).
struct SphereProfile {
    struct Slot {
        int ord;
        double mass; ///< total Haar mass of cells with this ord
    };
    std::vector<Slot> slots;
    double unresolved_mass = 0.0;
    int unresolved_ord = 0; ///< midpoint guess for leftover cells
};

SphereProfile sphere_profile(const EllipticPolynomial& poly) {
    int p = poly.prime;
    int n = poly.dim;
    // depth cap keeps p^(lambda d) within i64 during evaluation
    int cap = std::max(2, static_cast<int>(58.0 / (poly.degree * std::log2(static_cast<double>(p)))) - 1);

    std::map<int, double> mass_by_ord;
    double unresolved = 0.0;
    int unresolved_ord = cap;

    struct Cell { std::vector<i64> z; int lambda; };
    std::vector<Cell> stack;
    // level-1 cells of the sphere: z mod p, not all coordinates divisible by p
    {
        std::vector<i64> z(static_cast<size_t>(n), 0);
        i64 total = 1;
        for (int d = 0; d < n; ++d) total = checked_mul(total, p);
        for (i64 idx = 1; idx < total; ++idx) {
            i64 t = idx;
            bool unit = false;
            for (int d = n - 1; d >= 0; --d) {
                z[static_cast<size_t>(d)] = t % p;
                t /= p;
                unit = unit || (z[static_cast<size_t>(d)] % p != 0);
            }
            if (unit) stack.push_back(Cell{z, 1});
        }
    }
    while (!stack.empty()) {
        Cell c = std::move(stack.back());
        stack.pop_back();
        i64 v = poly.eval_int(c.z);
        int ord = v == 0 ? -1 : p_multiplicity(v, p);
        double mass = std::pow(static_cast<double>(p), -static_cast<double>(c.lambda) * n);
        if (ord >= 0 && ord < c.lambda) {
            mass_by_ord[ord] += mass;
        } else if (c.lambda >= cap) {
            unresolved += mass;
            unresolved_ord = c.lambda;
        } else {
            i64 step = checked_pow(p, c.lambda);
            i64 children = 1;
            for (int d = 0; d < n; ++d) children = checked_mul(children, p);
            for (i64 idx = 0; idx < children; ++idx) {
                Cell child{c.z, c.lambda + 1};
                i64 t = idx;
                for (int d = n - 1; d >= 0; --d) {
                    child.z[static_cast<size_t>(d)] += (t % p) * step;
                    t /= p;
                }
                stack.push_back(std::move(child));
            }
        }
    }
    SphereProfile prof;
    for (const auto& [ord, mass] : mass_by_ord) prof.slots.push_back({ord, mass});
    prof.unresolved_mass = unresolved;
    prof.unresolved_ord = unresolved_ord;
    return prof;
}

// J(t) = int_{S_0^N} dz / (t |l(z)|^alpha + m^2)
double sphere_reciprocal_integral(const SphereProfile& prof, int p, double alpha, double m2, double t) {
    double acc = 0.0;
    for (const auto& s : prof.slots)
        acc += s.mass / (t * std::pow(static_cast<double>(p), -alpha * s.ord) + m2);
    if (prof.unresolved_mass > 0.0)
        acc += prof.unresolved_mass / (t * std::pow(static_cast<double>(p), -alpha * prof.unresolved_ord) + m2);
    return acc;
}

} // namespace

double reciprocal_symbol_ball_integral(const EllipticPolynomial& poly, double alpha, double mass,
                                       int ball_exp, double rel_tol) {
    if (!(mass > 0.0)) throw std::invalid_argument("ball integral: mass must be positive");
    SphereProfile prof = sphere_profile(poly);
    int p = poly.prime;
    int n = poly.dim;
    double m2 = mass * mass;
    double acc = 0.0;
    for (int l = ball_exp; l > ball_exp - 4000; --l) {
        double shell_vol_scale = std::pow(static_cast<double>(p), static_cast<double>(l) * n);
        double t = std::pow(static_cast<double>(p), static_cast<double>(l) * poly.degree * alpha);
        double term = shell_vol_scale * sphere_reciprocal_integral(prof, p, alpha, m2, t);
        acc += term;
        if (term < rel_tol * acc && l < ball_exp) break;
    }
    return acc;
}

GreenKernel green_spectral(const Lattice& lat, const EllipticPolynomial& poly, double alpha, double mass,
                           const BilinearForm& form) {
    if (!(mass > 0.0)) throw std::invalid_argument("green_spectral: mass must be positive");
    if (!(alpha > 0.0)) throw std::invalid_argument("green_spectral: alpha must be positive");
    if (poly.prime != lat.prime || poly.dim != lat.dim)
        throw std::invalid_argument("green_spectral: polynomial does not match lattice");
    Lattice freq = dual_lattice(lat, form);
    double m2 = mass * mass;
    double lp = static_cast<double>(lat.prime);

    GridFn hat(freq, Domain::frequency);
    parallel_for(0, freq.point_count, 1 << 14, [&](i64 lo, i64 hi) {
        std::vector<i64> m(static_cast<size_t>(freq.dim));
        for (i64 i = lo; i < hi; ++i) {
            freq.index_to_multi(i, m.data());
            auto o = poly.ord_at_scaled(m, freq.jexp);
            double sym = o ? std::pow(lp, -alpha * *o) : 0.0;
            hat[i] = 1.0 / (sym + m2);
        }
    });
    // the origin cell carries the exact average over the unresolved low
    // shells instead of the point sample 1/m^2
    hat[0] = reciprocal_symbol_ball_integral(poly, alpha, mass, -freq.kexp) /
             freq.cell_volume();

    GreenKernel G{lat, mass, alpha, poly, fourier_inverse(hat, form), true};
    double max_imag = 0.0;
    for (const auto& v : G.values.values) max_imag = std::max(max_imag, std::abs(v.imag()));
    if (max_imag > 1e-10) throw std::logic_error("green_spectral: kernel has non-negligible imaginary part");
    return G;
}

namespace {

// chi_p(-p^s w) without ever scaling the numerator up: arguments of
// non-negative order are exactly 1.
cplx chi_scaled_neg(const PRational& w, int s) {
    if (w.is_zero() || w.order() + s >= 0) return {1.0, 0.0};
    PRational u = w.scaled_by_p_power(s);
    UnitComplex c = chi(-u);
    return {c.re, c.im};
}

void validate_series_inputs(const PVector& x, const EllipticPolynomial& poly, double mass,
                            const BilinearForm& form, const EllipticityCertificate& cert) {
    if (x.is_zero()) throw std::invalid_argument("green_series: series is only defined off the origin");
    if (x.dim() != poly.dim || x.prime != poly.prime)
        throw std::invalid_argument("green_series: point does not match polynomial");
    if (form.dim != poly.dim || form.prime != poly.prime)
        throw std::invalid_argument("green_series: form does not match polynomial");
    if (cert.reps.empty() || static_cast<int>(cert.reps[0].size()) != poly.dim)
        throw std::invalid_argument("green_series: certificate mismatch");
    if (!(mass > 0.0)) throw std::invalid_argument("green_series: mass must be positive");
}

// B(x, z_i) for every covering representative
std::vector<PRational> rep_pairings(const PVector& x, const BilinearForm& form,
                                    const EllipticityCertificate& cert) {
    std::vector<PRational> w;
    w.reserve(cert.reps.size());
    for (const auto& rep : cert.reps) {
        std::vector<PRational> coords;
        coords.reserve(rep.size());
        for (i64 c : rep) coords.push_back(PRational::integer(c, form.prime));
        w.push_back(form.bilinear(x, PVector(form.prime, std::move(coords))));
    }
    return w;
}

} // namespace

double green_series_shell(const PVector& x, int l, const EllipticPolynomial& poly, double alpha, double mass,
                          const BilinearForm& form, const EllipticityCertificate& cert) {
    validate_series_inputs(x, poly, mass, form, cert);
    int p = poly.prime;
    int n = poly.dim;
    int kx = vector_norm_exponent(x);
    if (l >= 1 + cert.level - kx + form.beta) return 0.0; // the ball character integral vanishes
    std::vector<PRational> w = rep_pairings(x, form, cert);
    double lp = static_cast<double>(p);
    double m2 = mass * mass;
    double scale = std::pow(lp, static_cast<double>(l - cert.level) * n);
    double tld = std::pow(lp, static_cast<double>(l) * poly.degree * alpha);
    cplx acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
        double denom = tld * std::pow(lp, -alpha * cert.rep_ord[i]) + m2;
        acc += chi_scaled_neg(w[i], -l) / denom;
    }
    return scale * acc.real();
}

SeriesValue green_series(const PVector& x, const EllipticPolynomial& poly, double alpha, double mass,
                         const BilinearForm& form, const EllipticityCertificate& cert, double tol) {
    validate_series_inputs(x, poly, mass, form, cert);
    if (!(tol > 0.0)) throw std::invalid_argument("green_series: tol must be positive");
    int p = poly.prime;
    int n = poly.dim;
    int kx = vector_norm_exponent(x);
    int l_max = cert.level - kx + form.beta;

    std::vector<PRational> w = rep_pairings(x, form, cert);
    double lp = static_cast<double>(p);
    double m2 = mass * mass;
    double mcount = static_cast<double>(cert.rep_count);
    double geo = 1.0 / (1.0 - std::pow(lp, -static_cast<double>(n)));

    cplx acc = 0.0;
    double tail = std::numeric_limits<double>::infinity();
    int l = l_max;
    for (; l > l_max - 100000; --l) {
        double scale = std::pow(lp, static_cast<double>(l - cert.level) * n);
        double tld = std::pow(lp, static_cast<double>(l) * poly.degree * alpha);
        cplx shell = 0.0;
        for (size_t i = 0; i < w.size(); ++i) {
            double denom = tld * std::pow(lp, -alpha * cert.rep_ord[i]) + m2;
            shell += chi_scaled_neg(w[i], -l) / denom;
        }
        acc += scale * shell;
        // bound the remaining shells l' <= l-1 by sum p^(l'N - LN) M / m^2
        tail = mcount * std::pow(lp, static_cast<double>(l - 1 - cert.level) * n) * geo / m2;
        if (tail < tol) break;
    }
    if (std::abs(acc.imag()) > 1e-9 * std::max(1.0, std::abs(acc.real())))
        throw std::logic_error("green_series: imaginary parts failed to cancel");
    return SeriesValue{acc.real(), tail, l, l_max};
}

DecayFit decay_fit(const GreenKernel& G, DecayRegime regime) {
    const Lattice& lat = G.lat;
    std::map<int, std::pair<double, i64>> shells; // exponent -> (sum, count)
    for (i64 i = 0; i < lat.point_count; ++i) {
        auto e = lat.point_norm_exponent(i);
        if (!e) continue; // origin cell excluded from decay claims
        bool in_regime = regime == DecayRegime::near_zero ? (*e <= 0) : (*e >= 1);
        if (!in_regime) continue;
        auto& s = shells[*e];
        s.first += G.values[i].real();
        s.second += 1;
    }
    std::vector<std::pair<double, double>> pts; // (log ||x||, log avg)
    double logp = std::log(static_cast<double>(lat.prime));
    for (const auto& [e, s] : shells) {
        double avg = s.first / static_cast<double>(s.second);
        if (avg <= 0.0) continue;
        pts.push_back({e * logp, std::log(avg)});
    }
    if (pts.size() < 4) throw std::invalid_argument("decay_fit: insufficient shells in regime");

    // The power law holds asymptotically, so the estimate comes from the two
    // shells deepest in the regime; one Richardson step at the known
    // geometric rate of the pair-slope corrections removes the leading bias
    // from the bounded remainder.
    if (regime == DecayRegime::infinity) std::reverse(pts.begin(), pts.end());
    auto pair_slope = [&](size_t a, size_t b) {
        return (pts[b].second - pts[a].second) / (pts[b].first - pts[a].first);
    };
    double s1 = pair_slope(0, 1);
    double s2 = pair_slope(1, 2);

    double ad = G.alpha * G.poly.degree;
    double ndim = static_cast<double>(lat.dim);
    double rate = regime == DecayRegime::infinity ? std::pow(static_cast<double>(lat.prime), ad)
                                                  : std::pow(static_cast<double>(lat.prime), ndim - ad);
    double slope = rate > 1.5 ? s1 + (s1 - s2) / (rate - 1.0) : s1;

    bool bounded = regime == DecayRegime::near_zero && ad >= ndim;
    double expected = regime == DecayRegime::infinity ? -(ad + ndim) : (bounded ? 0.0 : ad - ndim);
    return DecayFit{slope, expected, static_cast<int>(pts.size()), bounded};
}

double z_alpha(const EllipticPolynomial& poly, double alpha, const EllipticityCertificate& cert, int p) {
    if (poly.prime != p) throw std::invalid_argument("z_alpha: prime mismatch");
    double acc = 0.0;
    for (int o : cert.rep_ord) acc += std::pow(static_cast<double>(p), -alpha * o);
    return acc * std::pow(static_cast<double>(p), -static_cast<double>(cert.level) * poly.dim);
}

} // namespace qpf
