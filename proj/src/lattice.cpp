#include "qpf/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "qpf/fft.hpp"
#include "qpf/parallel.hpp"
#include "qpf/rng.hpp"

namespace qpf {

namespace {
int g_max_threads = 1;
}

int max_threads() { return g_max_threads; }
void set_max_threads(int n) { g_max_threads = n < 1 ? 1 : n; }

Lattice::Lattice(int p, int n, int j, int k) : prime(p), dim(n), jexp(j), kexp(k) {
    if (!is_prime(p)) throw std::invalid_argument("Lattice: prime must be prime and >= 2");
    if (n < 1) throw std::invalid_argument("Lattice: dimension must be positive");
    if (j < 0 || k < 0) throw std::invalid_argument("Lattice: j and k must be non-negative");
    side = checked_pow(p, j + k);
    point_count = 1;
    for (int d = 0; d < n; ++d) point_count = checked_mul(point_count, side);
}

void Lattice::index_to_multi(i64 idx, i64* m) const {
    for (int d = dim - 1; d >= 0; --d) {
        m[d] = idx % side;
        idx /= side;
    }
}

i64 Lattice::multi_to_index(const i64* m) const {
    i64 idx = 0;
    for (int d = 0; d < dim; ++d) idx = idx * side + m[d];
    return idx;
}

PVector Lattice::point(i64 idx) const {
    std::vector<i64> m(static_cast<size_t>(dim));
    index_to_multi(idx, m.data());
    std::vector<PRational> coords;
    coords.reserve(static_cast<size_t>(dim));
    for (int d = 0; d < dim; ++d) coords.emplace_back(m[static_cast<size_t>(d)], jexp, prime);
    return PVector(prime, std::move(coords));
}

std::optional<int> Lattice::point_norm_exponent(i64 idx) const {
    int best = std::numeric_limits<int>::min();
    for (int d = dim - 1; d >= 0; --d) {
        i64 c = idx % side;
        idx /= side;
        if (c != 0) best = std::max(best, jexp - p_multiplicity(c, prime));
    }
    if (best == std::numeric_limits<int>::min()) return std::nullopt;
    return best;
}

i64 Lattice::reflect_index(i64 idx) const {
    i64 out = 0;
    i64 mult = 1;
    for (int d = 0; d < dim; ++d) {
        i64 c = idx % side;
        idx /= side;
        i64 r = c == 0 ? 0 : side - c;
        out += r * mult;
        mult *= side;
    }
    return out;
}

GridFn::GridFn(const Lattice& l, Domain d, std::vector<cplx> v) : lat(l), tag(d), values(std::move(v)) {
    if (static_cast<i64>(values.size()) != l.point_count)
        throw std::invalid_argument("GridFn: value count does not match lattice");
}

GridFn ball_indicator(const Lattice& lat, int radius_exp) {
    GridFn f(lat, Domain::position);
    for (i64 i = 0; i < lat.point_count; ++i) {
        auto e = lat.point_norm_exponent(i);
        f[i] = (!e || *e <= radius_exp) ? 1.0 : 0.0;
    }
    return f;
}

GridFn sphere_indicator(const Lattice& lat, int radius_exp) {
    GridFn f(lat, Domain::position);
    for (i64 i = 0; i < lat.point_count; ++i) {
        auto e = lat.point_norm_exponent(i);
        f[i] = (e && *e == radius_exp) ? 1.0 : 0.0;
    }
    return f;
}

namespace {

// index of x - a on the lattice group
i64 diff_index(const Lattice& lat, i64 x, i64 a) {
    i64 out = 0;
    i64 mult = 1;
    for (int d = 0; d < lat.dim; ++d) {
        i64 cx = x % lat.side;
        i64 ca = a % lat.side;
        x /= lat.side;
        a /= lat.side;
        i64 r = (cx - ca) % lat.side;
        if (r < 0) r += lat.side;
        out += r * mult;
        mult *= lat.side;
    }
    return out;
}

} // namespace

GridFn ball_indicator_at(const Lattice& lat, int radius_exp, i64 center_idx) {
    GridFn f(lat, Domain::position);
    for (i64 i = 0; i < lat.point_count; ++i) {
        auto e = lat.point_norm_exponent(diff_index(lat, i, center_idx));
        f[i] = (!e || *e <= radius_exp) ? 1.0 : 0.0;
    }
    return f;
}

GridFn sphere_indicator_at(const Lattice& lat, int radius_exp, i64 center_idx) {
    GridFn f(lat, Domain::position);
    for (i64 i = 0; i < lat.point_count; ++i) {
        auto e = lat.point_norm_exponent(diff_index(lat, i, center_idx));
        f[i] = (e && *e == radius_exp) ? 1.0 : 0.0;
    }
    return f;
}

GridFn delta_fn(const Lattice& lat, i64 idx) {
    GridFn f(lat, Domain::position);
    f[idx] = std::pow(static_cast<double>(lat.prime), static_cast<double>(lat.kexp) * lat.dim);
    return f;
}

// ---------------------------------------------------------------------------
// BilinearForm

namespace {

// Exact determinant by cofactor expansion; fine for the small N used here.
PRational det_recursive(const std::vector<PRational>& m, std::vector<int> cols, int row, int n, int p) {
    if (static_cast<int>(cols.size()) == 1)
        return m[static_cast<size_t>(row) * n + cols[0]];
    PRational acc = PRational::zero(p);
    for (size_t c = 0; c < cols.size(); ++c) {
        std::vector<int> rest;
        for (size_t t = 0; t < cols.size(); ++t)
            if (t != c) rest.push_back(cols[t]);
        PRational sub = det_recursive(m, rest, row + 1, n, p);
        PRational term = m[static_cast<size_t>(row) * n + cols[c]] * sub;
        acc = (c % 2 == 0) ? acc + term : acc - term;
    }
    return acc;
}

PRational matrix_det(const std::vector<PRational>& m, int n, int p) {
    std::vector<int> cols(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) cols[static_cast<size_t>(i)] = i;
    return det_recursive(m, cols, 0, n, p);
}

i64 int_det(const std::vector<i64>& m, std::vector<int> cols, int row, int n) {
    if (static_cast<int>(cols.size()) == 1) return m[static_cast<size_t>(row) * n + cols[0]];
    i64 acc = 0;
    for (size_t c = 0; c < cols.size(); ++c) {
        std::vector<int> rest;
        for (size_t t = 0; t < cols.size(); ++t)
            if (t != c) rest.push_back(cols[t]);
        i64 term = checked_mul(m[static_cast<size_t>(row) * n + cols[c]], int_det(m, rest, row + 1, n));
        acc = (c % 2 == 0) ? checked_add(acc, term) : checked_add(acc, -term);
    }
    return acc;
}

BilinearForm build_form(int p, int n, const std::vector<PRational>& matrix) {
    if (static_cast<int>(matrix.size()) != n * n)
        throw std::invalid_argument("BilinearForm: matrix must be N x N");
    for (const auto& e : matrix)
        if (e.prime != p) throw std::invalid_argument("BilinearForm: entry prime mismatch");
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < r; ++c)
            if (matrix[static_cast<size_t>(r) * n + c] != matrix[static_cast<size_t>(c) * n + r])
                throw std::invalid_argument("BilinearForm: matrix must be symmetric");

    BilinearForm form;
    form.prime = p;
    form.dim = n;
    form.entries = matrix;
    form.det = matrix_det(matrix, n, p);
    if (form.det.is_zero()) throw std::invalid_argument("BilinearForm: degenerate matrix");

    int beta = PRational::ORD_INF;
    for (const auto& e : matrix)
        if (!e.is_zero()) beta = std::min(beta, e.order());
    form.beta = beta;

    form.unit_part.resize(static_cast<size_t>(n) * n, 0);
    for (size_t i = 0; i < matrix.size(); ++i) {
        PRational u = matrix[i].scaled_by_p_power(-beta);
        if (u.kexp != 0) throw std::logic_error("BilinearForm: unit part not integral");
        form.unit_part[i] = u.num;
    }

    form.cq = std::pow(static_cast<double>(p), -0.5 * form.det.order());
    return form;
}

} // namespace

PRational BilinearForm::bilinear(const PVector& x, const PVector& y) const {
    if (x.dim() != dim || y.dim() != dim) throw std::invalid_argument("bilinear: dimension mismatch");
    PRational acc = PRational::zero(prime);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c)
            acc = acc + x.coords[static_cast<size_t>(r)] * at(r, c) * y.coords[static_cast<size_t>(c)];
    return acc;
}

PRational BilinearForm::quadratic(const PVector& x) const { return bilinear(x, x); }

BilinearForm BilinearForm::standard(int p, int n) {
    std::vector<PRational> m(static_cast<size_t>(n) * n, PRational::zero(p));
    for (int i = 0; i < n; ++i) m[static_cast<size_t>(i) * n + i] = PRational::integer(1, p);
    return make(p, n, m);
}

BilinearForm BilinearForm::quadratic_only(int p, int n, const std::vector<PRational>& matrix) {
    return build_form(p, n, matrix);
}

BilinearForm BilinearForm::make(int p, int n, const std::vector<PRational>& matrix) {
    BilinearForm form = build_form(p, n, matrix);

    // The finite transform is bijective only when the unit part is invertible
    // mod p; otherwise the kernel aliases and no C(q) can fix it.
    i64 d = 0;
    {
        std::vector<int> cols(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) cols[static_cast<size_t>(i)] = i;
        d = int_det(form.unit_part, cols, 0, n);
    }
    if (d % p == 0)
        throw std::invalid_argument("BilinearForm: form is not self-dual compatible (unit part singular mod p)");

    // validate C(q) by the involution roundtrip on a probe lattice
    Lattice probe(p, n, std::max(1, form.beta), std::max(1, -form.beta));
    form.transform_capable = true;
    GridFn f(probe, Domain::position);
    CounterRng rng(0x9d2c5680u, 17, 42);
    for (auto& v : f.values) v = {rng.next_unit() - 0.5, rng.next_unit() - 0.5};
    GridFn once = fourier_forward(f, form);
    once.tag = Domain::position; // the double transform applies F to Ff as a function
    GridFn ff = fourier_forward(once, form);
    double err = 0.0;
    for (i64 i = 0; i < probe.point_count; ++i)
        err = std::max(err, std::abs(ff[i] - f[probe.reflect_index(i)]));
    if (err > 1e-10)
        throw std::invalid_argument("BilinearForm: self-dual roundtrip failed on probe lattice");
    return form;
}

Lattice dual_lattice(const Lattice& lat, const BilinearForm& form) {
    if (form.prime != lat.prime || form.dim != lat.dim)
        throw std::invalid_argument("dual_lattice: form does not match lattice");
    int j2 = lat.kexp + form.beta;
    int k2 = lat.jexp - form.beta;
    if (j2 < 0 || k2 < 0)
        throw std::invalid_argument("dual_lattice: resolution mismatch (dual exponent negative)");
    return Lattice(lat.prime, lat.dim, j2, k2);
}

cplx haar_integral(const GridFn& f) {
    if (f.tag != Domain::position) throw std::invalid_argument("haar_integral: domain-tag mismatch");
    cplx acc = 0.0;
    for (const auto& v : f.values) acc += v;
    return acc * f.lat.cell_volume();
}

namespace {

bool unit_part_is_identity(const BilinearForm& form) {
    for (int r = 0; r < form.dim; ++r)
        for (int c = 0; c < form.dim; ++c)
            if (form.unit_part[static_cast<size_t>(r) * form.dim + c] != (r == c ? 1 : 0)) return false;
    return true;
}

// Core transform: out[n] = C(q) p^-kN sum_m f[m] omega^(m . Bt n), living on
// the dual lattice. Works for either direction; the caller fixes the tags.
GridFn transform_core(const GridFn& f, const BilinearForm& form) {
    if (!form.transform_capable)
        throw std::invalid_argument("fourier: bilinear form was not constructed for transform use");
    const Lattice& lat = f.lat;
    Lattice dual = dual_lattice(lat, form);
    double scale = form.cq * lat.cell_volume();

    GridFn out(dual, Domain::frequency, f.values);
    fft_cube_pow_p(out.values.data(), lat.prime, lat.jexp + lat.kexp, lat.dim);

    if (unit_part_is_identity(form)) {
        for (auto& v : out.values) v *= scale;
        return out;
    }

    // gather through the index map n -> Bt n  (a bijection mod side)
    const i64 side = lat.side;
    std::vector<cplx> mapped(out.values.size());
    std::vector<i64> nv(static_cast<size_t>(lat.dim)), uv(static_cast<size_t>(lat.dim));
    for (i64 n = 0; n < lat.point_count; ++n) {
        lat.index_to_multi(n, nv.data());
        for (int r = 0; r < lat.dim; ++r) {
            i128 acc = 0;
            for (int c = 0; c < lat.dim; ++c)
                acc += static_cast<i128>(form.unit_part[static_cast<size_t>(r) * lat.dim + c]) * nv[static_cast<size_t>(c)];
            i64 m = static_cast<i64>(acc % side);
            if (m < 0) m += side;
            uv[static_cast<size_t>(r)] = m;
        }
        mapped[static_cast<size_t>(n)] = out.values[static_cast<size_t>(lat.multi_to_index(uv.data()))] * scale;
    }
    out.values = std::move(mapped);
    return out;
}

} // namespace

GridFn fourier_forward(const GridFn& f, const BilinearForm& form) {
    if (f.tag != Domain::position) throw std::invalid_argument("fourier_forward: domain-tag mismatch");
    return transform_core(f, form);
}

GridFn fourier_inverse(const GridFn& f, const BilinearForm& form) {
    if (f.tag != Domain::frequency) throw std::invalid_argument("fourier_inverse: domain-tag mismatch");
    GridFn g = transform_core(f, form);
    // inverse = forward composed with reflection
    GridFn out(g.lat, Domain::position);
    for (i64 i = 0; i < g.lat.point_count; ++i) out[i] = g[g.lat.reflect_index(i)];
    return out;
}

GridFn fourier_forward_direct(const GridFn& f, const BilinearForm& form) {
    if (!form.transform_capable)
        throw std::invalid_argument("fourier: bilinear form was not constructed for transform use");
    const Lattice& lat = f.lat;
    Lattice dual = dual_lattice(lat, form);
    double scale = form.cq * lat.cell_volume();
    const i64 side = lat.side;

    std::vector<cplx> roots(static_cast<size_t>(side));
    for (i64 t = 0; t < side; ++t) {
        double a = 2.0 * M_PI * static_cast<double>(t) / static_cast<double>(side);
        roots[static_cast<size_t>(t)] = {std::cos(a), std::sin(a)};
    }

    GridFn out(dual, Domain::frequency);
    std::vector<i64> nv(static_cast<size_t>(lat.dim)), mv(static_cast<size_t>(lat.dim)), bn(static_cast<size_t>(lat.dim));
    for (i64 n = 0; n < lat.point_count; ++n) {
        lat.index_to_multi(n, nv.data());
        for (int r = 0; r < lat.dim; ++r) {
            i128 acc = 0;
            for (int c = 0; c < lat.dim; ++c)
                acc += static_cast<i128>(form.unit_part[static_cast<size_t>(r) * lat.dim + c]) * nv[static_cast<size_t>(c)];
            i64 m = static_cast<i64>(acc % side);
            if (m < 0) m += side;
            bn[static_cast<size_t>(r)] = m;
        }
        cplx acc = 0.0;
        for (i64 m = 0; m < lat.point_count; ++m) {
            lat.index_to_multi(m, mv.data());
            i128 dot = 0;
            for (int d = 0; d < lat.dim; ++d)
                dot += static_cast<i128>(mv[static_cast<size_t>(d)]) * bn[static_cast<size_t>(d)];
            acc += f[m] * roots[static_cast<size_t>(dot % side)];
        }
        out[n] = acc * scale;
    }
    return out;
}

GridFn convolve(const GridFn& f, const GridFn& g, const BilinearForm& form) {
    if (f.lat != g.lat) throw std::invalid_argument("convolve: lattice mismatch");
    GridFn fh = fourier_forward(f, form);
    GridFn gh = fourier_forward(g, form);
    for (size_t i = 0; i < fh.values.size(); ++i) fh.values[i] *= gh.values[i] / form.cq;
    return fourier_inverse(fh, form);
}

SobolevParams::SobolevParams(double a, int l) : alpha(a), level(l) {
    if (!(a > 0.0)) throw std::invalid_argument("SobolevParams: alpha must be positive");
}

namespace {

// [max(1, ||xi||_p)]^(2 alpha l) per frequency index
std::vector<double> sobolev_weights(const Lattice& freq, double alpha, int level) {
    std::vector<double> w(static_cast<size_t>(freq.point_count));
    double lp = static_cast<double>(freq.prime);
    for (i64 i = 0; i < freq.point_count; ++i) {
        auto e = freq.point_norm_exponent(i);
        double base = (!e || *e <= 0) ? 1.0 : std::pow(lp, static_cast<double>(*e));
        w[static_cast<size_t>(i)] = std::pow(base, 2.0 * alpha * level);
    }
    return w;
}

} // namespace

cplx sobolev_inner(const GridFn& f, const GridFn& g, const SobolevParams& sp, const BilinearForm& form) {
    if (f.lat != g.lat) throw std::invalid_argument("sobolev_inner: lattice mismatch");
    GridFn fh = fourier_forward(f, form);
    GridFn gh = fourier_forward(g, form);
    auto w = sobolev_weights(fh.lat, sp.alpha, sp.level);
    cplx acc = 0.0;
    for (size_t i = 0; i < fh.values.size(); ++i)
        acc += w[i] * fh.values[i] * std::conj(gh.values[i]);
    return acc * fh.lat.cell_volume();
}

double sobolev_norm(const GridFn& f, const SobolevParams& sp, const BilinearForm& form) {
    return std::sqrt(std::max(0.0, sobolev_inner(f, f, sp, form).real()));
}

double sobolev_metric(const GridFn& f, const GridFn& g, double alpha, int lmax, const BilinearForm& form) {
    if (f.lat != g.lat) throw std::invalid_argument("sobolev_metric: lattice mismatch");
    if (lmax < 0) throw std::invalid_argument("sobolev_metric: lmax must be >= 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("sobolev_metric: alpha must be positive");
    GridFn diff(f.lat, Domain::position);
    for (size_t i = 0; i < diff.values.size(); ++i) diff.values[i] = f.values[i] - g.values[i];
    GridFn dh = fourier_forward(diff, form);
    double vol = dh.lat.cell_volume();
    double lp = static_cast<double>(dh.lat.prime);

    double best = 0.0;
    for (int l = 0; l <= lmax; ++l) {
        double acc = 0.0;
        for (i64 i = 0; i < dh.lat.point_count; ++i) {
            auto e = dh.lat.point_norm_exponent(i);
            double base = (!e || *e <= 0) ? 1.0 : std::pow(lp, static_cast<double>(*e));
            acc += std::pow(base, 2.0 * alpha * l) * std::norm(dh[i]);
        }
        double norm_l = std::sqrt(acc * vol);
        best = std::max(best, std::pow(2.0, -l) * norm_l / (1.0 + norm_l));
    }
    return best;
}

double exact_ball_character_integral(int p, int n, int e, const std::vector<i64>& unit) {
    if (static_cast<int>(unit.size()) != n) throw std::invalid_argument("character integral: bad unit vector");
    bool has_unit = false;
    for (i64 u : unit) has_unit = has_unit || (u != 0 && u % p != 0);
    if (!has_unit) throw std::invalid_argument("character integral: vector is not a unit vector");
    if (e <= 0) return 1.0; // every argument has order >= 0, so chi = 1 at all lattice points

    // Count residues of u . y mod p^e over the full resolution-k lattice of
    // Z_p^N; the sum of all p^e-th roots of unity over balanced counts is 0.
    i64 mod = checked_pow(p, e);
    Lattice lat(p, n, 0, e);
    std::vector<i64> counts(static_cast<size_t>(mod), 0);
    std::vector<i64> m(static_cast<size_t>(n));
    for (i64 i = 0; i < lat.point_count; ++i) {
        lat.index_to_multi(i, m.data());
        i128 dot = 0;
        for (int d = 0; d < n; ++d) dot += static_cast<i128>(unit[static_cast<size_t>(d)]) * m[static_cast<size_t>(d)];
        i64 r = static_cast<i64>(dot % mod);
        if (r < 0) r += mod;
        ++counts[static_cast<size_t>(r)];
    }
    for (i64 r = 1; r < mod; ++r)
        if (counts[static_cast<size_t>(r)] != counts[0])
            throw std::logic_error("character integral: residues not balanced");
    return 0.0;
}

// ---------------------------------------------------------------------------
// CSV

void write_grid_csv(std::ostream& os, const GridFn& f, const std::string& extra_header) {
    os << "# " << f.lat.prime << " " << f.lat.dim << " " << f.lat.jexp << " " << f.lat.kexp
       << " " << domain_name(f.tag) << "\n";
    if (!extra_header.empty()) os << "# " << extra_header << "\n";
    for (int d = 0; d < f.lat.dim; ++d) os << "index_" << d << ",";
    os << "re,im\n";
    std::vector<i64> m(static_cast<size_t>(f.lat.dim));
    char buf[64];
    for (i64 i = 0; i < f.lat.point_count; ++i) {
        f.lat.index_to_multi(i, m.data());
        for (int d = 0; d < f.lat.dim; ++d) os << m[static_cast<size_t>(d)] << ",";
        std::snprintf(buf, sizeof buf, "%.17g", f[i].real());
        os << buf << ",";
        std::snprintf(buf, sizeof buf, "%.17g", f[i].imag());
        os << buf << "\n";
    }
}

GridFn read_grid_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.empty() || line[0] != '#')
        throw std::runtime_error("grid csv: missing header");
    std::istringstream hs(line.substr(1));
    int p, n, j, k;
    std::string tag;
    if (!(hs >> p >> n >> j >> k >> tag)) throw std::runtime_error("grid csv: bad header");
    Lattice lat(p, n, j, k);
    GridFn f(lat, tag == "frequency" ? Domain::frequency : Domain::position);

    // skip extra comment lines and the column-title row
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] == '#') continue;
        break;
    }
    std::vector<i64> m(static_cast<size_t>(n));
    i64 rows = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        for (int d = 0; d < n; ++d) {
            if (!std::getline(ls, cell, ',')) throw std::runtime_error("grid csv: short row");
            m[static_cast<size_t>(d)] = std::stoll(cell);
        }
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("grid csv: short row");
        double re = std::stod(cell);
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("grid csv: short row");
        double im = std::stod(cell);
        f[lat.multi_to_index(m.data())] = {re, im};
        ++rows;
    }
    if (rows != lat.point_count) throw std::runtime_error("grid csv: row count mismatch");
    return f;
}

void write_grid_csv_file(const std::string& path, const GridFn& f, const std::string& extra_header) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for write: " + path);
    write_grid_csv(os, f, extra_header);
}

GridFn read_grid_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open for read: " + path);
    return read_grid_csv(is);
}

} // namespace qpf
