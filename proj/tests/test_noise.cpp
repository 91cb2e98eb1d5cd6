#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qpf/noise.hpp>
#include <qpf/rng.hpp>

using namespace qpf;

namespace {

LevyTriple atom_triple(double a, double sigma, double s, double lambda) {
    return LevyTriple(a, sigma, {LevyAtom{s, lambda}});
}

GreenKernel test_kernel(int p, int n, int j, int k, double alpha, double mass) {
    EllipticPolynomial poly = n == 1 ? EllipticPolynomial::parse("x1", p, 1)
                                     : EllipticPolynomial::parse("x1^2+x2^2", p, 2);
    return green_spectral(Lattice(p, n, j, k), poly, alpha, mass, BilinearForm::standard(p, n));
}

} // namespace

TEST_CASE("psi closed forms") {
    LevyTriple gauss = LevyTriple::gaussian(1.0);
    for (double t : {-2.0, -0.5, 0.0, 1.0, 3.0}) {
        auto v = psi_eval(t, gauss);
        CHECK(v.real() == doctest::Approx(-t * t / 2).epsilon(1e-14));
        CHECK(v.imag() == 0.0);
    }
    CHECK(psi_eval(0.0, atom_triple(0.4, 0.7, 1.5, 2.0)) == std::complex<double>(0.0, 0.0));

    // single atom (s=1, lambda=2): Psi(t) = 2 (e^{it} - 1 - it/2)
    LevyTriple single = atom_triple(0.0, 0.0, 1.0, 2.0);
    for (double t : {-1.0, 0.3, 2.0}) {
        std::complex<double> expect = 2.0 * (std::polar(1.0, t) - 1.0 - std::complex<double>(0, t / 2));
        CHECK(std::abs(psi_eval(t, single) - expect) < 1e-14);
    }
}

TEST_CASE("psi hermiticity and negative real part") {
    CounterRng rng(2, 0, 0);
    for (int i = 0; i < 100; ++i) {
        LevyTriple levy(rng.next_unit() - 0.5, rng.next_unit(),
                        {LevyAtom{rng.next_unit() * 2 - 1 + 1e-3, rng.next_unit() + 0.1},
                         LevyAtom{rng.next_unit() * 3 + 0.1, rng.next_unit() + 0.1}});
        double t = (rng.next_unit() - 0.5) * 10;
        auto a = psi_eval(-t, levy);
        auto b = std::conj(psi_eval(t, levy));
        CHECK(std::abs(a - b) < 1e-14);
        CHECK(psi_eval(t, levy).real() <= 1e-15);
    }
}

TEST_CASE("levy triple validation") {
    CHECK_THROWS_AS(LevyTriple(0.0, -1.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(LevyTriple(0.0, 1.0, {LevyAtom{0.0, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(LevyTriple(0.0, 1.0, {LevyAtom{1.0, 0.0}}), std::invalid_argument);
}

TEST_CASE("characteristic functional closed forms") {
    Lattice lat(2, 1, 2, 2);
    LevyTriple gauss = LevyTriple::gaussian(1.0);

    // f = t Omega: C(f) = e^{Psi(t) vol(Z_p)} = e^{-t^2/2}
    for (double t : {0.5, 1.0, 2.0}) {
        GridFn f = ball_indicator(lat, 0);
        for (auto& v : f.values) v *= t;
        CHECK(std::abs(char_functional(f, gauss) - std::exp(-t * t / 2)) < 1e-12);
    }

    // C(0) = 1
    CHECK(char_functional(GridFn(lat, Domain::position), gauss) == std::complex<double>(1.0, 0.0));

    // |C(f)| <= 1 and factorization over disjoint supports
    LevyTriple levy = atom_triple(0.3, 0.8, 1.0, 0.7);
    GridFn f1 = ball_indicator(lat, 0);
    GridFn f2 = sphere_indicator(lat, 1);
    for (auto& v : f1.values) v *= 1.3;
    for (auto& v : f2.values) v *= -0.4;
    GridFn sum(lat, Domain::position);
    for (i64 i = 0; i < lat.point_count; ++i) sum[i] = f1[i] + f2[i];
    auto c1 = char_functional(f1, levy);
    auto c2 = char_functional(f2, levy);
    auto cs = char_functional(sum, levy);
    CHECK(std::abs(cs - c1 * c2) < 1e-12);
    CHECK(std::abs(cs) <= 1.0 + 1e-12);

    GridFn bad(lat, Domain::position);
    bad[0] = {0.0, 1.0};
    CHECK_THROWS_AS(char_functional(bad, gauss), std::invalid_argument);
}

TEST_CASE("moment constants") {
    auto cg = moment_constants(LevyTriple::gaussian(0.7), 5);
    CHECK(cg[0] == 0.0);
    CHECK(cg[1] == doctest::Approx(0.49).epsilon(1e-14));
    for (int m = 3; m <= 5; ++m) CHECK(cg[static_cast<size_t>(m - 1)] == 0.0);

    // atom (s=1, lambda=1): c1 = 1/2, c2 = 1, c_m = 1
    auto ca = moment_constants(atom_triple(0.0, 0.0, 1.0, 1.0), 6);
    CHECK(ca[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ca[1] == doctest::Approx(1.0).epsilon(1e-14));
    for (int m = 3; m <= 6; ++m) CHECK(ca[static_cast<size_t>(m - 1)] == doctest::Approx(1.0).epsilon(1e-14));

    // atom (s=2, lambda=3): c3 = 3 * 8 = 24
    auto cb = moment_constants(atom_triple(0.0, 0.0, 2.0, 3.0), 3);
    CHECK(cb[2] == doctest::Approx(24.0).epsilon(1e-14));

    CHECK_THROWS_AS(moment_constants(LevyTriple::gaussian(1.0), 0), std::invalid_argument);
}

TEST_CASE("pure drift noise is deterministic") {
    Lattice lat(3, 1, 1, 2);
    NoiseSample s = sample_noise(lat, LevyTriple(1.0, 0.0, {}), 9);
    double v = lat.cell_volume();
    for (double inc : s.increments) CHECK(inc == v);
}

TEST_CASE("gaussian increment mean within CLT band") {
    Lattice lat(2, 1, 0, 0); // single cell, v = 1
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i)
        sum += sample_noise(lat, LevyTriple::gaussian(1.0), 123, static_cast<uint64_t>(i)).increments[0];
    CHECK(std::abs(sum / n) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("noise samples are reproducible and cell-independent") {
    Lattice lat(2, 1, 2, 2);
    LevyTriple levy = atom_triple(0.2, 1.0, 1.0, 0.5);
    NoiseSample a = sample_noise(lat, levy, 42);
    NoiseSample b = sample_noise(lat, levy, 42);
    CHECK(a.increments == b.increments);
    NoiseSample c = sample_noise(lat, levy, 43);
    CHECK(a.increments != c.increments);

    // sample correlation between two fixed disjoint cells over many samples
    const int n = 100000;
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        NoiseSample s = sample_noise(lat, levy, 7, static_cast<uint64_t>(i));
        double x = s.increments[3], y = s.increments[11];
        sx += x; sy += y; sxy += x * y; sxx += x * x; syy += y * y;
    }
    double cov = sxy / n - (sx / n) * (sy / n);
    double corr = cov / std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    CHECK(std::abs(corr) < 0.02);
}

TEST_CASE("empirical characteristic function matches exp(v Psi(t))") {
    Lattice lat(2, 1, 1, 1); // v = 1/2
    double v = lat.cell_volume();
    const int n = 20000;
    for (const LevyTriple& levy : {LevyTriple::gaussian(1.0), atom_triple(0.0, 1.0, 1.0, 0.5)}) {
        for (int t = -3; t <= 3; ++t) {
            std::complex<double> emp = 0.0;
            for (int i = 0; i < n; ++i) {
                double x = sample_noise(lat, levy, 2024, static_cast<uint64_t>(i)).increments[0];
                emp += std::polar(1.0, t * x);
            }
            emp /= static_cast<double>(n);
            std::complex<double> target = std::exp(v * psi_eval(t, levy));
            CHECK(std::abs(emp - target) < 5e-2);
        }
    }
}

TEST_CASE("field sampling: zero, delta, pairing equivalence, linearity") {
    GreenKernel G = test_kernel(2, 1, 2, 2, 1.0, 1.0);
    BilinearForm B = BilinearForm::standard(2, 1);
    const Lattice& lat = G.lat;

    NoiseSample zero{lat, std::vector<double>(static_cast<size_t>(lat.point_count), 0.0)};
    FieldSample f0 = sample_field(zero, G, B);
    for (double v : f0.values) CHECK(v == 0.0);

    // unit increment at cell 0: the field is the kernel itself
    NoiseSample delta{lat, std::vector<double>(static_cast<size_t>(lat.point_count), 0.0)};
    delta.increments[0] = 1.0;
    FieldSample fd = sample_field(delta, G, B);
    for (i64 i = 0; i < lat.point_count; ++i)
        CHECK(std::abs(fd.values[static_cast<size_t>(i)] - G.values[i].real()) < 1e-10);

    // unit increment at cell c: the field is the translated kernel
    NoiseSample shifted{lat, std::vector<double>(static_cast<size_t>(lat.point_count), 0.0)};
    i64 c = 5;
    shifted.increments[static_cast<size_t>(c)] = 1.0;
    FieldSample fs = sample_field(shifted, G, B);
    std::vector<i64> mx(1), mc(1);
    for (i64 i = 0; i < lat.point_count; ++i) {
        lat.index_to_multi(i, mx.data());
        lat.index_to_multi(c, mc.data());
        i64 d = (mx[0] - mc[0]) % lat.side;
        if (d < 0) d += lat.side;
        CHECK(std::abs(fs.values[static_cast<size_t>(i)] - G.values[d].real()) < 1e-10);
    }

    // Phi(g) via the field density equals <G*g, noise>
    LevyTriple levy = atom_triple(0.1, 1.0, 2.0, 0.3);
    NoiseSample noise = sample_noise(lat, levy, 11);
    FieldSample field = sample_field(noise, G, B);
    CounterRng rng(17, 0, 0);
    GridFn g(lat, Domain::position);
    for (auto& v : g.values) v = rng.next_unit() - 0.5;
    GridFn gc = convolve(G.values, g, B);
    CHECK(std::abs(field_pair(field, g) - noise_pair(noise, gc)) < 1e-10);

    // linearity of the pairing per sample
    GridFn g2(lat, Domain::position);
    for (auto& v : g2.values) v = rng.next_unit() - 0.5;
    GridFn combo(lat, Domain::position);
    for (i64 i = 0; i < lat.point_count; ++i) combo[i] = 2.0 * g[i] - 3.0 * g2[i];
    CHECK(std::abs(field_pair(field, combo) - (2.0 * field_pair(field, g) - 3.0 * field_pair(field, g2))) < 1e-10);
}

TEST_CASE("gaussian field variance matches sigma^2 int (G*g)^2") {
    GreenKernel G = test_kernel(2, 1, 2, 2, 1.0, 1.0);
    BilinearForm B = BilinearForm::standard(2, 1);
    const Lattice& lat = G.lat;
    double sigma = 1.0;
    LevyTriple levy = LevyTriple::gaussian(sigma);
    GridFn g = ball_indicator(lat, 0);
    GridFn gc = convolve(G.values, g, B);

    double target = 0.0;
    for (const auto& v : gc.values) target += v.real() * v.real();
    target *= sigma * sigma * lat.cell_volume();

    const int n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        double phi = noise_pair(sample_noise(lat, levy, 5150, static_cast<uint64_t>(i)), gc);
        sum += phi;
        sumsq += phi * phi;
    }
    double var = sumsq / n - (sum / n) * (sum / n);
    CHECK(std::abs(var - target) < 0.05 * target);
}

TEST_CASE("empirical field characteristic functional against the analytic target") {
    GreenKernel G = test_kernel(2, 1, 2, 2, 1.0, 1.0);
    BilinearForm B = BilinearForm::standard(2, 1);
    const Lattice& lat = G.lat;

    // f = 0 gives exactly 1
    GridFn zero(lat, Domain::position);
    CHECK(empirical_char_field(zero, LevyTriple::gaussian(1.0), G, B, 50, 3) == std::complex<double>(1.0, 0.0));

    GridFn om = ball_indicator(lat, 0);
    const i64 n = 100000;

    // gaussian: target exp(-1/2 int (G*Omega)^2)
    {
        GridFn gc = convolve(G.values, om, B);
        double q = 0.0;
        for (const auto& v : gc.values) q += v.real() * v.real();
        q *= lat.cell_volume();
        std::complex<double> target = std::exp(-0.5 * q);
        std::complex<double> emp = empirical_char_field(om, LevyTriple::gaussian(1.0), G, B, n, 31337);
        CHECK(std::abs(emp - target) < 3.0 / std::sqrt(static_cast<double>(n)));
    }

    // poisson atom: target from the exact Haar sum of Psi(G*Omega)
    {
        LevyTriple levy = atom_triple(0.0, 0.0, 1.0, 1.0);
        GridFn gc = convolve(G.values, om, B);
        std::complex<double> target = char_functional(gc, levy);
        std::complex<double> emp = empirical_char_field(om, levy, G, B, n, 90210);
        CHECK(std::abs(emp - target) < 5e-2);
    }
}
