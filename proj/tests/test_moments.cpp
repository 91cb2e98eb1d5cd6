#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <qpf/moments.hpp>
#include <qpf/rng.hpp>

#include <algorithm>

using namespace qpf;

namespace {

GreenKernel test_kernel(int p, int j, int k, double alpha, double mass) {
    EllipticPolynomial poly = EllipticPolynomial::parse("x1", p, 1);
    return green_spectral(Lattice(p, 1, j, k), poly, alpha, mass, BilinearForm::standard(p, 1));
}

double haar_real(const GridFn& f) { return haar_integral(f).real(); }

} // namespace

TEST_CASE("set partitions: Bell counts and canonical structure") {
    const i64 bell[] = {1, 1, 2, 5, 15, 52, 203};
    for (int m = 0; m <= 6; ++m) {
        auto parts = set_partitions(m);
        CHECK(static_cast<i64>(parts.size()) == bell[m]);
        for (const auto& part : parts) {
            std::vector<bool> seen(static_cast<size_t>(m), false);
            int prev_least = -1;
            for (const auto& block : part.blocks) {
                REQUIRE(!block.empty());
                CHECK(block.front() > prev_least); // blocks ordered by least element
                prev_least = block.front();
                for (size_t i = 0; i < block.size(); ++i) {
                    if (i > 0) CHECK(block[i] > block[i - 1]);
                    CHECK(!seen[static_cast<size_t>(block[i])]);
                    seen[static_cast<size_t>(block[i])] = true;
                }
            }
            for (bool s : seen) CHECK(s); // union covers everything
        }
    }
    CHECK_THROWS_AS(set_partitions(-1), std::invalid_argument);
    CHECK_THROWS_AS(set_partitions(11), std::invalid_argument);
}

TEST_CASE("schwinger analytic closed forms") {
    GreenKernel G = test_kernel(2, 2, 2, 1.0, 1.0);
    BilinearForm B = BilinearForm::standard(2, 1);
    const Lattice& lat = G.lat;
    GridFn om = ball_indicator(lat, 0);
    GridFn sph = sphere_indicator(lat, 1);

    // S_0 = 1 by convention
    CHECK(schwinger_analytic({}, LevyTriple::gaussian(1.0), G, B) == 1.0);

    // S_1 = c_1 int (G * g)
    {
        LevyTriple levy(0.7, 0.5, {LevyAtom{1.0, 2.0}});
        double c1 = moment_constants(levy, 1)[0];
        double expect = c1 * haar_real(convolve(G.values, om, B));
        CHECK(schwinger_analytic({om}, levy, G, B) == doctest::Approx(expect).epsilon(1e-13));
    }

    // gaussian: S_2 = sigma^2 int (G*g1)(G*g2); odd moments vanish exactly
    {
        double sigma = 1.3;
        LevyTriple gauss = LevyTriple::gaussian(sigma);
        GridFn a = convolve(G.values, om, B);
        GridFn b = convolve(G.values, sph, B);
        double expect = 0.0;
        for (i64 i = 0; i < lat.point_count; ++i) expect += a[i].real() * b[i].real();
        expect *= sigma * sigma * lat.cell_volume();
        CHECK(schwinger_analytic({om, sph}, gauss, G, B) == doctest::Approx(expect).epsilon(1e-13));
        CHECK(schwinger_analytic({om}, gauss, G, B) == 0.0);
        CHECK(schwinger_analytic({om, sph, om}, gauss, G, B) == 0.0);
    }

    // poisson atom (s=1, lambda=1), m=2, g1=g2=Omega:
    // S_2 = c_1^2 (int G*Omega)^2 + c_2 int (G*Omega)^2, assembled by hand
    {
        LevyTriple levy(0.0, 0.0, {LevyAtom{1.0, 1.0}});
        GridFn a = convolve(G.values, om, B);
        double i1 = haar_real(a);
        double i2 = 0.0;
        for (const auto& v : a.values) i2 += v.real() * v.real();
        i2 *= lat.cell_volume();
        double expect = 0.25 * i1 * i1 + 1.0 * i2; // c1 = 1/2, c2 = 1
        CHECK(schwinger_analytic({om, om}, levy, G, B) == doctest::Approx(expect).epsilon(1e-13));
    }
}

TEST_CASE("schwinger analytic is exactly permutation symmetric") {
    GreenKernel G = test_kernel(2, 2, 2, 1.0, 1.0);
    BilinearForm B = BilinearForm::standard(2, 1);
    const Lattice& lat = G.lat;
    LevyTriple levy(0.2, 1.0, {LevyAtom{1.5, 0.4}});

    std::vector<GridFn> gs;
    CounterRng rng(12, 0, 0);
    for (int i = 0; i < 4; ++i) {
        GridFn g(lat, Domain::position);
        for (auto& v : g.values) v = rng.next_unit() - 0.5;
        gs.push_back(std::move(g));
    }
    double base = schwinger_analytic(gs, levy, G, B);
    std::vector<int> perm = {0, 1, 2, 3};
    do {
        std::vector<GridFn> shuffled;
        for (int i : perm) shuffled.push_back(gs[static_cast<size_t>(i)]);
        double v = schwinger_analytic(shuffled, levy, G, B);
        CHECK(v == base); // bit-for-bit
    } while (std::next_permutation(perm.begin(), perm.end()));
}

TEST_CASE("schwinger monte carlo agrees with analytic within 3 stderr") {
    GreenKernel G = test_kernel(2, 2, 2, 1.0, 1.0);
    BilinearForm B = BilinearForm::standard(2, 1);
    const Lattice& lat = G.lat;
    GridFn om = ball_indicator(lat, 0);
    GridFn sph = sphere_indicator(lat, 1);

    auto s0 = schwinger_mc({}, LevyTriple::gaussian(1.0), G, B, 1000, 5);
    CHECK(s0.estimate == 1.0);
    CHECK(s0.stderror == 0.0);

    const i64 n = 20000;
    for (const LevyTriple& levy : {LevyTriple::gaussian(1.0), LevyTriple(0.0, 1.0, {LevyAtom{1.0, 0.5}})}) {
        for (int m = 1; m <= 4; ++m) {
            std::vector<GridFn> gs;
            for (int i = 0; i < m; ++i) gs.push_back(i % 2 == 0 ? om : sph);
            double analytic = schwinger_analytic(gs, levy, G, B);
            McEstimate mc = schwinger_mc(gs, levy, G, B, n, 1234 + m);
            CHECK(std::abs(mc.estimate - analytic) <= 3.0 * std::max(mc.stderror, 1e-12));
        }
    }

    // gaussian S_4 equals the Wick three-pairing sum
    {
        double sigma = 1.0;
        LevyTriple gauss = LevyTriple::gaussian(sigma);
        GridFn a = convolve(G.values, om, B);
        GridFn b = convolve(G.values, sph, B);
        auto pair_int = [&](const GridFn& u, const GridFn& v) {
            double acc = 0.0;
            for (i64 i = 0; i < lat.point_count; ++i) acc += u[i].real() * v[i].real();
            return acc * lat.cell_volume();
        };
        // g order (om, sph, om, sph): pairings (12)(34) + (13)(24) + (14)(23)
        double wick = pair_int(a, b) * pair_int(a, b) + pair_int(a, a) * pair_int(b, b) +
                      pair_int(a, b) * pair_int(a, b);
        double analytic = schwinger_analytic({om, sph, om, sph}, gauss, G, B);
        CHECK(analytic == doctest::Approx(wick).epsilon(1e-12));
        McEstimate mc = schwinger_mc({om, sph, om, sph}, gauss, G, B, n, 99);
        CHECK(std::abs(mc.estimate - wick) <= 3.0 * mc.stderror);
    }
}

TEST_CASE("sheet construction: variance, covariance, independence") {
    std::vector<double> radii = {0.25, 0.5, 1.0, 2.0, 4.0};
    const int npaths = 100000;
    const double sigma = 1.0;

    std::vector<std::vector<double>> paths;
    paths.reserve(npaths);
    for (int i = 0; i < npaths; ++i)
        paths.push_back(sheet_sample(radii, 1, sigma, 777, static_cast<uint64_t>(i)).values);

    // covariance E[W(t) W(s)] = min(||t||, ||s||) within 5%
    for (size_t r = 0; r < radii.size(); ++r)
        for (size_t s = 0; s <= r; ++s) {
            double acc = 0.0;
            for (const auto& p : paths) acc += p[r] * p[s];
            acc /= npaths;
            double expect = sigma * sigma * std::min(radii[r], radii[s]);
            CHECK(std::abs(acc - expect) < 0.05 * expect);
        }

    // increments over (rho1, rho2] and (rho3, rho4] are uncorrelated
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (const auto& p : paths) {
        double x = p[1] - p[0], y = p[4] - p[3];
        sx += x; sy += y; sxy += x * y; sxx += x * x; syy += y * y;
    }
    double n = npaths;
    double corr = (sxy / n - sx * sy / n / n) /
                  std::sqrt((sxx / n - sx * sx / n / n) * (syy / n - sy * sy / n / n));
    CHECK(std::abs(corr) < 0.05);

    // W(0) = 0: the variance at vanishing radius goes to zero with the volume
    double tiny_var = 0.0;
    for (int i = 0; i < 2000; ++i) {
        double w = sheet_sample({1e-6}, 1, sigma, 3, static_cast<uint64_t>(i)).values[0];
        tiny_var += w * w;
    }
    CHECK(tiny_var / 2000 < 1e-5);

    CHECK_THROWS_AS(sheet_sample({1.0, 0.5}, 1, sigma, 0), std::invalid_argument);
    CHECK_THROWS_AS(sheet_sample({}, 1, sigma, 0), std::invalid_argument);
    CHECK_THROWS_AS(sheet_sample({1.0}, 1, 0.0, 0), std::invalid_argument);
}

TEST_CASE("sheet N=2 uses the volume of the smaller ball") {
    std::vector<double> radii = {1.0, 3.0};
    const int npaths = 100000;
    double acc00 = 0.0, acc11 = 0.0;
    for (int i = 0; i < npaths; ++i) {
        auto p = sheet_sample(radii, 2, 1.0, 55, static_cast<uint64_t>(i)).values;
        acc00 += p[0] * p[0];
        acc11 += p[1] * p[1];
    }
    CHECK(std::abs(acc00 / npaths - 1.0) < 0.05);       // vol(B_1) = 1
    CHECK(std::abs(acc11 / npaths - 9.0) < 0.05 * 9.0); // vol(B_3) = 3^2
}

TEST_CASE("sheet agrees with lattice noise pairing at one configuration") {
    // W(rho) as the pairing of gaussian lattice noise against ball indicators
    Lattice lat(2, 1, 2, 2);
    LevyTriple gauss = LevyTriple::gaussian(1.0);
    const int n = 20000;
    double var1 = 0.0, var4 = 0.0;
    for (int i = 0; i < n; ++i) {
        NoiseSample s = sample_noise(lat, gauss, 31, static_cast<uint64_t>(i));
        double w1 = 0.0, w4 = 0.0;
        for (i64 c = 0; c < lat.point_count; ++c) {
            auto e = lat.point_norm_exponent(c);
            if (!e || *e <= 0) w1 += s.increments[static_cast<size_t>(c)];
            if (!e || *e <= 2) w4 += s.increments[static_cast<size_t>(c)];
        }
        var1 += w1 * w1;
        var4 += w4 * w4;
    }
    CHECK(std::abs(var1 / n - 1.0) < 0.05);       // vol(B_0) = 1
    CHECK(std::abs(var4 / n - 4.0) < 0.05 * 4.0); // vol(B_2) = 4
}
