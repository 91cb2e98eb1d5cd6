#include "qpf/noise.hpp"

#include <cmath>

#include "qpf/parallel.hpp"
#include "qpf/rng.hpp"

namespace qpf {

LevyTriple::LevyTriple(double a, double s, std::vector<LevyAtom> at)
    : drift(a), sigma(s), atoms(std::move(at)) {
    if (sigma < 0.0) throw std::invalid_argument("LevyTriple: sigma must be non-negative");
    for (const auto& atom : atoms) {
        if (atom.jump == 0.0) throw std::invalid_argument("LevyTriple: jump size must be non-zero");
        if (!(atom.intensity > 0.0)) throw std::invalid_argument("LevyTriple: intensity must be positive");
    }
}

std::complex<double> psi_eval(double t, const LevyTriple& levy) {
    std::complex<double> acc(-0.5 * levy.sigma * levy.sigma * t * t, levy.drift * t);
    for (const auto& atom : levy.atoms) {
        double s = atom.jump;
        std::complex<double> jump_term = std::polar(1.0, s * t) - 1.0;
        jump_term -= std::complex<double>(0.0, s * t / (1.0 + s * s));
        acc += atom.intensity * jump_term;
    }
    return acc;
}

std::complex<double> char_functional(const GridFn& f, const LevyTriple& levy) {
    if (f.tag != Domain::position) throw std::invalid_argument("char_functional: domain-tag mismatch");
    std::complex<double> total = 0.0;
    for (const auto& v : f.values) {
        if (std::abs(v.imag()) > 1e-12) throw std::invalid_argument("char_functional: f must be real-valued");
        total += psi_eval(v.real(), levy);
    }
    return std::exp(total * f.lat.cell_volume());
}

std::vector<double> moment_constants(const LevyTriple& levy, int mmax) {
    if (mmax < 1) throw std::invalid_argument("moment_constants: mmax must be >= 1");
    std::vector<double> c(static_cast<size_t>(mmax), 0.0);
    c[0] = levy.drift;
    for (const auto& atom : levy.atoms)
        c[0] += atom.intensity * atom.jump * atom.jump * atom.jump / (1.0 + atom.jump * atom.jump);
    if (mmax >= 2) {
        c[1] = levy.sigma * levy.sigma;
        for (const auto& atom : levy.atoms) c[1] += atom.intensity * atom.jump * atom.jump;
    }
    for (int m = 3; m <= mmax; ++m) {
        double acc = 0.0;
        for (const auto& atom : levy.atoms) acc += atom.intensity * std::pow(atom.jump, m);
        c[static_cast<size_t>(m - 1)] = acc;
    }
    return c;
}

NoiseSample sample_noise(const Lattice& lat, const LevyTriple& levy, uint64_t seed, uint64_t sample_index) {
    NoiseSample out{lat, std::vector<double>(static_cast<size_t>(lat.point_count))};
    double v = lat.cell_volume();
    double comp = levy.drift;
    for (const auto& atom : levy.atoms)
        comp -= atom.intensity * atom.jump / (1.0 + atom.jump * atom.jump);
    double drift_term = v * comp;
    double gauss_sd = levy.sigma * std::sqrt(v);

    // cells are independent keyed streams, so a parallel fill is exact
    parallel_for(0, lat.point_count, 4096, [&](i64 lo, i64 hi) {
        for (i64 cell = lo; cell < hi; ++cell) {
            CounterRng rng(seed, sample_index, static_cast<uint64_t>(cell));
            double x = drift_term;
            if (gauss_sd > 0.0) x += gauss_sd * rng.next_normal();
            for (const auto& atom : levy.atoms)
                x += atom.jump * static_cast<double>(rng.next_poisson(v * atom.intensity));
            out.increments[static_cast<size_t>(cell)] = x;
        }
    });
    return out;
}

FieldSample sample_field(const NoiseSample& noise, const GreenKernel& G, const BilinearForm& form) {
    if (noise.lat != G.lat) throw std::invalid_argument("sample_field: lattice mismatch");
    GridFn dens(noise.lat, Domain::position);
    double inv_v = 1.0 / noise.lat.cell_volume();
    for (i64 i = 0; i < noise.lat.point_count; ++i)
        dens[i] = noise.increments[static_cast<size_t>(i)] * inv_v;
    GridFn conv = convolve(G.values, dens, form);
    FieldSample out{noise.lat, std::vector<double>(static_cast<size_t>(noise.lat.point_count))};
    for (i64 i = 0; i < noise.lat.point_count; ++i)
        out.values[static_cast<size_t>(i)] = conv[i].real();
    return out;
}

double field_pair(const FieldSample& field, const GridFn& g) {
    if (field.lat != g.lat) throw std::invalid_argument("field_pair: lattice mismatch");
    double acc = 0.0;
    for (i64 i = 0; i < field.lat.point_count; ++i)
        acc += g[i].real() * field.values[static_cast<size_t>(i)];
    return acc * field.lat.cell_volume();
}

double noise_pair(const NoiseSample& noise, const GridFn& g_convolved) {
    if (noise.lat != g_convolved.lat) throw std::invalid_argument("noise_pair: lattice mismatch");
    double acc = 0.0;
    for (i64 i = 0; i < noise.lat.point_count; ++i)
        acc += g_convolved[i].real() * noise.increments[static_cast<size_t>(i)];
    return acc;
}

std::complex<double> empirical_char_field(const GridFn& f, const LevyTriple& levy, const GreenKernel& G,
                                          const BilinearForm& form, i64 nsamples, uint64_t seed) {
    if (nsamples < 1) throw std::invalid_argument("empirical_char_field: nsamples must be >= 1");
    if (f.lat != G.lat) throw std::invalid_argument("empirical_char_field: lattice mismatch");
    GridFn gf = convolve(G.values, f, form);
    std::complex<double> acc = 0.0;
    for (i64 j = 0; j < nsamples; ++j) {
        NoiseSample noise = sample_noise(f.lat, levy, seed, static_cast<uint64_t>(j));
        acc += std::polar(1.0, noise_pair(noise, gf));
    }
    return acc / static_cast<double>(nsamples);
}

} // namespace qpf
