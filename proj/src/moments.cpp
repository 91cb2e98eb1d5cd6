#include "qpf/moments.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "qpf/rng.hpp"

namespace qpf {

std::vector<SetPartition> set_partitions(int m) {
    if (m < 0 || m > 10) throw std::invalid_argument("set_partitions: m out of range [0, 10]");
    std::vector<SetPartition> out;
    if (m == 0) {
        out.push_back(SetPartition{});
        return out;
    }
    // restricted growth strings: a[0] = 0, a[i] <= 1 + max(a[0..i-1]);
    // block index = string value, so blocks come out sorted by least element
    std::vector<int> a(static_cast<size_t>(m), 0);
    auto emit = [&]() {
        int nblocks = *std::max_element(a.begin(), a.end()) + 1;
        SetPartition part;
        part.blocks.assign(static_cast<size_t>(nblocks), {});
        for (int i = 0; i < m; ++i) part.blocks[static_cast<size_t>(a[static_cast<size_t>(i)])].push_back(i);
        out.push_back(std::move(part));
    };
    // iterative enumeration in lexicographic RGS order
    std::function<void(int, int)> rec = [&](int i, int maxv) {
        if (i == m) { emit(); return; }
        for (int v = 0; v <= maxv + 1; ++v) {
            a[static_cast<size_t>(i)] = v;
            rec(i + 1, std::max(maxv, v));
        }
    };
    rec(1, 0);
    return out;
}

namespace {

void validate_schwinger_inputs(const std::vector<GridFn>& gs, const GreenKernel& G) {
    if (gs.size() > 8) throw std::invalid_argument("schwinger: m > 8 not supported");
    for (const auto& g : gs) {
        if (g.lat != G.lat) throw std::invalid_argument("schwinger: lattice mismatch");
        if (g.tag != Domain::position) throw std::invalid_argument("schwinger: domain-tag mismatch");
    }
}

std::vector<GridFn> convolved_inputs(const std::vector<GridFn>& gs, const GreenKernel& G,
                                     const BilinearForm& form) {
    std::vector<GridFn> conv;
    conv.reserve(gs.size());
    for (const auto& g : gs) conv.push_back(convolve(G.values, g, form));
    return conv;
}

} // namespace

double schwinger_analytic(const std::vector<GridFn>& gs, const LevyTriple& levy, const GreenKernel& G,
                          const BilinearForm& form) {
    validate_schwinger_inputs(gs, G);
    int m = static_cast<int>(gs.size());
    if (m == 0) return 1.0; // S_0 convention
    std::vector<GridFn> conv = convolved_inputs(gs, G, form);
    std::vector<double> c = moment_constants(levy, m);
    double vol = G.lat.cell_volume();

    // rank inputs by content so every float operation below happens in an
    // input-order-independent sequence: the result is exactly symmetric
    std::vector<int> rank(static_cast<size_t>(m));
    {
        std::vector<int> order(static_cast<size_t>(m));
        for (int i = 0; i < m; ++i) order[static_cast<size_t>(i)] = i;
        auto content_less = [&](int a, int b) {
            const auto& va = conv[static_cast<size_t>(a)].values;
            const auto& vb = conv[static_cast<size_t>(b)].values;
            for (size_t i = 0; i < va.size(); ++i) {
                if (va[i].real() != vb[i].real()) return va[i].real() < vb[i].real();
                if (va[i].imag() != vb[i].imag()) return va[i].imag() < vb[i].imag();
            }
            return false;
        };
        std::stable_sort(order.begin(), order.end(), content_less);
        for (int pos = 0; pos < m; ++pos) rank[static_cast<size_t>(order[static_cast<size_t>(pos)])] = pos;
    }

    std::vector<double> contributions;
    for (const auto& part : set_partitions(m)) {
        std::vector<double> block_values;
        bool zero = false;
        for (const auto& block : part.blocks) {
            double cl = c[block.size() - 1];
            if (cl == 0.0) { zero = true; break; }
            std::vector<int> members(block.begin(), block.end());
            std::sort(members.begin(), members.end(),
                      [&](int a, int b) { return rank[static_cast<size_t>(a)] < rank[static_cast<size_t>(b)]; });
            double integral = 0.0;
            for (i64 x = 0; x < G.lat.point_count; ++x) {
                double val = 1.0;
                for (int j : members) val *= conv[static_cast<size_t>(j)][x].real();
                integral += val;
            }
            block_values.push_back(cl * integral * vol);
        }
        if (zero) {
            contributions.push_back(0.0);
            continue;
        }
        std::sort(block_values.begin(), block_values.end());
        double prod = 1.0;
        for (double v : block_values) prod *= v;
        contributions.push_back(prod);
    }
    std::sort(contributions.begin(), contributions.end());
    double acc = 0.0;
    for (double v : contributions) acc += v;
    return acc;
}

McEstimate schwinger_mc(const std::vector<GridFn>& gs, const LevyTriple& levy, const GreenKernel& G,
                        const BilinearForm& form, i64 nsamples, uint64_t seed) {
    validate_schwinger_inputs(gs, G);
    if (nsamples < 1) throw std::invalid_argument("schwinger_mc: nsamples must be >= 1");
    if (gs.empty()) return McEstimate{1.0, 0.0, nsamples}; // S_0 convention
    std::vector<GridFn> conv = convolved_inputs(gs, G, form);

    double sum = 0.0, sumsq = 0.0;
    for (i64 j = 0; j < nsamples; ++j) {
        NoiseSample noise = sample_noise(G.lat, levy, seed, static_cast<uint64_t>(j));
        double prod = 1.0;
        for (const auto& a : conv) prod *= noise_pair(noise, a);
        sum += prod;
        sumsq += prod * prod;
    }
    double n = static_cast<double>(nsamples);
    double mean = sum / n;
    double var = std::max(0.0, (sumsq - n * mean * mean) / std::max(1.0, n - 1.0));
    return McEstimate{mean, std::sqrt(var / n), nsamples};
}

SheetPath sheet_sample(const std::vector<double>& radii, int dim, double sigma, uint64_t seed,
                       uint64_t path_index) {
    if (radii.empty()) throw std::invalid_argument("sheet_sample: empty radii");
    if (!(sigma > 0.0)) throw std::invalid_argument("sheet_sample: sigma must be positive");
    if (dim < 1) throw std::invalid_argument("sheet_sample: dimension must be positive");
    for (size_t r = 0; r < radii.size(); ++r) {
        if (!(radii[r] > 0.0)) throw std::invalid_argument("sheet_sample: radii must be positive");
        if (r > 0 && !(radii[r] > radii[r - 1])) throw std::invalid_argument("sheet_sample: unsorted radii");
    }
    CounterRng rng(seed, path_index, 0);
    SheetPath path;
    path.radii = radii;
    path.values.resize(radii.size());
    double prev_vol = 0.0; // vol(B(0)) = 0, so W starts from 0
    double w = 0.0;
    for (size_t r = 0; r < radii.size(); ++r) {
        double vol = std::pow(radii[r], static_cast<double>(dim));
        w += sigma * std::sqrt(vol - prev_vol) * rng.next_normal();
        path.values[r] = w;
        prev_vol = vol;
    }
    return path;
}

} // namespace qpf
