#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random streams. Every stream is keyed by (seed, hi, lo) and
// advances its own counter, so cell- and sample-level draws are reproducible
// and independent of evaluation order.

namespace qpf {

inline uint64_t mix64(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t make_key(uint64_t seed, uint64_t hi, uint64_t lo) {
    uint64_t k = mix64(seed);
    k = mix64(k ^ (hi * 0xd1342543de82ef95ULL));
    k = mix64(k ^ (lo * 0xaf251af3b0f025b5ULL));
    return k;
}

class CounterRng {
public:
    explicit CounterRng(uint64_t key) : key_(key) {}
    CounterRng(uint64_t seed, uint64_t hi, uint64_t lo) : key_(make_key(seed, hi, lo)) {}

    uint64_t next_u64() { return mix64(key_ + (++ctr_) * 0x9e3779b97f4a7c15ULL); }

    /// Uniform in (0, 1].
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; one spare is cached.
    double next_normal() {
        if (has_spare_) { has_spare_ = false; return spare_; }
        double u1 = next_unit();
        double u2 = next_unit();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    /// Poisson by Knuth inversion; means above 10 are split into chunks,
    /// which is exact by infinite divisibility.
    long long next_poisson(double mean) {
        long long total = 0;
        while (mean > 10.0) {
            total += poisson_small(10.0);
            mean -= 10.0;
        }
        if (mean > 0.0) total += poisson_small(mean);
        return total;
    }

private:
    long long poisson_small(double mean) {
        double limit = std::exp(-mean);
        long long k = 0;
        double prod = 1.0;
        do {
            ++k;
            prod *= next_unit();
        } while (prod > limit);
        return k - 1;
    }

    uint64_t key_;
    uint64_t ctr_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace qpf
