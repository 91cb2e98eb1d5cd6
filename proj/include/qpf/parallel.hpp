#pragma once

#include <algorithm>
#include <thread>
#include <vector>

// Deterministic data parallelism: chunks are fixed by index, threads only
// write disjoint ranges, so results do not depend on the thread count.

namespace qpf {

int max_threads();
void set_max_threads(int n);

template <class F>
void parallel_for(long long begin, long long end, long long grain, F&& body) {
    long long n = end - begin;
    if (n <= 0) return;
    int nt = max_threads();
    if (nt <= 1 || n <= grain) {
        body(begin, end);
        return;
    }
    long long chunks = std::min<long long>(nt, (n + grain - 1) / grain);
    long long step = (n + chunks - 1) / chunks;
    std::vector<std::thread> workers;
    workers.reserve(static_cast<size_t>(chunks));
    for (long long c = 0; c < chunks; ++c) {
        long long lo = begin + c * step;
        long long hi = std::min(end, lo + step);
        if (lo >= hi) break;
        workers.emplace_back([&body, lo, hi] { body(lo, hi); });
    }
    for (auto& w : workers) w.join();
}

} // namespace qpf
