// relit is licensed under the Apache License, Version 2.0.
// SPDX: Apache-2.0

#include "relit/parallel.hpp"

#include <algorithm>
#include <thread>
#include <vector>

namespace relit {

int resolve_threads(int n) {
    if (n > 0) return n;
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_for(int64_t begin, int64_t end, int threads,
                  const std::function<void(int64_t)> &fn) {
    int64_t count = end - begin;
    if (count <= 0) return;
    int workers = std::min<int64_t>(resolve_threads(threads), count);
    if (workers <= 1) {
        for (int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    // Static contiguous split; each worker owns a disjoint index range.
    std::vector<std::thread> pool;
    pool.reserve(workers);
    int64_t chunk = (count + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        int64_t lo = begin + w * chunk;
        int64_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([lo, hi, &fn] {
            for (int64_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto &t : pool) t.join();
}

}  // namespace relit
