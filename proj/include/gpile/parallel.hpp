#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace gpile {

// Process-wide worker cap; 0 means hardware concurrency. Set once from the
// CLI --threads flag before any parallel work starts.
inline int& worker_cap() {
    static int cap = 0;
    return cap;
}

inline int effective_workers() {
    int cap = worker_cap();
    if (cap <= 0) cap = static_cast<int>(std::thread::hardware_concurrency());
    return std::max(1, cap);
}

// Static block partition of [begin, end) over the worker threads. Every
// worker owns a contiguous index range, so callers get deterministic output
// as long as each index writes disjoint state. The first exception thrown by
// any worker is rethrown on the calling thread after all workers join.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn) {
    const std::size_t n = end > begin ? end - begin : 0;
    if (n == 0) return;
    const std::size_t workers = std::min<std::size_t>(effective_workers(), n);
    if (workers <= 1) {
        for (std::size_t i = begin; i < end; ++i) fn(i);
        return;
    }
    const std::size_t chunk = (n + workers - 1) / workers;
    std::exception_ptr error;
    std::mutex error_mutex;
    auto run_range = [&](std::size_t lo, std::size_t hi) {
        try {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers - 1);
    for (std::size_t w = 1; w < workers; ++w) {
        const std::size_t lo = begin + w * chunk;
        const std::size_t hi = std::min(end, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back(run_range, lo, hi);
    }
    run_range(begin, std::min(end, begin + chunk));
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace gpile
