#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace inknet {

// Runs fn(i) for i in [0, n) on up to n_threads workers. Callers keep results
// deterministic by writing only to slot i; reductions happen afterwards in
// index order.
inline void parallel_for(std::size_t n, int n_threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (n_threads <= 0) n_threads = int(std::thread::hardware_concurrency());
    if (n_threads < 1) n_threads = 1;
    const std::size_t workers = std::min<std::size_t>(n_threads, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += workers) fn(i);
        });
    for (auto& th : pool) th.join();
}

}  // namespace inknet
