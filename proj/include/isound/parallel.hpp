#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace isound {

inline unsigned effective_threads(int requested) {
    if (requested > 0) return static_cast<unsigned>(requested);
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Work is split into
// contiguous chunks; callers must write results keyed by index so the output
// is identical to a serial run. The lowest-index pending exception is
// rethrown, keeping diagnostics parallelism-invariant.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
    const unsigned nt = std::min<std::size_t>(effective_threads(threads), n == 0 ? 1 : n);
    if (nt <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(nt);
    std::vector<std::size_t> error_index(nt, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    const std::size_t chunk = (n + nt - 1) / nt;
    for (unsigned t = 0; t < nt; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&, t, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    fn(i);
                } catch (...) {
                    errors[t] = std::current_exception();
                    error_index[t] = i;
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    std::size_t best = n;
    std::exception_ptr first;
    for (unsigned t = 0; t < nt; ++t) {
        if (errors[t] && error_index[t] < best) {
            best = error_index[t];
            first = errors[t];
        }
    }
    if (first) std::rethrow_exception(first);
}

} // namespace isound
