#pragma once

#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace ccgrav {

namespace detail {
inline std::atomic<int>& thread_count() {
    static std::atomic<int> count{1};
    return count;
}
}  // namespace detail

/// Worker-thread cap for pointwise loops. Set once at startup (CLI --threads);
/// not intended to be toggled while computations are in flight.
inline void set_max_threads(int n) { detail::thread_count() = n < 1 ? 1 : n; }
inline int max_threads() { return detail::thread_count(); }

/// Runs fn(begin, end) over [0, count) split into contiguous chunks.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const int nt = max_threads();
    if (nt <= 1 || count < 1024) {
        fn(std::size_t{0}, count);
        return;
    }
    const std::size_t chunks = static_cast<std::size_t>(nt);
    const std::size_t step = (count + chunks - 1) / chunks;
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = c * step;
        if (lo >= count) break;
        const std::size_t hi = lo + step < count ? lo + step : count;
        pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace ccgrav
