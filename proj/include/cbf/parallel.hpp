#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace cbf::detail {

inline int worker_count() {
    if (const char* env = std::getenv("CBF_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return static_cast<int>(std::min(4u, hw ? hw : 1u));
}

// Ordered work items, unordered execution; results must be written to
// preallocated slots so the outcome is independent of scheduling.
template <typename Fn>
void parallel_for(int n, Fn&& fn) {
    const int workers = std::min(worker_count(), n);
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : pool) t.join();
}

} // namespace cbf::detail
