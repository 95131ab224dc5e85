#pragma once

#include <algorithm>
#include <functional>
#include <thread>
#include <vector>

namespace dtgs {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return std::max(1, std::min(16, static_cast<int>(hc ? hc : 1)));
}

/// Run fn(worker, begin, end) over a contiguous partition of [0, n). The
/// partition depends only on (n, n_workers), so per-worker accumulation reduced
/// in worker order is deterministic for a fixed thread count.
inline void parallel_chunks(int n, int n_workers,
                            const std::function<void(int, int, int)>& fn) {
    n_workers = std::max(1, std::min(n_workers, n > 0 ? n : 1));
    if (n_workers == 1) {
        fn(0, 0, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(n_workers - 1);
    for (int w = 0; w < n_workers; ++w) {
        const int begin = static_cast<int>(static_cast<long long>(n) * w / n_workers);
        const int end = static_cast<int>(static_cast<long long>(n) * (w + 1) / n_workers);
        if (w + 1 == n_workers) {
            fn(w, begin, end);
        } else {
            pool.emplace_back(fn, w, begin, end);
        }
    }
    for (auto& t : pool) t.join();
}

}  // namespace dtgs
