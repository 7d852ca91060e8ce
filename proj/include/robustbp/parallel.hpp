#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace robustbp {

// Index-parallel loop with deterministic semantics: fn(i) writes only to
// slot i of pre-sized outputs, so results do not depend on the thread count.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= count) return;
            fn(i);
        }
    };
    std::vector<std::thread> pool;
    const int k = std::min(threads, count);
    pool.reserve(k);
    for (int t = 0; t < k; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

}  // namespace robustbp
