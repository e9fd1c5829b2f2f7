#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <string>
#include <thread>
#include <vector>

namespace riphs {

// Worker cap for embarrassingly parallel loops. RIPHS_THREADS overrides the
// hardware count; anything unparseable or nonpositive falls back to 1.
inline int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw <= 0) {
        hw = 1;
    }
    if (const char* env = std::getenv("RIPHS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<int>(v);
        }
        return 1;
    }
    return hw;
}

// Runs fn(i) for i in [0, count) on up to worker_count() threads. Each index
// is processed exactly once; results must be written to index-addressed
// slots so the outcome does not depend on scheduling.
inline void run_indexed(int count, const std::function<void(int)>& fn) {
    const int workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                fn(i);
            }
        });
    }
    for (auto& th : pool) {
        th.join();
    }
}

} // namespace riphs
