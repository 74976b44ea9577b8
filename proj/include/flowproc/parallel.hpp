#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace flowproc {

// Worker count: FLOWPROC_THREADS if set and positive, otherwise the hardware
// concurrency. Replicate loops index into preallocated slots, so the result
// is identical for any worker count.
inline int worker_count() {
    if (const char* env = std::getenv("FLOWPROC_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : (int)hc;
}

template <class F>
void parallel_for(long n, F&& body) {
    const int workers = worker_count();
    if (workers <= 1 || n <= 1) {
        for (long i = 0; i < n; ++i) body(i);
        return;
    }
    const int used = (int)std::min<long>(workers, n);
    std::vector<std::thread> pool;
    pool.reserve(used);
    std::atomic<bool> bad{false};
    std::exception_ptr first;
    std::mutex gate;
    for (int w = 0; w < used; ++w) {
        const long lo = n * w / used, hi = n * (w + 1) / used;
        pool.emplace_back([&, lo, hi] {
            try {
                for (long i = lo; i < hi; ++i) {
                    if (bad.load(std::memory_order_relaxed)) return;
                    body(i);
                }
            } catch (...) {
                const std::lock_guard<std::mutex> lock(gate);
                if (!first) first = std::current_exception();
                bad.store(true, std::memory_order_relaxed);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first) std::rethrow_exception(first);
}

}  // namespace flowproc
