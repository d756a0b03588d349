#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace pointmatch {

/// Worker budget: PM_THREADS if set to a positive integer, otherwise
/// hardware_concurrency (or 1 when even that is unknown).
inline unsigned thread_budget() {
    if (const char* env = std::getenv("PM_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? hw : 1;
}

/// Run body(i) for i in [0, count). Work is split over at most
/// min(count, thread_budget()) threads; a budget of one item or one thread
/// degrades to a plain sequential loop. The first exception thrown by any
/// worker is rethrown on the calling thread after all workers join.
template <typename Body>
void parallel_for(std::size_t count, const Body& body) {
    if (count == 0) return;
    const std::size_t workers = std::min<std::size_t>(count, thread_budget());
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    body(i);
                } catch (...) {
                    if (!failed.exchange(true)) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failed.load()) std::rethrow_exception(error);
}

}  // namespace pointmatch
