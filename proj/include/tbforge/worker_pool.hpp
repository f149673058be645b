#pragma once

#include <atomic>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace tbforge {

// Bounded worker pool over an indexed batch: runs fn(i) for i in [0, n)
// across `width` threads. Each task owns its index; results land wherever the
// caller's closure puts them, so no shared mutable state is imposed here.
//
// If `cancel` is non-null and becomes true, tasks not yet started are skipped
// (in-flight tasks run to completion). Returns the number of tasks executed.
// The first exception thrown by a task is rethrown on the calling thread
// after all workers join.
inline std::size_t parallel_for(std::size_t n, int width,
                                const std::function<void(std::size_t)>& fn,
                                const std::atomic<bool>* cancel = nullptr) {
    if (width < 1) width = 1;
    if (n == 0) return 0;
    if (width == 1) {
        std::size_t done = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (cancel && cancel->load(std::memory_order_relaxed)) break;
            fn(i);
            ++done;
        }
        return done;
    }

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> executed{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;

    auto worker = [&] {
        for (;;) {
            if (cancel && cancel->load(std::memory_order_relaxed)) return;
            std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
            if (i >= n) return;
            try {
                fn(i);
                executed.fetch_add(1, std::memory_order_relaxed);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };

    std::vector<std::thread> threads;
    std::size_t spawn = std::min<std::size_t>(static_cast<std::size_t>(width), n);
    threads.reserve(spawn);
    for (std::size_t t = 0; t < spawn; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();

    if (first_error) std::rethrow_exception(first_error);
    return executed.load();
}

} // namespace tbforge
