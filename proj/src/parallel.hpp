#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace nmfs {

/// Runs fn(i) for i in [begin, end) on up to n_threads workers. Iterations
/// must be independent; work is claimed dynamically but outputs are indexed
/// by i, so results never depend on scheduling. The first exception thrown by
/// any iteration is rethrown after all workers finish.
inline void parallel_for(int begin, int end, int n_threads, const std::function<void(int)>& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    n_threads = std::min(std::max(n_threads, 1), count);
    if (n_threads == 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::atomic<int> next{begin};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < end; i = next.fetch_add(1)) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace nmfs
