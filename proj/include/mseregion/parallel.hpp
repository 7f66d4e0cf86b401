#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

namespace mseregion {

/// Worker count used when a caller passes 0.
inline unsigned default_thread_count()
{
    return std::max(1U, std::thread::hardware_concurrency());
}

/// Runs task(i) for i in [0, count) on `threads` workers; rethrows the first
/// exception after all workers finish.
template <class Task>
void run_workers(std::size_t count, unsigned threads, Task&& task)
{
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                task(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back(worker);
    }
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

/// Evaluates fn(i) for i in [0, count) on up to `threads` workers and returns
/// the results in index order. Each slot is written by exactly one task, so
/// the output does not depend on scheduling.
template <class Result, class Fn>
std::vector<Result> parallel_map(std::size_t count, unsigned threads, Fn&& fn)
{
    std::vector<std::optional<Result>> slots(count);
    if (threads == 0) {
        threads = default_thread_count();
    }
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            slots[i].emplace(fn(i));
        }
    } else {
        run_workers(count, threads, [&](std::size_t i) { slots[i].emplace(fn(i)); });
    }
    std::vector<Result> results;
    results.reserve(count);
    for (auto& slot : slots) {
        results.push_back(std::move(*slot));
    }
    return results;
}

} // namespace mseregion
