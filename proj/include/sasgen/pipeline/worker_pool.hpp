#pragma once

#include <atomic>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace sasgen::pipeline {

inline int worker_count_from_env()
{
    if (const char* env = std::getenv("SASGEN_WORKERS")) {
        const int n = std::atoi(env);
        if (n > 0)
            return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Index-parallel map over a batch. Results land at their input index, so
/// downstream processing in ask order stays deterministic regardless of the
/// thread schedule.
template <typename T, typename R>
std::vector<R> parallel_map(const std::vector<T>& items, const std::function<R(const T&)>& fn,
    int workers)
{
    std::vector<R> results(items.size());
    if (workers <= 1 || items.size() <= 1) {
        for (std::size_t i = 0; i < items.size(); i++)
            results[i] = fn(items[i]);
        return results;
    }
    std::atomic<std::size_t> next{0};
    auto run = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= items.size())
                return;
            results[i] = fn(items[i]);
        }
    };
    std::vector<std::thread> threads;
    const int n = std::min<int>(workers, static_cast<int>(items.size()));
    threads.reserve(static_cast<std::size_t>(n));
    for (int t = 0; t < n; t++)
        threads.emplace_back(run);
    for (auto& t : threads)
        t.join();
    return results;
}

} // namespace sasgen::pipeline
