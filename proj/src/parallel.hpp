#pragma once

#include <algorithm>
#include <exception>
#include <iterator>
#include <mutex>
#include <thread>
#include <vector>

namespace kgfuse::detail {

// Runs fn(i, bucket) for i in [0, n) on a small thread pool. Each worker owns
// its bucket; buckets are concatenated in worker order, so callers that need
// a stable order must sort the result.
template <typename Out, typename Fn>
std::vector<Out> parallel_collect(std::size_t n, Fn&& fn, std::size_t grain = 64) {
    const std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t workers = std::max<std::size_t>(1, std::min(hw, n / grain + 1));
    std::vector<std::vector<Out>> buckets(workers);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i, buckets[0]);
        return std::move(buckets[0]);
    }
    std::vector<std::thread> pool;
    std::exception_ptr failure;
    std::mutex failure_mu;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i, buckets[w]);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    std::vector<Out> out;
    for (auto& b : buckets) std::move(b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace kgfuse::detail
