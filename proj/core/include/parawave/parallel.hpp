#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace parawave {

/// Runs fn(begin, end) over [0, n) in `workers` contiguous shards and
/// rethrows the first exception. Shard boundaries never affect results as
/// long as fn only writes to its own index range.
inline void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    const auto w = static_cast<std::size_t>(std::clamp(workers, 1, 256));
    const std::size_t shards = std::min(w, n);
    if (shards == 1) {
        fn(0, n);
        return;
    }
    std::exception_ptr error;
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(shards);
    for (std::size_t s = 0; s < shards; ++s) {
        const std::size_t b = n * s / shards;
        const std::size_t e = n * (s + 1) / shards;
        pool.emplace_back([&, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace parawave
