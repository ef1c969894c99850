#pragma once

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace hjbsl {

/// Worker count: explicit request, else HJB_SL_WORKERS, else the hardware
/// concurrency.
inline int resolve_workers(int requested)
{
    if (requested > 0) return requested;
    if (const char* env = std::getenv("HJB_SL_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n > 0) return n;
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(begin, end) over a static contiguous partition of [0, count).
/// The first exception thrown by any worker is rethrown on the caller.
template <typename Fn>
void parallel_for(int count, int workers, Fn&& fn)
{
    workers = std::clamp(workers, 1, std::max(count, 1));
    if (workers == 1) {
        fn(0, count);
        return;
    }
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int begin = static_cast<int>(static_cast<long long>(count) * w / workers);
        const int end = static_cast<int>(static_cast<long long>(count) * (w + 1) / workers);
        pool.emplace_back([&, begin, end] {
            try {
                fn(begin, end);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace hjbsl
