#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>


namespace posefields {


/// Default worker count: POSEFIELDS_JOBS if set to a positive integer, else 1.
inline unsigned default_jobs() {
    if (const char* env = std::getenv("POSEFIELDS_JOBS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return 1;
}

/// Evaluates fn(0..n-1) on up to `jobs` threads. Results are stored by index,
/// so the output never depends on scheduling. The first exception thrown by
/// any task is rethrown after all workers join.
template <typename Fn>
auto parallel_map(std::size_t n, unsigned jobs, Fn&& fn) {
    using Result = std::decay_t<decltype(fn(std::size_t{0}))>;
    std::vector<Result> results(n);
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, jobs), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) results[i] = fn(i);
        return results;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                results[i] = fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}


}  // namespace posefields
