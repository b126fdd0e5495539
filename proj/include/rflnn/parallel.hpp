#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "rflnn/common.hpp"

namespace rflnn {

/// Runs body(i) for i in [0, count) on at most `jobs` threads. Each index
/// runs exactly once; the first exception thrown is rethrown after joining.
template <typename Body>
void parallel_for(Index count, int jobs, Body&& body) {
    if (count <= 0) return;
    const int workers = static_cast<int>(std::min<Index>(std::max(jobs, 1), count));
    if (workers == 1) {
        for (Index i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<Index> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (Index i = next++; i < count; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace rflnn
