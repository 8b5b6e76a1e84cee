// Copyright Contributors to the ldes project.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace ldes {

/// Worker count: LDES_THREADS if set to a positive integer, else the
/// hardware concurrency.
inline unsigned thread_count()
{
    if (const char* env = std::getenv("LDES_THREADS")) {
        try {
            const long n = std::stol(env);
            if (n > 0)
                return static_cast<unsigned>(n);
        }
        catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count), each index on exactly one worker.
/// The first exception thrown is rethrown on the caller.
template <typename Body>
void parallel_for(int count, Body&& body)
{
    const unsigned workers = std::min<unsigned>(thread_count(), std::max(count, 1));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i)
            body(i);
        return;
    }

    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto run = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                body(i);
            }
            catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure)
                    failure = std::current_exception();
                next = count;
            }
        }
    };

    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w)
        pool.emplace_back(run);
    run();
    pool.clear();
    if (failure)
        std::rethrow_exception(failure);
}

}  // namespace ldes
