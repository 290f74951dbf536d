#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace survcobra {

inline std::size_t resolve_workers(int requested) {
    if (requested > 0) return static_cast<std::size_t>(requested);
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// Runs fn(0..n-1) across up to `workers` threads. Tasks must write only to
// their own output slots; results are reduced by the caller in index order,
// so schedules never affect the bytes produced. The first exception is
// rethrown after all threads join.
inline void parallel_for(std::size_t n, std::size_t workers,
                         const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    if (workers <= 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(n);
    std::size_t used = std::min(workers, n);
    for (std::size_t w = 0; w < used; ++w) {
        threads.emplace_back([&, w] {
            for (std::size_t i = w; i < n; i += used) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace survcobra
