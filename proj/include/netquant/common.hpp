#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace netquant {

/// Input data failed to parse or violated its declared shape.
class DataError : public std::runtime_error {
public:
    DataError(std::string file, long row, long col, const std::string& what)
        : std::runtime_error(file + ":" + std::to_string(row) + ":" + std::to_string(col) +
                             ": " + what),
          file(std::move(file)), row(row), col(col) {}

    std::string file;
    long row = 0;
    long col = 0;
};

/// The forward simulation could not produce a valid panel.
class SimulationError : public std::runtime_error {
public:
    SimulationError(int period, const std::string& what)
        : std::runtime_error("period " + std::to_string(period) + ": " + what), period(period) {}

    int period = 0;
};

/// An estimation step failed (degenerate instruments, empty profile, ...).
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(0..count-1) on up to `threads` workers. Tasks must be independent;
/// completion order is unspecified, so callers key results by index.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
    threads = std::min(resolve_threads(threads), count);
    if (threads <= 1) {
        for (int i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr first_error;
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                int i = next.fetch_add(1);
                if (i >= count || failed.load()) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!failed.exchange(true)) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace netquant
