#pragma once

// Index-addressed parallel map. Every task writes only to its own slot, so
// results never depend on the number of threads or on scheduling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace ahp {

/// Explicit request, else the AHP_THREADS environment variable, else 1.
inline unsigned resolve_threads(std::optional<unsigned> requested = std::nullopt) {
    if (requested && *requested > 0) return *requested;
    if (const char* env = std::getenv("AHP_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

/// Calls f(i) for i in [0, count). The exception thrown by the smallest
/// failing index is rethrown after all workers finish.
template <typename F>
void parallel_for(std::size_t count, unsigned threads, F&& f) {
    if (count == 0) return;
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::min<std::size_t>(count, 256))));
    if (threads == 1) {
        for (std::size_t i = 0; i < count; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::mutex err_mutex;
    std::size_t err_index = count;
    std::exception_ptr err;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                f(i);
            } catch (...) {
                std::lock_guard lock(err_mutex);
                if (i < err_index) {
                    err_index = i;
                    err = std::current_exception();
                }
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    pool.clear();
    if (err) std::rethrow_exception(err);
}

/// Neumaier-compensated accumulator.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const noexcept { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

}  // namespace ahp
