#pragma once

#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace memfpk {

inline unsigned default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Static block partition of [0,n) over worker threads. Results must not
/// depend on the partition: workers write to disjoint slots keyed by item or
/// block index and the caller reduces in index order.
inline void parallel_for(std::size_t n, unsigned n_threads,
                         const std::function<void(std::size_t, std::size_t, unsigned)>& body) {
    if (n == 0) return;
    if (n_threads == 0) n_threads = default_threads();
    if (n_threads > n) n_threads = unsigned(n);
    if (n_threads == 1) {
        body(0, n, 0);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    const std::size_t per = n / n_threads, rem = n % n_threads;
    std::size_t begin = 0;
    std::exception_ptr err;
    std::mutex err_mu;
    for (unsigned t = 0; t < n_threads; ++t) {
        const std::size_t len = per + (t < rem ? 1 : 0);
        const std::size_t end = begin + len;
        workers.emplace_back([&, begin, end, t] {
            try {
                body(begin, end, t);
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err) err = std::current_exception();
            }
        });
        begin = end;
    }
    for (auto& w : workers) w.join();
    if (err) std::rethrow_exception(err);
}

} // namespace memfpk
