#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace fracmfg::detail {

// Split [0, n) into contiguous blocks, one per worker. fn(begin, end) must only
// write to slots it owns; the first exception is rethrown after joining.
template <class Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
    unsigned w = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (w == 1) {
        fn(std::size_t{0}, n);
        return;
    }
    std::vector<std::exception_ptr> errs(w);
    std::vector<std::thread> pool;
    std::size_t chunk = (n + w - 1) / w;
    for (unsigned k = 0; k < w; ++k) {
        std::size_t b = k * chunk, e = std::min(n, b + chunk);
        pool.emplace_back([&, k, b, e] {
            try {
                if (b < e) fn(b, e);
            } catch (...) {
                errs[k] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errs)
        if (e) std::rethrow_exception(e);
}

}  // namespace fracmfg::detail
