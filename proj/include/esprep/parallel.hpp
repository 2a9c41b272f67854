#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace esprep {

/// Worker count: explicit value if nonzero, else $ESPREP_WORKERS, else 1.
inline unsigned resolve_workers(unsigned requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("ESPREP_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception&) {
        }
    }
    return 1;
}

/// Calls fn(i) for i in [0, n) over contiguous slices, one per worker. If any call
/// throws, the exception from the lowest failing index is rethrown, so the
/// reported error never depends on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    if (workers <= 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t slices = std::min<std::size_t>(workers, n);
    std::vector<std::exception_ptr> errors(slices);
    std::vector<std::size_t> error_index(slices, std::numeric_limits<std::size_t>::max());
    {
        std::vector<std::jthread> threads;
        threads.reserve(slices);
        for (std::size_t s = 0; s < slices; ++s) {
            threads.emplace_back([&, s] {
                const std::size_t begin = n * s / slices;
                const std::size_t end = n * (s + 1) / slices;
                for (std::size_t i = begin; i < end; ++i) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[s] = std::current_exception();
                        error_index[s] = i;
                        return;
                    }
                }
            });
        }
    }
    std::size_t first = slices;
    for (std::size_t s = 0; s < slices; ++s) {
        if (errors[s] && (first == slices || error_index[s] < error_index[first])) first = s;
    }
    if (first != slices) std::rethrow_exception(errors[first]);
}

}  // namespace esprep
