#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace esprep {

/// Seeded generator with distribution code written out here, so sampled values
/// are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = std::uint64_t(-1) - (std::uint64_t(-1) % n);
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Poisson sample by sequential multiplication, with the exponent released in
    /// steps so large means do not underflow.
    std::uint64_t poisson(double mean) {
        constexpr double kStep = 500.0;
        double left = mean;
        double p = 1.0;
        std::uint64_t k = 0;
        do {
            ++k;
            p *= uniform();
            while (p < 1.0 && left > 0.0) {
                const double take = left > kStep ? kStep : left;
                p *= std::exp(take);
                left -= take;
            }
        } while (p > 1.0);
        return k - 1;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

    /// k distinct values from [0, n), in ascending order.
    std::vector<std::size_t> sample_sorted(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + below(n - i)]);
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace esprep
