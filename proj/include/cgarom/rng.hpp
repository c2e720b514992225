#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

namespace cgarom {

// Deterministic splitmix64 generator. Used everywhere randomness is needed so
// that runs reproduce bit-for-bit across compilers and standard libraries
// (std::uniform_real_distribution and std::shuffle are implementation defined).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 random mantissa bits.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Uniform integer in [0, n). Modulo bias is irrelevant at our scales and
    // keeps the sequence platform independent.
    std::uint64_t below(std::uint64_t n) { return n ? next_u64() % n : 0; }

    // Fisher-Yates with this generator, fixed visiting order.
    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // Sample k distinct indices from [0, n) in ascending order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
};

// Stable combination of seeds, e.g. (run seed, epoch, sample id).
inline std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix_seeds(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    return mix_seeds(mix_seeds(a, b), c);
}

inline std::vector<std::size_t> Rng::sample_without_replacement(std::size_t n, std::size_t k) {
    // Partial Fisher-Yates over an index array, then sort the chosen prefix.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        std::size_t j = i + std::size_t(below(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k < n ? k : n);
    // Ascending order keeps downstream quadrature sums deterministic; the
    // sorted result of distinct keys does not depend on the sort algorithm.
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace cgarom
