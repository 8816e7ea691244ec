#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace adoptkit {

// splitmix64; used to derive stream seeds from a master seed so that stages
// and per-tree RNGs are decorrelated but reproducible.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t s = master ^ (0x632be59bd9b4e019ULL * (stream + 1));
    return splitmix64(s);
}

// Samplers are written out by hand because std::*_distribution is
// implementation-defined; mt19937_64 itself is bit-exact everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Unbiased integer in [0, bound) by rejection.
    std::uint64_t uniform_u64(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = eng_();
        } while (v >= limit);
        return v % bound;
    }

    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) { // inclusive
        return lo + static_cast<std::int64_t>(uniform_u64(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    // 53-bit mantissa uniform in [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller with the second deviate cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    bool bernoulli(double p) { return uniform() < p; }

    // Fisher-Yates partial shuffle: first k entries of a random permutation.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_u64(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

// Zipf(s) over {0..n-1} via a precomputed inverse CDF table.
class ZipfSampler {
public:
    ZipfSampler(std::size_t n, double s) : cdf_(n) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += 1.0 / std::pow(static_cast<double>(i + 1), s);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            acc += 1.0 / std::pow(static_cast<double>(i + 1), s) / total;
            cdf_[i] = acc;
        }
        if (!cdf_.empty()) cdf_.back() = 1.0;
    }

    std::size_t sample(Rng& rng) const {
        double u = rng.uniform();
        std::size_t lo = 0, hi = cdf_.size();
        while (lo < hi) {
            std::size_t mid = (lo + hi) / 2;
            if (cdf_[mid] < u) lo = mid + 1; else hi = mid;
        }
        return lo < cdf_.size() ? lo : cdf_.size() - 1;
    }

private:
    std::vector<double> cdf_;
};

} // namespace adoptkit
