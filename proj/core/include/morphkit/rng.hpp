#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace morphkit {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Child seeds depend only on (parent, key), never on visitation order, so
// per-scene work produces the same bytes for any worker count.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view key) noexcept {
    return splitmix64(parent ^ splitmix64(fnv1a64(key)));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept {
    return splitmix64(parent ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    // Uniform in [lo, hi); returns lo when the range is empty.
    double uniform(double lo = 0.0, double hi = 1.0) {
        if (!(hi > lo)) return lo;
        return lo + (hi - lo) * unit();
    }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        // Lemire-style rejection keeps the draw unbiased and portable.
        const std::uint64_t limit = (~std::uint64_t{0}) - (~std::uint64_t{0}) % span;
        std::uint64_t v;
        do {
            v = engine_();
        } while (v >= limit);
        return lo + static_cast<std::int64_t>(v % span);
    }

    bool bernoulli(double p) { return unit() < p; }

    double normal(double mean = 0.0, double stddev = 1.0);

    std::uint64_t next() { return engine_(); }

private:
    // 53 random mantissa bits; identical across standard libraries.
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace morphkit
