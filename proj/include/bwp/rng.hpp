#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace bwp {

/// Counter-based random stream: output i is a 64-bit mix of
/// (seed, stream name, i). Streams with distinct names are independent for
/// all practical purposes, and any stream can be replayed from its name and
/// seed alone. The coupled simulator relies on this to share exactly the
/// randomness the domination argument shares (common arrivals, common
/// placement marks, common departure levels) while keeping the top-up
/// arrivals on a stream of their own.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view stream_name)
        : base_(mix64(seed ^ mix64(fnv1a(stream_name)))) {}

    std::uint64_t next_u64() { return mix64(base_ + (++counter_) * kGamma); }

    /// Uniform on the open interval (0, 1); never returns an endpoint, so
    /// log() of it is always finite.
    double uniform01() {
        return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    /// Exponential with the given rate; rate 0 yields +infinity (a clock
    /// that never fires).
    double exponential(double rate) {
        if (rate <= 0.0) return std::numeric_limits<double>::infinity();
        return -std::log(uniform01()) / rate;
    }

    /// Unbiased integer in [0, n) by rejection.
    std::uint64_t uniform_int(std::uint64_t n) {
        if (n <= 1) return 0;
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t v;
        do { v = next_u64(); } while (v >= limit);
        return v % n;
    }

    std::uint64_t counter() const { return counter_; }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ull;

    static std::uint64_t mix64(std::uint64_t z) {
        z += kGamma;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (char c : s) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001B3ull;
        }
        return h;
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
};

} // namespace bwp
