#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace bwp {

/// Exact rational on int64 with overflow detection, used for the
/// combinatorial identities (band-overlap sums, hypergeometric weights).
/// Everything else in the library runs on doubles.
class Rational {
public:
    Rational() = default;
    Rational(std::int64_t n) : num_(n), den_(1) {}
    Rational(std::int64_t n, std::int64_t d) : num_(n), den_(d) {
        if (d == 0) throw std::domain_error("Rational: zero denominator");
        normalize();
    }

    std::int64_t num() const { return num_; }
    std::int64_t den() const { return den_; }

    Rational operator+(const Rational& o) const {
        return from_i128(i128(num_) * o.den_ + i128(o.num_) * den_, i128(den_) * o.den_);
    }
    Rational operator-(const Rational& o) const {
        return from_i128(i128(num_) * o.den_ - i128(o.num_) * den_, i128(den_) * o.den_);
    }
    Rational operator*(const Rational& o) const {
        return from_i128(i128(num_) * o.num_, i128(den_) * o.den_);
    }
    Rational operator/(const Rational& o) const {
        if (o.num_ == 0) throw std::domain_error("Rational: division by zero");
        return from_i128(i128(num_) * o.den_, i128(den_) * o.num_);
    }
    Rational& operator+=(const Rational& o) { return *this = *this + o; }
    Rational& operator-=(const Rational& o) { return *this = *this - o; }
    Rational& operator*=(const Rational& o) { return *this = *this * o; }

    bool operator==(const Rational& o) const { return num_ == o.num_ && den_ == o.den_; }
    bool operator!=(const Rational& o) const { return !(*this == o); }

    double to_double() const { return double(num_) / double(den_); }

private:
    using i128 = __int128;

    static Rational from_i128(i128 n, i128 d) {
        if (d < 0) { n = -n; d = -d; }
        i128 g = gcd128(n < 0 ? -n : n, d);
        if (g > 1) { n /= g; d /= g; }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw std::overflow_error("Rational: overflow after reduction");
        Rational r;
        r.num_ = static_cast<std::int64_t>(n);
        r.den_ = static_cast<std::int64_t>(d);
        return r;
    }

    static i128 gcd128(i128 a, i128 b) {
        while (b != 0) { i128 t = a % b; a = b; b = t; }
        return a < 0 ? -a : a;
    }

    void normalize() {
        if (den_ < 0) { num_ = -num_; den_ = -den_; }
        std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
        if (g > 1) { num_ /= g; den_ /= g; }
    }

    std::int64_t num_ = 0;
    std::int64_t den_ = 1;
};

/// Exact binomial coefficient; n up to 62 stays within int64.
inline std::int64_t binomial(int n, int k) {
    if (k < 0 || n < 0 || k > n) return 0;
    if (k > n - k) k = n - k;
    __int128 acc = 1;
    for (int i = 1; i <= k; ++i) {
        acc = acc * (n - k + i) / i;
        if (acc > INT64_MAX) throw std::overflow_error("binomial: overflow");
    }
    return static_cast<std::int64_t>(acc);
}

/// Probability that a uniformly random l-subset of {1..K} meets a fixed
/// j-subset in exactly m elements: binom(j,m) * binom(K-j, l-m) / binom(K,l).
/// The classic hypergeometric weight; its mean identity
/// sum_m m * alpha(K,j,l,m) = l*j/K drives the symmetric reduction.
inline Rational hypergeometric_alpha(int K, int j, int l, int m) {
    if (K < 1 || j < 1 || j > K || l < 1 || l > K)
        throw std::domain_error("hypergeometric_alpha: need 1 <= j,l <= K");
    if (m < 1 || m > (j < l ? j : l))
        throw std::domain_error("hypergeometric_alpha: need 1 <= m <= min(j,l)");
    return Rational(binomial(j, m) * binomial(K - j, l - m), binomial(K, l));
}

inline int popcount_mask(std::uint32_t mask) { return __builtin_popcount(mask); }

/// sum_U |C ∩ U| y_U over all non-empty subsets U of {1..K}. `y` is indexed
/// by bitmask (entry 0 ignored) and must have size 2^K.
inline double overlap_sum(const std::vector<double>& y, std::uint32_t c_mask) {
    double acc = 0.0;
    for (std::uint32_t u = 1; u < y.size(); ++u)
        acc += popcount_mask(c_mask & u) * y[u];
    return acc;
}

/// Exact-rational variant for the identity tests.
inline Rational overlap_sum(const std::vector<Rational>& y, std::uint32_t c_mask) {
    Rational acc(0);
    for (std::uint32_t u = 1; u < y.size(); ++u)
        acc += Rational(popcount_mask(c_mask & u)) * y[u];
    return acc;
}

/// sum_U |U| y_U, the right-hand side ingredient of the symmetric overlap
/// identity.
inline double cardinality_sum(const std::vector<double>& y) {
    double acc = 0.0;
    for (std::uint32_t u = 1; u < y.size(); ++u)
        acc += popcount_mask(u) * y[u];
    return acc;
}

inline Rational cardinality_sum(const std::vector<Rational>& y) {
    Rational acc(0);
    for (std::uint32_t u = 1; u < y.size(); ++u)
        acc += Rational(popcount_mask(u)) * y[u];
    return acc;
}

} // namespace bwp
