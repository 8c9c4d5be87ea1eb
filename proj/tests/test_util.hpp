#pragma once

// Shared fixtures and independent reference computations ("oracles") for the
// test suites. Everything here deliberately avoids the library's own
// numerical paths: the torus integrals use a polar decomposition instead of
// the tensor grid, so agreement is a genuine cross-check.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "bwp/classes.hpp"
#include "bwp/geometry.hpp"
#include "bwp/pathloss.hpp"

namespace bwp::test {

// Reference experiment setup: two channels, three classes, power-law gain on
// a side-10 torus.
inline TorusDomain section6_domain() { return TorusDomain(10.0, 0.0); }
inline PathLoss section6_pathloss() { return PathLoss::power_law(4.0); }

inline ClassProfile section6_profile() {
    return ClassProfile(2, {{0b01, 0.4, 1.0}, {0b10, 0.4, 1.0}, {0b11, 0.2, 2.0}});
}

inline SymmetricProfile section6_symmetric() {
    return SymmetricProfile(2, {0.8, 0.2}, {1.0, 2.0});
}

// ---------------------------------------------------------------------------
// 1D adaptive Simpson, test-only.

namespace detail {
inline double simpson_rec(const std::function<double(double)>& f, double lo, double hi,
                          double f_lo, double f_mid, double f_hi, double whole,
                          double tol, int depth) {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double f_lm = f(lm), f_rm = f(rm);
    const double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lm + f_mid);
    const double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rm + f_hi);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_rec(f, lo, mid, f_lo, f_lm, f_mid, left, tol / 2.0, depth - 1) +
           simpson_rec(f, mid, hi, f_mid, f_rm, f_hi, right, tol / 2.0, depth - 1);
}
} // namespace detail

inline double simpson(const std::function<double(double)>& f, double lo, double hi,
                      double tol = 1e-12) {
    const double mid = 0.5 * (lo + hi);
    const double f_lo = f(lo), f_mid = f(mid), f_hi = f(hi);
    const double whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
    return detail::simpson_rec(f, lo, hi, f_lo, f_mid, f_hi, whole, tol, 40);
}

// Reference value of \int_{[-a,a]^2} f(||x||) dx by polar decomposition:
// full rings up to radius a, partial rings (square corners) beyond.
inline double oracle_torus_radial(double side, const std::function<double(double)>& f,
                                  double tol = 1e-12) {
    const double a = side / 2.0;
    const double inner =
        simpson([&](double rho) { return 2.0 * M_PI * rho * f(rho); }, 0.0, a, tol);
    const double outer = simpson(
        [&](double rho) {
            const double angle = 2.0 * M_PI - 8.0 * std::acos(a / rho);
            return angle * rho * f(rho);
        },
        a * (1.0 + 1e-14), a * std::sqrt(2.0), tol);
    return inner + outer;
}

// Minimum distance over the 3x3 block of periodic images; brute-force
// counterpart of torus_distance.
inline double oracle_torus_distance(Point p, Point q, double side) {
    double best = std::numeric_limits<double>::infinity();
    for (int dx = -1; dx <= 1; ++dx)
        for (int dy = -1; dy <= 1; ++dy) {
            const double ox = q.x + dx * side - p.x;
            const double oy = q.y + dy * side - p.y;
            best = std::min(best, std::sqrt(ox * ox + oy * oy));
        }
    return best;
}

// Streaming mean/variance.
struct Welford {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / double(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
    double std_error() const { return std::sqrt(variance() / double(n)); }
};

// Random cardinality-symmetric profile (positive probabilities on every
// cardinality).
inline SymmetricProfile random_symmetric_profile(int K, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.1, 1.0);
    std::vector<double> p(K), L(K);
    double total = 0.0;
    for (int j = 0; j < K; ++j) {
        p[j] = u(rng);
        total += p[j];
        L[j] = u(rng) * 3.0;
    }
    double acc = 0.0;
    for (int j = 0; j < K - 1; ++j) {
        p[j] /= total;
        acc += p[j];
    }
    p[K - 1] = 1.0 - acc; // exact sum
    return SymmetricProfile(K, p, L);
}

} // namespace bwp::test
