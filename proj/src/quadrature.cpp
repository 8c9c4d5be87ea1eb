#include "bwp/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "bwp/errors.hpp"

namespace bwp {

void QuadratureSettings::validate() const {
    if (!(abs_tol > 0.0) || !(rel_tol > 0.0))
        throw std::invalid_argument("QuadratureSettings: tolerances must be > 0");
    if (max_refinement < 1)
        throw std::invalid_argument("QuadratureSettings: max_refinement must be >= 1");
}

namespace {

// Midpoint sum of f(||x||) over the square [-a, a]^2 on an n x n grid,
// n even. Only the positive quadrant is evaluated (the integrand is even in
// both coordinates); rows are accumulated separately to keep the summation
// error small at fine grids.
template <typename F>
double midpoint_sum(double a, int n, const F& f) {
    const double h = 2.0 * a / n;
    const int half = n / 2;
    double total = 0.0;
    for (int i = 0; i < half; ++i) {
        const double x = (i + 0.5) * h;
        const double x2 = x * x;
        double row = 0.0;
        for (int j = 0; j < half; ++j) {
            const double y = (j + 0.5) * h;
            row += f(std::sqrt(x2 + y * y));
        }
        total += row;
    }
    return 4.0 * total * h * h;
}

constexpr int kBaseGrid = 32;
constexpr int kMaxGrid = 1 << 13; // 8192^2 evaluations at most per level

} // namespace

IntegralEstimate torus_radial_integral(const TorusDomain& dom,
                                       const std::function<double(double)>& f,
                                       const QuadratureSettings& settings) {
    settings.validate();
    const double a = dom.side() / 2.0;

    double prev_mid = midpoint_sum(a, kBaseGrid, f);
    double prev_rich = prev_mid;
    bool have_rich = false;

    int n = kBaseGrid;
    for (int level = 1; level <= settings.max_refinement && n < kMaxGrid; ++level) {
        n *= 2;
        const double mid = midpoint_sum(a, n, f);
        // One Richardson level: the midpoint rule has an h^2 leading term.
        const double rich = (4.0 * mid - prev_mid) / 3.0;
        const double err = std::fabs(rich - (have_rich ? prev_rich : prev_mid));
        if (have_rich && err <= std::max(settings.abs_tol, settings.rel_tol * std::fabs(rich)))
            return {rich, err, level};
        prev_mid = mid;
        prev_rich = rich;
        have_rich = true;
    }
    throw NumericalFailure("torus_radial_integral: refinement budget exhausted",
                           prev_rich, std::fabs(prev_rich - prev_mid));
}

IntegralEstimate pathloss_integral(const TorusDomain& dom, const PathLoss& pl,
                                   const QuadratureSettings& settings) {
    return torus_radial_integral(dom, [&pl](double d) { return pl(d); }, settings);
}

IntegralEstimate interference_functional(const TorusDomain& dom, const PathLoss& pl,
                                         double z, int k,
                                         const QuadratureSettings& settings) {
    if (z < 0.0) throw std::invalid_argument("interference_functional: z < 0");
    if (k < 0) throw std::invalid_argument("interference_functional: k < 0");
    if (z == 0.0 || k == 0) return {0.0, 0.0, 0};
    const double zk = z * k;
    return torus_radial_integral(
        dom, [&pl, zk](double d) { return -std::expm1(-zk * pl(d)); }, settings);
}

// ---------------------------------------------------------------------------
// Semi-infinite integrals via u = z / (1 + z).

namespace {

struct SimpsonLeaf {
    double lo, mid, hi;    // u coordinates
    double f_lo, f_mid, f_hi;
};

// Recursive adaptive Simpson on [lo, hi]; appends accepted leaves when a
// collector is provided.
template <typename G>
double adaptive_simpson(const G& g, double lo, double hi, double f_lo, double f_mid,
                        double f_hi, double whole, double tol, int depth,
                        std::vector<SimpsonLeaf>* leaves, bool* depth_exhausted) {
    const double mid = 0.5 * (lo + hi);
    const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
    const double f_lm = g(lm), f_rm = g(rm);
    const double left = (mid - lo) / 6.0 * (f_lo + 4.0 * f_lm + f_mid);
    const double right = (hi - mid) / 6.0 * (f_mid + 4.0 * f_rm + f_hi);
    const double refined = left + right;
    if (depth <= 0) {
        *depth_exhausted = true;
        if (leaves) {
            leaves->push_back({lo, lm, mid, f_lo, f_lm, f_mid});
            leaves->push_back({mid, rm, hi, f_mid, f_rm, f_hi});
        }
        return refined + (refined - whole) / 15.0;
    }
    if (std::fabs(refined - whole) <= 15.0 * tol) {
        if (leaves) {
            leaves->push_back({lo, lm, mid, f_lo, f_lm, f_mid});
            leaves->push_back({mid, rm, hi, f_mid, f_rm, f_hi});
        }
        return refined + (refined - whole) / 15.0;
    }
    return adaptive_simpson(g, lo, mid, f_lo, f_lm, f_mid, left, tol / 2.0, depth - 1,
                            leaves, depth_exhausted) +
           adaptive_simpson(g, mid, hi, f_mid, f_rm, f_hi, right, tol / 2.0, depth - 1,
                            leaves, depth_exhausted);
}

template <typename G>
double simpson_u(const G& g, double tol, int max_depth, std::vector<SimpsonLeaf>* leaves,
                 bool* depth_exhausted) {
    const double f_lo = g(0.0), f_mid = g(0.5), f_hi = g(1.0);
    const double whole = 1.0 / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
    return adaptive_simpson(g, 0.0, 1.0, f_lo, f_mid, f_hi, whole, tol, max_depth, leaves,
                            depth_exhausted);
}

} // namespace

IntegralEstimate laplace_integral(const std::function<double(double)>& f, double c,
                                  const QuadratureSettings& settings) {
    settings.validate();
    if (!(c > 0.0)) throw std::invalid_argument("laplace_integral: c must be > 0");

    auto g = [&](double u) {
        if (u >= 1.0) return 0.0;
        const double om = 1.0 - u;
        const double z = u / om;
        const double damp = std::exp(-z * c);
        if (damp == 0.0) return 0.0;
        return damp * f(z) / (om * om);
    };

    // The integral is of order 1/c; aim the absolute Simpson tolerance at
    // whichever of the two tolerances is stricter for that scale.
    const double tol = std::min(settings.abs_tol, settings.rel_tol / c);
    const int max_depth = std::min(settings.max_refinement + 20, 48);
    bool exhausted = false;
    const double value = simpson_u(g, tol, max_depth, nullptr, &exhausted);
    if (exhausted)
        throw NumericalFailure("laplace_integral: subdivision depth exhausted", value, tol);
    return {value, tol, 0};
}

std::vector<LaplaceNode> laplace_nodes(double c, const QuadratureSettings& settings) {
    settings.validate();
    if (!(c > 0.0)) throw std::invalid_argument("laplace_nodes: c must be > 0");

    auto g = [c](double u) {
        if (u >= 1.0) return 0.0;
        const double om = 1.0 - u;
        const double z = u / om;
        const double damp = std::exp(-z * c);
        if (damp == 0.0) return 0.0;
        return damp / (om * om);
    };

    // Subdivide against the pure exponential and keep the leaf intervals.
    const double tol = std::min(settings.abs_tol, settings.rel_tol / c) * 1e-2;
    std::vector<SimpsonLeaf> leaves;
    bool exhausted = false;
    const double value = simpson_u(g, tol, 46, &leaves, &exhausted);
    if (exhausted)
        throw NumericalFailure("laplace_nodes: subdivision depth exhausted", value, tol);

    // Each leaf [lo, hi] becomes two Simpson panels (one extra halving for
    // safety margin on integrands that differ from the pure exponential).
    // Weights are emitted in z space with the jacobian dz/du = 1/(1-u)^2
    // folded in; the u = 1 endpoint maps to an integrand value of 0 and is
    // dropped.
    std::vector<LaplaceNode> nodes;
    nodes.reserve(leaves.size() * 10);
    auto emit = [&nodes](double u, double w_u) {
        if (u >= 1.0 - 1e-15) return;
        const double om = 1.0 - u;
        nodes.push_back({u / om, w_u / (om * om)});
    };
    for (const auto& leaf : leaves) {
        for (int half = 0; half < 2; ++half) {
            const double lo = half == 0 ? leaf.lo : leaf.mid;
            const double hi = half == 0 ? leaf.mid : leaf.hi;
            const double h = hi - lo;
            emit(lo, h / 6.0);
            emit(0.5 * (lo + hi), 4.0 * h / 6.0);
            emit(hi, h / 6.0);
        }
    }

    // Merge duplicate boundary nodes so the solver sees each z once.
    std::sort(nodes.begin(), nodes.end(),
              [](const LaplaceNode& a, const LaplaceNode& b) { return a.z < b.z; });
    std::vector<LaplaceNode> merged;
    merged.reserve(nodes.size());
    for (const auto& n : nodes) {
        if (!merged.empty() && merged.back().z == n.z) merged.back().w += n.w;
        else merged.push_back(n);
    }
    return merged;
}

// ---------------------------------------------------------------------------

TorusGainProfile::TorusGainProfile(const TorusDomain& dom, const PathLoss& pl, int grid,
                                   int max_bins) {
    if (grid < 2 || grid % 2 != 0)
        throw std::invalid_argument("TorusGainProfile: grid must be even and >= 2");
    const double a = dom.side() / 2.0;
    const double h = 2.0 * a / grid;
    const int half = grid / 2;

    std::vector<double> gains;
    gains.reserve(static_cast<std::size_t>(half) * half);
    for (int i = 0; i < half; ++i) {
        const double x = (i + 0.5) * h;
        const double x2 = x * x;
        for (int j = 0; j < half; ++j) {
            const double y = (j + 0.5) * h;
            gains.push_back(pl(std::sqrt(x2 + y * y)));
        }
    }
    std::sort(gains.begin(), gains.end());

    // Equal-count aggregation into at most max_bins bins; each bin carries
    // its mean gain and the exact area weight of its samples.
    const double cell_area = 4.0 * h * h; // quadrant symmetry
    const std::size_t total = gains.size();
    const std::size_t per_bin = std::max<std::size_t>(1, total / max_bins);
    for (std::size_t start = 0; start < total; start += per_bin) {
        const std::size_t end = std::min(start + per_bin, total);
        double mean = 0.0;
        for (std::size_t i = start; i < end; ++i) mean += gains[i];
        mean /= double(end - start);
        gain_.push_back(mean);
        weight_.push_back(cell_area * double(end - start));
    }
    total_weight_ = std::accumulate(weight_.begin(), weight_.end(), 0.0);
}

double TorusGainProfile::interference(double z, int k) const {
    if (z <= 0.0 || k <= 0) return 0.0;
    const double zk = z * k;
    return integrate([zk](double g) { return -std::expm1(-zk * g); });
}

} // namespace bwp
