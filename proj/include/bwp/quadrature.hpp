#pragma once

#include <functional>
#include <vector>

#include "bwp/geometry.hpp"
#include "bwp/pathloss.hpp"

namespace bwp {

struct QuadratureSettings {
    double abs_tol = 1e-9;
    double rel_tol = 1e-8;
    int max_refinement = 20;

    void validate() const;
};

struct IntegralEstimate {
    double value = 0.0;
    double error_bound = 0.0; // declared bound from the refinement sequence
    int refinements = 0;
};

/// Integral over the square torus of a radial integrand:
/// \int_{[-side/2,side/2]^2} f(||x||) dx, computed on a uniform tensor
/// midpoint grid with iterated refinement and Richardson extrapolation.
/// Throws NumericalFailure when the refinement budget is exhausted.
IntegralEstimate torus_radial_integral(const TorusDomain& dom,
                                       const std::function<double(double)>& f,
                                       const QuadratureSettings& settings = {});

/// <l_D> = integral of the path loss over the torus seen from the origin.
IntegralEstimate pathloss_integral(const TorusDomain& dom, const PathLoss& pl,
                                   const QuadratureSettings& settings = {});

/// I(z, k) = \int_D (1 - e^{-z k l(||x||)}) dx. Monotone in z and k,
/// bounded by the torus area.
IntegralEstimate interference_functional(const TorusDomain& dom, const PathLoss& pl,
                                         double z, int k,
                                         const QuadratureSettings& settings = {});

/// \int_0^infty e^{-z c} f(z) dz for bounded f, via the compactifying map
/// u = z / (1 + z) and adaptive Simpson refinement on (0, 1).
IntegralEstimate laplace_integral(const std::function<double(double)>& f, double c,
                                  const QuadratureSettings& settings = {});

/// Frozen node/weight list for repeated Laplace-type integrals against the
/// same exponential envelope: sum_i w_i g(z_i) approximates
/// \int_0^infty g(z) dz for integrands shaped like e^{-z c} * (smooth, <= 1).
/// The nodes come from running the adaptive subdivision on g = e^{-z c}
/// itself (validated against the exact value 1/c) plus one extra global
/// halving.
struct LaplaceNode {
    double z;
    double w;
};
std::vector<LaplaceNode> laplace_nodes(double c, const QuadratureSettings& settings = {});

/// Discrete pushforward of the torus area measure through x -> l(||x||):
/// weighted gain samples such that sum_b w_b phi(g_b) ~= \int_D phi(l(||x||)) dx.
/// Built once from a fixed tensor midpoint grid; this is the fast path behind
/// the fixed-point solvers, cross-checked in tests against the refining
/// integrator above.
class TorusGainProfile {
public:
    TorusGainProfile(const TorusDomain& dom, const PathLoss& pl, int grid = 2048,
                     int max_bins = 4096);

    template <typename F>
    double integrate(F&& phi) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < gain_.size(); ++i) acc += weight_[i] * phi(gain_[i]);
        return acc;
    }

    /// I(z, k) evaluated on the profile.
    double interference(double z, int k) const;

    double total_weight() const { return total_weight_; } // = |D|
    std::size_t bins() const { return gain_.size(); }

private:
    std::vector<double> gain_;
    std::vector<double> weight_;
    double total_weight_ = 0.0;
};

} // namespace bwp
