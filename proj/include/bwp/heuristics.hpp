#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "bwp/classes.hpp"
#include "bwp/geometry.hpp"
#include "bwp/pathloss.hpp"
#include "bwp/quadrature.hpp"

namespace bwp {

struct SolverSettings {
    double tol = 1e-10;             // Cauchy criterion on the iterates
    double residual_tol = 1e-8;     // fixed-point defect accepted as converged
    int max_iterations = 10000;
    double damping = 0.5;           // undamped iteration oscillates near the boundary
    double divergence_factor = 1e6; // ceiling, in units of the low-lambda estimate
    int gain_grid = 2048;           // tensor grid behind the gain pushforward
    QuadratureSettings quad;
};

/// Shared numerical kernel of the density fixed points: frozen z-nodes for
/// the Laplace-type outer integral and the tabulated interference functional
/// I(z_i, m) for m = 1..K on those nodes. Depends only on (domain, path
/// loss, K, N0), so one kernel serves a whole lambda sweep.
class PoissonKernel {
public:
    PoissonKernel(const TorusDomain& dom, const PathLoss& pl, int K, double n0,
                  const SolverSettings& settings = {});

    int K() const { return K_; }
    double n0() const { return n0_; }
    std::size_t nodes() const { return z_.size(); }

    /// sum_i w_i exp(-z_i N0 - sum_m weights[m] * I(z_i, m)), weights indexed
    /// 1..K. This is the left-hand integral of the density equation for one
    /// class; `weights[m]` aggregates the densities of all classes with band
    /// overlap m against the probe class.
    double integral(const std::vector<double>& overlap_weights) const;

    const TorusGainProfile& gains() const { return gains_; }

private:
    int K_;
    double n0_;
    TorusGainProfile gains_;
    std::vector<double> z_;
    std::vector<double> w_;
    std::vector<std::vector<double>> itf_; // itf_[i][m], m = 0..K
};

struct PoissonSolution {
    std::vector<double> mu; // by class bitmask, entry 0 unused
    double residual = 0.0;  // max class defect of the density equation
    int iterations = 0;
    bool converged = false;
    std::uint64_t kernel_calls = 0; // per-class integral evaluations
};

/// Smallest solution of the Poisson-approximation density system, by damped
/// monotone iteration from zero. converged = false flags divergence or a
/// stalled iteration (the rate is outside the heuristic's feasible region).
PoissonSolution poisson_fixed_point(const ClassProfile& profile, const TorusDomain& dom,
                                    const PathLoss& pl, double lambda, double n0,
                                    const SolverSettings& settings = {},
                                    const PoissonKernel* kernel = nullptr);

struct SymmetricPoissonSolution {
    std::vector<double> mu; // by cardinality, indexed 1..K (entry 0 unused)
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    std::uint64_t kernel_calls = 0;
};

/// The K-equation reduction of the same system for symmetric profiles, with
/// the hypergeometric overlap weights. Aggregates match the full solver:
/// mu_j = sum over classes of cardinality j.
SymmetricPoissonSolution poisson_fixed_point_symmetric(
    const SymmetricProfile& sym, const TorusDomain& dom, const PathLoss& pl,
    double lambda, double n0, const SolverSettings& settings = {},
    const PoissonKernel* kernel = nullptr);

struct PoissonCriticalRate {
    double lambda_p = 0.0;
    double bracket_width = 0.0;
    int probes = 0;
};

/// Largest lambda for which the Poisson density system still admits a
/// solution, located by bisection on solver feasibility. Bracket narrows to
/// 1e-3 of the closed-form critical rate.
PoissonCriticalRate poisson_critical_rate(const ClassProfile& profile,
                                          const TorusDomain& dom, const PathLoss& pl,
                                          double n0, const SolverSettings& settings = {});

struct CavitySolution {
    std::vector<double> mu; // by class bitmask
    std::vector<double> I;  // typical-user interference by class bitmask
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
    bool diverged = false; // interference grew without bound
};

/// Second-order (pair-correlation) density heuristic: joint damped iteration
/// on the typical-user interference vector and the densities it implies.
CavitySolution cavity_fixed_point(const ClassProfile& profile, const TorusDomain& dom,
                                  const PathLoss& pl, double lambda, double n0,
                                  const SolverSettings& settings = {});

} // namespace bwp
