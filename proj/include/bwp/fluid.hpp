#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bwp/classes.hpp"
#include "bwp/lattice.hpp"

namespace bwp {

/// Fluid mass per cell-class, laid out like LatticeState:
/// x[cell * n_classes + (mask - 1)].
struct FluidState {
    std::vector<double> x;
    double time = 0.0;
};

/// Drift of the fluid system: births lambda p_C eps^2 per coordinate, deaths
/// |C| x_{i,C} / (L_C * sum_{k,U} |C ∩ U| kernel(k,i) x_{k,U}). Undefined at
/// x = 0 and whenever a coordinate with positive mass sees a vanishing
/// denominator (DegenerateInput). The death rates are 0-homogeneous in x.
std::vector<double> fluid_drift(const FluidState& state, const Tessellation& tess,
                                const DiscretePathLoss& dpl, const ClassProfile& profile,
                                double lambda);

struct FluidStepControl {
    double max_step = 0.05;
    double rel_tol = 1e-9;  // <= 0 switches to plain fixed-step RK4
    double abs_tol = 1e-12;
};

struct FluidSample {
    double time = 0.0;
    double total_mass = 0.0;
    std::vector<double> x;
};

struct FluidTrajectory {
    std::vector<FluidSample> samples;
    FluidState terminal;
    bool drained = false;       // state hit exactly 0
    double drained_at = 0.0;
    bool clipped = false;       // some negative overshoot was clipped to 0

    /// CSV columns: time, one column per coordinate (x{cell}_c{mask}), total_mass.
    void write_csv(std::ostream& os, const Tessellation& tess,
                   const ClassProfile& profile) const;
};

/// Classic RK4 with step-doubling error control (plain fixed steps when
/// rel_tol <= 0) from a componentwise-positive start. Negative overshoots
/// are clipped to zero and flagged; full drainage terminates the trajectory.
FluidTrajectory integrate_fluid(const FluidState& x0, double T, const Tessellation& tess,
                                const DiscretePathLoss& dpl, const ClassProfile& profile,
                                double lambda, const FluidStepControl& control = {},
                                double sample_dt = 1.0);

/// Drift-balance certificate: with the witness z_{i,C} = p_C L_C, checks
/// lambda p_C eps^2 <= |C| z_{i,C} / (L_C sum_{k,U} kernel(k,i)|C∩U| z_{k,U})
/// for every cell and class. For symmetric profiles this is exactly
/// lambda <= lambda_bar_eps = K / (load * <l^eps_D>).
struct WitnessCheck {
    bool certified = false;
    double lambda_bar = 0.0;          // symmetric closed form
    std::vector<double> witness;      // z laid out like FluidState::x
};

WitnessCheck stability_witness_check(const Tessellation& tess,
                                     const DiscretePathLoss& dpl_upper,
                                     const ClassProfile& profile, double lambda);

} // namespace bwp
