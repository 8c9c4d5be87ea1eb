#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bwp/classes.hpp"
#include "bwp/geometry.hpp"
#include "bwp/pathloss.hpp"
#include "bwp/sbd_sim.hpp"

namespace bwp {

/// Square-cell tessellation of the torus with the origin at the center of
/// cell 0. Cell i = iy * per_side + ix has center (ix * eps, iy * eps).
class Tessellation {
public:
    Tessellation(const TorusDomain& dom, double eps);

    const TorusDomain& domain() const { return dom_; }
    double eps() const { return eps_; }
    int per_side() const { return per_side_; }
    int n_cells() const { return per_side_ * per_side_; }

    Point center(int i) const {
        return {dom_.wrap((i % per_side_) * eps_), dom_.wrap((i / per_side_) * eps_)};
    }

    int cell_of(Point p) const;

    /// Index of the offset a_j - a_i in the translation-invariant kernel.
    int offset_index(int i, int j) const {
        const int n = per_side_;
        const int dx = ((j % n) - (i % n) + n) % n;
        const int dy = ((j / n) - (i / n) + n) % n;
        return dy * n + dx;
    }

private:
    TorusDomain dom_;
    double eps_;
    int per_side_;
};

enum class KernelMode { Upper, Lower };

/// Discretized path loss between cells: the max (Upper, dominating chain) or
/// min (Lower, dominated chain) of the true path loss over the 5-point
/// perturbation sets {a_i, a_i +- eps e1, a_i +- eps e2} around both cell
/// centers. Translation invariant by construction, so every row of the cell
/// matrix has the same sum.
class DiscretePathLoss {
public:
    DiscretePathLoss(const Tessellation& tess, const PathLoss& pl, KernelMode mode);

    KernelMode mode() const { return mode_; }
    double operator()(const Tessellation& tess, int i, int j) const {
        return kernel_[tess.offset_index(i, j)];
    }
    double at_offset(int offset) const { return kernel_[offset]; }
    const std::vector<double>& kernel() const { return kernel_; }

    /// Common row sum sum_k kernel(i, k).
    double row_sum() const { return row_sum_; }
    /// <l^eps_D> (resp. <l_eps,D>) = eps^2 * row sum.
    double ell_eps_D() const { return ell_eps_D_; }

private:
    KernelMode mode_;
    std::vector<double> kernel_;
    double row_sum_ = 0.0;
    double ell_eps_D_ = 0.0;
};

/// Occupancy of the bounding chains: counts[cell * n_classes + (mask - 1)].
struct LatticeState {
    std::vector<std::uint32_t> counts;
    double clock = 0.0;

    LatticeState(int n_cells, int n_classes)
        : counts(std::size_t(n_cells) * n_classes, 0) {}
};

/// Per-user transmission rate |C| / (N0 + I) for cell i and class C, with the
/// interference summed from scratch over all cell-class pairs (self
/// excluded). The simulator keeps incremental fields instead; they are
/// audited against this.
double lattice_rate(const LatticeState& state, int i, std::uint32_t cls,
                    const Tessellation& tess, const DiscretePathLoss& dpl, double n0);

struct LatticeEvent {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    int cell = 0;
    std::uint32_t cls = 0;
    std::uint32_t total_count = 0;
};

struct LatticeTrajectory {
    enum class Stop { BudgetExhausted, Explosion };

    std::vector<LatticeEvent> events;
    Stop stop = Stop::BudgetExhausted;
    double final_time = 0.0;
    std::uint32_t max_count = 0;

    /// CSV columns: time,kind,cell_index,class_bitmask,total_count.
    void write_csv(std::ostream& os) const;
};

struct LatticeSimConfig {
    double lambda = 0.0;
    double n0 = 1.0;
    std::uint64_t seed = 1;
    Budget budget;
    std::uint64_t population_cap = 1000000;
};

/// CTMC simulation of a bounding chain by exponential races (births at rate
/// lambda * |D| spread uniformly over cells, per-cell-class departure
/// clocks). Deterministic given the seed.
LatticeTrajectory lattice_simulate(const Tessellation& tess, const DiscretePathLoss& dpl,
                                   const ClassProfile& profile,
                                   const LatticeSimConfig& config);

/// Appendix-style score r_{i,C}(x) = |C| x_{i,C} /
/// (p_C L_C eps^2 * sum_{k,U} l_eps(a_k, a_i) |C ∩ U| x_{k,U}), the
/// queue-loading functional whose maximin witness drives the transience
/// proof. 0-homogeneous; undefined at x = 0.
double r_score(const std::vector<double>& x, int i, std::uint32_t cls,
               const Tessellation& tess, const DiscretePathLoss& dpl_lower,
               const ClassProfile& profile);

/// lambda_underbar_eps = K / (<l_eps,D> * load): above this rate the
/// dominated chain is unstable. Only proved for symmetric profiles.
struct ThresholdRate {
    double value = 0.0;
    double ell_eps_D = 0.0;
    bool symmetric = true;
};

ThresholdRate transience_threshold(const Tessellation& tess, const PathLoss& pl,
                                   const ClassProfile& profile);

/// lambda_bar_eps = K / (load * <l^eps_D>): below this rate the dominating
/// chain is stable (witness z = pL balances the fluid drift).
ThresholdRate stability_threshold(const Tessellation& tess, const PathLoss& pl,
                                  const ClassProfile& profile);

} // namespace bwp
