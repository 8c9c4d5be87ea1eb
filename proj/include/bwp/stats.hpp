#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bwp/sbd_sim.hpp"

namespace bwp {

/// Time-averaged user density over a window, with a batch-means standard
/// error. bias_factor scales the raw time average (1.0 default; 1.28 is the
/// Palm-bias preset quoted for the reference experiments — the factor is
/// reported there without derivation, so it stays opt-in).
struct DensityEstimate {
    double density = 0.0;
    double std_error = 0.0;
    double window_start = 0.0;
    double window_end = 0.0;
    double bias_factor = 1.0;
    int batches = 0;
    bool warning = false; // window too thin for the batch count
};

DensityEstimate ergodic_density(const Trajectory& traj, double area, std::uint32_t cls_mask,
                                double warmup, double window, double bias_factor = 1.0,
                                int batches = 20);

/// Running average of departed-user sojourns per class, one point per
/// departure: (departure time, cumulative mean staying time).
using StayingSeries = std::vector<std::pair<double, double>>;
std::map<std::uint32_t, StayingSeries> staying_times(const Trajectory& traj);

struct StabilitySettings {
    double min_span = 0.0;                  // required trajectory time span
    int batches = 16;                       // batch count for the slope CI
    double confidence = 0.99;               // two-sided level of the slope CI
    std::uint32_t stable_max_count = 1000000; // population ceiling for "Stable"
};

struct ClassSlope {
    std::uint32_t cls = 0;
    double slope = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t departures = 0;
};

struct StabilityVerdict {
    enum class Kind { Stable, Unstable, Inconclusive };

    Kind verdict = Kind::Inconclusive;
    double slope = 0.0;   // pooled running-average staying time vs time
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::vector<ClassSlope> per_class;

    static const char* name(Kind k) {
        switch (k) {
            case Kind::Stable: return "stable";
            case Kind::Unstable: return "unstable";
            default: return "inconclusive";
        }
    }
};

/// Little's-law diagnostic: regresses the pooled running-average staying
/// time on departure time over the second half of the run. A confidently
/// positive slope means sojourns keep growing (no stationary regime);
/// a CI straddling zero with a bounded population reads as stable.
StabilityVerdict classify_stability(const Trajectory& traj,
                                    const StabilitySettings& settings = {});

/// Simple OLS with the usual t-based confidence interval, shared by the
/// verdict logic and the lattice growth tests.
struct RegressionResult {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    int df = 0;

    std::pair<double, double> slope_ci(double confidence) const;
};

RegressionResult linear_regression(const std::vector<std::pair<double, double>>& points);

/// Student-t quantile (two-sided helper lives in RegressionResult).
double student_t_quantile(double p, int df);

} // namespace bwp
