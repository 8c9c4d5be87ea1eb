#pragma once

#include "bwp/classes.hpp"
#include "bwp/geometry.hpp"
#include "bwp/pathloss.hpp"
#include "bwp/quadrature.hpp"

namespace bwp {

/// Closed-form critical arrival rate K l(r) / (<l_D> * load). The formula is
/// proved for symmetric profiles only; for a non-symmetric profile the value
/// is still computed but flagged.
struct CriticalRate {
    double value = 0.0;
    double ell_D = 0.0;       // <l_D> used
    double ell_r = 0.0;       // l(r)
    double load = 0.0;        // sum_C p_C |C| L_C
    bool symmetric = true;    // false => value is outside the proven regime
};

CriticalRate critical_rate(const ClassProfile& profile, const TorusDomain& dom,
                           const PathLoss& pl, const QuadratureSettings& settings = {});

/// Closed-form sandwich for the critical rate:
/// l(r) / (K Lmax <l_D>) <= lambda_c <= K l(r) / (Lmin <l_D>).
struct LambdaBounds {
    double lower = 0.0;
    double upper = 0.0;
};

LambdaBounds lambda_bounds(const ClassProfile& profile, const TorusDomain& dom,
                           const PathLoss& pl, const QuadratureSettings& settings = {});

inline CriticalRate critical_rate(const ClassProfile& profile, const TorusDomain& dom,
                                  const PathLoss& pl, const QuadratureSettings& settings) {
    CriticalRate out;
    out.ell_D = pathloss_integral(dom, pl, settings).value;
    out.ell_r = pl(dom.r());
    out.load = load_factor(profile);
    out.symmetric = profile.symmetric();
    out.value = profile.K() * out.ell_r / (out.ell_D * out.load);
    return out;
}

inline LambdaBounds lambda_bounds(const ClassProfile& profile, const TorusDomain& dom,
                                  const PathLoss& pl, const QuadratureSettings& settings) {
    const double ell_D = pathloss_integral(dom, pl, settings).value;
    const double ell_r = pl(dom.r());
    const int K = profile.K();
    return {ell_r / (K * profile.L_max() * ell_D),
            K * ell_r / (profile.L_min() * ell_D)};
}

} // namespace bwp
