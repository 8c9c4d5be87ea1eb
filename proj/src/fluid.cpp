#include "bwp/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "bwp/errors.hpp"

namespace bwp {

namespace {

// Death denominators via per-class convolution fields, shared by drift and
// witness check: field[c][i] = sum_k kernel(k,i) x[k][c].
std::vector<std::vector<double>> convolve_fields(const std::vector<double>& x,
                                                 const Tessellation& tess,
                                                 const DiscretePathLoss& dpl,
                                                 std::uint32_t n_classes) {
    const int n_cells = tess.n_cells();
    std::vector<std::vector<double>> field(n_classes, std::vector<double>(n_cells, 0.0));
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        auto& f = field[c];
        for (int k = 0; k < n_cells; ++k) {
            const double mass = x[std::size_t(k) * n_classes + c];
            if (mass == 0.0) continue;
            for (int i = 0; i < n_cells; ++i)
                f[i] += mass * dpl.at_offset(tess.offset_index(k, i));
        }
    }
    return field;
}

} // namespace

std::vector<double> fluid_drift(const FluidState& state, const Tessellation& tess,
                                const DiscretePathLoss& dpl, const ClassProfile& profile,
                                double lambda) {
    const int n_cells = tess.n_cells();
    const std::uint32_t n_classes = profile.num_classes();
    const auto& x = state.x;
    if (x.size() != std::size_t(n_cells) * n_classes)
        throw std::invalid_argument("fluid_drift: state size mismatch");

    bool any = false;
    for (double v : x) {
        if (v < 0.0) throw DegenerateInput("fluid_drift: negative mass");
        if (v > 0.0) any = true;
    }
    if (!any) throw DegenerateInput("fluid_drift: dynamics undefined at x = 0");

    const auto field = convolve_fields(x, tess, dpl, n_classes);
    const double eps2 = tess.eps() * tess.eps();
    std::vector<double> drift(x.size());
    for (int i = 0; i < n_cells; ++i) {
        for (std::uint32_t c = 0; c < n_classes; ++c) {
            const std::uint32_t mask = c + 1;
            const double mass = x[std::size_t(i) * n_classes + c];
            double death = 0.0;
            if (mass > 0.0) {
                double denom = 0.0;
                for (std::uint32_t u = 1; u <= n_classes; ++u) {
                    const int overlap = popcount_mask(mask & u);
                    if (overlap == 0) continue;
                    denom += overlap * field[u - 1][i];
                }
                if (!(denom > 0.0))
                    throw DegenerateInput("fluid_drift: zero denominator with positive mass");
                death = popcount_mask(mask) * mass / (profile.L(mask) * denom);
            }
            drift[std::size_t(i) * n_classes + c] = lambda * profile.p(mask) * eps2 - death;
        }
    }
    return drift;
}

namespace {

// One plain RK4 step; returns false (leaving y untouched) if any stage walks
// into an undefined drift.
bool rk4_step(std::vector<double>& y, double t, double h, const Tessellation& tess,
              const DiscretePathLoss& dpl, const ClassProfile& profile, double lambda) {
    FluidState s;
    s.x = y;
    s.time = t;
    auto eval = [&](const std::vector<double>& v, std::vector<double>& out) {
        FluidState tmp;
        tmp.x = v;
        out = fluid_drift(tmp, tess, dpl, profile, lambda);
    };
    try {
        std::vector<double> k1, k2, k3, k4, tmp(y.size());
        eval(y, k1);
        for (std::size_t i = 0; i < y.size(); ++i)
            tmp[i] = std::max(0.0, y[i] + 0.5 * h * k1[i]);
        eval(tmp, k2);
        for (std::size_t i = 0; i < y.size(); ++i)
            tmp[i] = std::max(0.0, y[i] + 0.5 * h * k2[i]);
        eval(tmp, k3);
        for (std::size_t i = 0; i < y.size(); ++i)
            tmp[i] = std::max(0.0, y[i] + h * k3[i]);
        eval(tmp, k4);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        return true;
    } catch (const DegenerateInput&) {
        return false;
    }
}

} // namespace

FluidTrajectory integrate_fluid(const FluidState& x0, double T, const Tessellation& tess,
                                const DiscretePathLoss& dpl, const ClassProfile& profile,
                                double lambda, const FluidStepControl& control,
                                double sample_dt) {
    for (double v : x0.x)
        if (!(v > 0.0))
            throw std::invalid_argument(
                "integrate_fluid: initial state must be componentwise positive");
    if (!(T > 0.0)) throw std::invalid_argument("integrate_fluid: T must be > 0");
    if (!(control.max_step > 0.0))
        throw std::invalid_argument("integrate_fluid: max_step must be > 0");

    FluidTrajectory traj;
    std::vector<double> y = x0.x;
    double t = 0.0;
    double h = control.max_step;
    const bool adaptive = control.rel_tol > 0.0;
    double next_sample = 0.0;

    auto total = [](const std::vector<double>& v) {
        double acc = 0.0;
        for (double e : v) acc += e;
        return acc;
    };
    auto record = [&](double when) {
        traj.samples.push_back({when, total(y), y});
    };
    auto clip = [&](std::vector<double>& v) {
        for (double& e : v)
            if (e < 0.0) {
                e = 0.0;
                traj.clipped = true;
            }
    };

    record(0.0);
    next_sample = sample_dt;

    while (t < T) {
        h = std::min(h, T - t);
        bool accepted = false;
        while (!accepted) {
            std::vector<double> full = y;
            std::vector<double> halves = y;
            const bool ok_full = rk4_step(full, t, h, tess, dpl, profile, lambda);
            const bool ok_halves =
                rk4_step(halves, t, h / 2.0, tess, dpl, profile, lambda) &&
                rk4_step(halves, t + h / 2.0, h / 2.0, tess, dpl, profile, lambda);
            if (!ok_full || !ok_halves) {
                // Drift became undefined inside the step: the state is
                // draining; shrink toward the drainage time.
                h /= 2.0;
                if (h < 1e-12) {
                    std::fill(y.begin(), y.end(), 0.0);
                    traj.drained = true;
                    traj.drained_at = t;
                    break;
                }
                continue;
            }
            if (adaptive) {
                double err = 0.0, scale = control.abs_tol;
                for (std::size_t i = 0; i < y.size(); ++i) {
                    err = std::max(err, std::fabs(full[i] - halves[i]) / 15.0);
                    scale = std::max(scale, control.rel_tol * std::fabs(halves[i]));
                }
                if (err > scale && h > 1e-12) {
                    h /= 2.0;
                    continue;
                }
                y = halves;
                clip(y);
                t += h;
                if (err < scale / 16.0) h = std::min(h * 2.0, control.max_step);
                accepted = true;
            } else {
                y = halves; // two half-steps, still plain 4th order
                clip(y);
                t += h;
                accepted = true;
            }
        }
        if (traj.drained) break;
        if (total(y) == 0.0) {
            traj.drained = true;
            traj.drained_at = t;
            break;
        }
        while (next_sample <= t + 1e-15 && next_sample <= T) {
            record(next_sample);
            next_sample += sample_dt;
        }
    }
    if (traj.samples.empty() || traj.samples.back().time < t) record(t);
    traj.terminal.x = y;
    traj.terminal.time = t;
    return traj;
}

void FluidTrajectory::write_csv(std::ostream& os, const Tessellation& tess,
                                const ClassProfile& profile) const {
    os << "time";
    char buf[64];
    for (int i = 0; i < tess.n_cells(); ++i)
        for (std::uint32_t m = 1; m <= profile.num_classes(); ++m) {
            std::snprintf(buf, sizeof buf, ",x%d_c%u", i, m);
            os << buf;
        }
    os << ",total_mass\n";
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%.17g", s.time);
        os << buf;
        for (double v : s.x) {
            std::snprintf(buf, sizeof buf, ",%.17g", v);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, ",%.17g\n", s.total_mass);
        os << buf;
    }
}

WitnessCheck stability_witness_check(const Tessellation& tess,
                                     const DiscretePathLoss& dpl_upper,
                                     const ClassProfile& profile, double lambda) {
    const int n_cells = tess.n_cells();
    const std::uint32_t n_classes = profile.num_classes();
    WitnessCheck out;
    out.witness.resize(std::size_t(n_cells) * n_classes);
    for (int i = 0; i < n_cells; ++i)
        for (std::uint32_t c = 0; c < n_classes; ++c)
            out.witness[std::size_t(i) * n_classes + c] = profile.p(c + 1) * profile.L(c + 1);

    out.lambda_bar =
        profile.K() / (load_factor(profile) * dpl_upper.ell_eps_D());

    const auto field = convolve_fields(out.witness, tess, dpl_upper, n_classes);
    const double eps2 = tess.eps() * tess.eps();
    out.certified = true;
    for (int i = 0; i < n_cells && out.certified; ++i) {
        for (std::uint32_t c = 0; c < n_classes; ++c) {
            const std::uint32_t mask = c + 1;
            if (profile.p(mask) == 0.0) continue; // nothing arrives, nothing to certify
            double denom = 0.0;
            for (std::uint32_t u = 1; u <= n_classes; ++u) {
                const int overlap = popcount_mask(mask & u);
                if (overlap == 0) continue;
                denom += overlap * field[u - 1][i];
            }
            const double service = popcount_mask(mask) *
                                   out.witness[std::size_t(i) * n_classes + c] /
                                   (profile.L(mask) * denom);
            if (lambda * profile.p(mask) * eps2 > service) {
                out.certified = false;
                break;
            }
        }
    }
    return out;
}

} // namespace bwp
