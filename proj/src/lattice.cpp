#include "bwp/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "bwp/errors.hpp"

namespace bwp {

Tessellation::Tessellation(const TorusDomain& dom, double eps) : dom_(dom), eps_(eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("Tessellation: eps must be > 0");
    const double ratio = dom.side() / eps;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::fabs(ratio - rounded) > 1e-9 * ratio)
        throw std::invalid_argument("Tessellation: side must be an integer multiple of eps");
    per_side_ = static_cast<int>(rounded);
}

int Tessellation::cell_of(Point p) const {
    if (!dom_.contains(p)) throw std::domain_error("Tessellation: point outside domain");
    // Cells are centered on the lattice (ix * eps, iy * eps).
    const int n = per_side_;
    auto idx = [&](double v) {
        int i = static_cast<int>(std::floor(v / eps_ + 0.5));
        return (i % n + n) % n;
    };
    return idx(p.y) * n + idx(p.x);
}

DiscretePathLoss::DiscretePathLoss(const Tessellation& tess, const PathLoss& pl,
                                   KernelMode mode)
    : mode_(mode) {
    const int n = tess.per_side();
    const double eps = tess.eps();
    const double side = tess.domain().side();
    kernel_.resize(std::size_t(n) * n);

    // 5-point perturbation set around each center; the candidate offsets are
    // the pairwise differences.
    const double px[5] = {0.0, eps, -eps, 0.0, 0.0};
    const double py[5] = {0.0, 0.0, 0.0, eps, -eps};

    for (int dy = 0; dy < n; ++dy) {
        for (int dx = 0; dx < n; ++dx) {
            const double bx = dx * eps;
            const double by = dy * eps;
            double best = mode == KernelMode::Upper
                              ? -std::numeric_limits<double>::infinity()
                              : std::numeric_limits<double>::infinity();
            for (int a = 0; a < 5; ++a) {
                for (int b = 0; b < 5; ++b) {
                    double ox = bx + px[b] - px[a];
                    double oy = by + py[b] - py[a];
                    // shortest periodic image of the offset
                    ox = std::fabs(std::remainder(ox, side));
                    oy = std::fabs(std::remainder(oy, side));
                    const double gain = pl(std::sqrt(ox * ox + oy * oy));
                    best = mode == KernelMode::Upper ? std::max(best, gain)
                                                     : std::min(best, gain);
                }
            }
            kernel_[std::size_t(dy) * n + dx] = best;
        }
    }
    row_sum_ = 0.0;
    for (double v : kernel_) row_sum_ += v;
    ell_eps_D_ = eps * eps * row_sum_;
}

double lattice_rate(const LatticeState& state, int i, std::uint32_t cls,
                    const Tessellation& tess, const DiscretePathLoss& dpl, double n0) {
    const int n_cells = tess.n_cells();
    const std::size_t classes = state.counts.size() / n_cells;
    double interference = 0.0;
    for (int k = 0; k < n_cells; ++k) {
        const double gain = dpl(tess, k, i);
        for (std::size_t c = 0; c < classes; ++c) {
            const std::uint32_t u = static_cast<std::uint32_t>(c) + 1;
            const int overlap = popcount_mask(cls & u);
            if (overlap == 0) continue;
            double occ = state.counts[std::size_t(k) * classes + c];
            if (k == i && u == cls) occ -= 1.0; // self-exclusion
            interference += overlap * gain * occ;
        }
    }
    return popcount_mask(cls) / (n0 + interference);
}

void LatticeTrajectory::write_csv(std::ostream& os) const {
    os << "time,kind,cell_index,class_bitmask,total_count\n";
    char buf[120];
    for (const auto& e : events) {
        std::snprintf(buf, sizeof buf, "%.17g,%s,%d,%u,%u\n", e.time,
                      e.kind == EventKind::Arrival ? "arrival" : "departure", e.cell,
                      e.cls, e.total_count);
        os << buf;
    }
}

LatticeTrajectory lattice_simulate(const Tessellation& tess, const DiscretePathLoss& dpl,
                                   const ClassProfile& profile,
                                   const LatticeSimConfig& config) {
    if (!(config.lambda >= 0.0))
        throw std::invalid_argument("lattice_simulate: lambda must be >= 0");
    if (!(config.n0 > 0.0)) throw std::invalid_argument("lattice_simulate: N0 must be > 0");

    const int n_cells = tess.n_cells();
    const std::uint32_t n_classes = profile.num_classes();
    LatticeState state(n_cells, n_classes);
    SimStreams streams(config.seed);
    LatticeTrajectory traj;

    // field[c][i] = sum_k kernel(k, i) * counts[k][c], maintained
    // incrementally; rebuilt periodically to shed rounding drift.
    std::vector<std::vector<double>> field(n_classes, std::vector<double>(n_cells, 0.0));
    auto bump_field = [&](int cell, std::uint32_t cls, double delta) {
        auto& f = field[cls - 1];
        for (int i = 0; i < n_cells; ++i)
            f[i] += delta * dpl.at_offset(tess.offset_index(cell, i));
    };
    auto rebuild_fields = [&]() {
        for (std::uint32_t c = 0; c < n_classes; ++c) {
            auto& f = field[c];
            std::fill(f.begin(), f.end(), 0.0);
            for (int k = 0; k < n_cells; ++k) {
                const double occ = state.counts[std::size_t(k) * n_classes + c];
                if (occ == 0.0) continue;
                for (int i = 0; i < n_cells; ++i)
                    f[i] += occ * dpl.at_offset(tess.offset_index(k, i));
            }
        }
    };

    const double birth_rate = config.lambda * tess.domain().area();
    const double kernel_self = dpl.at_offset(0);
    std::uint64_t population = 0;

    while (traj.events.size() < config.budget.max_events &&
           state.clock < config.budget.max_time) {
        double best_time = streams.arrivals_low.exponential(birth_rate);
        int best_cell = -1;
        std::uint32_t best_cls = 0;
        for (int i = 0; i < n_cells; ++i) {
            for (std::uint32_t c = 0; c < n_classes; ++c) {
                const std::uint32_t occ = state.counts[std::size_t(i) * n_classes + c];
                if (occ == 0) continue;
                const std::uint32_t mask = c + 1;
                const int ch = popcount_mask(mask);
                double interference = -double(ch) * kernel_self; // self-exclusion
                for (std::uint32_t u = 1; u <= n_classes; ++u) {
                    const int overlap = popcount_mask(mask & u);
                    if (overlap == 0) continue;
                    interference += overlap * field[u - 1][i];
                }
                const double rate =
                    occ * ch / ((config.n0 + interference) * profile.L(mask));
                const double t = streams.departures.exponential(rate);
                if (t < best_time) {
                    best_time = t;
                    best_cell = i;
                    best_cls = mask;
                }
            }
        }
        if (!std::isfinite(best_time)) break;
        state.clock += best_time;

        LatticeEvent ev;
        ev.time = state.clock;
        if (best_cell < 0) {
            const int cell =
                static_cast<int>(streams.placement.uniform_int(std::uint64_t(n_cells)));
            const std::uint32_t mask = sample_class(profile, streams.placement.uniform01());
            ++state.counts[std::size_t(cell) * n_classes + (mask - 1)];
            ++population;
            bump_field(cell, mask, 1.0);
            ev.kind = EventKind::Arrival;
            ev.cell = cell;
            ev.cls = mask;
        } else {
            --state.counts[std::size_t(best_cell) * n_classes + (best_cls - 1)];
            --population;
            bump_field(best_cell, best_cls, -1.0);
            ev.kind = EventKind::Departure;
            ev.cell = best_cell;
            ev.cls = best_cls;
        }
        ev.total_count = static_cast<std::uint32_t>(population);
        traj.events.push_back(ev);
        traj.final_time = ev.time;
        traj.max_count = std::max(traj.max_count, ev.total_count);

        if (traj.events.size() % 4096 == 0) rebuild_fields();
        if (population >= config.population_cap) {
            traj.stop = LatticeTrajectory::Stop::Explosion;
            break;
        }
    }
    return traj;
}

double r_score(const std::vector<double>& x, int i, std::uint32_t cls,
               const Tessellation& tess, const DiscretePathLoss& dpl_lower,
               const ClassProfile& profile) {
    const int n_cells = tess.n_cells();
    const std::uint32_t n_classes = profile.num_classes();
    if (x.size() != std::size_t(n_cells) * n_classes)
        throw std::invalid_argument("r_score: state size mismatch");
    bool any = false;
    for (double v : x) {
        if (v < 0.0) throw DegenerateInput("r_score: negative coordinate");
        if (v > 0.0) any = true;
    }
    if (!any) throw DegenerateInput("r_score: undefined at x = 0");
    const double pc = profile.p(cls);
    if (pc <= 0.0) throw DegenerateInput("r_score: class has zero arrival probability");

    double denom = 0.0;
    for (int k = 0; k < n_cells; ++k) {
        const double gain = dpl_lower(tess, k, i);
        for (std::uint32_t u = 1; u <= n_classes; ++u) {
            const int overlap = popcount_mask(cls & u);
            if (overlap == 0) continue;
            denom += gain * overlap * x[std::size_t(k) * n_classes + (u - 1)];
        }
    }
    if (!(denom > 0.0)) throw DegenerateInput("r_score: zero denominator");
    const double eps2 = tess.eps() * tess.eps();
    return popcount_mask(cls) * x[std::size_t(i) * n_classes + (cls - 1)] /
           (pc * profile.L(cls) * eps2 * denom);
}

ThresholdRate transience_threshold(const Tessellation& tess, const PathLoss& pl,
                                   const ClassProfile& profile) {
    DiscretePathLoss lower(tess, pl, KernelMode::Lower);
    ThresholdRate out;
    out.ell_eps_D = lower.ell_eps_D();
    out.symmetric = profile.symmetric();
    out.value = profile.K() / (out.ell_eps_D * load_factor(profile));
    return out;
}

ThresholdRate stability_threshold(const Tessellation& tess, const PathLoss& pl,
                                  const ClassProfile& profile) {
    DiscretePathLoss upper(tess, pl, KernelMode::Upper);
    ThresholdRate out;
    out.ell_eps_D = upper.ell_eps_D();
    out.symmetric = profile.symmetric();
    out.value = profile.K() / (out.ell_eps_D * load_factor(profile));
    return out;
}

} // namespace bwp
