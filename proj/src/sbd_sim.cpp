#include "bwp/sbd_sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include "bwp/errors.hpp"

namespace bwp {

void SimConfig::validate() const {
    if (!(lambda >= 0.0)) throw std::invalid_argument("SimConfig: lambda must be >= 0");
    if (!(n0 > 0.0)) throw std::invalid_argument("SimConfig: N0 must be > 0");
    if (budget.max_events == 0 && !std::isfinite(budget.max_time))
        throw std::invalid_argument("SimConfig: budget must be finite");
}

void Trajectory::write_csv(std::ostream& os) const {
    os << "time,kind,class_bitmask,dipole_id,total_count,staying_time\n";
    char buf[160];
    for (const auto& e : events) {
        if (e.kind == EventKind::Arrival) {
            std::snprintf(buf, sizeof buf, "%.17g,arrival,%u,%llu,%u,\n", e.time, e.cls,
                          static_cast<unsigned long long>(e.dipole_id), e.total_count);
        } else {
            std::snprintf(buf, sizeof buf, "%.17g,departure,%u,%llu,%u,%.17g\n", e.time,
                          e.cls, static_cast<unsigned long long>(e.dipole_id),
                          e.total_count, e.staying_time);
        }
        os << buf;
    }
}

// ---------------------------------------------------------------------------
// NetworkState

NetworkState::NetworkState(const TorusDomain& dom, const PathLoss& pl, double n0, int K)
    : dom_(dom), pl_(pl), n0_(n0), ell_r_(pl(dom.r())),
      class_counts_(std::size_t(1) << K, 0) {
    if (K < 1 || K > kMaxChannels)
        throw std::invalid_argument("NetworkState: K out of range");
}

double NetworkState::departure_rate(std::size_t i, const ClassProfile& profile) const {
    const Dipole& d = dipoles_[i];
    const double rate = popcount_mask(d.cls) * ell_r_ / (n0_ + interference_[i]);
    return rate / profile.L(d.cls);
}

std::size_t NetworkState::insert(const Dipole& d) {
    const double side = dom_.side();
    double own = 0.0;
    for (std::size_t j = 0; j < dipoles_.size(); ++j) {
        const Dipole& o = dipoles_[j];
        const int overlap = popcount_mask(d.cls & o.cls);
        if (overlap == 0) continue;
        // The new transmitter raises everyone else's interference, and every
        // existing transmitter contributes to the newcomer's.
        interference_[j] +=
            overlap * pl_(torus_distance_unchecked(o.receiver, d.transmitter, side));
        own += overlap * pl_(torus_distance_unchecked(d.receiver, o.transmitter, side));
    }
    dipoles_.push_back(d);
    interference_.push_back(own);
    ++class_counts_[d.cls];
    return dipoles_.size() - 1;
}

Dipole NetworkState::remove(std::size_t i) {
    const double side = dom_.side();
    const Dipole gone = dipoles_[i];
    dipoles_[i] = dipoles_.back();
    interference_[i] = interference_.back();
    dipoles_.pop_back();
    interference_.pop_back();
    --class_counts_[gone.cls];
    for (std::size_t j = 0; j < dipoles_.size(); ++j) {
        const Dipole& o = dipoles_[j];
        const int overlap = popcount_mask(gone.cls & o.cls);
        if (overlap == 0) continue;
        interference_[j] -=
            overlap * pl_(torus_distance_unchecked(o.receiver, gone.transmitter, side));
    }
    return gone;
}

double NetworkState::fresh_interference(std::size_t i) const {
    const double side = dom_.side();
    const Dipole& d = dipoles_[i];
    double acc = 0.0;
    for (std::size_t j = 0; j < dipoles_.size(); ++j) {
        if (j == i) continue;
        const Dipole& o = dipoles_[j];
        const int overlap = popcount_mask(d.cls & o.cls);
        if (overlap == 0) continue;
        acc += overlap * pl_(torus_distance_unchecked(d.receiver, o.transmitter, side));
    }
    return acc;
}

double NetworkState::max_cache_drift() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < dipoles_.size(); ++i) {
        const double fresh = fresh_interference(i);
        const double gap = std::fabs(interference_[i] - fresh) / std::max(1.0, fresh);
        worst = std::max(worst, gap);
    }
    return worst;
}

void NetworkState::rebuild_caches() {
    for (std::size_t i = 0; i < dipoles_.size(); ++i)
        interference_[i] = fresh_interference(i);
}

double interference_at(Point x, std::uint32_t cls, std::uint64_t own_id,
                       const NetworkState& state) {
    const double side = state.domain().side();
    const PathLoss& pl = state.pathloss();
    double acc = 0.0;
    for (const Dipole& o : state.dipoles()) {
        if (o.id == own_id) continue;
        const int overlap = popcount_mask(cls & o.cls);
        if (overlap == 0) continue;
        acc += overlap * pl(torus_distance_unchecked(x, o.transmitter, side));
    }
    return acc;
}

double transmission_rate(Point x, std::uint32_t cls, std::uint64_t own_id,
                         const NetworkState& state, double n0) {
    const double signal = popcount_mask(cls) * state.pathloss()(state.domain().r());
    return signal / (n0 + interference_at(x, cls, own_id, state));
}

// ---------------------------------------------------------------------------
// Embedded chain

std::uint32_t sample_class(const ClassProfile& profile, double u) {
    const auto& p = profile.p_by_mask();
    double acc = 0.0;
    std::uint32_t last = 0;
    for (std::uint32_t m = 1; m < p.size(); ++m) {
        if (p[m] == 0.0) continue;
        acc += p[m];
        last = m;
        if (u < acc) return m;
    }
    return last; // u landed in the rounding slack at the top
}

namespace {

Dipole draw_dipole(const TorusDomain& dom, const ClassProfile& profile,
                   SimStreams& streams, double time, std::uint64_t id) {
    Dipole d;
    d.receiver.x = streams.placement.uniform(0.0, dom.side());
    d.receiver.y = streams.placement.uniform(0.0, dom.side());
    d.cls = sample_class(profile, streams.placement.uniform01());
    if (dom.r() > 0.0) {
        const double theta = streams.placement.uniform(0.0, 2.0 * std::numbers::pi);
        d.transmitter = dom.wrap({d.receiver.x + dom.r() * std::cos(theta),
                                  d.receiver.y + dom.r() * std::sin(theta)});
    } else {
        d.transmitter = d.receiver;
    }
    d.arrival_time = time;
    d.id = id;
    return d;
}

} // namespace

std::optional<TrajectoryEvent> step(NetworkState& state, const SimConfig& config,
                                    SimStreams& streams) {
    // Birth clock, then one fresh exponential per dipole (the embedded-chain
    // recipe; memorylessness makes the regeneration exact).
    const double birth_rate = config.lambda * config.dom.area();
    double best_time = streams.arrivals_low.exponential(birth_rate);
    std::ptrdiff_t best = -1; // -1 = arrival
    for (std::size_t i = 0; i < state.size(); ++i) {
        const double t =
            streams.departures.exponential(state.departure_rate(i, config.profile));
        if (t < best_time ||
            (t == best_time && best >= 0 &&
             state.dipole(i).id < state.dipole(std::size_t(best)).id)) {
            best_time = t;
            best = std::ptrdiff_t(i);
        }
    }
    if (!std::isfinite(best_time)) return std::nullopt;

    state.advance_clock(best_time);
    TrajectoryEvent ev;
    ev.time = state.clock();
    if (best < 0) {
        const Dipole d =
            draw_dipole(config.dom, config.profile, streams, state.clock(),
                        state.allocate_id());
        state.insert(d);
        ev.kind = EventKind::Arrival;
        ev.cls = d.cls;
        ev.dipole_id = d.id;
    } else {
        const Dipole gone = state.remove(std::size_t(best));
        ev.kind = EventKind::Departure;
        ev.cls = gone.cls;
        ev.dipole_id = gone.id;
        ev.staying_time = state.clock() - gone.arrival_time;
    }
    ev.total_count = static_cast<std::uint32_t>(state.size());
    return ev;
}

Trajectory simulate(const SimConfig& config) {
    config.validate();
    NetworkState state(config.dom, config.pl, config.n0, config.profile.K());
    SimStreams streams(config.seed);
    Trajectory traj;

    while (traj.events.size() < config.budget.max_events &&
           state.clock() < config.budget.max_time) {
        const auto ev = step(state, config, streams);
        if (!ev) break; // lambda = 0 and empty: nothing can ever happen
        traj.events.push_back(*ev);
        if (ev->kind == EventKind::Arrival) ++traj.arrivals;
        else ++traj.departures;
        traj.max_count = std::max(traj.max_count, ev->total_count);
        traj.final_time = ev->time;
        if (config.audit_interval > 0 && traj.events.size() % config.audit_interval == 0)
            state.rebuild_caches();
        if (state.size() >= config.population_cap) {
            traj.stop = Trajectory::Stop::Explosion;
            break;
        }
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Monotone coupling

namespace {

struct CoupledDipole {
    Dipole d;
    bool in_low = true;
    double itf_low = 0.0;  // interference within the dominated system
    double itf_high = 0.0; // interference within the dominating system
};

class CoupledState {
public:
    CoupledState(const SimConfig& low, const SimConfig& high)
        : side_(low.dom.side()), pl_low_(low.pl), pl_high_(high.pl) {}

    std::vector<CoupledDipole> pool;

    void insert(const Dipole& d, bool in_low) {
        CoupledDipole nd;
        nd.d = d;
        nd.in_low = in_low;
        for (auto& o : pool) {
            const int overlap = popcount_mask(d.cls & o.d.cls);
            if (overlap == 0) continue;
            const double d_or = torus_distance_unchecked(o.d.receiver, d.transmitter, side_);
            const double d_ro = torus_distance_unchecked(d.receiver, o.d.transmitter, side_);
            o.itf_high += overlap * pl_high_(d_or);
            nd.itf_high += overlap * pl_high_(d_ro);
            if (in_low && o.in_low) {
                o.itf_low += overlap * pl_low_(d_or);
                nd.itf_low += overlap * pl_low_(d_ro);
            }
        }
        pool.push_back(nd);
    }

    // Removes dipole i from the dominated system only (it stays in the
    // dominating one).
    void leave_low(std::size_t i) {
        const Dipole& d = pool[i].d;
        pool[i].in_low = false;
        pool[i].itf_low = 0.0;
        for (std::size_t j = 0; j < pool.size(); ++j) {
            if (j == i || !pool[j].in_low) continue;
            const int overlap = popcount_mask(d.cls & pool[j].d.cls);
            if (overlap == 0) continue;
            pool[j].itf_low -= overlap * pl_low_(torus_distance_unchecked(
                                             pool[j].d.receiver, d.transmitter, side_));
        }
    }

    // Removes dipole i from both systems.
    void remove(std::size_t i) {
        const CoupledDipole gone = pool[i];
        pool[i] = pool.back();
        pool.pop_back();
        for (auto& o : pool) {
            const int overlap = popcount_mask(gone.d.cls & o.d.cls);
            if (overlap == 0) continue;
            const double dd =
                torus_distance_unchecked(o.d.receiver, gone.d.transmitter, side_);
            o.itf_high -= overlap * pl_high_(dd);
            if (gone.in_low && o.in_low) o.itf_low -= overlap * pl_low_(dd);
        }
    }

    void rebuild() {
        for (std::size_t i = 0; i < pool.size(); ++i) {
            double low = 0.0, high = 0.0;
            for (std::size_t j = 0; j < pool.size(); ++j) {
                if (j == i) continue;
                const int overlap = popcount_mask(pool[i].d.cls & pool[j].d.cls);
                if (overlap == 0) continue;
                const double dd = torus_distance_unchecked(pool[i].d.receiver,
                                                           pool[j].d.transmitter, side_);
                high += overlap * pl_high_(dd);
                if (pool[i].in_low && pool[j].in_low) low += overlap * pl_low_(dd);
            }
            pool[i].itf_high = high;
            pool[i].itf_low = pool[i].in_low ? low : 0.0;
        }
    }

private:
    double side_;
    PathLoss pl_low_;
    PathLoss pl_high_;
};

void check_comparable(const SimConfig& low, const SimConfig& high) {
    if (low.dom.side() != high.dom.side() || low.dom.r() != high.dom.r())
        throw ConfigError("coupled_simulate: domains differ");
    if (low.n0 != high.n0)
        throw ConfigError("coupled_simulate: noise levels differ");
    if (low.profile.K() != high.profile.K())
        throw ConfigError("coupled_simulate: channel counts differ");
    if (!(low.lambda <= high.lambda))
        throw ConfigError("coupled_simulate: need lambda_low <= lambda_high");
    const auto& pl = low.profile.p_by_mask();
    const auto& ph = high.profile.p_by_mask();
    for (std::uint32_t m = 1; m < pl.size(); ++m) {
        if (pl[m] != ph[m])
            throw ConfigError("coupled_simulate: class distributions differ");
        if (pl[m] > 0.0 && !(low.profile.L(m) <= high.profile.L(m)))
            throw ConfigError("coupled_simulate: need L_low <= L_high componentwise");
    }
    // Path-loss ordering l_low <= l_high, sampled across the domain.
    const double diag = low.dom.side() * std::sqrt(0.5);
    for (int i = 0; i <= 1000; ++i) {
        const double d = diag * i / 1000.0;
        if (low.pl(d) > high.pl(d) + 1e-15)
            throw ConfigError("coupled_simulate: path losses are not ordered");
    }
}

} // namespace

CoupledResult coupled_simulate(const SimConfig& config_low, const SimConfig& config_high,
                               std::uint64_t seed) {
    config_low.validate();
    config_high.validate();
    check_comparable(config_low, config_high);

    SimStreams streams(seed);
    CoupledState state(config_low, config_high);
    CoupledResult result;
    const double area = config_low.dom.area();
    const double ell_r_low = config_low.pl(config_low.dom.r());
    const double ell_r_high = config_high.pl(config_high.dom.r());
    const std::uint64_t max_events =
        std::min(config_low.budget.max_events, config_high.budget.max_events);
    const std::uint64_t cap =
        std::min(config_low.population_cap, config_high.population_cap);
    const std::uint64_t audit =
        std::max(config_low.audit_interval, config_high.audit_interval);

    double clock = 0.0;
    std::uint64_t next_id = 0;
    std::uint32_t count_low = 0, count_high = 0;
    std::vector<double> rates;

    auto log_event = [](Trajectory& t, const TrajectoryEvent& ev) {
        t.events.push_back(ev);
        if (ev.kind == EventKind::Arrival) ++t.arrivals;
        else ++t.departures;
        t.max_count = std::max(t.max_count, ev.total_count);
        t.final_time = ev.time;
    };

    for (std::uint64_t joint_events = 0; joint_events < max_events; ++joint_events) {
        // Exponential race: shared arrivals, top-up arrivals, and one clock
        // per dipole of the dominating system running at the larger of its
        // two departure rates.
        const double t_shared = streams.arrivals_low.exponential(config_low.lambda * area);
        const double t_topup = streams.arrivals_topup.exponential(
            (config_high.lambda - config_low.lambda) * area);

        double best_time = std::min(t_shared, t_topup);
        int best_kind = t_shared <= t_topup ? 0 : 1; // 0 shared, 1 topup, 2 death
        std::size_t best_idx = 0;
        rates.assign(state.pool.size() * 2, 0.0);
        for (std::size_t i = 0; i < state.pool.size(); ++i) {
            const CoupledDipole& cd = state.pool[i];
            const int ch = popcount_mask(cd.d.cls);
            const double r_high = ch * ell_r_high / (config_high.n0 + cd.itf_high) /
                                  config_high.profile.L(cd.d.cls);
            const double r_low = cd.in_low
                                     ? ch * ell_r_low / (config_low.n0 + cd.itf_low) /
                                           config_low.profile.L(cd.d.cls)
                                     : 0.0;
            rates[2 * i] = r_low;
            rates[2 * i + 1] = r_high;
            const double t = streams.departures.exponential(std::max(r_low, r_high));
            if (t < best_time || (t == best_time && best_kind == 2 &&
                                  state.pool[i].d.id < state.pool[best_idx].d.id)) {
                best_time = t;
                best_kind = 2;
                best_idx = i;
            }
        }
        if (!std::isfinite(best_time)) break;
        clock += best_time;

        if (best_kind == 0 || best_kind == 1) {
            const bool shared = best_kind == 0;
            const Dipole d =
                draw_dipole(config_low.dom, config_low.profile, streams, clock, next_id++);
            state.insert(d, shared);
            ++count_high;
            if (shared) ++count_low;
            TrajectoryEvent ev;
            ev.time = clock;
            ev.kind = EventKind::Arrival;
            ev.cls = d.cls;
            ev.dipole_id = d.id;
            ev.total_count = count_high;
            log_event(result.high, ev);
            if (shared) {
                ev.total_count = count_low;
                log_event(result.low, ev);
            }
        } else {
            const CoupledDipole& cd = state.pool[best_idx];
            const double r_low = rates[2 * best_idx];
            const double r_high = rates[2 * best_idx + 1];
            const double m = std::max(r_low, r_high);
            // Shared uniform level: one threshold test decides the departure
            // in each system, the discrete form of embedding both departure
            // processes in a common Poisson measure.
            const double u = streams.departures.uniform01() * m;
            const bool kill_low = cd.in_low && u < r_low;
            const bool kill_high = u < r_high;
            const bool violation = kill_high && cd.in_low && !kill_low;
            if (violation) ++result.inclusion_violations;

            TrajectoryEvent ev;
            ev.time = clock;
            ev.kind = EventKind::Departure;
            ev.cls = cd.d.cls;
            ev.dipole_id = cd.d.id;
            ev.staying_time = clock - cd.d.arrival_time;
            if (kill_high) {
                const bool was_low = cd.in_low;
                state.remove(best_idx);
                --count_high;
                ev.total_count = count_high;
                log_event(result.high, ev);
                // On a violation the dipole leaves both systems so the pool
                // stays well-formed; the count above records the failure.
                if (was_low) {
                    --count_low;
                    ev.total_count = count_low;
                    log_event(result.low, ev);
                }
            } else if (kill_low) {
                state.leave_low(best_idx);
                --count_low;
                ev.total_count = count_low;
                log_event(result.low, ev);
            }
        }

        if (audit > 0 && (joint_events + 1) % audit == 0) state.rebuild();
        if (count_high >= cap) {
            result.low.stop = Trajectory::Stop::Explosion;
            result.high.stop = Trajectory::Stop::Explosion;
            break;
        }
    }
    return result;
}

} // namespace bwp
