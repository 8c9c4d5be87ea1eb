#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "bwp/classes.hpp"
#include "bwp/geometry.hpp"
#include "bwp/pathloss.hpp"
#include "bwp/rng.hpp"

namespace bwp {

/// One receiver-transmitter pair. The receiver sits uniformly in the domain,
/// the transmitter on the circle of radius r around it (coinciding with the
/// receiver for r = 0).
struct Dipole {
    Point receiver;
    Point transmitter;
    std::uint32_t cls = 0;
    double arrival_time = 0.0;
    std::uint64_t id = 0;
};

enum class EventKind : std::uint8_t { Arrival, Departure };

struct TrajectoryEvent {
    double time = 0.0;
    EventKind kind = EventKind::Arrival;
    std::uint32_t cls = 0;
    std::uint64_t dipole_id = 0;
    std::uint32_t total_count = 0; // population after the event
    double staying_time = std::numeric_limits<double>::quiet_NaN(); // departures only
};

/// Complete event log of one run. Per-class population paths are recoverable
/// by replay: each event moves exactly one class count by one.
struct Trajectory {
    enum class Stop { BudgetExhausted, Explosion };

    std::vector<TrajectoryEvent> events;
    Stop stop = Stop::BudgetExhausted;
    double final_time = 0.0;
    std::uint32_t max_count = 0;
    std::uint64_t arrivals = 0;
    std::uint64_t departures = 0;

    /// CSV columns: time,kind,class_bitmask,dipole_id,total_count,
    /// staying_time_if_departure (blank on arrivals).
    void write_csv(std::ostream& os) const;
};

struct Budget {
    std::uint64_t max_events = 100000;
    double max_time = std::numeric_limits<double>::infinity();
};

struct SimConfig {
    TorusDomain dom;
    PathLoss pl;
    ClassProfile profile;
    double lambda = 0.0;       // arrivals per unit area per unit time
    double n0 = 1.0;           // thermal noise > 0
    std::uint64_t seed = 1;
    Budget budget;
    std::uint64_t population_cap = 1000000;
    std::uint64_t audit_interval = 0; // 0 = off; tests use it to bound cache drift

    void validate() const;
};

/// Configuration of dipoles currently in the network, with the shot-noise
/// interference of every receiver cached and maintained incrementally in
/// O(N) per arrival/departure.
class NetworkState {
public:
    NetworkState(const TorusDomain& dom, const PathLoss& pl, double n0, int K);

    const TorusDomain& domain() const { return dom_; }
    const PathLoss& pathloss() const { return pl_; }
    double n0() const { return n0_; }
    double clock() const { return clock_; }
    void advance_clock(double dt) { clock_ += dt; }

    std::size_t size() const { return dipoles_.size(); }
    const std::vector<Dipole>& dipoles() const { return dipoles_; }
    const Dipole& dipole(std::size_t i) const { return dipoles_[i]; }
    double cached_interference(std::size_t i) const { return interference_[i]; }
    std::uint32_t class_count(std::uint32_t mask) const { return class_counts_[mask]; }
    const std::vector<std::uint32_t>& class_counts() const { return class_counts_; }

    /// Departure rate of dipole i in the current configuration:
    /// R(x_i) / L_{C_i}.
    double departure_rate(std::size_t i, const ClassProfile& profile) const;

    std::size_t insert(const Dipole& d);
    Dipole remove(std::size_t i); // swap-pop; indices above i shift

    /// Next unused dipole id (increments).
    std::uint64_t allocate_id() { return next_id_++; }

    /// Largest absolute gap between a cached interference value and a fresh
    /// recomputation, relative to max(1, value).
    double max_cache_drift() const;
    /// Re-derives every cache from scratch.
    void rebuild_caches();

private:
    double fresh_interference(std::size_t i) const;

    TorusDomain dom_;
    PathLoss pl_;
    double n0_;
    double ell_r_;
    double clock_ = 0.0;
    std::uint64_t next_id_ = 0;
    std::vector<Dipole> dipoles_;
    std::vector<double> interference_;
    std::vector<std::uint32_t> class_counts_;
};

/// Shot-noise interference of Eq.-style form at a receiver location: sum of
/// |C ∩ C_z| l(d(x, z)) over transmitters z of all dipoles except own_id.
/// Computed from scratch; the simulator's cached values must agree with this.
double interference_at(Point x, std::uint32_t cls, std::uint64_t own_id,
                       const NetworkState& state);

/// |C| l(r) / (N0 + I(x)); the linearized low-SINR rate with unit prefactor.
double transmission_rate(Point x, std::uint32_t cls, std::uint64_t own_id,
                         const NetworkState& state, double n0);

/// Named substreams of one simulation run.
struct SimStreams {
    RandomStream arrivals_low;
    RandomStream arrivals_topup;
    RandomStream departures;
    RandomStream placement;

    explicit SimStreams(std::uint64_t seed)
        : arrivals_low(seed, "arrivals-low"),
          arrivals_topup(seed, "arrivals-topup"),
          departures(seed, "departures"),
          placement(seed, "placement") {}
};

/// Samples a class from the profile's arrival distribution using one
/// uniform draw, scanning masks in increasing order.
std::uint32_t sample_class(const ClassProfile& profile, double u);

/// One step of the embedded chain: regenerates the birth clock and all
/// departure clocks, applies the winning event, advances the clock, and
/// updates the interference caches incrementally. Returns nothing when no
/// event can occur (empty state at lambda = 0).
std::optional<TrajectoryEvent> step(NetworkState& state, const SimConfig& config,
                                    SimStreams& streams);

/// Runs the embedded chain from the empty state until the budget or the
/// population cap is hit. Deterministic given the seed.
Trajectory simulate(const SimConfig& config);

/// Pathwise monotone coupling of an ordered pair of systems on shared
/// randomness: common arrival stream plus an independent top-up for the
/// dominating system, and a shared uniform level per departure event so that
/// a departure from the dominating system forces the same departure from the
/// dominated one whenever the rate inequality holds. Reports every observed
/// inclusion failure (the domination theorem says there must be none).
struct CoupledResult {
    Trajectory low;
    Trajectory high;
    std::uint64_t inclusion_violations = 0;
};

CoupledResult coupled_simulate(const SimConfig& config_low, const SimConfig& config_high,
                               std::uint64_t seed);

} // namespace bwp
