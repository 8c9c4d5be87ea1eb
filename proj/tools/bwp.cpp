// Command-line front end: experiment configs in, CSV/JSON artifacts out.
// Subcommands cover the closed-form rates, the event-driven simulator, the
// bounding-chain and fluid models, the density heuristics, seeded parallel
// sweeps, and the figure-style presets.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bwp/config.hpp"
#include "bwp/errors.hpp"
#include "bwp/fluid.hpp"
#include "bwp/heuristics.hpp"
#include "bwp/lattice.hpp"
#include "bwp/sbd_sim.hpp"
#include "bwp/stability.hpp"
#include "bwp/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace bwp;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed_override = 0;
    bool has_seed_override = false;
    double lambda_rel_override = 0.0;
    bool has_lambda_rel = false;
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
};

void add_common(CLI::App* cmd, GlobalOpts& g, bool need_config = true) {
    auto* opt = cmd->add_option("--config", g.config_path, "experiment config (JSON)");
    if (need_config) opt->required();
    cmd->add_option("--out", g.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", g.seed_override, "seed override (single run)")
        ->each([&g](const std::string&) { g.has_seed_override = true; });
    cmd->add_option("--lambda-rel", g.lambda_rel_override,
                    "override lambda as a multiple of lambda_c")
        ->each([&g](const std::string&) { g.has_lambda_rel = true; });
    cmd->add_option("--jobs", g.jobs, "worker threads for sweeps");
}

json builtin_section6() {
    return json{
        {"scenario", "section6"},
        {"domain", {{"side", 10.0}, {"r", 0.0}}},
        {"pathloss", {{"family", "powerlaw"}, {"beta", 4.0}}},
        {"profile",
         {{"K", 2},
          {"symmetric", {{"p", {0.8, 0.2}}, {"L", {1.0, 2.0}}}}}},
        {"noise", 1.0},
        {"lambda", {{"relative", 0.9}}},
        {"seeds", {1, 2, 3, 4, 5}},
        {"budget", {{"events", 100000}}},
    };
}

ExperimentConfig resolve_config(GlobalOpts& g, bool allow_builtin = false) {
    ExperimentConfig cfg = g.config_path.empty() && allow_builtin
                               ? config_from_json(builtin_section6())
                               : load_config(g.config_path);
    if (!g.out_dir.empty()) cfg.out_dir = g.out_dir;
    if (g.has_seed_override) cfg.seeds = {g.seed_override};
    if (g.has_lambda_rel) {
        if (!cfg.profile.symmetric())
            throw ConfigError("--lambda-rel requires a symmetric profile");
        cfg.lambda = {LambdaSpec::Kind::Relative, g.lambda_rel_override};
    }
    return cfg;
}

class Manifest {
public:
    Manifest(const ExperimentConfig& cfg, std::string command)
        : start_(std::chrono::steady_clock::now()) {
        j_["schema"] = "bwp-run-v1";
        j_["command"] = std::move(command);
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(config_hash(config_to_json(cfg))));
        j_["config_hash"] = buf;
        j_["git"] = git_describe();
        j_["seeds"] = cfg.seeds;
    }

    void add_output(const std::string& name) { outputs_.push_back(name); }
    void set(const std::string& key, const json& value) { j_[key] = value; }

    void write(const fs::path& dir) {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        j_["wall_time_s"] = secs;
        j_["outputs"] = outputs_;
        std::ofstream out(dir / "manifest.json");
        out << j_.dump(2) << "\n";
    }

private:
    std::chrono::steady_clock::time_point start_;
    json j_;
    std::vector<std::string> outputs_;
};

fs::path ensure_out(const ExperimentConfig& cfg) {
    fs::path dir(cfg.out_dir);
    fs::create_directories(dir);
    return dir;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const unsigned n = std::min<std::size_t>(jobs, count);
    for (unsigned t = 0; t < n; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

json verdict_to_json(const StabilityVerdict& v) {
    json per_class = json::array();
    for (const auto& c : v.per_class)
        per_class.push_back({{"class", c.cls},
                             {"slope", c.slope},
                             {"ci", {c.ci_low, c.ci_high}},
                             {"departures", c.departures}});
    return json{{"verdict", StabilityVerdict::name(v.verdict)},
                {"slope", v.slope},
                {"ci", {v.ci_low, v.ci_high}},
                {"per_class", per_class}};
}

// ---------------------------------------------------------------------------
// Subcommand bodies

int cmd_lambda_c(GlobalOpts& g) {
    ExperimentConfig cfg = resolve_config(g, true);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "lambda-c");

    const CriticalRate crit = critical_rate(cfg.profile, cfg.dom, cfg.pl, cfg.quad);
    const LambdaBounds bounds = lambda_bounds(cfg.profile, cfg.dom, cfg.pl, cfg.quad);
    std::printf("scenario:     %s\n", cfg.scenario.c_str());
    std::printf("load_factor:  %.17g\n", crit.load);
    std::printf("ell_r:        %.17g\n", crit.ell_r);
    std::printf("ell_D:        %.17g\n", crit.ell_D);
    std::printf("lambda_c:     %.17g\n", crit.value);
    std::printf("bounds:       [%.17g, %.17g]\n", bounds.lower, bounds.upper);
    if (!crit.symmetric)
        std::printf("warning: profile is not symmetric; lambda_c formula is outside "
                    "its proven regime\n");

    json eps_table = json::array();
    std::printf("%8s %22s %22s\n", "eps", "lambda_bar_eps", "lambda_underbar_eps");
    for (int div : {5, 10, 20, 40}) {
        const double eps = cfg.dom.side() / div;
        Tessellation tess(cfg.dom, eps);
        const ThresholdRate bar = stability_threshold(tess, cfg.pl, cfg.profile);
        const ThresholdRate ubar = transience_threshold(tess, cfg.pl, cfg.profile);
        std::printf("%8g %22.12g %22.12g\n", eps, bar.value, ubar.value);
        eps_table.push_back({{"eps", eps},
                             {"lambda_bar", bar.value},
                             {"lambda_underbar", ubar.value}});
    }

    json out{{"load_factor", crit.load},
             {"ell_D", crit.ell_D},
             {"ell_r", crit.ell_r},
             {"lambda_c", crit.value},
             {"symmetric", crit.symmetric},
             {"bounds", {bounds.lower, bounds.upper}},
             {"eps_table", eps_table}};
    std::ofstream(dir / "lambda_c.json") << out.dump(2) << "\n";
    manifest.add_output("lambda_c.json");
    manifest.write(dir);
    return 0;
}

int cmd_simulate(GlobalOpts& g) {
    ExperimentConfig cfg = resolve_config(g);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "simulate");
    const double lambda = cfg.resolve_lambda();
    manifest.set("lambda", lambda);

    std::mutex io;
    std::vector<std::string> outputs(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), g.jobs, [&](std::size_t i) {
        const std::uint64_t seed = cfg.seeds[i];
        const Trajectory traj = simulate(cfg.sim_config(seed, lambda));
        const StabilityVerdict v = classify_stability(traj, cfg.stability);

        char name[64];
        std::snprintf(name, sizeof name, "trajectory_seed%llu.csv",
                      static_cast<unsigned long long>(seed));
        std::ofstream csv(dir / name);
        traj.write_csv(csv);
        outputs[i] = name;

        char vname[64];
        std::snprintf(vname, sizeof vname, "verdict_seed%llu.json",
                      static_cast<unsigned long long>(seed));
        json vj = verdict_to_json(v);
        vj["lambda"] = lambda;
        vj["seed"] = seed;
        vj["events"] = traj.events.size();
        vj["max_count"] = traj.max_count;
        vj["stopped_on_explosion"] = traj.stop == Trajectory::Stop::Explosion;
        std::ofstream(dir / vname) << vj.dump(2) << "\n";

        std::lock_guard<std::mutex> lk(io);
        std::printf("seed %llu: %zu events, final t=%.6g, max_count=%u, verdict=%s\n",
                    static_cast<unsigned long long>(seed), traj.events.size(),
                    traj.final_time, traj.max_count, StabilityVerdict::name(v.verdict));
    });
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        manifest.add_output(outputs[i]);
        char vname[64];
        std::snprintf(vname, sizeof vname, "verdict_seed%llu.json",
                      static_cast<unsigned long long>(cfg.seeds[i]));
        manifest.add_output(vname);
    }
    manifest.write(dir);
    return 0;
}

int cmd_lattice_sim(GlobalOpts& g, const std::string& mode) {
    ExperimentConfig cfg = resolve_config(g);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "lattice-sim");
    const double lambda = cfg.resolve_lambda();
    manifest.set("lambda", lambda);
    manifest.set("mode", mode);
    manifest.set("epsilon", cfg.epsilon);

    Tessellation tess(cfg.dom, cfg.epsilon);
    DiscretePathLoss dpl(tess, cfg.pl,
                         mode == "lower" ? KernelMode::Lower : KernelMode::Upper);

    for (std::uint64_t seed : cfg.seeds) {
        LatticeSimConfig lc{lambda, cfg.n0, seed, cfg.budget, cfg.population_cap};
        const LatticeTrajectory traj = lattice_simulate(tess, dpl, cfg.profile, lc);
        char name[64];
        std::snprintf(name, sizeof name, "lattice_%s_seed%llu.csv", mode.c_str(),
                      static_cast<unsigned long long>(seed));
        std::ofstream csv(dir / name);
        traj.write_csv(csv);
        manifest.add_output(name);
        std::printf("seed %llu: %zu events, final t=%.6g, max_count=%u%s\n",
                    static_cast<unsigned long long>(seed), traj.events.size(),
                    traj.final_time, traj.max_count,
                    traj.stop == LatticeTrajectory::Stop::Explosion ? " (cap hit)" : "");
    }
    manifest.write(dir);
    return 0;
}

int cmd_fluid(GlobalOpts& g, double scale, double perturb, double T) {
    ExperimentConfig cfg = resolve_config(g);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "fluid");
    const double lambda = cfg.resolve_lambda();
    manifest.set("lambda", lambda);

    Tessellation tess(cfg.dom, cfg.epsilon);
    DiscretePathLoss dpl(tess, cfg.pl, KernelMode::Upper);
    const WitnessCheck wc = stability_witness_check(tess, dpl, cfg.profile, lambda);
    std::printf("lambda_bar_eps = %.12g, witness drift-balance %s\n", wc.lambda_bar,
                wc.certified ? "certified" : "not certified");

    FluidState x0;
    x0.x = wc.witness;
    for (std::size_t i = 0; i < x0.x.size(); ++i) {
        x0.x[i] *= scale;
        if (perturb != 0.0) x0.x[i] *= 1.0 + perturb * ((i % 2 == 0) ? 1.0 : -1.0);
        if (x0.x[i] <= 0.0) x0.x[i] = 1e-6; // zero-probability classes still need mass
    }
    const FluidTrajectory traj =
        integrate_fluid(x0, T, tess, dpl, cfg.profile, lambda, {}, T / 200.0);
    std::ofstream csv(dir / "fluid.csv");
    traj.write_csv(csv, tess, cfg.profile);
    manifest.add_output("fluid.csv");
    std::printf("terminal mass %.12g at t=%.6g%s%s\n",
                traj.samples.back().total_mass, traj.terminal.time,
                traj.drained ? " (drained)" : "", traj.clipped ? " (clipped)" : "");
    manifest.write(dir);
    return 0;
}

int cmd_heuristic(GlobalOpts& g, const std::string& which) {
    ExperimentConfig cfg = resolve_config(g);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "heuristic " + which);
    const double lambda = cfg.resolve_lambda();
    manifest.set("lambda", lambda);

    json out{{"lambda", lambda}, {"kind", which}};
    if (which == "poisson") {
        const PoissonSolution sol =
            poisson_fixed_point(cfg.profile, cfg.dom, cfg.pl, lambda, cfg.n0, cfg.solver);
        json mu = json::object();
        for (std::uint32_t m = 1; m <= cfg.profile.num_classes(); ++m) {
            char key[16];
            std::snprintf(key, sizeof key, "%u", m);
            mu[key] = sol.mu[m];
            std::printf("mu[%u] = %.12g\n", m, sol.mu[m]);
        }
        out["mu"] = mu;
        out["residual"] = sol.residual;
        out["iterations"] = sol.iterations;
        out["converged"] = sol.converged;
        std::printf("residual %.3g after %d iterations (%s)\n", sol.residual,
                    sol.iterations, sol.converged ? "converged" : "NOT converged");
        if (!sol.converged) {
            std::ofstream(dir / "heuristic.json") << out.dump(2) << "\n";
            manifest.add_output("heuristic.json");
            manifest.write(dir);
            return 3;
        }
    } else {
        const CavitySolution sol =
            cavity_fixed_point(cfg.profile, cfg.dom, cfg.pl, lambda, cfg.n0, cfg.solver);
        json mu = json::object(), I = json::object();
        for (std::uint32_t m = 1; m <= cfg.profile.num_classes(); ++m) {
            char key[16];
            std::snprintf(key, sizeof key, "%u", m);
            mu[key] = sol.mu[m];
            I[key] = sol.I[m];
            std::printf("mu[%u] = %.12g   I[%u] = %.12g\n", m, sol.mu[m], m, sol.I[m]);
        }
        out["mu"] = mu;
        out["I"] = I;
        out["residual"] = sol.residual;
        out["iterations"] = sol.iterations;
        out["converged"] = sol.converged;
        out["diverged"] = sol.diverged;
        std::printf("residual %.3g after %d iterations (%s)\n", sol.residual,
                    sol.iterations, sol.converged ? "converged" : "NOT converged");
    }
    std::ofstream(dir / "heuristic.json") << out.dump(2) << "\n";
    manifest.add_output("heuristic.json");
    manifest.write(dir);
    return 0;
}

int cmd_lambda_p(GlobalOpts& g) {
    ExperimentConfig cfg = resolve_config(g, true);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "lambda-p");

    const CriticalRate crit = critical_rate(cfg.profile, cfg.dom, cfg.pl, cfg.quad);
    const PoissonCriticalRate lp =
        poisson_critical_rate(cfg.profile, cfg.dom, cfg.pl, cfg.n0, cfg.solver);
    std::printf("lambda_c = %.12g\n", crit.value);
    std::printf("lambda_P = %.12g  (bracket %.3g, %d probes)\n", lp.lambda_p,
                lp.bracket_width, lp.probes);
    std::printf("ratio    = %.6f\n", lp.lambda_p / crit.value);

    json out{{"lambda_c", crit.value},
             {"lambda_p", lp.lambda_p},
             {"bracket_width", lp.bracket_width},
             {"probes", lp.probes},
             {"ratio", lp.lambda_p / crit.value}};
    std::ofstream(dir / "lambda_p.json") << out.dump(2) << "\n";
    manifest.add_output("lambda_p.json");
    manifest.write(dir);
    return 0;
}

int cmd_sweep(GlobalOpts& g, std::vector<double> lambda_rels) {
    ExperimentConfig cfg = resolve_config(g);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "sweep");
    if (lambda_rels.empty()) lambda_rels = {0.9, 1.1};
    if (!cfg.profile.symmetric())
        throw ConfigError("sweep uses relative rates and needs a symmetric profile");
    const double lambda_c = critical_rate(cfg.profile, cfg.dom, cfg.pl, cfg.quad).value;

    struct Row {
        double rel;
        double lambda;
        std::uint64_t seed;
        StabilityVerdict verdict;
        std::size_t events;
        std::uint32_t max_count;
    };
    std::vector<Row> rows(lambda_rels.size() * cfg.seeds.size());
    parallel_for(rows.size(), g.jobs, [&](std::size_t idx) {
        const std::size_t li = idx / cfg.seeds.size();
        const std::size_t si = idx % cfg.seeds.size();
        Row& row = rows[idx];
        row.rel = lambda_rels[li];
        row.lambda = row.rel * lambda_c;
        row.seed = cfg.seeds[si];
        const Trajectory traj = simulate(cfg.sim_config(row.seed, row.lambda));
        row.verdict = classify_stability(traj, cfg.stability);
        row.events = traj.events.size();
        row.max_count = traj.max_count;
    });

    std::ofstream csv(dir / "sweep_verdicts.csv");
    csv << "lambda_rel,lambda,seed,verdict,slope,ci_low,ci_high,events,max_count\n";
    char buf[256];
    for (const Row& r : rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%llu,%s,%.17g,%.17g,%.17g,%zu,%u\n",
                      r.rel, r.lambda, static_cast<unsigned long long>(r.seed),
                      StabilityVerdict::name(r.verdict.verdict), r.verdict.slope,
                      r.verdict.ci_low, r.verdict.ci_high, r.events, r.max_count);
        csv << buf;
        std::printf("lambda/lambda_c=%.3g seed=%llu -> %s\n", r.rel,
                    static_cast<unsigned long long>(r.seed),
                    StabilityVerdict::name(r.verdict.verdict));
    }
    manifest.set("lambda_c", lambda_c);
    manifest.add_output("sweep_verdicts.csv");
    manifest.write(dir);
    return 0;
}

// Figure-style presets, desk scale.
int cmd_preset(GlobalOpts& g, const std::string& which) {
    ExperimentConfig cfg = resolve_config(g, true);
    const fs::path dir = ensure_out(cfg);
    Manifest manifest(cfg, "preset " + which);
    const double lambda_c = critical_rate(cfg.profile, cfg.dom, cfg.pl, cfg.quad).value;
    manifest.set("lambda_c", lambda_c);

    if (which == "fig-pop") {
        for (double rel : {0.95, 1.05}) {
            const Trajectory traj = simulate(cfg.sim_config(cfg.seeds[0], rel * lambda_c));
            char name[64];
            std::snprintf(name, sizeof name, "fig_pop_rel%.2f.csv", rel);
            std::ofstream csv(dir / name);
            csv << "time,total_count\n";
            char buf[64];
            for (const auto& e : traj.events) {
                std::snprintf(buf, sizeof buf, "%.17g,%u\n", e.time, e.total_count);
                csv << buf;
            }
            manifest.add_output(name);
            std::printf("%s: %zu events, max_count=%u\n", name, traj.events.size(),
                        traj.max_count);
        }
    } else if (which == "fig-delay") {
        for (double rel : {0.9, 1.1}) {
            const Trajectory traj = simulate(cfg.sim_config(cfg.seeds[0], rel * lambda_c));
            const auto series = staying_times(traj);
            char name[64];
            std::snprintf(name, sizeof name, "fig_delay_rel%.2f.csv", rel);
            std::ofstream csv(dir / name);
            csv << "time,class_bitmask,running_mean_staying_time\n";
            char buf[96];
            for (const auto& [cls, pts] : series)
                for (const auto& [t, w] : pts) {
                    std::snprintf(buf, sizeof buf, "%.17g,%u,%.17g\n", t, cls, w);
                    csv << buf;
                }
            manifest.add_output(name);
            std::printf("%s: %zu departures\n", name, traj.departures);
        }
    } else if (which == "fig-density") {
        std::ofstream csv(dir / "fig_density.csv");
        csv << "lambda_rel,mu1_sim,mu1_se,mu1_poisson,mu1_cavity,poisson_converged,"
               "cavity_converged\n";
        PoissonKernel kernel(cfg.dom, cfg.pl, cfg.profile.K(), cfg.n0, cfg.solver);
        for (int i = 1; i <= 9; ++i) {
            const double rel = 0.1 * i;
            const double lambda = rel * lambda_c;
            // simulation estimate, pooled across seeds
            double mean = 0.0, var = 0.0;
            std::vector<double> vals(cfg.seeds.size());
            parallel_for(cfg.seeds.size(), g.jobs, [&](std::size_t s) {
                const Trajectory traj = simulate(cfg.sim_config(cfg.seeds[s], lambda));
                const double span = traj.final_time;
                vals[s] = ergodic_density(traj, cfg.dom.area(), 1, 0.2 * span, 0.8 * span,
                                          1.0, 20)
                              .density;
            });
            for (double v : vals) mean += v;
            mean /= double(vals.size());
            for (double v : vals) var += (v - mean) * (v - mean);
            const double se = vals.size() > 1
                                  ? std::sqrt(var / (vals.size() - 1) / vals.size())
                                  : 0.0;

            const PoissonSolution ps = poisson_fixed_point(cfg.profile, cfg.dom, cfg.pl,
                                                           lambda, cfg.n0, cfg.solver,
                                                           &kernel);
            const CavitySolution cs =
                cavity_fixed_point(cfg.profile, cfg.dom, cfg.pl, lambda, cfg.n0, cfg.solver);
            char buf[200];
            std::snprintf(buf, sizeof buf, "%.2f,%.17g,%.17g,%.17g,%.17g,%d,%d\n", rel,
                          mean, se, ps.mu[1], cs.mu[1], ps.converged ? 1 : 0,
                          cs.converged ? 1 : 0);
            csv << buf;
            std::printf("rel=%.1f mu1_sim=%.6g mu1_poisson=%.6g mu1_cavity=%.6g\n", rel,
                        mean, ps.mu[1], cs.mu[1]);
        }
        manifest.add_output("fig_density.csv");
    } else if (which == "fig-lambda") {
        std::ofstream csv(dir / "fig_lambda.csv");
        csv << "p12,lambda_c,lambda_p\n";
        for (int i = 1; i <= 9; ++i) {
            const double p12 = 0.1 * i;
            const SymmetricProfile sym(2, {1.0 - p12, p12}, {1.0, 2.0});
            const ClassProfile profile = expand_symmetric(sym);
            const double lc = critical_rate(profile, cfg.dom, cfg.pl, cfg.quad).value;
            const PoissonCriticalRate lp =
                poisson_critical_rate(profile, cfg.dom, cfg.pl, cfg.n0, cfg.solver);
            char buf[120];
            std::snprintf(buf, sizeof buf, "%.1f,%.17g,%.17g\n", p12, lc, lp.lambda_p);
            csv << buf;
            std::printf("p12=%.1f lambda_c=%.6g lambda_P=%.6g ratio=%.4f\n", p12, lc,
                        lp.lambda_p, lp.lambda_p / lc);
        }
        manifest.add_output("fig_lambda.csv");
    } else {
        throw ConfigError("unknown preset: " + which);
    }
    manifest.write(dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"multiclass spatial birth-death network toolkit"};
    app.require_subcommand(1);
    GlobalOpts g;

    auto* sc_lambda_c = app.add_subcommand("lambda-c", "closed-form critical rate table");
    add_common(sc_lambda_c, g, false);

    auto* sc_sim = app.add_subcommand("simulate", "event-driven simulation per seed");
    add_common(sc_sim, g);

    std::string lattice_mode = "upper";
    auto* sc_lat = app.add_subcommand("lattice-sim", "bounding-chain simulation");
    add_common(sc_lat, g);
    sc_lat->add_option("--mode", lattice_mode, "upper|lower")
        ->check(CLI::IsMember({"upper", "lower"}));

    double fluid_scale = 1.0, fluid_perturb = 0.0, fluid_T = 100.0;
    auto* sc_fluid = app.add_subcommand("fluid", "fluid ODE from the witness state");
    add_common(sc_fluid, g);
    sc_fluid->add_option("--scale", fluid_scale, "witness multiplier for x0");
    sc_fluid->add_option("--perturb", fluid_perturb, "alternating relative perturbation");
    sc_fluid->add_option("--T", fluid_T, "integration horizon");

    auto* sc_heur = app.add_subcommand("heuristic", "density fixed points");
    std::string heur_kind;
    sc_heur->add_option("kind", heur_kind, "poisson|cavity")
        ->required()
        ->check(CLI::IsMember({"poisson", "cavity"}));
    add_common(sc_heur, g);

    auto* sc_lp = app.add_subcommand("lambda-p", "Poisson-heuristic critical rate");
    add_common(sc_lp, g, false);

    std::vector<double> sweep_rels;
    auto* sc_sweep = app.add_subcommand("sweep", "lambda grid x seeds, parallel");
    add_common(sc_sweep, g);
    sc_sweep->add_option("--lambdas", sweep_rels, "relative rates (default 0.9 1.1)");

    auto* sc_preset = app.add_subcommand("preset", "figure-style reproductions");
    std::string preset_kind;
    sc_preset->add_option("kind", preset_kind, "fig-pop|fig-delay|fig-density|fig-lambda")
        ->required()
        ->check(CLI::IsMember({"fig-pop", "fig-delay", "fig-density", "fig-lambda"}));
    add_common(sc_preset, g, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (sc_lambda_c->parsed()) return cmd_lambda_c(g);
        if (sc_sim->parsed()) return cmd_simulate(g);
        if (sc_lat->parsed()) return cmd_lattice_sim(g, lattice_mode);
        if (sc_fluid->parsed()) return cmd_fluid(g, fluid_scale, fluid_perturb, fluid_T);
        if (sc_heur->parsed()) return cmd_heuristic(g, heur_kind);
        if (sc_lp->parsed()) return cmd_lambda_p(g);
        if (sc_sweep->parsed()) return cmd_sweep(g, sweep_rels);
        if (sc_preset->parsed()) return cmd_preset(g, preset_kind);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalFailure& e) {
        std::cerr << "numerical failure: " << e.what()
                  << " (partial=" << e.partial() << ")\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
