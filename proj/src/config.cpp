#include "bwp/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "bwp/errors.hpp"
#include "bwp/stability.hpp"

namespace bwp {

using nlohmann::json;

namespace {

PathLoss pathloss_from_json(const json& j) {
    const std::string family = j.value("family", "powerlaw");
    if (family == "powerlaw") return PathLoss::power_law(j.value("beta", 4.0));
    if (family == "tabulated") {
        std::vector<std::pair<double, double>> samples;
        for (const auto& s : j.at("samples"))
            samples.emplace_back(s.at(0).get<double>(), s.at(1).get<double>());
        return PathLoss::tabulated(std::move(samples));
    }
    throw ConfigError("pathloss.family must be powerlaw or tabulated");
}

json pathloss_to_json(const PathLoss& pl) {
    json j;
    if (pl.family() == PathLoss::Family::PowerLaw) {
        j["family"] = "powerlaw";
        j["beta"] = pl.power_law_exponent();
    } else {
        j["family"] = "tabulated";
        json samples = json::array();
        for (const auto& [d, g] : pl.samples()) samples.push_back({d, g});
        j["samples"] = samples;
    }
    return j;
}

ClassProfile profile_from_json(const json& j) {
    const int K = j.at("K").get<int>();
    if (j.contains("symmetric")) {
        const auto& s = j.at("symmetric");
        return expand_symmetric(SymmetricProfile(K, s.at("p").get<std::vector<double>>(),
                                                 s.at("L").get<std::vector<double>>()));
    }
    std::vector<ClassProfile::Entry> entries;
    for (const auto& c : j.at("classes")) {
        std::uint32_t mask = 0;
        for (int band : c.at("subset").get<std::vector<int>>()) {
            if (band < 1 || band > K) throw ConfigError("profile: band outside 1..K");
            mask |= 1u << (band - 1);
        }
        entries.push_back({mask, c.at("p").get<double>(), c.at("L").get<double>()});
    }
    return ClassProfile(K, entries);
}

json profile_to_json(const ClassProfile& profile) {
    json j;
    j["K"] = profile.K();
    if (const auto& src = profile.symmetric_source()) {
        json p = json::array(), L = json::array();
        for (int c = 1; c <= src->K; ++c) {
            p.push_back(src->p[c]);
            L.push_back(src->L[c]);
        }
        j["symmetric"] = {{"p", p}, {"L", L}};
        return j;
    }
    json classes = json::array();
    for (std::uint32_t m = 1; m <= profile.num_classes(); ++m) {
        if (profile.p(m) == 0.0) continue;
        std::vector<int> subset;
        for (int b = 0; b < profile.K(); ++b)
            if (m & (1u << b)) subset.push_back(b + 1);
        classes.push_back({{"subset", subset}, {"p", profile.p(m)}, {"L", profile.L(m)}});
    }
    j["classes"] = classes;
    return j;
}

} // namespace

ExperimentConfig config_from_json(const json& j) {
    try {
        ExperimentConfig c;
        c.scenario = j.value("scenario", "unnamed");
        const auto& dj = j.at("domain");
        c.dom = TorusDomain(dj.at("side").get<double>(), dj.value("r", 0.0));
        c.pl = pathloss_from_json(j.at("pathloss"));
        c.profile = profile_from_json(j.at("profile"));
        c.n0 = j.value("noise", 1.0);
        if (!(c.n0 > 0.0)) throw ConfigError("noise must be > 0");

        const auto& lj = j.at("lambda");
        if (lj.contains("absolute")) {
            c.lambda = {LambdaSpec::Kind::Absolute, lj.at("absolute").get<double>()};
        } else if (lj.contains("relative")) {
            c.lambda = {LambdaSpec::Kind::Relative, lj.at("relative").get<double>()};
            if (!c.profile.symmetric())
                throw ConfigError("lambda.relative requires a symmetric profile");
        } else {
            throw ConfigError("lambda needs either .absolute or .relative");
        }
        if (!(c.lambda.value >= 0.0)) throw ConfigError("lambda must be >= 0");

        c.seeds = j.value("seeds", std::vector<std::uint64_t>{1});
        if (c.seeds.empty()) throw ConfigError("seeds must be non-empty");
        if (j.contains("budget")) {
            const auto& bj = j.at("budget");
            c.budget.max_events = bj.value("events", std::uint64_t(100000));
            if (bj.contains("time")) c.budget.max_time = bj.at("time").get<double>();
        }
        c.population_cap = j.value("population_cap", std::uint64_t(1000000));
        c.epsilon = j.value("epsilon", c.dom.side() / 20.0);
        if (j.contains("quadrature")) {
            const auto& q = j.at("quadrature");
            c.quad.abs_tol = q.value("abs_tol", c.quad.abs_tol);
            c.quad.rel_tol = q.value("rel_tol", c.quad.rel_tol);
            c.quad.max_refinement = q.value("max_refinement", c.quad.max_refinement);
            c.quad.validate();
            c.solver.quad = c.quad;
        }
        if (j.contains("solver")) {
            const auto& s = j.at("solver");
            c.solver.tol = s.value("tol", c.solver.tol);
            c.solver.residual_tol = s.value("residual_tol", c.solver.residual_tol);
            c.solver.max_iterations = s.value("max_iterations", c.solver.max_iterations);
            c.solver.damping = s.value("damping", c.solver.damping);
            c.solver.divergence_factor =
                s.value("divergence_factor", c.solver.divergence_factor);
            c.solver.gain_grid = s.value("gain_grid", c.solver.gain_grid);
        }
        if (j.contains("stability")) {
            const auto& s = j.at("stability");
            c.stability.batches = s.value("batches", c.stability.batches);
            c.stability.confidence = s.value("confidence", c.stability.confidence);
            c.stability.stable_max_count =
                s.value("stable_max_count", c.stability.stable_max_count);
        }
        c.out_dir = j.value("output", "out");
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config schema: ") + e.what());
    }
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["scenario"] = c.scenario;
    j["domain"] = {{"side", c.dom.side()}, {"r", c.dom.r()}};
    j["pathloss"] = pathloss_to_json(c.pl);
    j["profile"] = profile_to_json(c.profile);
    j["noise"] = c.n0;
    if (c.lambda.kind == LambdaSpec::Kind::Absolute)
        j["lambda"] = {{"absolute", c.lambda.value}};
    else
        j["lambda"] = {{"relative", c.lambda.value}};
    j["seeds"] = c.seeds;
    j["budget"]["events"] = c.budget.max_events;
    if (std::isfinite(c.budget.max_time)) j["budget"]["time"] = c.budget.max_time;
    j["population_cap"] = c.population_cap;
    j["epsilon"] = c.epsilon;
    j["quadrature"] = {{"abs_tol", c.quad.abs_tol},
                       {"rel_tol", c.quad.rel_tol},
                       {"max_refinement", c.quad.max_refinement}};
    j["solver"] = {{"tol", c.solver.tol},
                   {"residual_tol", c.solver.residual_tol},
                   {"max_iterations", c.solver.max_iterations},
                   {"damping", c.solver.damping},
                   {"divergence_factor", c.solver.divergence_factor},
                   {"gain_grid", c.solver.gain_grid}};
    j["stability"] = {{"batches", c.stability.batches},
                      {"confidence", c.stability.confidence},
                      {"stable_max_count", c.stability.stable_max_count}};
    j["output"] = c.out_dir;
    return j;
}

std::uint64_t config_hash(const json& j) {
    const std::string dump = j.dump(); // nlohmann objects iterate sorted by key
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001B3ull;
    }
    return h;
}

double ExperimentConfig::resolve_lambda() const {
    if (lambda.kind == LambdaSpec::Kind::Absolute) return lambda.value;
    const CriticalRate crit = critical_rate(profile, dom, pl, quad);
    return lambda.value * crit.value;
}

SimConfig ExperimentConfig::sim_config(std::uint64_t seed, double lambda_abs) const {
    SimConfig sc{dom, pl, profile, lambda_abs, n0, seed, budget, population_cap, 0};
    return sc;
}

std::string git_describe() {
    FILE* pipe = ::popen("git describe --always --dirty 2>/dev/null", "r");
    if (!pipe) return "unknown";
    char buf[128] = {0};
    std::string out;
    while (fgets(buf, sizeof buf, pipe)) out += buf;
    ::pclose(pipe);
    while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
    return out.empty() ? "unknown" : out;
}

} // namespace bwp
