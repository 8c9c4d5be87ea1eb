#include "bwp/heuristics.hpp"

#include <algorithm>
#include <cmath>

#include "bwp/combinatorics.hpp"
#include "bwp/errors.hpp"
#include "bwp/stability.hpp"

namespace bwp {

PoissonKernel::PoissonKernel(const TorusDomain& dom, const PathLoss& pl, int K, double n0,
                             const SolverSettings& settings)
    : K_(K), n0_(n0), gains_(dom, pl, settings.gain_grid) {
    if (K < 1 || K > kMaxChannels) throw std::invalid_argument("PoissonKernel: bad K");
    if (!(n0 > 0.0)) throw std::invalid_argument("PoissonKernel: N0 must be > 0");
    const auto nodes = laplace_nodes(n0, settings.quad);
    z_.reserve(nodes.size());
    w_.reserve(nodes.size());
    itf_.reserve(nodes.size());
    for (const auto& n : nodes) {
        z_.push_back(n.z);
        w_.push_back(n.w);
        std::vector<double> row(std::size_t(K) + 1, 0.0);
        for (int m = 1; m <= K; ++m) row[m] = gains_.interference(n.z, m);
        itf_.push_back(std::move(row));
    }
}

double PoissonKernel::integral(const std::vector<double>& overlap_weights) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < z_.size(); ++i) {
        double expo = -z_[i] * n0_;
        const auto& row = itf_[i];
        for (int m = 1; m <= K_; ++m) {
            if (overlap_weights[m] != 0.0) expo -= overlap_weights[m] * row[m];
        }
        acc += w_[i] * std::exp(expo);
    }
    return acc;
}

// ---------------------------------------------------------------------------

namespace {

// Common damped monotone iteration from zero. `evaluate` maps the current mu
// vector to the per-class integral values J_C(mu); the update is
// mu_C <- rhs_C / J_C(mu).
struct IterationOutcome {
    bool converged = false;
    int iterations = 0;
    std::uint64_t kernel_calls = 0;
};

template <typename Evaluate>
IterationOutcome run_picard(std::vector<double>& mu, const std::vector<double>& rhs,
                            const SolverSettings& settings, double n0,
                            const Evaluate& evaluate, std::vector<double>& J_out) {
    IterationOutcome out;
    const std::size_t n = mu.size();
    std::vector<double> ceiling(n, 0.0);
    for (std::size_t c = 0; c < n; ++c)
        ceiling[c] = settings.divergence_factor * std::max(rhs[c] * n0, 1e-300);

    std::vector<double> J(n, 0.0);
    for (int it = 1; it <= settings.max_iterations; ++it) {
        out.iterations = it;
        evaluate(mu, J);
        out.kernel_calls += n;
        double delta = 0.0;
        bool blew_up = false;
        for (std::size_t c = 0; c < n; ++c) {
            double target = rhs[c] > 0.0 ? rhs[c] / J[c] : 0.0;
            double next = mu[c] + settings.damping * (target - mu[c]);
            delta = std::max(delta, std::fabs(next - mu[c]));
            mu[c] = next;
            if (rhs[c] > 0.0 && mu[c] > ceiling[c]) blew_up = true;
        }
        if (blew_up) {
            out.converged = false;
            break;
        }
        if (delta <= settings.tol * std::max(1.0, *std::max_element(mu.begin(), mu.end()))) {
            out.converged = true;
            break;
        }
    }
    evaluate(mu, J);
    out.kernel_calls += n;
    J_out = J;
    return out;
}

} // namespace

PoissonSolution poisson_fixed_point(const ClassProfile& profile, const TorusDomain& dom,
                                    const PathLoss& pl, double lambda, double n0,
                                    const SolverSettings& settings,
                                    const PoissonKernel* kernel) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson_fixed_point: lambda < 0");
    if (!(n0 > 0.0)) throw std::invalid_argument("poisson_fixed_point: N0 must be > 0");
    const int K = profile.K();
    const std::uint32_t n_classes = profile.num_classes();
    const double ell_r = pl(dom.r());

    PoissonSolution sol;
    sol.mu.assign(n_classes + 1, 0.0);
    if (lambda == 0.0) {
        sol.converged = true;
        return sol;
    }

    std::unique_ptr<PoissonKernel> own;
    if (!kernel) {
        own = std::make_unique<PoissonKernel>(dom, pl, K, n0, settings);
        kernel = own.get();
    }

    // Dense working vectors indexed 0..n_classes-1 (mask - 1).
    std::vector<double> rhs(n_classes, 0.0);
    for (std::uint32_t m = 1; m <= n_classes; ++m)
        rhs[m - 1] = lambda * profile.p(m) * profile.L(m) / (popcount_mask(m) * ell_r);

    auto evaluate = [&](const std::vector<double>& mu, std::vector<double>& J) {
        std::vector<double> weights(std::size_t(K) + 1, 0.0);
        for (std::uint32_t c = 1; c <= n_classes; ++c) {
            std::fill(weights.begin(), weights.end(), 0.0);
            for (std::uint32_t u = 1; u <= n_classes; ++u) {
                const int overlap = popcount_mask(c & u);
                if (overlap > 0) weights[overlap] += mu[u - 1];
            }
            J[c - 1] = kernel->integral(weights);
        }
    };

    std::vector<double> mu(n_classes, 0.0), J;
    const IterationOutcome out = run_picard(mu, rhs, settings, n0, evaluate, J);
    sol.iterations = out.iterations;
    sol.kernel_calls = out.kernel_calls;
    sol.residual = 0.0;
    for (std::uint32_t c = 0; c < n_classes; ++c) {
        sol.mu[c + 1] = mu[c];
        sol.residual = std::max(sol.residual, std::fabs(mu[c] * J[c] - rhs[c]));
    }
    sol.converged = out.converged && sol.residual <= settings.residual_tol;
    return sol;
}

SymmetricPoissonSolution poisson_fixed_point_symmetric(
    const SymmetricProfile& sym, const TorusDomain& dom, const PathLoss& pl,
    double lambda, double n0, const SolverSettings& settings,
    const PoissonKernel* kernel) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("poisson_fixed_point_symmetric: lambda < 0");
    if (!(n0 > 0.0)) throw std::invalid_argument("poisson_fixed_point_symmetric: N0 must be > 0");
    const int K = sym.K;
    const double ell_r = pl(dom.r());

    SymmetricPoissonSolution sol;
    sol.mu.assign(std::size_t(K) + 1, 0.0);
    if (lambda == 0.0) {
        sol.converged = true;
        return sol;
    }

    std::unique_ptr<PoissonKernel> own;
    if (!kernel) {
        own = std::make_unique<PoissonKernel>(dom, pl, K, n0, settings);
        kernel = own.get();
    }

    // alpha_sum[j][l][m]: hypergeometric weight of overlap m between the
    // probe cardinality j and interferer cardinality l.
    std::vector<std::vector<std::vector<double>>> alpha(
        std::size_t(K) + 1, std::vector<std::vector<double>>(
                                std::size_t(K) + 1, std::vector<double>(std::size_t(K) + 1, 0.0)));
    for (int j = 1; j <= K; ++j)
        for (int l = 1; l <= K; ++l)
            for (int m = 1; m <= std::min(j, l); ++m)
                alpha[j][l][m] = hypergeometric_alpha(K, j, l, m).to_double();

    std::vector<double> rhs(K, 0.0);
    for (int j = 1; j <= K; ++j)
        rhs[j - 1] = lambda * sym.p[j] * sym.L[j] / (j * ell_r);

    auto evaluate = [&](const std::vector<double>& mu, std::vector<double>& J) {
        std::vector<double> weights(std::size_t(K) + 1, 0.0);
        for (int j = 1; j <= K; ++j) {
            std::fill(weights.begin(), weights.end(), 0.0);
            for (int l = 1; l <= K; ++l) {
                if (mu[l - 1] == 0.0) continue;
                for (int m = 1; m <= std::min(j, l); ++m)
                    weights[m] += mu[l - 1] * alpha[j][l][m];
            }
            J[j - 1] = kernel->integral(weights);
        }
    };

    std::vector<double> mu(K, 0.0), J;
    const IterationOutcome out = run_picard(mu, rhs, settings, n0, evaluate, J);
    sol.iterations = out.iterations;
    sol.kernel_calls = out.kernel_calls;
    for (int j = 1; j <= K; ++j) {
        sol.mu[j] = mu[j - 1];
        sol.residual = std::max(sol.residual, std::fabs(mu[j - 1] * J[j - 1] - rhs[j - 1]));
    }
    sol.converged = out.converged && sol.residual <= settings.residual_tol;
    return sol;
}

PoissonCriticalRate poisson_critical_rate(const ClassProfile& profile,
                                          const TorusDomain& dom, const PathLoss& pl,
                                          double n0, const SolverSettings& settings) {
    const LambdaBounds bounds = lambda_bounds(profile, dom, pl, settings.quad);
    const CriticalRate crit = critical_rate(profile, dom, pl, settings.quad);
    PoissonKernel kernel(dom, pl, profile.K(), n0, settings);

    const bool use_symmetric = profile.symmetric();
    SymmetricProfile sym = use_symmetric ? profile.reduce_symmetric()
                                         : SymmetricProfile(1, {1.0}, {1.0});
    auto feasible = [&](double lambda) {
        if (use_symmetric)
            return poisson_fixed_point_symmetric(sym, dom, pl, lambda, n0, settings, &kernel)
                .converged;
        return poisson_fixed_point(profile, dom, pl, lambda, n0, settings, &kernel).converged;
    };

    PoissonCriticalRate out;
    double lo = 0.0;
    double hi = 2.0 * bounds.upper;
    while (feasible(hi)) { // should not trigger, but keep the bracket honest
        ++out.probes;
        lo = hi;
        hi *= 2.0;
        if (hi > 1e6 * bounds.upper) break;
    }
    const double width_target = 1e-3 * crit.value;
    while (hi - lo > width_target) {
        const double mid = 0.5 * (lo + hi);
        ++out.probes;
        if (feasible(mid)) lo = mid;
        else hi = mid;
    }
    out.lambda_p = 0.5 * (lo + hi);
    out.bracket_width = hi - lo;
    return out;
}

// ---------------------------------------------------------------------------

CavitySolution cavity_fixed_point(const ClassProfile& profile, const TorusDomain& dom,
                                  const PathLoss& pl, double lambda, double n0,
                                  const SolverSettings& settings) {
    if (!(lambda >= 0.0)) throw std::invalid_argument("cavity_fixed_point: lambda < 0");
    if (!(n0 > 0.0)) throw std::invalid_argument("cavity_fixed_point: N0 must be > 0");
    const std::uint32_t n_classes = profile.num_classes();
    const double ell_r = pl(dom.r());

    CavitySolution sol;
    sol.mu.assign(n_classes + 1, 0.0);
    sol.I.assign(n_classes + 1, 0.0);
    if (lambda == 0.0) {
        sol.converged = true;
        return sol;
    }

    TorusGainProfile gains(dom, pl, settings.gain_grid);

    // density from interference: mu_C = lambda p_C L_C (N0 + I_C) / (|C| l(r))
    std::vector<double> coef(n_classes + 1, 0.0);
    for (std::uint32_t m = 1; m <= n_classes; ++m)
        coef[m] = lambda * profile.p(m) * profile.L(m) / (popcount_mask(m) * ell_r);

    std::vector<double> I(n_classes + 1, 0.0), mu(n_classes + 1, 0.0);
    auto update_mu = [&]() {
        for (std::uint32_t m = 1; m <= n_classes; ++m) mu[m] = coef[m] * (n0 + I[m]);
    };
    update_mu();

    for (int it = 1; it <= settings.max_iterations; ++it) {
        sol.iterations = it;
        double delta = 0.0;
        for (std::uint32_t c = 1; c <= n_classes; ++c) {
            if (profile.p(c) == 0.0) continue;
            double acc = 0.0;
            for (std::uint32_t u = 1; u <= n_classes; ++u) {
                const int overlap = popcount_mask(c & u);
                if (overlap == 0) continue;
                const double pair_mass = lambda * (mu[u] * profile.p(c) + mu[c] * profile.p(u));
                if (pair_mass == 0.0) continue;
                const double inv_lc = 1.0 / profile.L(c);
                const double inv_lu = 1.0 / profile.L(u);
                const int ch_c = popcount_mask(c);
                const int ch_u = popcount_mask(u);
                // integral over the torus of l(x) * rho2(x, 0), where rho2 is
                // the pair density: arrivals over the pair departure rate.
                acc += overlap * gains.integrate([&](double g) {
                    const double cross = overlap * g;
                    const double d_pair = inv_lc * ch_c * ell_r / (n0 + cross + I[c]) +
                                          inv_lu * ch_u * ell_r / (n0 + cross + I[u]);
                    return g * pair_mass / d_pair;
                });
            }
            const double next = acc / mu[c];
            const double damped = I[c] + settings.damping * (next - I[c]);
            delta = std::max(delta, std::fabs(damped - I[c]) / std::max(1.0, std::fabs(I[c])));
            I[c] = damped;
            if (!std::isfinite(I[c]) || I[c] > 1e12) {
                sol.diverged = true;
                break;
            }
        }
        update_mu();
        if (sol.diverged) break;
        sol.residual = delta;
        if (delta <= settings.residual_tol) {
            sol.converged = true;
            break;
        }
    }
    for (std::uint32_t m = 1; m <= n_classes; ++m) {
        sol.mu[m] = mu[m];
        sol.I[m] = I[m];
    }
    if (sol.diverged) sol.converged = false;
    return sol;
}

} // namespace bwp
