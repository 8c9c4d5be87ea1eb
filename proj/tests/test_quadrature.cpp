#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bwp/errors.hpp"
#include "bwp/quadrature.hpp"
#include "test_util.hpp"

using namespace bwp;
using namespace bwp::test;

TEST_CASE("pathloss_integral: constant gain integrates to the area") {
    const TorusDomain dom(10.0);
    const auto est = pathloss_integral(dom, PathLoss::power_law(0.0));
    CHECK(est.value == doctest::Approx(100.0).epsilon(1e-12));
}

TEST_CASE("pathloss_integral: power law against plane limit and polar oracle") {
    const PathLoss pl = PathLoss::power_law(4.0);

    SUBCASE("large torus approaches the plane integral pi/3") {
        const auto est = pathloss_integral(TorusDomain(200.0), pl);
        CHECK(est.value == doctest::Approx(M_PI / 3.0).epsilon(1e-5));
    }
    SUBCASE("side 10: bracketed by the plane value minus the radius-5 tail") {
        const auto est = pathloss_integral(TorusDomain(10.0), pl);
        const double tail = 2.0 * M_PI / 81.0; // 2 pi int_5^inf s(1+s)^-4 ds
        CHECK(est.value > M_PI / 3.0 - tail);
        CHECK(est.value < M_PI / 3.0);
        const double oracle = oracle_torus_radial(10.0, [&](double d) { return pl(d); });
        CHECK(est.value == doctest::Approx(oracle).epsilon(1e-8));
        CHECK(std::fabs(est.value - oracle) <= 10.0 * est.error_bound + 1e-12);
    }
    SUBCASE("declared error bound is honest under refinement") {
        QuadratureSettings coarse;
        coarse.abs_tol = 1e-6;
        coarse.rel_tol = 1e-6;
        const auto rough = pathloss_integral(TorusDomain(10.0), pl, coarse);
        QuadratureSettings fine;
        fine.abs_tol = 1e-11;
        fine.rel_tol = 1e-11;
        const auto sharp = pathloss_integral(TorusDomain(10.0), pl, fine);
        CHECK(std::fabs(rough.value - sharp.value) <= 5.0 * rough.error_bound + 1e-12);
    }
}

TEST_CASE("pathloss_integral: refinement budget exhaustion reports a partial value") {
    QuadratureSettings strangled;
    strangled.abs_tol = 1e-16;
    strangled.rel_tol = 1e-16;
    strangled.max_refinement = 2;
    try {
        pathloss_integral(TorusDomain(10.0), PathLoss::power_law(4.0), strangled);
        FAIL("expected NumericalFailure");
    } catch (const NumericalFailure& e) {
        CHECK(e.partial() == doctest::Approx(0.9813).epsilon(1e-3));
        CHECK(e.error_bound() > 0.0);
    }
}

TEST_CASE("interference_functional: trivial zeros, saturation, monotonicity") {
    const TorusDomain dom(10.0);
    const PathLoss pl = PathLoss::power_law(4.0);

    CHECK(interference_functional(dom, pl, 0.0, 1).value == 0.0);
    CHECK(interference_functional(dom, pl, 3.0, 0).value == 0.0);

    // z -> infinity saturates at |D| (gain strictly positive on the torus)
    const double big = interference_functional(dom, pl, 1e6, 1).value;
    CHECK(big > 0.999 * dom.area());
    CHECK(big <= dom.area() * (1.0 + 1e-12));

    double prev = 0.0;
    for (double z : {0.1, 0.5, 2.0, 10.0, 100.0}) {
        const double v = interference_functional(dom, pl, z, 1).value;
        CHECK(v >= prev);
        CHECK(v <= dom.area());
        prev = v;
    }
    for (int k = 1; k <= 4; ++k) {
        const double vk = interference_functional(dom, pl, 1.0, k).value;
        const double v1 = interference_functional(dom, pl, 1.0, 1).value;
        if (k > 1) CHECK(vk >= v1);
        CHECK(vk <= k * v1 + 1e-9); // 1 - e^{-kx} <= k(1 - e^{-x})
    }
}

TEST_CASE("laplace_integral: exponential closed forms") {
    for (double c : {0.01, 1.0, 100.0}) {
        const auto est = laplace_integral([](double) { return 1.0; }, c);
        CHECK(est.value * c == doctest::Approx(1.0).epsilon(1e-8));
    }
    for (double a : {0.3, 2.0}) {
        const auto est =
            laplace_integral([a](double z) { return std::exp(-z * a); }, 1.5);
        CHECK(est.value == doctest::Approx(1.0 / (1.5 + a)).epsilon(1e-8));
    }
}

TEST_CASE("laplace_integral: Monte Carlo cross-check of E[1/(N0+I)] under Poisson") {
    // f(z) = exp(-I(z,1) mu) makes the Laplace integral equal the expected
    // reciprocal of noise-plus-interference under a Poisson configuration of
    // intensity mu with unit band overlap.
    const TorusDomain dom(10.0);
    const PathLoss pl = PathLoss::power_law(4.0);
    const double mu = 0.15, n0 = 1.0;

    QuadratureSettings qs; // defaults
    const auto quad = laplace_integral(
        [&](double z) {
            return std::exp(-mu * interference_functional(dom, pl, z, 1, qs).value);
        },
        n0, qs);

    std::mt19937_64 rng(101);
    std::poisson_distribution<int> pois(mu * dom.area());
    std::uniform_real_distribution<double> u(0.0, 10.0);
    Welford mc;
    for (int rep = 0; rep < 100000; ++rep) {
        const int n = pois(rng);
        double interference = 0.0;
        for (int i = 0; i < n; ++i) {
            const Point p{u(rng), u(rng)};
            interference += pl(torus_distance(p, {0.0, 0.0}, dom));
        }
        mc.add(1.0 / (n0 + interference));
    }
    CHECK(std::fabs(quad.value - mc.mean) <= 3.0 * mc.std_error());
}

TEST_CASE("laplace_nodes: frozen nodes reproduce the adaptive integral") {
    for (double c : {0.05, 1.0, 20.0}) {
        const auto nodes = laplace_nodes(c);
        double direct = 0.0;
        for (const auto& n : nodes) direct += n.w * std::exp(-n.z * c);
        CHECK(direct * c == doctest::Approx(1.0).epsilon(1e-9));

        // generic smooth integrand <= 1 against the adaptive path
        auto f = [](double z) { return 1.0 / (1.0 + z); };
        double frozen = 0.0;
        for (const auto& n : nodes) frozen += n.w * std::exp(-n.z * c) * f(n.z);
        const auto adaptive = laplace_integral(f, c);
        CHECK(frozen == doctest::Approx(adaptive.value).epsilon(1e-7));
    }
}

TEST_CASE("TorusGainProfile: pushforward agrees with the refining integrator") {
    const TorusDomain dom(10.0);
    const PathLoss pl = PathLoss::power_law(4.0);
    const TorusGainProfile gains(dom, pl);

    CHECK(gains.total_weight() == doctest::Approx(dom.area()).epsilon(1e-12));
    CHECK(gains.integrate([](double g) { return g; }) ==
          doctest::Approx(pathloss_integral(dom, pl).value).epsilon(1e-7));
    for (double z : {0.2, 3.0, 50.0})
        for (int k : {1, 2}) {
            CHECK(gains.interference(z, k) ==
                  doctest::Approx(interference_functional(dom, pl, z, k).value)
                      .epsilon(1e-5));
        }
}

TEST_CASE("QuadratureSettings validation") {
    QuadratureSettings bad;
    bad.abs_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(laplace_integral([](double) { return 1.0; }, 0.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(interference_functional(TorusDomain(10.0), PathLoss::power_law(4.0),
                                            -1.0, 1),
                    std::invalid_argument);
}
