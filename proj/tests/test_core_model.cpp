#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "bwp/classes.hpp"
#include "bwp/combinatorics.hpp"
#include "bwp/geometry.hpp"
#include "bwp/pathloss.hpp"
#include "bwp/stability.hpp"
#include "test_util.hpp"

using namespace bwp;
using namespace bwp::test;

TEST_CASE("torus_distance: identity, wraparound, brute-force images") {
    TorusDomain dom(10.0);
    CHECK(torus_distance({0, 0}, {0, 0}, dom) == 0.0);
    CHECK(torus_distance({0, 0}, {9, 0}, dom) == doctest::Approx(1.0));
    // interior pair against the 9-image minimum
    CHECK(torus_distance({1, 1}, {6, 6}, dom) ==
          doctest::Approx(std::sqrt(50.0)).epsilon(1e-12));
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int i = 0; i < 500; ++i) {
        Point p{u(rng), u(rng)}, q{u(rng), u(rng)};
        CHECK(torus_distance(p, q, dom) ==
              doctest::Approx(oracle_torus_distance(p, q, 10.0)).epsilon(1e-12));
    }
}

TEST_CASE("torus_distance: range checking and metric properties") {
    TorusDomain dom(10.0);
    CHECK_THROWS_AS(torus_distance({10.0, 0}, {0, 0}, dom), std::domain_error);
    CHECK_THROWS_AS(torus_distance({0, -0.1}, {0, 0}, dom), std::domain_error);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    const double diag = 10.0 * std::sqrt(2.0) / 2.0;
    for (int i = 0; i < 300; ++i) {
        Point a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
        const double ab = torus_distance(a, b, dom);
        const double ba = torus_distance(b, a, dom);
        const double ac = torus_distance(a, c, dom);
        const double cb = torus_distance(c, b, dom);
        CHECK(ab == ba);
        CHECK(ab <= ac + cb + 1e-12);
        CHECK(ab <= diag + 1e-12);
    }
}

TEST_CASE("TorusDomain invariants") {
    CHECK_THROWS_AS(TorusDomain(0.0), std::invalid_argument);
    CHECK_THROWS_AS(TorusDomain(10.0, 5.0), std::invalid_argument);
    CHECK(TorusDomain(10.0, 1.0).area() == 100.0);
}

TEST_CASE("PathLoss: normalization, monotonicity, families") {
    const PathLoss pow4 = PathLoss::power_law(4.0);
    CHECK(pow4(0.0) == 1.0);
    CHECK(pow4(1.0) == doctest::Approx(1.0 / 16.0));
    const PathLoss tab = PathLoss::tabulated({{0.0, 1.0}, {1.0, 0.5}, {2.0, 0.1}});
    CHECK(tab(0.0) == 1.0);
    CHECK(tab(0.5) == doctest::Approx(0.75));
    CHECK(tab(5.0) == doctest::Approx(0.1)); // clamped tail

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 8.0);
    for (const PathLoss& pl : {pow4, tab, PathLoss::power_law(0.0)}) {
        for (int i = 0; i < 200; ++i) {
            double d1 = u(rng), d2 = u(rng);
            if (d1 > d2) std::swap(d1, d2);
            CHECK(pl(d1) >= pl(d2));
            CHECK(pl(d2) >= 0.0);
        }
    }
    CHECK_THROWS_AS(PathLoss::tabulated({{0.0, 0.9}}), std::invalid_argument);
    CHECK_THROWS_AS(PathLoss::tabulated({{0.0, 1.0}, {1.0, 1.1}}), std::invalid_argument);
    CHECK_THROWS_AS(PathLoss::power_law(-1.0), std::invalid_argument);
}

TEST_CASE("ClassProfile: validation and symmetry detection") {
    CHECK_THROWS_AS(ClassProfile(2, {{1, 0.5, 1.0}}), std::invalid_argument); // sum != 1
    CHECK_THROWS_AS(ClassProfile(2, {{1, 1.0, 0.0}}), std::invalid_argument); // L <= 0
    CHECK_THROWS_AS(ClassProfile(0, {}), std::invalid_argument);

    const ClassProfile p6 = section6_profile();
    CHECK(p6.symmetric());
    CHECK(p6.L_max() == 2.0);
    CHECK(p6.L_min() == 1.0);

    const ClassProfile asym(2, {{1, 0.5, 1.0}, {2, 0.3, 1.0}, {3, 0.2, 2.0}});
    CHECK_FALSE(asym.symmetric());

    // zero-probability classes are allowed and do not break symmetry checks
    const ClassProfile sparse(2, {{1, 0.5, 1.0}, {2, 0.5, 1.0}});
    CHECK(sparse.p(3) == 0.0);
    CHECK(sparse.symmetric());
}

TEST_CASE("SymmetricProfile: expansion and identity round trip") {
    const SymmetricProfile sym = section6_symmetric();
    const ClassProfile full = expand_symmetric(sym);
    CHECK(full.p(0b01) == doctest::Approx(0.4));
    CHECK(full.p(0b11) == doctest::Approx(0.2));
    CHECK(full.L(0b11) == 2.0);
    CHECK(full.symmetric());

    // expand -> reduce is the identity, bit for bit
    const SymmetricProfile back = full.reduce_symmetric();
    CHECK(back == sym);

    std::mt19937_64 rng(19);
    for (int rep = 0; rep < 50; ++rep) {
        const int K = 1 + int(rng() % 6);
        const SymmetricProfile s = random_symmetric_profile(K, rng);
        CHECK(expand_symmetric(s).reduce_symmetric() == s);
    }

    // arithmetic reduction of a hand-built symmetric profile agrees closely
    const ClassProfile manual = section6_profile();
    const SymmetricProfile reduced = manual.reduce_symmetric();
    CHECK(reduced.p[1] == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(reduced.p[2] == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(reduced.L[2] == 2.0);
}

TEST_CASE("load_factor: single class, reference config, symmetric K=3") {
    const ClassProfile single(1, {{1, 1.0, 3.5}});
    CHECK(load_factor(single) == 3.5);

    CHECK(load_factor(section6_profile()) == 1.6); // exact in binary arithmetic

    const ClassProfile k3 = expand_symmetric(
        SymmetricProfile(3, {1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0, 1.0, 1.0}));
    CHECK(load_factor(k3) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("critical_rate: closed form against the polar oracle") {
    const TorusDomain dom = section6_domain();
    const PathLoss pl = section6_pathloss();
    const double oracle_ellD =
        oracle_torus_radial(10.0, [&](double d) { return pl(d); });

    SUBCASE("single class K=1") {
        const ClassProfile single(1, {{1, 1.0, 1.0}});
        const CriticalRate crit = critical_rate(single, dom, pl);
        CHECK(crit.value == doctest::Approx(1.0 / oracle_ellD).epsilon(1e-6));
    }
    SUBCASE("reference config") {
        const CriticalRate crit = critical_rate(section6_profile(), dom, pl);
        CHECK(crit.load == 1.6);
        CHECK(crit.ell_D == doctest::Approx(oracle_ellD).epsilon(1e-6));
        CHECK(crit.value == doctest::Approx(2.0 / (1.6 * oracle_ellD)).epsilon(1e-6));
        // bracketed by the plane integral and its tail beyond radius 5:
        // 2 pi int_5^inf s (1+s)^-4 ds = 2 pi / 81
        const double plane = M_PI / 3.0;
        CHECK(crit.ell_D > plane - 2.0 * M_PI / 81.0);
        CHECK(crit.ell_D < plane);
        CHECK(crit.symmetric);
    }
    SUBCASE("doubling file sizes halves the rate") {
        const ClassProfile doubled(2, {{1, 0.4, 2.0}, {2, 0.4, 2.0}, {3, 0.2, 4.0}});
        const CriticalRate a = critical_rate(section6_profile(), dom, pl);
        const CriticalRate b = critical_rate(doubled, dom, pl);
        CHECK(b.value == doctest::Approx(a.value / 2.0).epsilon(1e-12));
    }
    SUBCASE("non-symmetric profiles are flagged") {
        const ClassProfile asym(2, {{1, 0.5, 1.0}, {2, 0.3, 1.0}, {3, 0.2, 2.0}});
        CHECK_FALSE(critical_rate(asym, dom, pl).symmetric);
    }
}

TEST_CASE("lambda_bounds: collapse, reference values, containment") {
    const TorusDomain dom = section6_domain();
    const PathLoss pl = section6_pathloss();
    const double ellD = pathloss_integral(dom, pl).value;

    SUBCASE("K=1 bounds collapse onto the critical rate") {
        const ClassProfile single(1, {{1, 1.0, 2.0}});
        const LambdaBounds b = lambda_bounds(single, dom, pl);
        const CriticalRate crit = critical_rate(single, dom, pl);
        CHECK(b.lower == doctest::Approx(crit.value).epsilon(1e-12));
        CHECK(b.upper == doctest::Approx(crit.value).epsilon(1e-12));
    }
    SUBCASE("reference config formulas") {
        const LambdaBounds b = lambda_bounds(section6_profile(), dom, pl);
        CHECK(b.lower == doctest::Approx(1.0 / (2.0 * 2.0 * ellD)).epsilon(1e-12));
        CHECK(b.upper == doctest::Approx(2.0 / (1.0 * ellD)).epsilon(1e-12));
        const double lc = 2.0 / (1.6 * ellD);
        CHECK(b.lower <= lc);
        CHECK(lc <= b.upper);
        // ratio identity upper/lower = K^2 Lmax / Lmin
        CHECK(b.upper / b.lower == doctest::Approx(4.0 * 2.0 / 1.0).epsilon(1e-12));
    }
    SUBCASE("critical rate within bounds for 1000 random symmetric profiles") {
        std::mt19937_64 rng(23);
        for (int rep = 0; rep < 1000; ++rep) {
            const int K = 1 + int(rng() % 5);
            const ClassProfile p = expand_symmetric(random_symmetric_profile(K, rng));
            const double load = load_factor(p);
            const double lc = K * 1.0 / (ellD * load);
            const double lower = 1.0 / (K * p.L_max() * ellD);
            const double upper = K / (p.L_min() * ellD);
            CHECK(lower <= lc * (1.0 + 1e-12));
            CHECK(lc <= upper * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("overlap_sum: closed forms and brute force") {
    SUBCASE("K=2 identity") {
        // y_{1} = y_{2} = a, y_{12} = b, C = {1}: a + b = (1/2)(2a + 2b)
        std::vector<double> y(4, 0.0);
        const double a = 0.7, b = 0.3;
        y[0b01] = a;
        y[0b10] = a;
        y[0b11] = b;
        CHECK(overlap_sum(y, 0b01) == doctest::Approx(a + b));
        CHECK(overlap_sum(y, 0b01) ==
              doctest::Approx(0.5 * cardinality_sum(y)).epsilon(1e-15));
    }
    SUBCASE("indicator of C gives |C|") {
        std::vector<double> y(1 << 3, 0.0);
        y[0b101] = 1.0;
        CHECK(overlap_sum(y, 0b101) == 2.0);
    }
    SUBCASE("random symmetric vector, K=5, exact rational") {
        std::mt19937_64 rng(5);
        std::vector<Rational> y(1 << 5, Rational(0));
        std::vector<std::int64_t> per_card(6);
        for (int j = 1; j <= 5; ++j) per_card[j] = std::int64_t(rng() % 1000000);
        for (std::uint32_t m = 1; m < 32; ++m) y[m] = Rational(per_card[popcount_mask(m)]);
        for (std::uint32_t c = 1; c < 32; ++c) {
            // brute force over all 31 subsets is overlap_sum itself; the
            // identity side is the independent expression
            const Rational lhs = overlap_sum(y, c) * Rational(5);
            const Rational rhs = Rational(popcount_mask(c)) * cardinality_sum(y);
            CHECK(lhs == rhs);
        }
    }
}

TEST_CASE("hypergeometric_alpha: values, mean identity, range errors") {
    // K=2, j=1, l=1, m=1: one subset {1} of the two, half of them meet C
    CHECK(hypergeometric_alpha(2, 1, 1, 1) == Rational(1, 2));

    // direct enumeration oracle for small K
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 60; ++rep) {
        const int K = 2 + int(rng() % 5);
        const int j = 1 + int(rng() % K);
        const int l = 1 + int(rng() % K);
        const int m = 1 + int(rng() % std::min(j, l));
        const std::uint32_t c_mask = (1u << j) - 1;
        std::int64_t hits = 0, total = 0;
        for (std::uint32_t u = 1; u < (1u << K); ++u) {
            if (popcount_mask(u) != l) continue;
            ++total;
            if (popcount_mask(u & c_mask) == m) ++hits;
        }
        CHECK(hypergeometric_alpha(K, j, l, m) == Rational(hits, total));
    }

    // mean identity: sum_m m alpha = l j / K, exact for all K <= 12
    for (int K = 1; K <= 12; ++K)
        for (int j = 1; j <= K; ++j)
            for (int l = 1; l <= K; ++l) {
                Rational acc(0);
                for (int m = 1; m <= std::min(j, l); ++m)
                    acc += Rational(m) * hypergeometric_alpha(K, j, l, m);
                CHECK(acc == Rational(std::int64_t(l) * j, K));
            }

    CHECK_THROWS_AS(hypergeometric_alpha(4, 2, 2, 3), std::domain_error);
    CHECK_THROWS_AS(hypergeometric_alpha(4, 5, 2, 1), std::domain_error);
    CHECK_THROWS_AS(hypergeometric_alpha(4, 2, 2, 0), std::domain_error);
}

TEST_CASE("overlap identity: every K <= 8, every class, random symmetric vectors") {
    std::mt19937_64 rng(37);
    for (int K = 1; K <= 8; ++K) {
        const std::uint32_t n = 1u << K;
        for (int rep = 0; rep < 12; ++rep) {
            std::vector<Rational> y(n, Rational(0));
            std::vector<std::int64_t> per_card(K + 1);
            for (int j = 1; j <= K; ++j) per_card[j] = std::int64_t(rng() % 1000000);
            for (std::uint32_t m = 1; m < n; ++m)
                y[m] = Rational(per_card[popcount_mask(m)]);
            const Rational card = cardinality_sum(y);
            for (std::uint32_t c = 1; c < n; ++c) {
                CHECK(overlap_sum(y, c) * Rational(K) ==
                      Rational(popcount_mask(c)) * card);
            }
        }
    }
}
