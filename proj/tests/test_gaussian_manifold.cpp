#include "doctest.h"

#include <cmath>

#include "gmvae/gaussian_manifold.hpp"
#include "gmvae/hyperbolic.hpp"
#include "gmvae/rng.hpp"
#include "support/oracles.hpp"

using namespace gmvae;
using namespace gmvae::manifold;

TEST_SUITE_BEGIN("gaussian_manifold");

TEST_CASE("metric tensor values") {
    auto m = metric_tensor({0.0, 1.0}, Curvature(1.0));
    CHECK(m.g11 == doctest::Approx(1.0));
    CHECK(m.g22 == doctest::Approx(1.0));
    auto m2 = metric_tensor({5.0, 2.0}, Curvature(0.5));
    CHECK(m2.g11 == doctest::Approx(0.25));
    CHECK(m2.g22 == doctest::Approx(0.5));
    CHECK_THROWS_AS(metric_tensor({0.0, 0.0}, Curvature(1.0)), domain_error);
}

TEST_CASE("volume element") {
    CHECK(sqrt_det_metric({0.0, 1.0}, Curvature(1.0)) == doctest::Approx(1.0));
    CHECK(sqrt_det_metric({0.0, 2.0}, Curvature(1.0)) == doctest::Approx(0.25));
    CHECK(sqrt_det_metric({0.0, 1.0}, Curvature(4.0)) == doctest::Approx(0.5));
}

TEST_CASE("christoffel symbols: closed form and symmetry") {
    auto ch = christoffel({0.0, 1.0}, Curvature(1.0));
    CHECK(ch.gamma1[0][0] == 0.0);
    CHECK(ch.gamma1[0][1] == doctest::Approx(-1.0));
    CHECK(ch.gamma1[1][0] == doctest::Approx(-1.0));
    CHECK(ch.gamma2[0][0] == doctest::Approx(1.0));
    CHECK(ch.gamma2[1][1] == doctest::Approx(-1.0));
    CHECK(ch.gamma2[0][1] == 0.0);
    auto ch2 = christoffel({1.0, 2.0}, Curvature(0.5));
    CHECK(ch2.gamma2[0][0] == doctest::Approx(0.25));
    // symmetric lower indices
    CHECK(ch2.gamma1[0][1] == ch2.gamma1[1][0]);
    CHECK(ch2.gamma2[0][1] == ch2.gamma2[1][0]);
}

TEST_CASE("christoffel matches the finite-difference oracle") {
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const Curvature c(0.5 + rng.uniform());
        const hyperbolic::GaussianPoint p{4.0 * rng.uniform() - 2.0,
                                          0.2 + 3.0 * rng.uniform()};
        const auto got = christoffel(p, c);
        const auto want = oracles::fd_christoffel(p, c);
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                CHECK(std::fabs(got.gamma1[a][b] - want.gamma1[a][b]) < 1e-5);
                CHECK(std::fabs(got.gamma2[a][b] - want.gamma2[a][b]) < 1e-5);
            }
        }
    }
}

TEST_CASE("sectional curvature is exactly -c; FD oracle agrees") {
    CHECK(sectional_curvature({0.3, 0.7}, Curvature(1.0)) == -1.0);
    CHECK(sectional_curvature({-4.0, 12.0}, Curvature(0.5)) == -0.5);
    Rng rng(7);
    for (double cv : {0.5, 1.0, 1.5}) {
        const Curvature c(cv);
        for (int i = 0; i < 100; ++i) {
            const hyperbolic::GaussianPoint p{10.0 * rng.uniform() - 5.0,
                                              0.2 + 5.0 * rng.uniform()};
            CHECK(sectional_curvature(p, c) == -cv);
            CHECK(std::fabs(oracles::fd_gaussian_curvature(p, c) - (-cv)) < 1e-3);
        }
    }
}

TEST_CASE("gaussian_kl basics") {
    CHECK(gaussian_kl(0, 1, 0, 1) == doctest::Approx(0.0));
    CHECK(gaussian_kl(1, 1, 0, 1) == doctest::Approx(0.5));
    CHECK(gaussian_kl(0, 2, 0, 1) == doctest::Approx(0.8068528194400547).epsilon(1e-12));
    CHECK_THROWS_AS(gaussian_kl(0, -1, 0, 1), domain_error);
}

TEST_CASE("gm_kl: exactness in d-mu, closed-form value, nonnegativity") {
    const Curvature c(1.0);
    CHECK(gm_kl({0.3, 1.7}, {0.3, 1.7}, c) == doctest::Approx(0.0));
    CHECK(gm_kl({0.1, 1.0}, {0.0, 1.0}, c) == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(gm_kl({0.0, 1.1}, {0.0, 1.0}, c) ==
          doctest::Approx(0.0048449100978375785).epsilon(1e-12));
    Rng rng(9);
    for (int i = 0; i < 300; ++i) {
        const Curvature cc(0.25 + 2.0 * rng.uniform());
        const hyperbolic::GaussianPoint p{4 * rng.uniform() - 2, 0.1 + 3 * rng.uniform()};
        const hyperbolic::GaussianPoint q{4 * rng.uniform() - 2, 0.1 + 3 * rng.uniform()};
        CHECK(gm_kl(p, q, cc) >= 0.0);
    }
}

TEST_CASE("kl_quadratic_residual: cubic scaling, zero at dsigma = 0") {
    const Curvature c(1.0);
    CHECK(kl_quadratic_residual({0.0, 1.0}, 0.7, 0.0, c) == 0.0);
    CHECK(kl_quadratic_residual({2.0, 3.0}, -1.3, 0.0, c) == 0.0);
    CHECK(kl_quadratic_residual({0.0, 1.0}, 0.0, 0.1, c) ==
          doctest::Approx(-1.5508990216243002e-4).epsilon(1e-9));
    CHECK(kl_quadratic_residual({0.0, 1.0}, 0.0, 0.05, c) ==
          doctest::Approx(-2.0082084716001533e-5).epsilon(1e-9));
    const double ratio = kl_quadratic_residual({0.0, 1.0}, 0.0, 0.1, c) /
                         kl_quadratic_residual({0.0, 1.0}, 0.0, 0.05, c);
    CHECK(ratio == doctest::Approx(7.7227989203).epsilon(1e-6));

    // matches the direct difference of gm_kl minus the quadratic form
    Rng rng(13);
    for (int i = 0; i < 100; ++i) {
        const Curvature cc(0.5 + rng.uniform());
        const hyperbolic::GaussianPoint base{2 * rng.uniform() - 1, 0.5 + 2 * rng.uniform()};
        const double dmu = 0.2 * rng.uniform() - 0.1;
        const double ds = 0.05 * base.sigma * (2 * rng.uniform() - 1);
        const double direct =
            gm_kl({base.mu + dmu, base.sigma + ds}, base, cc) -
            0.5 * (dmu * dmu / (base.sigma * base.sigma) +
                   ds * ds / (cc.c() * base.sigma * base.sigma));
        CHECK(kl_quadratic_residual(base, dmu, ds, cc) ==
              doctest::Approx(direct).epsilon(1e-6).scale(1e-10));
    }
}

TEST_CASE("residual halving ratio lies in [6, 10] at dsigma = 0.1 sigma") {
    Rng rng(21);
    for (int i = 0; i < 50; ++i) {
        const Curvature c(0.25 + 2.0 * rng.uniform());
        const hyperbolic::GaussianPoint base{20 * rng.uniform() - 10,
                                             0.05 + 5.0 * rng.uniform()};
        const double d1 = 0.1 * base.sigma;
        const double r1 = kl_quadratic_residual(base, rng.uniform(), d1, c);
        const double r2 = kl_quadratic_residual(base, rng.uniform(), 0.5 * d1, c);
        const double ratio = r1 / r2;
        CHECK(ratio >= 6.0);
        CHECK(ratio <= 10.0);
    }
}

TEST_CASE("first-order agreement of 2 gm_kl with squared Fisher-Rao distance") {
    Rng rng(27);
    int checked = 0;
    while (checked < 200) {
        const Curvature c(0.25 + 2.0 * rng.uniform());
        const hyperbolic::GaussianPoint p{2 * rng.uniform() - 1, 0.5 + 2 * rng.uniform()};
        const hyperbolic::GaussianPoint q{p.mu + 0.05 * (2 * rng.uniform() - 1) * p.sigma,
                                          p.sigma * (1.0 + 0.05 * (2 * rng.uniform() - 1))};
        const double d = hyperbolic::fisher_rao_distance(p, q, c);
        if (d > 0.1 || d < 1e-4) continue;
        ++checked;
        const double kl2 = 2.0 * gm_kl(p, q, c);
        CHECK(std::fabs(kl2 - d * d) / (d * d) <= 0.05);
    }
}

TEST_CASE("KL quadratic form uses exactly the metric tensor") {
    // cross-module identity: the second-order term of gm_kl is 1/2 v^T g v
    Rng rng(33);
    for (int i = 0; i < 50; ++i) {
        const Curvature c(0.5 + rng.uniform());
        const hyperbolic::GaussianPoint base{2 * rng.uniform() - 1, 0.5 + rng.uniform()};
        const auto g = metric_tensor(base, c);
        const double dmu = 1e-4 * (2 * rng.uniform() - 1);
        const double ds = 1e-4 * (2 * rng.uniform() - 1);
        const double quad = 0.5 * (dmu * dmu * g.g11 + ds * ds * g.g22);
        const double kl = gm_kl({base.mu + dmu, base.sigma + ds}, base, c);
        CHECK(kl == doctest::Approx(quad).epsilon(1e-3).scale(1e-14));
    }
}

TEST_SUITE_END();
