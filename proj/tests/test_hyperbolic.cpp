#include "doctest.h"

#include <cmath>

#include "gmvae/hyperbolic.hpp"
#include "gmvae/rng.hpp"

using namespace gmvae;
using namespace gmvae::hyperbolic;

namespace {

GaussianPoint random_gaussian_point(Rng& rng) {
    return {200.0 * rng.uniform() - 100.0, 100.0 * rng.uniform() + 1e-12};
}

LorentzPoint random_lorentz_point(Rng& rng, Curvature c) {
    const auto v = lift_tangent(4.0 * rng.uniform() - 2.0, 4.0 * rng.uniform() - 2.0, c);
    return lorentz_exp(lorentz_origin(c), v, c);
}

}  // namespace

TEST_SUITE_BEGIN("hyperbolic");

TEST_CASE("lorentz_inner definition") {
    CHECK(lorentz_inner(LorentzPoint{1, 0, 0}, LorentzPoint{1, 0, 0}) == -1.0);
    CHECK(lorentz_inner(LorentzPoint{0, 1, 0}, LorentzPoint{0, 1, 0}) == 1.0);
    CHECK(lorentz_inner(LorentzPoint{1, 1, 0}, LorentzPoint{1, 0, 1}) == -1.0);
}

TEST_CASE("lorentz_origin satisfies the constraint") {
    CHECK(lorentz_origin(Curvature(1.0)).t == doctest::Approx(1.0));
    CHECK(lorentz_origin(Curvature(4.0)).t == doctest::Approx(0.5));
    CHECK(lorentz_origin(Curvature(0.5)).t == doctest::Approx(std::sqrt(2.0)));
    for (double c : {0.25, 1.0, 2.0}) {
        CHECK(lorentz_constraint_residual(lorentz_origin(Curvature(c)), Curvature(c)) <
              1e-12);
    }
}

TEST_CASE("lift_tangent: zero pad and orthogonality") {
    const Curvature c(1.0);
    auto v0 = lift_tangent(0.0, 0.0, c);
    CHECK(v0.dt == 0.0);
    CHECK(v0.dx == 0.0);
    CHECK(v0.dy == 0.0);
    auto v1 = lift_tangent(1.0, 0.0, c);
    CHECK(lorentz_inner(lorentz_origin(c), v1) == 0.0);
    auto v2 = lift_tangent(3.0, -4.0, c);
    CHECK(lorentz_inner(v2, v2) == doctest::Approx(25.0));
}

TEST_CASE("lorentz_exp: base case, zero tangent, constraint") {
    const Curvature c(1.0);
    const auto origin = lorentz_origin(c);
    auto p = lorentz_exp(origin, lift_tangent(1.0, 0.0, c), c);
    CHECK(p.t == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
    CHECK(p.x == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
    CHECK(p.y == doctest::Approx(0.0));

    auto same = lorentz_exp(p, LorentzTangent{0, 0, 0, p}, c);
    CHECK(same.t == doctest::Approx(p.t));
    CHECK(same.x == doctest::Approx(p.x));

    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const Curvature cc(0.25 + 2.0 * rng.uniform());
        const auto q = random_lorentz_point(rng, cc);
        CHECK(lorentz_constraint_residual(q, cc) < 1e-9);
    }
    CHECK_THROWS_AS(
        lorentz_exp(origin, LorentzTangent{std::nan(""), 0, 0, origin}, c),
        domain_error);
}

TEST_CASE("lorentz_log: inverse of exp, tangency, limits") {
    Rng rng(5);
    for (double cval : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const Curvature c(cval);
        const auto origin = lorentz_origin(c);
        for (int i = 0; i < 200; ++i) {
            // tangent with Lorentz norm up to 5 at a random base
            const auto base = random_lorentz_point(rng, c);
            auto raw = lift_tangent(2.0 * rng.uniform() - 1.0, 2.0 * rng.uniform() - 1.0, c);
            auto v = parallel_transport_from_origin(raw, base, c);
            const double norm = std::sqrt(std::max(0.0, lorentz_inner(v, v)));
            const double want = 5.0 * rng.uniform();
            if (norm > 1e-12) {
                const double s = want / norm;
                v.dt *= s;
                v.dx *= s;
                v.dy *= s;
            }
            const auto y = lorentz_exp(base, v, c);
            const auto back = lorentz_log(base, y, c);
            CHECK(std::fabs(back.dt - v.dt) < 1e-9);
            CHECK(std::fabs(back.dx - v.dx) < 1e-9);
            CHECK(std::fabs(back.dy - v.dy) < 1e-9);
            CHECK(std::fabs(lorentz_inner(base, back)) < 1e-9);
        }
        const auto zero = lorentz_log(origin, origin, c);
        CHECK(zero.dt == 0.0);
        CHECK(zero.dx == 0.0);
        CHECK(zero.dy == 0.0);
    }
    // beta < 1 beyond tolerance: constraint violation
    const Curvature c(1.0);
    CHECK_THROWS_AS(lorentz_log(lorentz_origin(c), LorentzPoint{0.5, 0, 0}, c), domain_error);
}

TEST_CASE("parallel transport: identity at origin, norm preservation, closed form") {
    const Curvature c(1.0);
    const auto origin = lorentz_origin(c);
    auto v = lift_tangent(0.3, -0.7, c);
    auto same = parallel_transport_from_origin(v, origin, c);
    CHECK(same.dt == doctest::Approx(v.dt));
    CHECK(same.dx == doctest::Approx(v.dx));
    CHECK(same.dy == doctest::Approx(v.dy));

    const LorentzPoint dest{std::cosh(1.0), std::sinh(1.0), 0.0};
    const auto moved = parallel_transport_from_origin(lift_tangent(0.0, 1.0, c), dest, c);
    // transport of (0,1,0) along the x-geodesic keeps it untouched,
    // while (0,1,0)->(sinh 1, cosh 1, 0) happens for the aligned tangent:
    const auto aligned = parallel_transport_from_origin(lift_tangent(1.0, 0.0, c), dest, c);
    CHECK(aligned.dt == doctest::Approx(std::sinh(1.0)).epsilon(1e-12));
    CHECK(aligned.dx == doctest::Approx(std::cosh(1.0)).epsilon(1e-12));
    CHECK(aligned.dy == doctest::Approx(0.0));
    CHECK(std::fabs(lorentz_inner(dest, moved)) < 1e-12);

    Rng rng(17);
    for (int i = 0; i < 1000; ++i) {
        const Curvature cc(0.25 + 2.0 * rng.uniform());
        const auto u = lift_tangent(6.0 * rng.uniform() - 3.0, 6.0 * rng.uniform() - 3.0, cc);
        const auto d = random_lorentz_point(rng, cc);
        const auto w = parallel_transport_from_origin(u, d, cc);
        CHECK(std::fabs(lorentz_inner(w, w) - lorentz_inner(u, u)) < 1e-9);
        CHECK(std::fabs(lorentz_inner(d, w)) < 1e-9);
    }
}

TEST_CASE("lorentz_distance: identity, unit speed, triangle inequality") {
    const Curvature c(1.0);
    const auto origin = lorentz_origin(c);
    CHECK(lorentz_distance(origin, origin, c) == doctest::Approx(0.0));
    const LorentzPoint p{std::cosh(1.0), std::sinh(1.0), 0.0};
    CHECK(lorentz_distance(origin, p, c) == doctest::Approx(1.0).epsilon(1e-12));

    Rng rng(23);
    for (int i = 0; i < 100; ++i) {
        const Curvature cc(0.25 + 2.0 * rng.uniform());
        const auto a = random_lorentz_point(rng, cc);
        const auto b = random_lorentz_point(rng, cc);
        const auto d = random_lorentz_point(rng, cc);
        const double ab = lorentz_distance(a, b, cc);
        const double bd = lorentz_distance(b, d, cc);
        const double ad = lorentz_distance(a, d, cc);
        CHECK(ad <= ab + bd + 1e-9);
        CHECK(ab == doctest::Approx(lorentz_distance(b, a, cc)));
    }
}

TEST_CASE("poincare_distance: identity, isometry oracle, boundary blow-up") {
    const Curvature c(1.0);
    const PoincarePoint z{0.1, -0.2};
    CHECK(poincare_distance(z, z, c) == doctest::Approx(0.0));

    Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
        const Curvature cc(0.25 + 2.0 * rng.uniform());
        const auto a = random_lorentz_point(rng, cc);
        const auto b = random_lorentz_point(rng, cc);
        const double dl = lorentz_distance(a, b, cc);
        const double dp = poincare_distance(iso_l_to_p(a, cc), iso_l_to_p(b, cc), cc);
        CHECK(std::fabs(dl - dp) < 1e-9);
    }

    // Boundary probe: the acosh argument blows past 1e2 near the rim.
    const Curvature cb(1.0);
    const PoincarePoint near_boundary{1.0 - 1e-13, 0.0};
    const double d = poincare_distance(near_boundary, PoincarePoint{0, 0}, cb);
    const bool flagged = !std::isfinite(d) || std::cosh(d) >= 1e2;
    CHECK(flagged);
    // on/our past the boundary: non-finite permitted (and expected)
    const double on_b = poincare_distance(PoincarePoint{1.0, 0.0}, PoincarePoint{0, 0}, cb);
    const double out_b =
        poincare_distance(PoincarePoint{1.0 + 1e-12, 0.0}, PoincarePoint{0, 0}, cb);
    CHECK_FALSE(std::isfinite(on_b));
    CHECK_FALSE(std::isfinite(out_b));
}

TEST_CASE("fisher_rao_distance: log-ratio collapse and symmetry") {
    const Curvature c(1.0);
    const GaussianPoint p{0.0, 1.0};
    const GaussianPoint q{0.0, std::exp(1.0)};
    CHECK(fisher_rao_distance(p, p, c) == doctest::Approx(0.0));
    CHECK(fisher_rao_distance(p, q, c) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fisher_rao_distance(q, p, c) == doctest::Approx(1.0).epsilon(1e-12));
    for (double cv : {0.25, 0.5, 1.5}) {
        const Curvature cc(cv);
        CHECK(fisher_rao_distance({3.0, 2.0}, {3.0, 6.0}, cc) ==
              doctest::Approx(std::log(3.0) / std::sqrt(cv)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(fisher_rao_distance({0.0, -1.0}, {0.0, 1.0}, c), domain_error);
}

TEST_CASE("isometries: pinned images and round trips") {
    for (double cv : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const Curvature c(cv);
        const auto origin = lorentz_origin(c);
        const auto disk0 = iso_l_to_p(origin, c);
        CHECK(disk0.x == doctest::Approx(0.0));
        CHECK(disk0.y == doctest::Approx(0.0));
        // T_c fixes the distinguished points
        const auto g0 = iso_l_to_g(origin, c);
        CHECK(g0.mu == doctest::Approx(0.0));
        CHECK(g0.sigma == doctest::Approx(1.0).epsilon(1e-12));
        const auto l0 = iso_g_to_l(GaussianPoint{0.0, 1.0}, c);
        CHECK(l0.t == doctest::Approx(1.0 / std::sqrt(cv)).epsilon(1e-12));
        CHECK(l0.x == doctest::Approx(0.0));
        CHECK(l0.y == doctest::Approx(0.0));
        // disk centre maps to the Gaussian-manifold origin
        const auto gd = iso_p_to_g(PoincarePoint{0.0, 0.0}, c);
        CHECK(gd.mu == doctest::Approx(0.0));
        CHECK(gd.sigma == doctest::Approx(1.0).epsilon(1e-12));
    }

    Rng rng(47);
    for (int i = 0; i < 1000; ++i) {
        const Curvature c(0.25 + 2.0 * rng.uniform());
        const auto lp = random_lorentz_point(rng, c);
        const auto back_l = iso_p_to_l(iso_l_to_p(lp, c), c);
        CHECK(std::fabs(back_l.t - lp.t) < 1e-9);
        CHECK(std::fabs(back_l.x - lp.x) < 1e-9);
        CHECK(std::fabs(back_l.y - lp.y) < 1e-9);

        const auto gp = random_gaussian_point(rng);
        const auto back_g = iso_p_to_g(iso_g_to_p(gp, c), c);
        CHECK(std::fabs(back_g.mu - gp.mu) < 1e-9 * std::max(1.0, std::fabs(gp.mu)));
        CHECK(std::fabs(back_g.sigma - gp.sigma) < 1e-9 * std::max(1.0, gp.sigma));

        const auto back_g2 = iso_l_to_g(iso_g_to_l(gp, c), c);
        CHECK(std::fabs(back_g2.mu - gp.mu) < 1e-9 * std::max(1.0, std::fabs(gp.mu)));
        CHECK(std::fabs(back_g2.sigma - gp.sigma) < 1e-9 * std::max(1.0, gp.sigma));

        // mutual consistency: T_c = (P->G) o (L->P)
        const auto via_p = iso_p_to_g(iso_l_to_p(lp, c), c);
        const auto direct = iso_l_to_g(lp, c);
        CHECK(std::fabs(via_p.mu - direct.mu) < 1e-9);
        CHECK(std::fabs(via_p.sigma - direct.sigma) < 1e-9);
    }
}

TEST_CASE("isometries preserve distances on wide half-plane samples") {
    Rng rng(2024);
    for (double cv : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const Curvature c(cv);
        double worst_gl = 0.0, worst_gp = 0.0, worst_pl = 0.0;
        for (int i = 0; i < 1000; ++i) {
            const auto a = random_gaussian_point(rng);
            const auto b = random_gaussian_point(rng);
            const double dg = fisher_rao_distance(a, b, c);
            const double dl = lorentz_distance(iso_g_to_l(a, c), iso_g_to_l(b, c), c);
            const double dp = poincare_distance(iso_g_to_p(a, c), iso_g_to_p(b, c), c);
            const double dpl = lorentz_distance(iso_p_to_l(iso_g_to_p(a, c), c),
                                                iso_p_to_l(iso_g_to_p(b, c), c), c);
            worst_gl = std::max(worst_gl, std::fabs(dg - dl));
            worst_gp = std::max(worst_gp, std::fabs(dg - dp));
            worst_pl = std::max(worst_pl, std::fabs(dp - dpl));
        }
        CHECK(worst_gl < 1e-9);
        CHECK(worst_gp < 1e-9);
        CHECK(worst_pl < 1e-9);
    }
}

TEST_CASE("guarded domains raise typed errors") {
    const Curvature c(1.0);
    CHECK_THROWS_AS(iso_l_to_g(LorentzPoint{1.0, 1.0, 0.5}, c), domain_error);
    CHECK_THROWS_AS(iso_g_to_l(GaussianPoint{0.0, 0.0}, c), domain_error);
    CHECK_THROWS_AS(iso_p_to_l(PoincarePoint{1.0, 0.0}, c), domain_error);
    CHECK_THROWS_AS(Curvature(0.0), domain_error);
    CHECK_THROWS_AS(Curvature(-1.0), domain_error);
}

TEST_SUITE_END();
