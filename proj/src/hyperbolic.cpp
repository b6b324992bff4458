#include "gmvae/hyperbolic.hpp"

#include <cmath>
#include <string>

#include "gmvae/special_functions.hpp"

namespace gmvae::hyperbolic {

namespace {

constexpr double kDenomEps = 1e-12;
constexpr double kAcoshTol = 1e-9;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) {
        throw domain_error(std::string("non-finite input: ") + what);
    }
}

}  // namespace

double lorentz_inner(const LorentzPoint& u, const LorentzPoint& v) {
    return -u.t * v.t + u.x * v.x + u.y * v.y;
}
double lorentz_inner(const LorentzPoint& u, const LorentzTangent& v) {
    return -u.t * v.dt + u.x * v.dx + u.y * v.dy;
}
double lorentz_inner(const LorentzTangent& u, const LorentzTangent& v) {
    return -u.dt * v.dt + u.dx * v.dx + u.dy * v.dy;
}

LorentzPoint lorentz_origin(Curvature c) {
    return {1.0 / c.sqrt_c(), 0.0, 0.0};
}

LorentzTangent lift_tangent(double u1, double u2, Curvature c) {
    return {0.0, u1, u2, lorentz_origin(c)};
}

double lorentz_constraint_residual(const LorentzPoint& p, Curvature c) {
    // Relative to the coordinate scale: the raw residual grows like
    // eps * c * t^2 even for points that are exact up to rounding.
    return std::fabs(c.c() * lorentz_inner(p, p) + 1.0) / std::max(1.0, c.c() * p.t * p.t);
}

LorentzPoint lorentz_exp(const LorentzPoint& base, const LorentzTangent& v, Curvature c) {
    require_finite(base.t, "exp base.t");
    require_finite(base.x, "exp base.x");
    require_finite(base.y, "exp base.y");
    require_finite(v.dt, "exp v.dt");
    require_finite(v.dx, "exp v.dx");
    require_finite(v.dy, "exp v.dy");

    double norm2 = lorentz_inner(v, v);
    if (norm2 < 0.0) {
        if (norm2 < -1e-9) throw domain_error("lorentz_exp: tangent has negative Lorentz norm");
        norm2 = 0.0;
    }
    const double s = c.c() * norm2;  // alpha^2
    const double ch = sf::cosh_sqrt(s);
    const double shc = sf::sinhc_sqrt(s);  // sinh(alpha)/alpha, = 1 at alpha = 0
    LorentzPoint out{ch * base.t + shc * v.dt, ch * base.x + shc * v.dx,
                     ch * base.y + shc * v.dy};
    // Renormalize t from the spatial part so composed operations do not drift.
    // Above 1e150 the squared norm would overflow and 1/c is far below one ulp.
    const double m = std::hypot(out.x, out.y);
    out.t = m > 1e150 ? m : std::sqrt(1.0 / c.c() + m * m);
    return out;
}

LorentzTangent lorentz_log(const LorentzPoint& base, const LorentzPoint& y, Curvature c) {
    if (y.t == base.t && y.x == base.x && y.y == base.y) {
        return {0.0, 0.0, 0.0, base};
    }
    double b = -c.c() * lorentz_inner(base, y);
    if (b < 1.0) {
        if (b < 1.0 - kAcoshTol) {
            throw domain_error("lorentz_log: points violate the manifold constraint");
        }
        b = 1.0;
    }
    const double coef = sf::acosh_ratio(b);  // -> 1 as y -> base
    return {coef * (y.t - b * base.t), coef * (y.x - b * base.x), coef * (y.y - b * base.y),
            base};
}

LorentzTangent parallel_transport(const LorentzPoint& from, const LorentzPoint& to,
                                  const LorentzTangent& v, Curvature c) {
    const double num = c.c() * lorentz_inner(to, v);
    const double den = 1.0 - c.c() * lorentz_inner(from, to);
    const double f = num / den;
    return {v.dt + f * (from.t + to.t), v.dx + f * (from.x + to.x),
            v.dy + f * (from.y + to.y), to};
}

LorentzTangent parallel_transport_from_origin(const LorentzTangent& v,
                                              const LorentzPoint& dest, Curvature c) {
    return parallel_transport(lorentz_origin(c), dest, v, c);
}

double lorentz_distance(const LorentzPoint& p, const LorentzPoint& q, Curvature c) {
    double arg = -c.c() * lorentz_inner(p, q);
    if (arg < 1.0) {
        if (arg < 1.0 - kAcoshTol) {
            throw domain_error("lorentz_distance: acosh argument below 1");
        }
        arg = 1.0;
    }
    return std::acosh(arg) / c.sqrt_c();
}

double poincare_distance(const PoincarePoint& p, const PoincarePoint& q, Curvature c) {
    const double dx = p.x - q.x;
    const double dy = p.y - q.y;
    const double d2 = dx * dx + dy * dy;
    const double np = 1.0 - c.c() * (p.x * p.x + p.y * p.y);
    const double nq = 1.0 - c.c() * (q.x * q.x + q.y * q.y);
    return std::acosh(1.0 + 2.0 * c.c() * d2 / (np * nq)) / c.sqrt_c();
}

double fisher_rao_distance(const GaussianPoint& p, const GaussianPoint& q, Curvature c) {
    if (!(p.sigma > 0.0) || !(q.sigma > 0.0)) {
        throw domain_error("fisher_rao_distance: sigma must be > 0");
    }
    const double dmu2 = c.c() * (p.mu - q.mu) * (p.mu - q.mu);
    const double plus = std::sqrt(dmu2 + (p.sigma + q.sigma) * (p.sigma + q.sigma));
    const double minus = std::sqrt(dmu2 + (p.sigma - q.sigma) * (p.sigma - q.sigma));
    // log((plus+minus)/(plus-minus)) without cancellation:
    // plus^2 - minus^2 = 4 sigma1 sigma2 exactly.
    return (2.0 * std::log(plus + minus) - std::log(4.0 * p.sigma * q.sigma)) / c.sqrt_c();
}

PoincarePoint iso_l_to_p(const LorentzPoint& p, Curvature c) {
    const double den = c.sqrt_c() * p.t + 1.0;
    if (std::fabs(den) < kDenomEps) throw domain_error("iso_l_to_p: degenerate denominator");
    return {p.x / den, p.y / den};
}

LorentzPoint iso_p_to_l(const PoincarePoint& p, Curvature c) {
    const double s = c.c() * (p.x * p.x + p.y * p.y);
    const double den = 1.0 - s;
    if (std::fabs(den) < kDenomEps) throw domain_error("iso_p_to_l: point on the disk boundary");
    return {(1.0 + s) / (c.sqrt_c() * den), 2.0 * p.x / den, 2.0 * p.y / den};
}

GaussianPoint iso_p_to_g(const PoincarePoint& p, Curvature c) {
    const double a = c.sqrt_c() * p.x - 1.0;
    const double den = a * a + c.c() * p.y * p.y;
    if (std::fabs(den) < kDenomEps) throw domain_error("iso_p_to_g: degenerate denominator");
    const double mu = -2.0 * p.y / den;
    const double sigma = (1.0 - c.c() * (p.x * p.x + p.y * p.y)) / den;
    if (!(sigma > 0.0)) throw domain_error("iso_p_to_g: image has nonpositive sigma");
    return {mu, sigma};
}

PoincarePoint iso_g_to_p(const GaussianPoint& p, Curvature c) {
    if (!(p.sigma > 0.0)) throw domain_error("iso_g_to_p: sigma must be > 0");
    const double den = c.c() * p.mu * p.mu + (p.sigma + 1.0) * (p.sigma + 1.0);
    if (std::fabs(den) < kDenomEps) throw domain_error("iso_g_to_p: degenerate denominator");
    const double x = (c.sqrt_c() * p.mu * p.mu + (p.sigma * p.sigma - 1.0) / c.sqrt_c()) / den;
    const double y = -2.0 * p.mu / den;
    return {x, y};
}

GaussianPoint iso_l_to_g(const LorentzPoint& p, Curvature c) {
    const double den = p.t - p.x;
    if (den < kDenomEps) throw domain_error("iso_l_to_g: t - x not positive");
    const double scd = c.sqrt_c() * den;
    return {-p.y / scd, 1.0 / scd};
}

LorentzPoint iso_g_to_l(const GaussianPoint& p, Curvature c) {
    if (!(p.sigma > kDenomEps)) throw domain_error("iso_g_to_l: sigma must be > 0");
    const double cmu2 = c.c() * p.mu * p.mu;
    const double s2 = p.sigma * p.sigma;
    const double den = 2.0 * c.sqrt_c() * p.sigma;
    return {(1.0 + cmu2 + s2) / den, (-1.0 + cmu2 + s2) / den, -p.mu / p.sigma};
}

}  // namespace gmvae::hyperbolic
