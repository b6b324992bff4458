#pragma once

#include <cmath>

#include "gmvae/errors.hpp"

namespace gmvae::hyperbolic {

/// Manifold curvature is -c, c > 0.
class Curvature {
public:
    explicit Curvature(double c) : c_(c) {
        if (!(c > 0.0) || !std::isfinite(c)) {
            throw domain_error("Curvature: c must be positive and finite");
        }
    }
    double c() const { return c_; }
    double sqrt_c() const { return std::sqrt(c_); }

private:
    double c_;
};

/// Point on the 2-D hyperboloid {<x,x>_L = -1/c, t > 0} in Minkowski 3-space.
struct LorentzPoint {
    double t = 0.0, x = 0.0, y = 0.0;
};

/// Tangent vector at `base`: <base, v>_L = 0.
struct LorentzTangent {
    double dt = 0.0, dx = 0.0, dy = 0.0;
    LorentzPoint base;
};

/// Point in the open disk of radius 1/sqrt(c).
struct PoincarePoint {
    double x = 0.0, y = 0.0;
};

/// Half-plane coordinates (mu, sigma), sigma > 0: a univariate Gaussian.
struct GaussianPoint {
    double mu = 0.0;
    double sigma = 1.0;
};

/// Minkowski product -u0 v0 + u1 v1 + u2 v2.
double lorentz_inner(const LorentzPoint& u, const LorentzPoint& v);
double lorentz_inner(const LorentzPoint& u, const LorentzTangent& v);
double lorentz_inner(const LorentzTangent& u, const LorentzTangent& v);

/// (1/sqrt(c), 0, 0).
LorentzPoint lorentz_origin(Curvature c);

/// Euclidean 2-vector -> tangent at the origin, zero first coordinate.
LorentzTangent lift_tangent(double u1, double u2, Curvature c);

/// cosh(a) x + sinh(a) v/a with a = sqrt(c <v,v>_L); a -> 0 by series.
/// The result is renormalized onto the constraint surface.
LorentzPoint lorentz_exp(const LorentzPoint& base, const LorentzTangent& v, Curvature c);

/// Inverse of lorentz_exp: (acosh(b)/sqrt(b^2-1)) (y - b x), b = -c<x,y>_L.
LorentzTangent lorentz_log(const LorentzPoint& base, const LorentzPoint& y, Curvature c);

/// Levi-Civita transport of a tangent at the origin to `dest`:
/// PT_{x->y}(v) = v + c <y,v>_L / (1 - c <x,y>_L) * (x + y).
LorentzTangent parallel_transport_from_origin(const LorentzTangent& v,
                                              const LorentzPoint& dest, Curvature c);
/// General transport between arbitrary points (used by the HWN density).
LorentzTangent parallel_transport(const LorentzPoint& from, const LorentzPoint& to,
                                  const LorentzTangent& v, Curvature c);

/// (1/sqrt(c)) acosh(-c <p,q>_L). Arguments slightly below 1 are clamped
/// (tolerance 1e-9); worse violations raise domain_error.
double lorentz_distance(const LorentzPoint& p, const LorentzPoint& q, Curvature c);

/// Poincare disk distance, raw formula. Deliberately unguarded: points on or
/// outside the boundary produce non-finite values, which the stability bench
/// counts.
double poincare_distance(const PoincarePoint& p, const PoincarePoint& q, Curvature c);

/// Closed-form geodesic distance on the Gaussian manifold with curvature -c.
double fisher_rao_distance(const GaussianPoint& p, const GaussianPoint& q, Curvature c);

// The six isometries. Denominators below 1e-12 raise domain_error instead of
// returning non-finite values, so the bench can tell "guarded" from NaN.
PoincarePoint iso_l_to_p(const LorentzPoint& p, Curvature c);
LorentzPoint iso_p_to_l(const PoincarePoint& p, Curvature c);
GaussianPoint iso_p_to_g(const PoincarePoint& p, Curvature c);
PoincarePoint iso_g_to_p(const GaussianPoint& p, Curvature c);
GaussianPoint iso_l_to_g(const LorentzPoint& p, Curvature c);   // T_c
LorentzPoint iso_g_to_l(const GaussianPoint& p, Curvature c);   // T_c^{-1}

/// Relative constraint residual |c <p,p>_L + 1| / max(1, c t^2); 0 on the
/// manifold up to rounding.
double lorentz_constraint_residual(const LorentzPoint& p, Curvature c);

}  // namespace gmvae::hyperbolic
