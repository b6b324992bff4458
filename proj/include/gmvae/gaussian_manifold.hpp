#pragma once

#include <array>

#include "gmvae/hyperbolic.hpp"

namespace gmvae::manifold {

using hyperbolic::Curvature;
using hyperbolic::GaussianPoint;

/// Diagonal 2x2 metric at a point of the Gaussian manifold.
struct MetricTensor2 {
    double g11 = 0.0;  // mu-mu component, 1/sigma^2
    double g22 = 0.0;  // sigma-sigma component, 1/(c sigma^2)
};

/// Christoffel symbols of the second kind; symmetric in the lower indices.
struct ChristoffelSymbols {
    std::array<std::array<double, 2>, 2> gamma1{};  // upper index mu
    std::array<std::array<double, 2>, 2> gamma2{};  // upper index sigma
};

MetricTensor2 metric_tensor(const GaussianPoint& p, Curvature c);

/// sqrt(det g) = 1 / (sqrt(c) sigma^2), the manifold volume element.
double sqrt_det_metric(const GaussianPoint& p, Curvature c);

ChristoffelSymbols christoffel(const GaussianPoint& p, Curvature c);

/// Constant sectional curvature, exactly -c by the closed form.
double sectional_curvature(const GaussianPoint& p, Curvature c);

/// KL(N(m1, s1) || N(m2, s2)) for univariate Gaussians (s* are stddevs).
double gaussian_kl(double m1, double s1, double m2, double s2);

/// Curvature-extended KL: gaussian_kl(sqrt(2c) mu1, s1, sqrt(2c) mu2, s2)/(2c),
/// computed in log-sigma arithmetic.
double gm_kl(const GaussianPoint& p, const GaussianPoint& q, Curvature c);
/// Same, parameterized by log sigma (stays finite at extreme scales).
double gm_kl_log(double mu1, double log_s1, double mu2, double log_s2, Curvature c);

/// gm_kl((mu+dmu, sigma+dsigma), (mu, sigma)) minus the quadratic form
/// 1/2 (dmu, dsigma)^T diag(1/sigma^2, 1/(c sigma^2)) (dmu, dsigma).
/// The dmu part cancels analytically, so dsigma = 0 gives exactly 0.
double kl_quadratic_residual(const GaussianPoint& base, double dmu, double dsigma,
                             Curvature c);

}  // namespace gmvae::manifold
