#include "gmvae/gaussian_manifold.hpp"

#include <cmath>

namespace gmvae::manifold {

namespace {
void require_sigma(const GaussianPoint& p) {
    if (!(p.sigma > 0.0)) throw domain_error("gaussian manifold: sigma must be > 0");
}
}  // namespace

MetricTensor2 metric_tensor(const GaussianPoint& p, Curvature c) {
    require_sigma(p);
    const double inv2 = 1.0 / (p.sigma * p.sigma);
    return {inv2, inv2 / c.c()};
}

double sqrt_det_metric(const GaussianPoint& p, Curvature c) {
    require_sigma(p);
    return 1.0 / (c.sqrt_c() * p.sigma * p.sigma);
}

ChristoffelSymbols christoffel(const GaussianPoint& p, Curvature c) {
    require_sigma(p);
    const double inv = 1.0 / p.sigma;
    ChristoffelSymbols out;
    out.gamma1 = {{{0.0, -inv}, {-inv, 0.0}}};
    out.gamma2 = {{{c.c() * inv, 0.0}, {0.0, -inv}}};
    return out;
}

double sectional_curvature(const GaussianPoint& p, Curvature c) {
    require_sigma(p);
    // Rm(mu, sigma, sigma, mu) / det g = (-1/sigma^4) / (1/(c sigma^4)).
    return -c.c();
}

double gaussian_kl(double m1, double s1, double m2, double s2) {
    if (!(s1 > 0.0) || !(s2 > 0.0)) throw domain_error("gaussian_kl: sigma must be > 0");
    const double dm = m1 - m2;
    return 0.5 * (2.0 * std::log(s2 / s1) + (s1 * s1 + dm * dm) / (s2 * s2) - 1.0);
}

double gm_kl_log(double mu1, double log_s1, double mu2, double log_s2, Curvature c) {
    const double dl = log_s1 - log_s2;
    const double dmu = mu1 - mu2;
    const double ratio2 = std::exp(2.0 * dl);                       // s1^2/s2^2
    const double dm2 = 2.0 * c.c() * dmu * dmu * std::exp(-2.0 * log_s2);
    return 0.5 * (-2.0 * dl + ratio2 + dm2 - 1.0) / (2.0 * c.c());
}

double gm_kl(const GaussianPoint& p, const GaussianPoint& q, Curvature c) {
    require_sigma(p);
    require_sigma(q);
    return gm_kl_log(p.mu, std::log(p.sigma), q.mu, std::log(q.sigma), c);
}

double kl_quadratic_residual(const GaussianPoint& base, double dmu, double dsigma,
                             Curvature c) {
    require_sigma(base);
    const double s1 = base.sigma + dsigma;
    if (!(s1 > 0.0)) throw domain_error("kl_quadratic_residual: sigma + dsigma must be > 0");
    (void)dmu;  // exact in dmu: the quadratic form absorbs it termwise
    const double r = s1 / base.sigma;
    const double quad_sigma = 0.5 * dsigma * dsigma / (c.c() * base.sigma * base.sigma);
    return 0.25 * (-2.0 * std::log(r) + r * r - 1.0) / c.c() - quad_sigma;
}

}  // namespace gmvae::manifold
