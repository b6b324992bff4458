#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "gmvae/gaussian_manifold.hpp"
#include "gmvae/hyperbolic.hpp"
#include "gmvae/rng.hpp"

namespace gmvae::pgm {

using hyperbolic::Curvature;
using hyperbolic::GaussianPoint;
using hyperbolic::LorentzPoint;

struct NormalParams {
    double mean = 0.0;
    double std = 1.0;
};

/// Gamma(z; a, b) = b^a / Gamma(a) * z^{a-1} exp(-b z).
struct GammaParams {
    double shape = 1.0;
    double rate = 1.0;
};

/// Normal x Gamma pair from the conjugate factorization of one factor.
struct FactorizedForm {
    NormalParams normal;  // law of mu
    GammaParams gamma;    // law of sigma^2
};

/// Per-factor (alpha, beta, gamma^2) at a fixed curvature. beta and gamma^2
/// are stored as logs; every downstream formula is written in log-parameters,
/// which is what keeps the KL finite at extreme scales.
class PgmNormalParams {
public:
    PgmNormalParams(std::vector<double> alpha, const std::vector<double>& beta,
                    const std::vector<double>& gamma2, Curvature curvature);
    static PgmNormalParams from_log(std::vector<double> alpha, std::vector<double> log_beta,
                                    std::vector<double> log_gamma2, Curvature curvature);
    /// K(0, I, I): alpha = 0, beta = 1, gamma^2 = 1 per factor.
    static PgmNormalParams prior(int n_factors, Curvature curvature);

    int n_factors() const { return static_cast<int>(alpha_.size()); }
    Curvature curvature() const { return curvature_; }
    double alpha(int i) const { return alpha_[i]; }
    double log_beta(int i) const { return log_beta_[i]; }
    double log_gamma2(int i) const { return log_gamma2_[i]; }
    double beta(int i) const;
    double gamma2(int i) const;

private:
    PgmNormalParams(Curvature c) : curvature_(c) {}
    std::vector<double> alpha_, log_beta_, log_gamma2_;
    Curvature curvature_;
};

/// log Z(c, gamma^2): normalizing factor of the density, via log-gamma.
double log_norm_factor(double gamma2, Curvature c);
double log_norm_factor_from_log(double log_gamma2, Curvature c);

/// Log density of one factor at (mu, sigma), taken with respect to Lebesgue
/// measure on (mu, sigma) divided by the volume element; the manifold-measure
/// density is this plus log sqrt_det_metric.
double log_density(const GaussianPoint& pt, const PgmNormalParams& p, int factor);
/// Sum over factors; pts.size() must equal n_factors.
double log_density(const std::vector<GaussianPoint>& pts, const PgmNormalParams& p);

/// Normal(alpha, beta*gamma) and Gamma(1/(4 c gamma^2) + 1, 1/(4 c beta^2 gamma^2)).
FactorizedForm factorize(const PgmNormalParams& p, int factor);
std::vector<FactorizedForm> factorize(const PgmNormalParams& p);

/// log of the (mu, sigma) density induced by the factorized sampling
/// (mu ~ Normal, sigma^2 ~ Gamma): log N + log Gamma(sigma^2) + log(2 sigma).
/// Pointwise equal to log_density + log sqrt_det_metric.
double factorized_log_density(const GaussianPoint& pt, const PgmNormalParams& p, int factor);

struct LatentDraw {
    double mu = 0.0;
    double sigma = 1.0;
};

/// count draws of all factors; per draw, per factor: one normal then one
/// gamma variate, so the stream layout is reproducible.
std::vector<std::vector<LatentDraw>> sample(const PgmNormalParams& p, Rng& rng, int count);

/// Closed-form KL between two Gamma laws; log-rate arithmetic inside.
double gamma_kl(const GammaParams& p, const GammaParams& q);
double gamma_kl_log(double a1, double log_b1, double a2, double log_b2);

/// Closed-form KL between two PGM normals (manifold-measure densities):
/// sum over factors of Normal-KL + Gamma-KL of the factorized forms.
double kl_divergence(const PgmNormalParams& p, const PgmNormalParams& q);

struct McKlResult {
    double estimate = 0.0;
    double standard_error = 0.0;
};

/// Monte Carlo oracle for kl_divergence: mean of log p - log q under p.
McKlResult mc_kl_estimate(const PgmNormalParams& p, const PgmNormalParams& q,
                          int n_samples, std::uint64_t seed);

/// One 2-D Lorentz factor of a hyperbolic wrapped normal.
struct HwnFactor {
    LorentzPoint mean;
    double sxx = 1.0, sxy = 0.0, syy = 1.0;  // tangent-space covariance
};

struct HwnParams {
    std::vector<HwnFactor> factors;
    Curvature curvature;
};

/// z = exp_mu(PT_{0->mu}(lift(v))), v ~ N(0, Sigma). Overflow in cosh/sinh
/// may produce non-finite coordinates; the stability bench counts those.
std::vector<LorentzPoint> hwn_sample(const HwnParams& p, Rng& rng);

/// Change-of-variable log density of one factor; returns NaN on non-finite
/// inputs instead of throwing (the bench treats non-finite as data).
double hwn_log_density_factor(const LorentzPoint& z, const HwnFactor& f, Curvature c);
double hwn_log_density(const std::vector<LorentzPoint>& z, const HwnParams& p);

enum class SweepKind { PgmKl, PoincareDist, HwnLogPdf };

struct SweepRow {
    SweepKind kind;
    double p1 = 0.0, p2 = 0.0;
    double value = 0.0;
    enum class Status { Finite, NonFinite, Error } status = Status::Finite;
};

struct SweepOptions {
    double curvature = 1.0;
    double log_beta_min = -20.0, log_beta_max = 20.0;
    int n_log_beta = 41;
    double log_gamma2_min = -10.0, log_gamma2_max = 10.0;
    int n_log_gamma2 = 21;
    int poincare_min_exp = 1, poincare_max_exp = 15;
    std::vector<double> hwn_norms = {1,   5,   10,  50,  100, 300, 500,
                                     650, 700, 708, 710, 720, 750, 800};
};

/// Evaluates the target quantity over the grid; exceptions become
/// Status::Error rows, non-finite values Status::NonFinite.
std::vector<SweepRow> stability_sweep(SweepKind kind, const SweepOptions& opt = {});

/// CSV with header kind,param1,param2,value,finite (finite: 1 or 0), LF endings.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

std::string sweep_kind_name(SweepKind kind);

}  // namespace gmvae::pgm
