#include "gmvae/pgm.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <utility>

#include "gmvae/special_functions.hpp"

namespace gmvae::pgm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kQuietNan = std::numeric_limits<double>::quiet_NaN();

double checked_log(double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw domain_error(std::string(what) + " must be positive and finite");
    }
    return std::log(v);
}

}  // namespace

PgmNormalParams::PgmNormalParams(std::vector<double> alpha, const std::vector<double>& beta,
                                 const std::vector<double>& gamma2, Curvature curvature)
    : alpha_(std::move(alpha)), curvature_(curvature) {
    if (alpha_.empty() || beta.size() != alpha_.size() || gamma2.size() != alpha_.size()) {
        throw domain_error("PgmNormalParams: parameter arrays must share a positive length");
    }
    log_beta_.reserve(beta.size());
    log_gamma2_.reserve(gamma2.size());
    for (double b : beta) log_beta_.push_back(checked_log(b, "beta"));
    for (double g : gamma2) log_gamma2_.push_back(checked_log(g, "gamma2"));
    for (double a : alpha_) {
        if (!std::isfinite(a)) throw domain_error("PgmNormalParams: alpha must be finite");
    }
}

PgmNormalParams PgmNormalParams::from_log(std::vector<double> alpha,
                                          std::vector<double> log_beta,
                                          std::vector<double> log_gamma2, Curvature curvature) {
    if (alpha.empty() || log_beta.size() != alpha.size() || log_gamma2.size() != alpha.size()) {
        throw domain_error("PgmNormalParams: parameter arrays must share a positive length");
    }
    for (double v : alpha) {
        if (!std::isfinite(v)) throw domain_error("PgmNormalParams: alpha must be finite");
    }
    for (double v : log_beta) {
        if (!std::isfinite(v)) throw domain_error("PgmNormalParams: log_beta must be finite");
    }
    for (double v : log_gamma2) {
        if (!std::isfinite(v)) throw domain_error("PgmNormalParams: log_gamma2 must be finite");
    }
    PgmNormalParams out(curvature);
    out.alpha_ = std::move(alpha);
    out.log_beta_ = std::move(log_beta);
    out.log_gamma2_ = std::move(log_gamma2);
    return out;
}

PgmNormalParams PgmNormalParams::prior(int n_factors, Curvature curvature) {
    if (n_factors < 1) throw domain_error("PgmNormalParams::prior: n_factors must be >= 1");
    std::vector<double> zeros(static_cast<std::size_t>(n_factors), 0.0);
    return from_log(zeros, zeros, zeros, curvature);
}

double PgmNormalParams::beta(int i) const { return std::exp(log_beta_[i]); }
double PgmNormalParams::gamma2(int i) const { return std::exp(log_gamma2_[i]); }

double log_norm_factor_from_log(double log_gamma2, Curvature c) {
    if (!std::isfinite(log_gamma2)) throw domain_error("log_norm_factor: log_gamma2 not finite");
    const double log4c = std::log(4.0 * c.c());
    const double k = std::exp(-log4c - log_gamma2);  // 1 / (4 c gamma^2)
    return 0.5 * kLog2Pi - 0.5 * std::log(c.c()) - std::log(2.0) + 0.5 * log_gamma2 +
           std::lgamma(k) + k * (1.0 + log4c + log_gamma2);
}

double log_norm_factor(double gamma2, Curvature c) {
    return log_norm_factor_from_log(checked_log(gamma2, "gamma2"), c);
}

double log_density(const GaussianPoint& pt, const PgmNormalParams& p, int factor) {
    if (!(pt.sigma > 0.0)) throw domain_error("log_density: sigma must be > 0");
    const Curvature c = p.curvature();
    const double log_sigma = std::log(pt.sigma);
    const double kl = manifold::gm_kl_log(pt.mu, log_sigma, p.alpha(factor),
                                          p.log_beta(factor), c);
    return 3.0 * (log_sigma - p.log_beta(factor)) -
           log_norm_factor_from_log(p.log_gamma2(factor), c) -
           kl * std::exp(-p.log_gamma2(factor));
}

double log_density(const std::vector<GaussianPoint>& pts, const PgmNormalParams& p) {
    if (static_cast<int>(pts.size()) != p.n_factors()) {
        throw domain_error("log_density: point count must equal n_factors");
    }
    double total = 0.0;
    for (int i = 0; i < p.n_factors(); ++i) total += log_density(pts[i], p, i);
    return total;
}

FactorizedForm factorize(const PgmNormalParams& p, int factor) {
    const double log4c = std::log(4.0 * p.curvature().c());
    const double k = std::exp(-log4c - p.log_gamma2(factor));
    FactorizedForm out;
    out.normal.mean = p.alpha(factor);
    out.normal.std = std::exp(p.log_beta(factor) + 0.5 * p.log_gamma2(factor));
    out.gamma.shape = k + 1.0;
    out.gamma.rate = k * std::exp(-2.0 * p.log_beta(factor));
    return out;
}

std::vector<FactorizedForm> factorize(const PgmNormalParams& p) {
    std::vector<FactorizedForm> out;
    out.reserve(static_cast<std::size_t>(p.n_factors()));
    for (int i = 0; i < p.n_factors(); ++i) out.push_back(factorize(p, i));
    return out;
}

double factorized_log_density(const GaussianPoint& pt, const PgmNormalParams& p, int factor) {
    if (!(pt.sigma > 0.0)) throw domain_error("factorized_log_density: sigma must be > 0");
    const double log4c = std::log(4.0 * p.curvature().c());
    const double lg2 = p.log_gamma2(factor);
    const double lb = p.log_beta(factor);
    const double k = std::exp(-log4c - lg2);
    const double shape = k + 1.0;
    const double log_rate = -log4c - lg2 - 2.0 * lb;
    const double log_sigma = std::log(pt.sigma);

    const double log_std = lb + 0.5 * lg2;  // beta * gamma
    const double dm = pt.mu - p.alpha(factor);
    const double log_normal =
        -0.5 * kLog2Pi - log_std - 0.5 * dm * dm * std::exp(-2.0 * log_std);
    // Gamma density at z = sigma^2.
    const double log_gamma = shape * log_rate - std::lgamma(shape) +
                             (shape - 1.0) * 2.0 * log_sigma -
                             std::exp(log_rate + 2.0 * log_sigma);
    // d sigma^2 = 2 sigma d sigma.
    return log_normal + log_gamma + std::log(2.0) + log_sigma;
}

std::vector<std::vector<LatentDraw>> sample(const PgmNormalParams& p, Rng& rng, int count) {
    if (count < 0) throw domain_error("sample: count must be >= 0");
    const auto forms = factorize(p);
    std::vector<std::vector<LatentDraw>> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int d = 0; d < count; ++d) {
        std::vector<LatentDraw> draw(forms.size());
        for (std::size_t i = 0; i < forms.size(); ++i) {
            draw[i].mu = forms[i].normal.mean + forms[i].normal.std * rng.normal();
            const double z = rng.gamma(forms[i].gamma.shape) / forms[i].gamma.rate;
            draw[i].sigma = std::sqrt(z);
        }
        out.push_back(std::move(draw));
    }
    return out;
}

double gamma_kl_log(double a1, double log_b1, double a2, double log_b2) {
    if (!(a1 > 0.0) || !(a2 > 0.0)) throw domain_error("gamma_kl: shapes must be > 0");
    if (!std::isfinite(log_b1) || !std::isfinite(log_b2)) {
        throw domain_error("gamma_kl: log rates must be finite");
    }
    return a2 * (log_b1 - log_b2) - std::lgamma(a1) + std::lgamma(a2) +
           (a1 - a2) * sf::digamma(a1) - (1.0 - std::exp(log_b2 - log_b1)) * a1;
}

double gamma_kl(const GammaParams& p, const GammaParams& q) {
    return gamma_kl_log(p.shape, checked_log(p.rate, "rate"), q.shape,
                        checked_log(q.rate, "rate"));
}

double kl_divergence(const PgmNormalParams& p, const PgmNormalParams& q) {
    if (p.n_factors() != q.n_factors()) {
        throw domain_error("kl_divergence: factor counts differ");
    }
    if (p.curvature().c() != q.curvature().c()) {
        throw domain_error("kl_divergence: curvature mismatch");
    }
    const double log4c = std::log(4.0 * p.curvature().c());
    double total = 0.0;
    for (int i = 0; i < p.n_factors(); ++i) {
        const double ls1 = p.log_beta(i) + 0.5 * p.log_gamma2(i);
        const double ls2 = q.log_beta(i) + 0.5 * q.log_gamma2(i);
        const double dm = p.alpha(i) - q.alpha(i);
        const double kl_normal = 0.5 * (2.0 * (ls2 - ls1) + std::exp(2.0 * (ls1 - ls2)) +
                                        dm * dm * std::exp(-2.0 * ls2) - 1.0);
        const double a1 = std::exp(-log4c - p.log_gamma2(i)) + 1.0;
        const double a2 = std::exp(-log4c - q.log_gamma2(i)) + 1.0;
        const double log_b1 = -log4c - p.log_gamma2(i) - 2.0 * p.log_beta(i);
        const double log_b2 = -log4c - q.log_gamma2(i) - 2.0 * q.log_beta(i);
        total += kl_normal + gamma_kl_log(a1, log_b1, a2, log_b2);
    }
    return total;
}

McKlResult mc_kl_estimate(const PgmNormalParams& p, const PgmNormalParams& q,
                          int n_samples, std::uint64_t seed) {
    if (n_samples < 1000) throw domain_error("mc_kl_estimate: need n_samples >= 1000");
    Rng rng(seed);
    // sqrt(det g) is parameter-free, so it cancels in log p - log q.
    const auto forms = factorize(p);
    double mean = 0.0;
    double m2 = 0.0;
    long n = 0;
    for (int s = 0; s < n_samples; ++s) {
        double v = 0.0;
        for (int i = 0; i < p.n_factors(); ++i) {
            const double mu = forms[i].normal.mean + forms[i].normal.std * rng.normal();
            const double z = rng.gamma(forms[i].gamma.shape) / forms[i].gamma.rate;
            const GaussianPoint pt{mu, std::sqrt(z)};
            v += log_density(pt, p, i) - log_density(pt, q, i);
        }
        ++n;
        const double delta = v - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

namespace {

void require_spd(const HwnFactor& f) {
    if (!(f.sxx > 0.0) || !(f.syy > 0.0) || !(f.sxx * f.syy - f.sxy * f.sxy > 0.0)) {
        throw domain_error("HwnFactor: covariance must be positive definite");
    }
}

}  // namespace

std::vector<LorentzPoint> hwn_sample(const HwnParams& p, Rng& rng) {
    std::vector<LorentzPoint> out;
    out.reserve(p.factors.size());
    for (const auto& f : p.factors) {
        require_spd(f);
        const double l11 = std::sqrt(f.sxx);
        const double l21 = f.sxy / l11;
        const double l22 = std::sqrt(f.syy - l21 * l21);
        const double e1 = rng.normal();
        const double e2 = rng.normal();
        const double v1 = l11 * e1;
        const double v2 = l21 * e1 + l22 * e2;
        const auto u = hyperbolic::lift_tangent(v1, v2, p.curvature);
        const auto w = hyperbolic::parallel_transport_from_origin(u, f.mean, p.curvature);
        out.push_back(hyperbolic::lorentz_exp(f.mean, w, p.curvature));
    }
    return out;
}

double hwn_log_density_factor(const LorentzPoint& z, const HwnFactor& f, Curvature c) {
    require_spd(f);
    if (!std::isfinite(z.t) || !std::isfinite(z.x) || !std::isfinite(z.y)) {
        return kQuietNan;
    }
    const auto u = hyperbolic::lorentz_log(f.mean, z, c);
    const double r2 = std::max(0.0, hyperbolic::lorentz_inner(u, u));
    const auto back = hyperbolic::parallel_transport(f.mean, hyperbolic::lorentz_origin(c), u, c);
    const double v1 = back.dx;
    const double v2 = back.dy;
    const double det = f.sxx * f.syy - f.sxy * f.sxy;
    const double quad =
        (f.syy * v1 * v1 - 2.0 * f.sxy * v1 * v2 + f.sxx * v2 * v2) / det;
    const double log_normal = -kLog2Pi - 0.5 * std::log(det) - 0.5 * quad;
    // |det J| for one 2-D factor: sinh(sqrt(c) r) / (sqrt(c) r).
    const double log_det_j = std::log(sf::sinhc_sqrt(c.c() * r2));
    return log_normal - log_det_j;
}

double hwn_log_density(const std::vector<LorentzPoint>& z, const HwnParams& p) {
    if (z.size() != p.factors.size()) {
        throw domain_error("hwn_log_density: point count must equal factor count");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        total += hwn_log_density_factor(z[i], p.factors[i], p.curvature);
    }
    return total;
}

std::string sweep_kind_name(SweepKind kind) {
    switch (kind) {
        case SweepKind::PgmKl: return "pgm_kl";
        case SweepKind::PoincareDist: return "poincare_dist";
        case SweepKind::HwnLogPdf: return "hwn_logpdf";
    }
    return "unknown";
}

namespace {

SweepRow evaluate_row(SweepKind kind, double p1, double p2, double value) {
    SweepRow row{kind, p1, p2, value, SweepRow::Status::Finite};
    if (!std::isfinite(value)) row.status = SweepRow::Status::NonFinite;
    return row;
}

}  // namespace

std::vector<SweepRow> stability_sweep(SweepKind kind, const SweepOptions& opt) {
    const Curvature c(opt.curvature);
    std::vector<SweepRow> rows;
    if (kind == SweepKind::PgmKl) {
        const auto prior = PgmNormalParams::prior(1, c);
        for (int i = 0; i < opt.n_log_beta; ++i) {
            const double lb = opt.log_beta_min +
                              (opt.log_beta_max - opt.log_beta_min) * i /
                                  std::max(1, opt.n_log_beta - 1);
            for (int j = 0; j < opt.n_log_gamma2; ++j) {
                const double lg = opt.log_gamma2_min +
                                  (opt.log_gamma2_max - opt.log_gamma2_min) * j /
                                      std::max(1, opt.n_log_gamma2 - 1);
                try {
                    const auto q = PgmNormalParams::from_log({1.0}, {lb}, {lg}, c);
                    rows.push_back(evaluate_row(kind, lb, lg, kl_divergence(q, prior)));
                } catch (const domain_error&) {
                    rows.push_back({kind, lb, lg, kQuietNan, SweepRow::Status::Error});
                }
            }
        }
        return rows;
    }
    if (kind == SweepKind::PoincareDist) {
        const double radius = 1.0 / c.sqrt_c();
        std::vector<double> offsets;
        for (int e = opt.poincare_min_exp; e <= opt.poincare_max_exp; ++e) {
            offsets.push_back(std::pow(10.0, -e));
        }
        offsets.push_back(0.0);
        offsets.push_back(-1e-15);
        offsets.push_back(-1e-12);
        const hyperbolic::PoincarePoint origin{0.0, 0.0};
        for (double delta : offsets) {
            const hyperbolic::PoincarePoint pt{radius * (1.0 - delta), 0.0};
            try {
                const double d = hyperbolic::poincare_distance(pt, origin, c);
                rows.push_back(evaluate_row(kind, delta, 0.0, d));
            } catch (const domain_error&) {
                rows.push_back({kind, delta, 0.0, kQuietNan, SweepRow::Status::Error});
            }
        }
        return rows;
    }
    // HwnLogPdf: evaluate at z = exp_origin(r * e1) against a unit-covariance
    // wrapped normal at the origin.
    const HwnFactor f{hyperbolic::lorentz_origin(c), 1.0, 0.0, 1.0};
    for (double r : opt.hwn_norms) {
        try {
            const auto v = hyperbolic::lift_tangent(r, 0.0, c);
            const auto z = hyperbolic::lorentz_exp(f.mean, v, c);
            rows.push_back(evaluate_row(kind, r, 0.0, hwn_log_density_factor(z, f, c)));
        } catch (const domain_error&) {
            rows.push_back({kind, r, 0.0, kQuietNan, SweepRow::Status::Error});
        }
    }
    return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
    out << "kind,param1,param2,value,finite\n";
    for (const auto& row : rows) {
        out << sweep_kind_name(row.kind) << ',' << row.p1 << ',' << row.p2 << ',' << row.value
            << ',' << (row.status == SweepRow::Status::Finite ? 1 : 0) << '\n';
    }
}

}  // namespace gmvae::pgm
