#pragma once

// Test-side oracles, independent of the library paths they check:
// Gauss-Legendre quadrature, finite-difference differential geometry,
// rank correlation and a generic finite-difference gradient check.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include "gmvae/autodiff.hpp"
#include "gmvae/gaussian_manifold.hpp"
#include "gmvae/pgm.hpp"
#include "gmvae/special_functions.hpp"

namespace oracles {

inline void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.assign(n, 0.0);
    w.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1.0) * z * p2 - j * p3) / (j + 1.0);
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double z1 = z;
            z = z1 - p1 / pp;
            if (std::fabs(z - z1) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
}

/// Tensorized Gauss-Legendre integral of f over [ax,bx] x [ay,by].
inline double integrate_2d(const std::function<double(double, double)>& f, double ax,
                           double bx, double ay, double by, int n) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const double cx = 0.5 * (bx - ax), mx = 0.5 * (bx + ax);
    const double cy = 0.5 * (by - ay), my = 0.5 * (by + ay);
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        const double xi = mx + cx * x[i];
        double row = 0.0;
        for (int j = 0; j < n; ++j) {
            row += w[j] * f(xi, my + cy * x[j]);
        }
        total += w[i] * row;
    }
    return total * cx * cy;
}

inline double integrate_1d(const std::function<double(double)>& f, double a, double b,
                           int n) {
    std::vector<double> x, w;
    gauss_legendre(n, x, w);
    const double c = 0.5 * (b - a), m = 0.5 * (b + a);
    double total = 0.0;
    for (int i = 0; i < n; ++i) total += w[i] * f(m + c * x[i]);
    return total * c;
}

using gmvae::hyperbolic::Curvature;
using gmvae::hyperbolic::GaussianPoint;

/// Christoffel symbols from central differences of the metric alone.
inline gmvae::manifold::ChristoffelSymbols fd_christoffel(const GaussianPoint& p,
                                                          Curvature c) {
    const double h = 1e-4 * std::max(1.0, std::fabs(p.sigma));
    auto g = [&](int i, int j, double mu, double sigma) {
        const auto m = gmvae::manifold::metric_tensor({mu, sigma}, c);
        if (i != j) return 0.0;
        return i == 0 ? m.g11 : m.g22;
    };
    // dg[l][i][j] = d g_ij / d x_l
    double dg[2][2][2];
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            dg[0][i][j] = (g(i, j, p.mu + h, p.sigma) - g(i, j, p.mu - h, p.sigma)) / (2 * h);
            dg[1][i][j] = (g(i, j, p.mu, p.sigma + h) - g(i, j, p.mu, p.sigma - h)) / (2 * h);
        }
    }
    const auto m0 = gmvae::manifold::metric_tensor(p, c);
    const double ginv[2] = {1.0 / m0.g11, 1.0 / m0.g22};
    gmvae::manifold::ChristoffelSymbols out;
    for (int k = 0; k < 2; ++k) {
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                // diagonal metric: only l = k contributes
                const double v = 0.5 * ginv[k] * (dg[i][j][k] + dg[j][i][k] - dg[k][i][j]);
                if (k == 0) {
                    out.gamma1[i][j] = v;
                } else {
                    out.gamma2[i][j] = v;
                }
            }
        }
    }
    return out;
}

/// Gaussian curvature from metric evaluations only (diagonal Brioschi form),
/// using direct first/second central stencils.
inline double fd_gaussian_curvature(const GaussianPoint& p, Curvature c) {
    auto E = [&](double mu, double sigma) {
        return gmvae::manifold::metric_tensor({mu, sigma}, c).g11;
    };
    auto G = [&](double mu, double sigma) {
        return gmvae::manifold::metric_tensor({mu, sigma}, c).g22;
    };
    auto W = [&](double mu, double sigma) { return std::sqrt(E(mu, sigma) * G(mu, sigma)); };
    const double h = 1e-4 * std::max(1.0, std::fabs(p.sigma));
    const double mu = p.mu, sg = p.sigma;

    const double E_s = (E(mu, sg + h) - E(mu, sg - h)) / (2 * h);
    const double E_ss = (E(mu, sg + h) - 2 * E(mu, sg) + E(mu, sg - h)) / (h * h);
    const double G_m = (G(mu + h, sg) - G(mu - h, sg)) / (2 * h);
    const double G_mm = (G(mu + h, sg) - 2 * G(mu, sg) + G(mu - h, sg)) / (h * h);
    const double W_m = (W(mu + h, sg) - W(mu - h, sg)) / (2 * h);
    const double W_s = (W(mu, sg + h) - W(mu, sg - h)) / (2 * h);
    const double w0 = W(mu, sg);

    const double term_mu = (G_mm - G_m * W_m / w0) / w0;
    const double term_sg = (E_ss - E_s * W_s / w0) / w0;
    return -(term_mu + term_sg) / (2.0 * w0);
}

/// Spearman rank correlation (average ranks on ties).
inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& v) {
        const int n = static_cast<int>(v.size());
        std::vector<int> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(), [&](int i, int j) { return v[i] < v[j]; });
        std::vector<double> r(n);
        int i = 0;
        while (i < n) {
            int j = i;
            while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * (i + j) + 1.0;
            for (int k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a);
    const auto rb = ranks(b);
    const int n = static_cast<int>(a.size());
    double ma = 0, mb = 0;
    for (int i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double num = 0, da = 0, db = 0;
    for (int i = 0; i < n; ++i) {
        num += (ra[i] - ma) * (rb[i] - mb);
        da += (ra[i] - ma) * (ra[i] - ma);
        db += (rb[i] - mb) * (rb[i] - mb);
    }
    if (da == 0 || db == 0) return 0.0;
    return num / std::sqrt(da * db);
}

/// Total mass of exp(log_density) * sqrt(det g) of one factor over the
/// region [alpha +- 10 beta gamma] x [Gamma quantiles 1e-6, 1 - 1e-6],
/// tensorized Gauss-Legendre.
inline double pgm_normalization_quadrature(const gmvae::pgm::PgmNormalParams& p, int factor,
                                           int nodes = 400) {
    const auto ff = gmvae::pgm::factorize(p, factor);
    const double mu_lo = ff.normal.mean - 10.0 * ff.normal.std;
    const double mu_hi = ff.normal.mean + 10.0 * ff.normal.std;
    const double z_lo = gmvae::sf::gamma_quantile(ff.gamma.shape, 1e-6) / ff.gamma.rate;
    const double z_hi = gmvae::sf::gamma_quantile(ff.gamma.shape, 1.0 - 1e-6) / ff.gamma.rate;
    const auto c = p.curvature();
    auto f = [&](double mu, double sigma) {
        const gmvae::hyperbolic::GaussianPoint pt{mu, sigma};
        return std::exp(gmvae::pgm::log_density(pt, p, factor)) *
               gmvae::manifold::sqrt_det_metric(pt, c);
    };
    return integrate_2d(f, mu_lo, mu_hi, std::sqrt(z_lo), std::sqrt(z_hi), nodes);
}

/// Max relative error between reverse-mode gradients and central differences.
/// Perturbs every element of every parameter, rebuilding the forward pass.
inline double gradcheck(const std::function<gmvae::ad::NodePtr()>& build_loss,
                        const std::vector<gmvae::ad::NodePtr>& params, double step,
                        double floor = 1e-6) {
    auto root = build_loss();
    gmvae::ad::backward(root);
    std::vector<gmvae::ad::Tensor> grads;
    grads.reserve(params.size());
    for (const auto& p : params) grads.push_back(p->grad);

    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& value = params[k]->value;
        for (int i = 0; i < value.size(); ++i) {
            const double keep = value.data()[i];
            value.data()[i] = keep + step;
            const double up = build_loss()->scalar();
            value.data()[i] = keep - step;
            const double dn = build_loss()->scalar();
            value.data()[i] = keep;
            const double fd = (up - dn) / (2.0 * step);
            const double ad_g = grads[k].data()[i];
            const double rel =
                std::fabs(ad_g - fd) / std::max({floor, std::fabs(ad_g), std::fabs(fd)});
            worst = std::max(worst, rel);
        }
    }
    return worst;
}

}  // namespace oracles
