// Python bindings for the numerical core: hyperbolic models, the Gaussian
// manifold layer, the PGM normal distribution and the special functions
// backing them. Points travel as plain tuples; curvature as a positive float.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gmvae/gaussian_manifold.hpp"
#include "gmvae/hyperbolic.hpp"
#include "gmvae/pgm.hpp"
#include "gmvae/rng.hpp"
#include "gmvae/special_functions.hpp"

namespace py = pybind11;
using namespace gmvae;
using namespace gmvae::hyperbolic;

namespace {

using Triple = std::tuple<double, double, double>;
using Pair = std::tuple<double, double>;

LorentzPoint to_lorentz(const Triple& t) {
    return {std::get<0>(t), std::get<1>(t), std::get<2>(t)};
}
Triple from_lorentz(const LorentzPoint& p) { return {p.t, p.x, p.y}; }
PoincarePoint to_poincare(const Pair& t) { return {std::get<0>(t), std::get<1>(t)}; }
Pair from_poincare(const PoincarePoint& p) { return {p.x, p.y}; }
GaussianPoint to_gaussian(const Pair& t) { return {std::get<0>(t), std::get<1>(t)}; }
Pair from_gaussian(const GaussianPoint& p) { return {p.mu, p.sigma}; }

}  // namespace

PYBIND11_MODULE(_gmvae, m) {
    m.doc() = "Gaussian-manifold geometry, PGM normal distribution and KL machinery";

    py::register_exception<gmvae::domain_error>(m, "DomainError", PyExc_ValueError);

    // hyperbolic models
    m.def("lorentz_inner", [](const Triple& u, const Triple& v) {
        return lorentz_inner(to_lorentz(u), to_lorentz(v));
    });
    m.def("lorentz_origin",
          [](double c) { return from_lorentz(lorentz_origin(Curvature(c))); });
    m.def("lorentz_exp", [](const Triple& base, const Triple& v, double c) {
        const Curvature cc(c);
        const auto b = to_lorentz(base);
        const LorentzTangent tan{std::get<0>(v), std::get<1>(v), std::get<2>(v), b};
        return from_lorentz(lorentz_exp(b, tan, cc));
    });
    m.def("lorentz_log", [](const Triple& base, const Triple& y, double c) {
        const auto t = lorentz_log(to_lorentz(base), to_lorentz(y), Curvature(c));
        return Triple{t.dt, t.dx, t.dy};
    });
    m.def("parallel_transport_from_origin",
          [](const Triple& v, const Triple& dest, double c) {
              const Curvature cc(c);
              const LorentzTangent tan{std::get<0>(v), std::get<1>(v), std::get<2>(v),
                                       lorentz_origin(cc)};
              const auto out = parallel_transport_from_origin(tan, to_lorentz(dest), cc);
              return Triple{out.dt, out.dx, out.dy};
          });
    m.def("lorentz_distance", [](const Triple& p, const Triple& q, double c) {
        return lorentz_distance(to_lorentz(p), to_lorentz(q), Curvature(c));
    });
    m.def("poincare_distance", [](const Pair& p, const Pair& q, double c) {
        return poincare_distance(to_poincare(p), to_poincare(q), Curvature(c));
    });
    m.def("fisher_rao_distance", [](const Pair& p, const Pair& q, double c) {
        return fisher_rao_distance(to_gaussian(p), to_gaussian(q), Curvature(c));
    });
    m.def("iso_l_to_p", [](const Triple& p, double c) {
        return from_poincare(iso_l_to_p(to_lorentz(p), Curvature(c)));
    });
    m.def("iso_p_to_l", [](const Pair& p, double c) {
        return from_lorentz(iso_p_to_l(to_poincare(p), Curvature(c)));
    });
    m.def("iso_p_to_g", [](const Pair& p, double c) {
        return from_gaussian(iso_p_to_g(to_poincare(p), Curvature(c)));
    });
    m.def("iso_g_to_p", [](const Pair& p, double c) {
        return from_poincare(iso_g_to_p(to_gaussian(p), Curvature(c)));
    });
    m.def("iso_l_to_g", [](const Triple& p, double c) {
        return from_gaussian(iso_l_to_g(to_lorentz(p), Curvature(c)));
    });
    m.def("iso_g_to_l", [](const Pair& p, double c) {
        return from_lorentz(iso_g_to_l(to_gaussian(p), Curvature(c)));
    });

    // Gaussian manifold layer
    m.def("metric_tensor", [](const Pair& p, double c) {
        const auto g = manifold::metric_tensor(to_gaussian(p), Curvature(c));
        return Pair{g.g11, g.g22};
    });
    m.def("sqrt_det_metric", [](const Pair& p, double c) {
        return manifold::sqrt_det_metric(to_gaussian(p), Curvature(c));
    });
    m.def("christoffel", [](const Pair& p, double c) {
        const auto ch = manifold::christoffel(to_gaussian(p), Curvature(c));
        return std::make_tuple(ch.gamma1, ch.gamma2);
    });
    m.def("sectional_curvature", [](const Pair& p, double c) {
        return manifold::sectional_curvature(to_gaussian(p), Curvature(c));
    });
    m.def("gaussian_kl", &manifold::gaussian_kl);
    m.def("gm_kl", [](const Pair& p, const Pair& q, double c) {
        return manifold::gm_kl(to_gaussian(p), to_gaussian(q), Curvature(c));
    });
    m.def("kl_quadratic_residual", [](const Pair& base, double dmu, double dsigma, double c) {
        return manifold::kl_quadratic_residual(to_gaussian(base), dmu, dsigma, Curvature(c));
    });

    // PGM normal distribution
    py::class_<pgm::PgmNormalParams>(m, "PgmNormalParams")
        .def(py::init([](std::vector<double> alpha, std::vector<double> beta,
                         std::vector<double> gamma2, double c) {
                 return pgm::PgmNormalParams(std::move(alpha), beta, gamma2, Curvature(c));
             }),
             py::arg("alpha"), py::arg("beta"), py::arg("gamma2"), py::arg("curvature"))
        .def_static("prior",
                    [](int n, double c) {
                        return pgm::PgmNormalParams::prior(n, Curvature(c));
                    })
        .def_property_readonly("n_factors", &pgm::PgmNormalParams::n_factors)
        .def("alpha", &pgm::PgmNormalParams::alpha)
        .def("beta", &pgm::PgmNormalParams::beta)
        .def("gamma2", &pgm::PgmNormalParams::gamma2);

    m.def("log_norm_factor",
          [](double gamma2, double c) { return pgm::log_norm_factor(gamma2, Curvature(c)); });
    m.def("log_density", [](const Pair& pt, const pgm::PgmNormalParams& p, int factor) {
        return pgm::log_density(to_gaussian(pt), p, factor);
    });
    m.def("factorized_log_density",
          [](const Pair& pt, const pgm::PgmNormalParams& p, int factor) {
              return pgm::factorized_log_density(to_gaussian(pt), p, factor);
          });
    m.def("factorize", [](const pgm::PgmNormalParams& p) {
        std::vector<std::tuple<Pair, Pair>> out;
        for (const auto& f : pgm::factorize(p)) {
            out.push_back({{f.normal.mean, f.normal.std}, {f.gamma.shape, f.gamma.rate}});
        }
        return out;
    });
    m.def("sample",
          [](const pgm::PgmNormalParams& p, std::uint64_t seed, int count) {
              Rng rng(seed);
              std::vector<std::vector<Pair>> out;
              for (const auto& draw : pgm::sample(p, rng, count)) {
                  std::vector<Pair> row;
                  for (const auto& d : draw) row.push_back({d.mu, d.sigma});
                  out.push_back(std::move(row));
              }
              return out;
          },
          py::arg("params"), py::arg("seed"), py::arg("count"));
    m.def("gamma_kl", [](double a1, double b1, double a2, double b2) {
        return pgm::gamma_kl({a1, b1}, {a2, b2});
    });
    m.def("kl_divergence", &pgm::kl_divergence);
    m.def("mc_kl_estimate",
          [](const pgm::PgmNormalParams& p, const pgm::PgmNormalParams& q, int n,
             std::uint64_t seed) {
              const auto r = pgm::mc_kl_estimate(p, q, n, seed);
              return Pair{r.estimate, r.standard_error};
          });
    m.def("stability_sweep", [](const std::string& kind) {
        pgm::SweepKind k;
        if (kind == "pgm_kl") {
            k = pgm::SweepKind::PgmKl;
        } else if (kind == "poincare_dist") {
            k = pgm::SweepKind::PoincareDist;
        } else if (kind == "hwn_logpdf") {
            k = pgm::SweepKind::HwnLogPdf;
        } else {
            throw gmvae::domain_error("unknown sweep kind: " + kind);
        }
        std::vector<std::tuple<double, double, double, bool>> out;
        for (const auto& row : pgm::stability_sweep(k)) {
            out.push_back({row.p1, row.p2, row.value,
                           row.status == pgm::SweepRow::Status::Finite});
        }
        return out;
    });

    // special functions
    m.def("digamma", &sf::digamma);
    m.def("trigamma", &sf::trigamma);
    m.def("reg_lower_gamma", &sf::reg_lower_gamma);
    m.def("gamma_quantile", &sf::gamma_quantile);
}
