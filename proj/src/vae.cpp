#include "gmvae/vae.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <utility>

#include "json.hpp"

namespace gmvae::vae {

namespace {

constexpr double kLogGamma2Lo = -18.420680743952367;  // log 1e-8
constexpr double kLogGamma2Hi = 18.420680743952367;   // log 1e8
constexpr double kLogStdLo = -9.210340371976182;      // Euclidean head clamp
constexpr double kLogStdHi = 9.210340371976182;

double stable_softplus(double x) {
    if (x > 0.0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

double logsumexp(const std::vector<double>& v) {
    double mx = v[0];
    for (double x : v) mx = std::max(mx, x);
    if (!std::isfinite(mx)) return mx;
    double s = 0.0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s);
}

double bernoulli_row_ll(const ad::Tensor& logits, int row, const ad::Tensor& x, int xrow) {
    double ll = 0.0;
    for (int j = 0; j < logits.cols(); ++j) {
        const double z = logits(row, j);
        ll += x(xrow, j) * z - stable_softplus(z);
    }
    return ll;
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
    return kind == ModelKind::Gm ? "gm" : "euclidean";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "gm") return ModelKind::Gm;
    if (name == "euclidean") return ModelKind::Euclidean;
    throw config_error("unknown model kind: " + name);
}

void VaeConfig::validate() const {
    if (n_factors < 1) throw config_error("config: n_factors must be >= 1");
    if (hidden < 1) throw config_error("config: hidden must be >= 1");
    if (input_dim < 1) throw config_error("config: input_dim must be >= 1");
    if (batch_size < 1) throw config_error("config: batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw config_error("config: learning_rate must be > 0");
    if (epochs < 0) throw config_error("config: epochs must be >= 0");
    if (!(curvature > 0.0) || !std::isfinite(curvature)) {
        throw config_error("config: curvature must be positive and finite");
    }
}

std::string VaeConfig::to_json() const {
    nlohmann::json j;
    j["model"] = model_kind_name(kind);
    j["n_factors"] = n_factors;
    j["curvature"] = curvature;
    j["hidden"] = hidden;
    j["input_dim"] = input_dim;
    j["batch_size"] = batch_size;
    j["learning_rate"] = learning_rate;
    j["epochs"] = epochs;
    j["seed"] = seed;
    return j.dump();
}

VaeConfig VaeConfig::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: invalid JSON: ") + e.what());
    }
    static const char* kKeys[] = {"model",      "n_factors",     "curvature",
                                  "hidden",     "input_dim",     "batch_size",
                                  "learning_rate", "epochs",     "seed"};
    for (const char* k : kKeys) {
        if (!j.contains(k)) throw config_error(std::string("config: missing key ") + k);
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : kKeys) known = known || (it.key() == k);
        if (!known) throw config_error("config: unknown key " + it.key());
    }
    VaeConfig cfg;
    try {
        cfg.kind = model_kind_from_name(j["model"].get<std::string>());
        cfg.n_factors = j["n_factors"].get<int>();
        cfg.curvature = j["curvature"].get<double>();
        cfg.hidden = j["hidden"].get<int>();
        cfg.input_dim = j["input_dim"].get<int>();
        cfg.batch_size = j["batch_size"].get<int>();
        cfg.learning_rate = j["learning_rate"].get<double>();
        cfg.epochs = j["epochs"].get<int>();
        cfg.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: bad value type: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

namespace {

ad::Tensor glorot(int rows, int cols, Rng& rng) {
    ad::Tensor w(rows, cols);
    const double bound = std::sqrt(6.0 / (rows + cols));
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) w(i, j) = bound * (2.0 * rng.uniform() - 1.0);
    }
    return w;
}

}  // namespace

Vae::Vae(const VaeConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    Rng init = Rng(cfg_.seed).split(0);
    const int n = cfg_.n_factors;
    const int enc_out = cfg_.kind == ModelKind::Gm ? 3 * n : 4 * n;
    const int dec_in = cfg_.latent_dim();
    auto add_linear = [&](const std::string& name, int in, int out) {
        params_.push_back(ad::parameter(glorot(in, out, init)));
        names_.push_back(name + ".w");
        params_.push_back(ad::parameter(ad::Tensor(1, out)));
        names_.push_back(name + ".b");
    };
    add_linear("enc.l1", cfg_.input_dim, cfg_.hidden);
    add_linear("enc.l2", cfg_.hidden, cfg_.hidden);
    add_linear("enc.l3", cfg_.hidden, enc_out);
    add_linear("dec.l1", dec_in, cfg_.hidden);
    add_linear("dec.l2", cfg_.hidden, cfg_.hidden);
    add_linear("dec.l3", cfg_.hidden, cfg_.input_dim);
}

void Vae::set_output_bias(const ad::Tensor& logits) {
    auto& bias = params_[11]->value;
    if (!bias.same_shape(logits)) throw domain_error("set_output_bias: shape mismatch");
    bias = logits;
}

bool Vae::output_bias_is_zero() const {
    const auto& bias = params_[11]->value;
    for (int i = 0; i < bias.size(); ++i) {
        if (bias.data()[i] != 0.0) return false;
    }
    return true;
}

ad::NodePtr Vae::encoder_forward(const ad::NodePtr& x) const {
    auto h1 = ad::tanh_op(ad::affine(x, params_[0], params_[1]));
    auto h2 = ad::tanh_op(ad::affine(h1, params_[2], params_[3]));
    return ad::affine(h2, params_[4], params_[5]);
}

ad::NodePtr Vae::decoder_forward(const ad::NodePtr& feat) const {
    auto h1 = ad::tanh_op(ad::affine(feat, params_[6], params_[7]));
    auto h2 = ad::tanh_op(ad::affine(h1, params_[8], params_[9]));
    return ad::affine(h2, params_[10], params_[11]);
}

Vae::GmLatentNodes Vae::gm_head(const ad::NodePtr& enc_out) const {
    const int n = cfg_.n_factors;
    const double c = cfg_.curvature;
    const double sqc = std::sqrt(c);
    const double log4c = std::log(4.0 * c);

    auto u1 = ad::slice_cols(enc_out, 0, n);
    auto u2 = ad::slice_cols(enc_out, n, 2 * n);
    auto raw = ad::slice_cols(enc_out, 2 * n, 3 * n);

    // (alpha, beta) = T_c(exp_origin(lift(u))), written in the smooth kernels
    // cosh(sqrt(.)) and sinh(sqrt(.))/sqrt(.) of s = c |u|^2.
    auto s = ad::scale(ad::add(ad::square(u1), ad::square(u2)), c);
    auto ch = ad::cosh_sqrt_op(s);
    auto sh = ad::sinhc_sqrt_op(s);
    auto denom = ad::sub(ch, ad::scale(ad::mul(sh, u1), sqc));  // >= e^{-|u|sqrt(c)} > 0
    auto log_beta = ad::neg(ad::log_op(denom));
    auto beta = ad::exp_op(log_beta);
    // T_c(exp_0(lift u)) = (-S u2 / D, 1 / D) with D = sqrt(c)(t - x).
    auto alpha = ad::neg(ad::mul(ad::mul(sh, u2), beta));
    auto lg2 = ad::clamp(raw, kLogGamma2Lo, kLogGamma2Hi);

    // Closed-form KL to the prior K(0, I, I), factor-wise: Normal part plus
    // Gamma part of the conjugate factorization.
    auto two_lb_lg2 = ad::add(ad::scale(log_beta, 2.0), lg2);
    auto t2 = ad::exp_op(two_lb_lg2);  // beta^2 gamma^2
    auto kl_normal = ad::scale(
        ad::sub(ad::add(ad::square(alpha), t2), ad::add_scalar(two_lb_lg2, 1.0)), 0.5);

    auto k = ad::scale(ad::exp_op(ad::neg(lg2)), 1.0 / (4.0 * c));
    auto a1 = ad::add_scalar(k, 1.0);
    auto log_b1 = ad::sub(ad::add_scalar(ad::neg(lg2), -log4c), ad::scale(log_beta, 2.0));
    const double a2 = 1.0 + 1.0 / (4.0 * c);
    const double log_b2 = -log4c;
    const double lgamma_a2 = std::lgamma(a2);

    auto term_rates = ad::scale(ad::add_scalar(log_b1, -log_b2), a2);
    auto term_lgamma = ad::neg(ad::lgamma_op(a1));
    auto term_digamma = ad::mul(ad::add_scalar(a1, -a2), ad::digamma_op(a1));
    auto ratio = ad::exp_op(ad::add_scalar(ad::neg(log_b1), log_b2));  // b2/b1
    auto term_mean = ad::neg(ad::mul(ad::add_scalar(ad::neg(ratio), 1.0), a1));
    auto kl_gamma = ad::add_scalar(
        ad::add(ad::add(term_rates, term_lgamma), ad::add(term_digamma, term_mean)),
        lgamma_a2);

    return {alpha, log_beta, lg2, a1, log_b1, ad::add(kl_normal, kl_gamma)};
}

ad::NodePtr Vae::gm_decoder_features(const ad::NodePtr& mu, const ad::NodePtr& sigma,
                                     const ad::NodePtr& sigma2) const {
    const double c = cfg_.curvature;
    const double sqc = std::sqrt(c);
    // v = T_c^{-1}(mu, sigma), then the log map at the Lorentz origin; the
    // scale acosh(b)/sqrt(b^2-1) is smooth through b = 1.
    auto ssum = ad::add(ad::scale(ad::square(mu), c), sigma2);
    auto beta_l = ad::div(ad::add_scalar(ssum, 1.0), ad::scale(sigma, 2.0));
    auto kscale = ad::acosh_ratio_op(beta_l);
    auto vx = ad::div(ad::add_scalar(ssum, -1.0), ad::scale(sigma, 2.0 * sqc));
    auto vy = ad::neg(ad::div(mu, sigma));
    return ad::concat_cols({ad::mul(kscale, vx), ad::mul(kscale, vy)});
}

Vae::Graph Vae::build_elbo_graph(const ad::Tensor& x, const NoiseSpec& noise) const {
    if (x.cols() != cfg_.input_dim) throw domain_error("elbo: input width mismatch");
    const int batch = x.rows();
    const int n = cfg_.n_factors;
    auto xin = ad::constant(x);

    ad::NodePtr kl_sum, logits;
    if (cfg_.kind == ModelKind::Gm) {
        auto head = gm_head(encoder_forward(xin));
        kl_sum = ad::sum_all(head.kl_per);

        // mu path: location-scale; sigma^2 path: X ~ Gamma(a, 1) scaled by the
        // rate, with implicit-reparameterization gradients through the shape.
        ad::Tensor eps(batch, n);
        if (noise.eps) {
            if (!noise.eps->same_shape(eps)) throw domain_error("elbo: eps shape mismatch");
            eps = *noise.eps;
        } else if (noise.rng) {
            for (int i = 0; i < batch; ++i) {
                for (int j = 0; j < n; ++j) eps(i, j) = noise.rng->normal();
            }
        } else {
            throw domain_error("elbo: noise spec needs rng or eps");
        }
        auto std_mu = ad::exp_op(ad::add(head.log_beta, ad::scale(head.lg2, 0.5)));
        auto mu_z = ad::add(head.alpha, ad::mul(std_mu, ad::constant(eps)));

        ad::NodePtr gamma_draw;
        if (noise.ustar) {
            gamma_draw = ad::gamma_frozen(head.a_shape, *noise.ustar);
        } else if (noise.rng) {
            gamma_draw = ad::gamma_sample(head.a_shape, *noise.rng);
        } else {
            throw domain_error("elbo: frozen GM noise needs ustar");
        }
        auto sigma2 = ad::mul(gamma_draw, ad::exp_op(ad::neg(head.log_b1)));
        auto sigma = ad::sqrt_op(sigma2);
        logits = decoder_forward(gm_decoder_features(mu_z, sigma, sigma2));
    } else {
        auto enc = encoder_forward(xin);
        auto mean = ad::slice_cols(enc, 0, 2 * n);
        auto log_std = ad::clamp(ad::slice_cols(enc, 2 * n, 4 * n), kLogStdLo, kLogStdHi);
        auto var = ad::exp_op(ad::scale(log_std, 2.0));
        auto kl_per = ad::scale(
            ad::sub(ad::add(ad::square(mean), var), ad::add_scalar(ad::scale(log_std, 2.0), 1.0)),
            0.5);
        kl_sum = ad::sum_all(kl_per);

        ad::Tensor eps(batch, 2 * n);
        if (noise.eps) {
            if (!noise.eps->same_shape(eps)) throw domain_error("elbo: eps shape mismatch");
            eps = *noise.eps;
        } else if (noise.rng) {
            for (int i = 0; i < batch; ++i) {
                for (int j = 0; j < 2 * n; ++j) eps(i, j) = noise.rng->normal();
            }
        } else {
            throw domain_error("elbo: noise spec needs rng or eps");
        }
        auto z = ad::add(mean, ad::mul(ad::exp_op(log_std), ad::constant(eps)));
        logits = decoder_forward(z);
    }

    auto recon_sum = ad::sum_all(ad::bernoulli_ll(logits, x));
    const double inv_b = 1.0 / batch;
    Graph g;
    g.recon = ad::scale(recon_sum, inv_b);
    g.kl = ad::scale(kl_sum, inv_b);
    g.elbo = ad::sub(g.recon, g.kl);
    g.loss = ad::neg(g.elbo);
    return g;
}

EncoderOutput Vae::encode(const ad::Tensor& x) const {
    if (cfg_.kind != ModelKind::Gm) throw config_error("encode: model kind is not gm");
    if (x.cols() != cfg_.input_dim) throw domain_error("encode: input width mismatch");
    auto head = gm_head(encoder_forward(ad::constant(x)));
    EncoderOutput out{head.alpha->value, ad::exp_op(head.log_beta)->value,
                      ad::exp_op(head.lg2)->value};
    for (int i = 0; i < out.alpha.size(); ++i) {
        if (!std::isfinite(out.alpha.data()[i]) || !std::isfinite(out.beta.data()[i]) ||
            !std::isfinite(out.gamma2.data()[i])) {
            throw training_error("encode: non-finite activations");
        }
    }
    return out;
}

EuclideanEncoderOutput Vae::encode_euclidean(const ad::Tensor& x) const {
    if (cfg_.kind != ModelKind::Euclidean) {
        throw config_error("encode_euclidean: model kind is not euclidean");
    }
    if (x.cols() != cfg_.input_dim) throw domain_error("encode: input width mismatch");
    const int n = cfg_.n_factors;
    auto enc = encoder_forward(ad::constant(x));
    auto mean = ad::slice_cols(enc, 0, 2 * n);
    auto std_n = ad::exp_op(ad::clamp(ad::slice_cols(enc, 2 * n, 4 * n), kLogStdLo, kLogStdHi));
    return {mean->value, std_n->value};
}

ad::Tensor Vae::decode(const ad::Tensor& mu, const ad::Tensor& sigma) const {
    if (cfg_.kind != ModelKind::Gm) throw config_error("decode: model kind is not gm");
    if (!mu.same_shape(sigma) || mu.cols() != cfg_.n_factors) {
        throw domain_error("decode: latent shape mismatch");
    }
    for (int i = 0; i < sigma.size(); ++i) {
        if (!(sigma.data()[i] > 0.0)) throw domain_error("decode: sigma must be > 0");
    }
    auto mu_n = ad::constant(mu);
    auto sigma_n = ad::constant(sigma);
    auto feat = gm_decoder_features(mu_n, sigma_n, ad::square(sigma_n));
    return decoder_forward(feat)->value;
}

ad::Tensor Vae::decode_euclidean(const ad::Tensor& z) const {
    if (cfg_.kind != ModelKind::Euclidean) {
        throw config_error("decode_euclidean: model kind is not euclidean");
    }
    if (z.cols() != cfg_.latent_dim()) throw domain_error("decode: latent width mismatch");
    return decoder_forward(ad::constant(z))->value;
}

ElboComponents Vae::elbo(const ad::Tensor& x, Rng& rng) const {
    NoiseSpec noise;
    noise.rng = &rng;
    auto g = build_elbo_graph(x, noise);
    ElboComponents out{g.elbo->scalar(), g.recon->scalar(), g.kl->scalar()};
    if (!std::isfinite(out.elbo) || !std::isfinite(out.recon) || !std::isfinite(out.kl)) {
        throw training_error("elbo: non-finite value");
    }
    return out;
}

std::vector<EpochMetrics> train(Vae& model, ad::Adam& adam,
                                const data::BinarizedDataset& ds, int start_epoch,
                                const TrainOptions& opt) {
    const VaeConfig& cfg = model.config();
    if (ds.dim != cfg.input_dim) throw config_error("train: dataset width != config input_dim");
    const int subset = opt.subset_n > 0 ? opt.subset_n : ds.count;
    if (subset > ds.count) throw config_error("train: subset exceeds dataset size");

    if (opt.metrics_csv && opt.write_csv_header) {
        (*opt.metrics_csv) << "epoch,split,elbo,recon,kl,wall_seconds\n";
    }

    Rng base(cfg.seed);
    // The retained subset is fixed once (stream 1); epochs reshuffle within it.
    Rng subset_rng = base.split(1);
    const auto pool = data::make_batches(ds.count, subset, subset, subset_rng)[0];

    if (start_epoch == 0 && model.output_bias_is_zero()) {
        // Start the decoder at the base rate of the training subset.
        ad::Tensor logits(1, ds.dim);
        for (int j = 0; j < ds.dim; ++j) {
            double mean = 0.0;
            for (int idx : pool) mean += ds.bits[static_cast<std::size_t>(idx) * ds.dim + j];
            mean /= static_cast<double>(pool.size());
            mean = std::min(1.0 - 1e-3, std::max(1e-3, mean));
            logits(0, j) = std::log(mean / (1.0 - mean));
        }
        model.set_output_bias(logits);
    }

    std::vector<EpochMetrics> metrics;
    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        Rng shuffle_rng = base.split(2 + 2 * static_cast<std::uint64_t>(epoch));
        Rng sample_rng = base.split(3 + 2 * static_cast<std::uint64_t>(epoch));
        auto batches = data::make_batches(subset, subset, cfg.batch_size, shuffle_rng);
        for (auto& batch : batches) {
            for (int& idx : batch) idx = pool[idx];
        }

        double sum_elbo = 0.0, sum_recon = 0.0, sum_kl = 0.0;
        long seen = 0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            const auto x = data::gather(ds, batches[b]);
            Vae::NoiseSpec noise;
            noise.rng = &sample_rng;
            auto g = model.build_elbo_graph(x, noise);
            const double loss = g.loss->scalar();
            if (!std::isfinite(loss)) {
                throw training_error("train: non-finite loss at epoch " +
                                     std::to_string(epoch + 1) + ", batch " +
                                     std::to_string(b + 1));
            }
            ad::backward(g.loss);
            adam.step();
            const auto bs = static_cast<double>(batches[b].size());
            sum_elbo += g.elbo->scalar() * bs;
            sum_recon += g.recon->scalar() * bs;
            sum_kl += g.kl->scalar() * bs;
            seen += batches[b].size();
        }
        const auto t1 = std::chrono::steady_clock::now();
        EpochMetrics m;
        m.epoch = epoch + 1;
        m.elbo = sum_elbo / seen;
        m.recon = sum_recon / seen;
        m.kl = sum_kl / seen;
        m.wall_seconds = std::chrono::duration<double>(t1 - t0).count();
        metrics.push_back(m);
        if (opt.metrics_csv) {
            (*opt.metrics_csv) << m.epoch << ",train," << m.elbo << ',' << m.recon << ','
                               << m.kl << ',' << m.wall_seconds << '\n';
            opt.metrics_csv->flush();
        }
        if (opt.on_checkpoint &&
            ((opt.checkpoint_every > 0 && m.epoch % opt.checkpoint_every == 0) ||
             epoch + 1 == cfg.epochs)) {
            opt.on_checkpoint(m.epoch);
        }
    }
    return metrics;
}

namespace {

double gm_example_iwae(const Vae& model, const ad::Tensor& x_row, int k, Rng& rng) {
    const VaeConfig& cfg = model.config();
    const hyperbolic::Curvature c(cfg.curvature);
    const auto enc = model.encode(x_row);
    const int n = cfg.n_factors;

    std::vector<double> alpha(n), beta(n), gamma2(n);
    for (int j = 0; j < n; ++j) {
        alpha[j] = enc.alpha(0, j);
        beta[j] = enc.beta(0, j);
        gamma2[j] = enc.gamma2(0, j);
    }
    const pgm::PgmNormalParams q(alpha, beta, gamma2, c);
    const auto prior = pgm::PgmNormalParams::prior(n, c);

    const auto draws = pgm::sample(q, rng, k);
    ad::Tensor mu(k, n), sigma(k, n);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < n; ++j) {
            mu(i, j) = draws[i][j].mu;
            sigma(i, j) = draws[i][j].sigma;
        }
    }
    const auto logits = model.decode(mu, sigma);
    std::vector<double> logw(k);
    for (int i = 0; i < k; ++i) {
        double lw = bernoulli_row_ll(logits, i, x_row, 0);
        for (int j = 0; j < n; ++j) {
            const hyperbolic::GaussianPoint pt{mu(i, j), sigma(i, j)};
            lw += pgm::factorized_log_density(pt, prior, j) -
                  pgm::factorized_log_density(pt, q, j);
        }
        logw[i] = lw;
    }
    return logsumexp(logw) - std::log(static_cast<double>(k));
}

double euclidean_example_iwae(const Vae& model, const ad::Tensor& x_row, int k, Rng& rng) {
    const int d = model.config().latent_dim();
    const auto enc = model.encode_euclidean(x_row);
    ad::Tensor z(k, d);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < d; ++j) {
            z(i, j) = enc.mean(0, j) + enc.std(0, j) * rng.normal();
        }
    }
    const auto logits = model.decode_euclidean(z);
    std::vector<double> logw(k);
    for (int i = 0; i < k; ++i) {
        double lw = bernoulli_row_ll(logits, i, x_row, 0);
        for (int j = 0; j < d; ++j) {
            const double zj = z(i, j);
            const double m = enc.mean(0, j);
            const double s = enc.std(0, j);
            // log N(z; 0, 1) - log N(z; m, s)
            lw += -0.5 * zj * zj + std::log(s) + 0.5 * (zj - m) * (zj - m) / (s * s);
        }
        logw[i] = lw;
    }
    return logsumexp(logw) - std::log(static_cast<double>(k));
}

}  // namespace

std::vector<double> iwae_log_likelihood(const Vae& model, const data::BinarizedDataset& ds,
                                        const std::vector<int>& indices, int k,
                                        std::uint64_t seed) {
    if (k < 1) throw domain_error("iwae_log_likelihood: k must be >= 1");
    Rng base(seed);
    std::vector<double> out;
    out.reserve(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const auto x = data::gather(ds, {indices[i]});
        Rng rng = base.split(1000000 + static_cast<std::uint64_t>(i));
        out.push_back(model.config().kind == ModelKind::Gm
                          ? gm_example_iwae(model, x, k, rng)
                          : euclidean_example_iwae(model, x, k, rng));
    }
    return out;
}

TraversalResult latent_traversal(const Vae& model, const ad::Tensor& x_row, int factor,
                                 int steps, double beta_scale) {
    const VaeConfig& cfg = model.config();
    if (cfg.kind != ModelKind::Gm) throw config_error("latent_traversal: gm model required");
    if (factor < 0 || factor >= cfg.n_factors) throw domain_error("latent_traversal: bad factor");
    if (steps < 2) throw domain_error("latent_traversal: steps must be >= 2");
    if (!(beta_scale > 0.0)) throw domain_error("latent_traversal: beta_scale must be > 0");
    const hyperbolic::Curvature c(cfg.curvature);

    const auto enc = model.encode(x_row);
    const int n = cfg.n_factors;
    const hyperbolic::GaussianPoint a{enc.alpha(0, factor), enc.beta(0, factor)};
    const hyperbolic::GaussianPoint b{a.mu, a.sigma * beta_scale};
    const auto la = hyperbolic::iso_g_to_l(a, c);
    const auto lb = hyperbolic::iso_g_to_l(b, c);
    const auto dir = hyperbolic::lorentz_log(la, lb, c);

    ad::Tensor mu(steps, n), sigma(steps, n);
    TraversalResult res;
    res.ts.resize(steps);
    res.coords.resize(steps);
    for (int s = 0; s < steps; ++s) {
        const double t = static_cast<double>(s) / (steps - 1);
        res.ts[s] = t;
        hyperbolic::GaussianPoint pt;
        if (s == 0) {
            pt = a;
        } else if (s == steps - 1) {
            pt = b;
        } else {
            const hyperbolic::LorentzTangent vt{t * dir.dt, t * dir.dx, t * dir.dy, la};
            pt = hyperbolic::iso_l_to_g(hyperbolic::lorentz_exp(la, vt, c), c);
        }
        res.coords[s] = {pt.mu, pt.sigma};
        for (int j = 0; j < n; ++j) {
            mu(s, j) = enc.alpha(0, j);
            sigma(s, j) = enc.beta(0, j);
        }
        mu(s, factor) = pt.mu;
        sigma(s, factor) = pt.sigma;
    }
    const auto logits = model.decode(mu, sigma);
    res.reconstructions = ad::Tensor(steps, cfg.input_dim);
    for (int s = 0; s < steps; ++s) {
        for (int j = 0; j < cfg.input_dim; ++j) {
            const double z = logits(s, j);
            res.reconstructions(s, j) =
                z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
        }
    }
    return res;
}

void save_model_checkpoint(const std::string& path, const Vae& model, const ad::Adam& adam,
                           int epochs_done) {
    nlohmann::json meta;
    meta["config"] = nlohmann::json::parse(model.config().to_json());
    meta["epoch"] = epochs_done;
    meta["seed"] = model.config().seed;
    meta["adam_steps"] = const_cast<ad::Adam&>(adam).steps();

    std::vector<data::CheckpointBlock> blocks;
    const auto& params = model.params();
    const auto& names = model.param_names();
    for (std::size_t i = 0; i < params.size(); ++i) {
        blocks.push_back({names[i], params[i]->value});
    }
    auto& mutable_adam = const_cast<ad::Adam&>(adam);
    for (std::size_t i = 0; i < params.size(); ++i) {
        blocks.push_back({"adam.m." + names[i], mutable_adam.moments1()[i]});
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        blocks.push_back({"adam.v." + names[i], mutable_adam.moments2()[i]});
    }
    data::save_checkpoint(path, meta.dump(), blocks);
}

LoadedModel load_model_checkpoint(const std::string& path) {
    const auto ck = data::load_checkpoint(path);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(ck.meta_json);
    } catch (const nlohmann::json::exception&) {
        throw format_error("load_model_checkpoint: corrupted meta");
    }
    if (!meta.contains("config") || !meta.contains("epoch") || !meta.contains("adam_steps")) {
        throw format_error("load_model_checkpoint: incomplete meta");
    }
    LoadedModel out;
    out.config = VaeConfig::from_json(meta["config"].dump());
    out.epochs_done = meta["epoch"].get<int>();
    out.model = std::make_unique<Vae>(out.config);
    ad::AdamConfig acfg;
    acfg.lr = out.config.learning_rate;
    out.adam = std::make_unique<ad::Adam>(out.model->params(), acfg);
    out.adam->set_steps(meta["adam_steps"].get<int>());

    const auto& params = out.model->params();
    const auto& names = out.model->param_names();
    const std::size_t np = params.size();
    if (ck.blocks.size() != 3 * np) {
        throw config_error("checkpoint: block count does not match this config");
    }
    auto check_block = [&](const data::CheckpointBlock& blk, const std::string& name,
                           const ad::Tensor& shaped) {
        if (blk.name != name || blk.tensor.rows() != shaped.rows() ||
            blk.tensor.cols() != shaped.cols()) {
            throw config_error("checkpoint: block " + blk.name +
                               " does not match expected " + name + " shape");
        }
    };
    for (std::size_t i = 0; i < np; ++i) {
        check_block(ck.blocks[i], names[i], params[i]->value);
        params[i]->value = ck.blocks[i].tensor;
    }
    for (std::size_t i = 0; i < np; ++i) {
        check_block(ck.blocks[np + i], "adam.m." + names[i], out.adam->moments1()[i]);
        out.adam->moments1()[i] = ck.blocks[np + i].tensor;
    }
    for (std::size_t i = 0; i < np; ++i) {
        check_block(ck.blocks[2 * np + i], "adam.v." + names[i], out.adam->moments2()[i]);
        out.adam->moments2()[i] = ck.blocks[2 * np + i].tensor;
    }
    return out;
}

}  // namespace gmvae::vae
