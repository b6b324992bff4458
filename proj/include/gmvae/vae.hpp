#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "gmvae/autodiff.hpp"
#include "gmvae/data_io.hpp"
#include "gmvae/hyperbolic.hpp"
#include "gmvae/pgm.hpp"
#include "gmvae/rng.hpp"

namespace gmvae::vae {

enum class ModelKind { Gm, Euclidean };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct VaeConfig {
    ModelKind kind = ModelKind::Gm;
    int n_factors = 5;
    double curvature = 1.0;
    int hidden = 200;
    int input_dim = 784;
    int batch_size = 100;
    double learning_rate = 1e-3;
    int epochs = 30;
    std::uint64_t seed = 0;

    /// Manifold dimension: two per Gaussian-manifold factor. The Euclidean
    /// baseline uses the same width for its latent.
    int latent_dim() const { return 2 * n_factors; }
    void validate() const;

    std::string to_json() const;
    /// Strict parse: unknown keys rejected, every key required.
    static VaeConfig from_json(const std::string& text);
};

/// Per-factor variational parameters for a batch; all tensors are [B x n].
struct EncoderOutput {
    ad::Tensor alpha;
    ad::Tensor beta;    // > 0
    ad::Tensor gamma2;  // clamped to [1e-8, 1e8]
};

struct EuclideanEncoderOutput {
    ad::Tensor mean;  // [B x 2n]
    ad::Tensor std;   // [B x 2n]
};

/// A point sample of the latent per factor, sigma > 0.
struct LatentSample {
    ad::Tensor mu;
    ad::Tensor sigma;
};

struct ElboComponents {
    double elbo = 0.0;   // per-example mean
    double recon = 0.0;  // per-example mean Bernoulli log-likelihood
    double kl = 0.0;     // per-example mean KL to the prior
};

class Vae {
public:
    explicit Vae(const VaeConfig& cfg);

    const VaeConfig& config() const { return cfg_; }
    const std::vector<ad::NodePtr>& params() const { return params_; }
    const std::vector<std::string>& param_names() const { return names_; }

    /// Overwrites the decoder output bias (one logit per pixel). train() uses
    /// this to start fresh models at the data base rate.
    void set_output_bias(const ad::Tensor& logits);
    bool output_bias_is_zero() const;

    /// Deterministic encoder pass (no sampling inside). GM kind only.
    EncoderOutput encode(const ad::Tensor& x) const;
    EuclideanEncoderOutput encode_euclidean(const ad::Tensor& x) const;

    /// Decoder logits for given manifold points (GM) / latents (Euclidean).
    ad::Tensor decode(const ad::Tensor& mu, const ad::Tensor& sigma) const;
    ad::Tensor decode(const LatentSample& z) const { return decode(z.mu, z.sigma); }
    ad::Tensor decode_euclidean(const ad::Tensor& z) const;

    /// One-sample reparameterized ELBO with analytic KL; throws
    /// training_error if any component is non-finite.
    ElboComponents elbo(const ad::Tensor& x, Rng& rng) const;

    struct Graph {
        ad::NodePtr loss;   // scalar: -elbo
        ad::NodePtr elbo;   // scalar: per-example mean
        ad::NodePtr recon;  // scalar
        ad::NodePtr kl;     // scalar
    };
    /// Noise injection: exactly one of rng (sampling) or (eps [, ustar])
    /// (frozen noise for finite-difference checks) must be provided.
    /// eps is [B x n] for GM, [B x 2n] for Euclidean; ustar is [B x n]
    /// gamma CDF levels (GM only).
    struct NoiseSpec {
        Rng* rng = nullptr;
        const ad::Tensor* eps = nullptr;
        const ad::Tensor* ustar = nullptr;
    };
    Graph build_elbo_graph(const ad::Tensor& x, const NoiseSpec& noise) const;

private:
    ad::NodePtr encoder_forward(const ad::NodePtr& x) const;
    ad::NodePtr decoder_forward(const ad::NodePtr& feat) const;

    struct GmLatentNodes {
        ad::NodePtr alpha, log_beta, lg2;   // [B x n]
        ad::NodePtr a_shape, log_b1;        // factorized Gamma parameters
        ad::NodePtr kl_per;                 // [B x n]
    };
    GmLatentNodes gm_head(const ad::NodePtr& enc_out) const;
    ad::NodePtr gm_decoder_features(const ad::NodePtr& mu, const ad::NodePtr& sigma,
                                    const ad::NodePtr& sigma2) const;

    VaeConfig cfg_;
    std::vector<ad::NodePtr> params_;
    std::vector<std::string> names_;
};

struct EpochMetrics {
    int epoch = 0;  // 1-based, cumulative across resumes
    double elbo = 0.0, recon = 0.0, kl = 0.0;
    double wall_seconds = 0.0;
};

struct TrainOptions {
    int subset_n = 0;          // 0 -> use the whole dataset
    int checkpoint_every = 0;  // 0 -> only via on_checkpoint at the end
    std::function<void(int)> on_checkpoint;  // epochs completed so far
    std::ostream* metrics_csv = nullptr;
    bool write_csv_header = true;
};

/// Maximizes the ELBO with per-epoch seeded reshuffling over a fixed subset.
/// Streams of Rng(config.seed): split(1) picks the subset once; epoch e uses
/// split(2 + 2e) for shuffling and split(3 + 2e) for sampling, so resumed
/// runs reproduce uninterrupted ones. Fresh models (all-zero decoder output
/// bias, start_epoch 0) are started at the subset's per-pixel base rate.
/// Aborts with training_error on a non-finite loss.
std::vector<EpochMetrics> train(Vae& model, ad::Adam& adam,
                                const data::BinarizedDataset& ds, int start_epoch,
                                const TrainOptions& opt);

/// Per-example IWAE estimates log(1/k sum w_i); densities of q and the prior
/// are taken over the shared manifold measure, so the volume element cancels.
/// Example i uses the derived stream split(1000000 + i) of Rng(seed).
std::vector<double> iwae_log_likelihood(const Vae& model, const data::BinarizedDataset& ds,
                                        const std::vector<int>& indices, int k,
                                        std::uint64_t seed);

struct TraversalResult {
    ad::Tensor reconstructions;                    // [steps x input_dim], Bernoulli probs
    std::vector<std::pair<double, double>> coords;  // (mu, sigma) of the traversed factor
    std::vector<double> ts;
};

/// Geodesic traversal of one factor with alpha fixed: endpoints
/// (alpha, beta) and (alpha, beta * beta_scale) are mapped to the Lorentz
/// model and interpolated as exp_a(t log_a(b)); all other factors stay at
/// their encoded values. t = 0 and t = 1 reproduce the endpoints exactly.
TraversalResult latent_traversal(const Vae& model, const ad::Tensor& x_row, int factor,
                                 int steps, double beta_scale);

void save_model_checkpoint(const std::string& path, const Vae& model, const ad::Adam& adam,
                           int epochs_done);

struct LoadedModel {
    VaeConfig config;
    std::unique_ptr<Vae> model;
    std::unique_ptr<ad::Adam> adam;
    int epochs_done = 0;
};

LoadedModel load_model_checkpoint(const std::string& path);

}  // namespace gmvae::vae
