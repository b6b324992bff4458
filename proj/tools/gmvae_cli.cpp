// Command-line surface: geometry verification, stability bench, training,
// IWAE evaluation, latent traversal and prior sampling.
//
// Exit codes: 0 success, 2 validation failure (criteria not met),
// 1 operational error.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gmvae/data_io.hpp"
#include "gmvae/hyperbolic.hpp"
#include "gmvae/pgm.hpp"
#include "gmvae/rng.hpp"
#include "gmvae/vae.hpp"

namespace fs = std::filesystem;
using namespace gmvae;

namespace {

constexpr int kExitValidation = 2;

/// Run configuration: VaeConfig fields plus dataset paths and output
/// directory. Unknown keys are rejected; every key is required.
struct RunConfig {
    vae::VaeConfig vae;  // input_dim filled from the dataset
    double binarize_threshold = 0.5;
    std::string train_images, test_images, out_dir;
    int train_subset = 0, test_subset = 0;
    int checkpoint_every = 10;
};

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config parse error: ") + e.what());
    }
    static const char* kKeys[] = {
        "model",       "n_factors",    "curvature",        "hidden",
        "batch_size",  "learning_rate", "epochs",          "seed",
        "binarize_threshold", "train_images", "test_images", "train_subset",
        "test_subset", "checkpoint_every", "out_dir"};
    for (const char* k : kKeys) {
        if (!j.contains(k)) throw config_error(std::string("config: missing key ") + k);
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : kKeys) known = known || (it.key() == k);
        if (!known) throw config_error("config: unknown key " + it.key());
    }
    RunConfig rc;
    try {
        rc.vae.kind = vae::model_kind_from_name(j["model"].get<std::string>());
        rc.vae.n_factors = j["n_factors"].get<int>();
        rc.vae.curvature = j["curvature"].get<double>();
        rc.vae.hidden = j["hidden"].get<int>();
        rc.vae.batch_size = j["batch_size"].get<int>();
        rc.vae.learning_rate = j["learning_rate"].get<double>();
        rc.vae.epochs = j["epochs"].get<int>();
        rc.vae.seed = j["seed"].get<std::uint64_t>();
        rc.binarize_threshold = j["binarize_threshold"].get<double>();
        rc.train_images = j["train_images"].get<std::string>();
        rc.test_images = j["test_images"].get<std::string>();
        rc.train_subset = j["train_subset"].get<int>();
        rc.test_subset = j["test_subset"].get<int>();
        rc.checkpoint_every = j["checkpoint_every"].get<int>();
        rc.out_dir = j["out_dir"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config: bad value: ") + e.what());
    }
    if (const char* env_seed = std::getenv("GMVAE_SEED")) {
        rc.vae.seed = std::strtoull(env_seed, nullptr, 10);
    }
    return rc;
}

void write_gmimg(const std::string& path, const ad::Tensor& m) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw format_error("cannot open " + path);
    out.write("GMIMG01\n", 8);
    const std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
    const std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
    out.write(reinterpret_cast<const char*>(&rows), 4);  // little-endian host
    out.write(reinterpret_cast<const char*>(&cols), 4);
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * m.size()));
    if (!out) throw format_error("write failed for " + path);
}

int cmd_verify_geometry(const std::vector<double>& curvatures, int pairs,
                        std::uint64_t seed, const std::string& out_path) {
    using namespace hyperbolic;
    std::ofstream out;
    if (!out_path.empty()) {
        out.open(out_path, std::ios::trunc);
        if (!out) throw config_error("cannot open " + out_path);
        out << "curvature,route,mean_abs_diff\n";
    }
    Rng rng(seed);
    bool pass = true;
    std::cout << "curvature   P->L           G->P           G->L\n";
    for (double cv : curvatures) {
        const Curvature c(cv);
        double sum_pl = 0.0, sum_gp = 0.0, sum_gl = 0.0;
        for (int i = 0; i < pairs; ++i) {
            auto draw = [&]() {
                return GaussianPoint{200.0 * rng.uniform() - 100.0,
                                     100.0 * rng.uniform() + 1e-12};
            };
            const auto a = draw();
            const auto b = draw();
            const double dg = fisher_rao_distance(a, b, c);
            const auto pa = iso_g_to_p(a, c);
            const auto pb = iso_g_to_p(b, c);
            const double dp = poincare_distance(pa, pb, c);
            const double dl = lorentz_distance(iso_g_to_l(a, c), iso_g_to_l(b, c), c);
            const double dpl = lorentz_distance(iso_p_to_l(pa, c), iso_p_to_l(pb, c), c);
            sum_pl += std::fabs(dp - dpl);
            sum_gp += std::fabs(dg - dp);
            sum_gl += std::fabs(dg - dl);
        }
        const double mean_pl = sum_pl / pairs;
        const double mean_gp = sum_gp / pairs;
        const double mean_gl = sum_gl / pairs;
        pass = pass && mean_pl <= 1e-9 && mean_gp <= 1e-9 && mean_gl <= 1e-9;
        std::printf("%8.2f   %.6e   %.6e   %.6e\n", cv, mean_pl, mean_gp, mean_gl);
        if (out) {
            out << cv << ",p_to_l," << mean_pl << '\n'
                << cv << ",g_to_p," << mean_gp << '\n'
                << cv << ",g_to_l," << mean_gl << '\n';
        }
    }
    std::cout << (pass ? "verify-geometry: PASS (all means <= 1e-9)\n"
                       : "verify-geometry: FAIL (some mean > 1e-9)\n");
    return pass ? 0 : kExitValidation;
}

int cmd_bench_stability(const std::string& out_path) {
    using pgm::SweepKind;
    using pgm::SweepRow;
    std::vector<SweepRow> rows;
    for (auto kind : {SweepKind::PgmKl, SweepKind::PoincareDist, SweepKind::HwnLogPdf}) {
        const auto part = pgm::stability_sweep(kind);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) throw config_error("cannot open " + out_path);
        pgm::write_sweep_csv(rows, out);
    }
    long pgm_total = 0, pgm_finite = 0, poi_bad = 0, hwn_bad = 0;
    for (const auto& row : rows) {
        const bool finite = row.status == SweepRow::Status::Finite;
        switch (row.kind) {
            case SweepKind::PgmKl:
                ++pgm_total;
                pgm_finite += finite ? 1 : 0;
                break;
            case SweepKind::PoincareDist:
                poi_bad += finite ? 0 : 1;
                break;
            case SweepKind::HwnLogPdf:
                hwn_bad += finite ? 0 : 1;
                break;
        }
    }
    std::printf("pgm_kl grid: %ld/%ld finite (%.1f%%)\n", pgm_finite, pgm_total,
                100.0 * pgm_finite / pgm_total);
    std::printf("poincare_dist boundary probes: %ld non-finite/guarded\n", poi_bad);
    std::printf("hwn_logpdf large-norm probes: %ld non-finite\n", hwn_bad);
    return 0;
}

data::BinarizedDataset load_binarized(const std::string& path, double threshold) {
    return data::binarize(data::load_idx_file(path), threshold);
}

std::string checkpoint_path(const RunConfig& rc, int epoch) {
    char name[64];
    std::snprintf(name, sizeof(name), "checkpoint_epoch_%04d.bin", epoch);
    return (fs::path(rc.out_dir) / name).string();
}

int cmd_train(const std::string& config_path, const std::string& resume) {
    RunConfig rc = load_run_config(config_path);
    auto train_ds = load_binarized(rc.train_images, rc.binarize_threshold);
    rc.vae.input_dim = train_ds.dim;
    rc.vae.validate();

    fs::create_directories(rc.out_dir);
    std::unique_ptr<vae::Vae> model;
    std::unique_ptr<ad::Adam> adam;
    int start_epoch = 0;
    if (!resume.empty()) {
        auto loaded = vae::load_model_checkpoint(resume);
        const auto& lc = loaded.config;
        if (lc.kind != rc.vae.kind || lc.n_factors != rc.vae.n_factors ||
            lc.curvature != rc.vae.curvature || lc.hidden != rc.vae.hidden ||
            lc.input_dim != rc.vae.input_dim || lc.seed != rc.vae.seed) {
            throw config_error("resume: checkpoint config does not match " + config_path);
        }
        model = std::move(loaded.model);
        adam = std::move(loaded.adam);
        start_epoch = loaded.epochs_done;
    } else {
        model = std::make_unique<vae::Vae>(rc.vae);
        ad::AdamConfig acfg;
        acfg.lr = rc.vae.learning_rate;
        adam = std::make_unique<ad::Adam>(model->params(), acfg);
    }

    const auto metrics_path = (fs::path(rc.out_dir) / "metrics.csv").string();
    std::ofstream metrics(metrics_path, start_epoch == 0
                                            ? std::ios::trunc
                                            : (std::ios::app | std::ios::ate));
    if (!metrics) throw config_error("cannot open " + metrics_path);

    vae::TrainOptions opt;
    opt.subset_n = rc.train_subset;
    opt.checkpoint_every = rc.checkpoint_every;
    opt.metrics_csv = &metrics;
    opt.write_csv_header = start_epoch == 0;
    opt.on_checkpoint = [&](int epochs_done) {
        vae::save_model_checkpoint(checkpoint_path(rc, epochs_done), *model, *adam,
                                   epochs_done);
        vae::save_model_checkpoint((fs::path(rc.out_dir) / "checkpoint_latest.bin").string(),
                                   *model, *adam, epochs_done);
    };
    const auto history = vae::train(*model, *adam, train_ds, start_epoch, opt);
    if (!history.empty()) {
        std::printf("trained epochs %d..%d: first ELBO %.3f, last ELBO %.3f\n",
                    start_epoch + 1, history.back().epoch, history.front().elbo,
                    history.back().elbo);
    } else {
        std::printf("nothing to train: checkpoint already at epoch %d\n", start_epoch);
    }
    std::printf("metrics: %s\n", metrics_path.c_str());
    return 0;
}

int cmd_eval(const std::string& config_path, const std::string& ckpt, int iwae_k) {
    RunConfig rc = load_run_config(config_path);
    auto test_ds = load_binarized(rc.test_images, rc.binarize_threshold);
    auto loaded = vae::load_model_checkpoint(ckpt);
    if (loaded.config.input_dim != test_ds.dim) {
        throw config_error("eval: dataset width does not match the checkpoint");
    }
    const int n = rc.test_subset > 0 ? std::min(rc.test_subset, test_ds.count)
                                     : test_ds.count;
    std::vector<int> idx(n);
    for (int i = 0; i < n; ++i) idx[i] = i;
    const auto ll = vae::iwae_log_likelihood(*loaded.model, test_ds, idx, iwae_k,
                                             loaded.config.seed);
    double mean = 0.0;
    for (double v : ll) mean += v;
    mean /= n;
    std::printf("test NLL (IWAE-%d, %d examples): %.4f\n", iwae_k, n, -mean);
    return 0;
}

int cmd_traverse(const std::string& ckpt, int factor, int steps, double beta_scale,
                 const std::string& data_path, int index, double threshold,
                 const std::string& out_prefix) {
    auto loaded = vae::load_model_checkpoint(ckpt);
    ad::Tensor x(1, loaded.config.input_dim, 0.0);
    if (!data_path.empty()) {
        const auto ds = load_binarized(data_path, threshold);
        if (index < 0 || index >= ds.count) throw config_error("traverse: index out of range");
        x = data::gather(ds, {index});
    }
    const auto res = vae::latent_traversal(*loaded.model, x, factor, steps, beta_scale);
    write_gmimg(out_prefix + "_recon.gmimg", res.reconstructions);
    std::ofstream coords(out_prefix + "_coords.csv", std::ios::trunc);
    coords << "step,t,mu,sigma\n";
    for (int s = 0; s < steps; ++s) {
        coords << s << ',' << res.ts[s] << ',' << res.coords[s].first << ','
               << res.coords[s].second << '\n';
    }
    std::printf("traverse: wrote %d reconstructions to %s_recon.gmimg\n", steps,
                out_prefix.c_str());
    return 0;
}

int cmd_sample_prior(const std::string& ckpt, int n, std::uint64_t seed,
                     const std::string& out_prefix) {
    auto loaded = vae::load_model_checkpoint(ckpt);
    const auto& cfg = loaded.config;
    Rng rng(seed);
    ad::Tensor probs(n, cfg.input_dim);
    ad::Tensor logits;
    if (cfg.kind == vae::ModelKind::Gm) {
        const auto prior =
            pgm::PgmNormalParams::prior(cfg.n_factors, hyperbolic::Curvature(cfg.curvature));
        const auto draws = pgm::sample(prior, rng, n);
        ad::Tensor mu(n, cfg.n_factors), sigma(n, cfg.n_factors);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < cfg.n_factors; ++j) {
                mu(i, j) = draws[i][j].mu;
                sigma(i, j) = draws[i][j].sigma;
            }
        }
        logits = loaded.model->decode(mu, sigma);
    } else {
        ad::Tensor z(n, cfg.latent_dim());
        for (int i = 0; i < z.size(); ++i) z.data()[i] = rng.normal();
        logits = loaded.model->decode_euclidean(z);
    }
    for (int i = 0; i < probs.size(); ++i) {
        const double v = logits.data()[i];
        probs.data()[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    write_gmimg(out_prefix + "_prior.gmimg", probs);
    std::printf("sample-prior: wrote %d decoded samples to %s_prior.gmimg\n", n,
                out_prefix.c_str());
    return 0;
}

int cmd_make_synth_data(const std::string& out_dir, int train_n, int test_n,
                        std::uint64_t seed) {
    fs::create_directories(out_dir);
    auto write = [&](const std::string& name, int count, std::uint64_t s) {
        const auto set = data::synth_digits(count, s);
        const auto bytes = data::serialize_idx(set);
        const auto path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(reinterpret_cast<const char*>(bytes.data()),
                  static_cast<std::streamsize>(bytes.size()));
        if (!out) throw format_error("cannot write " + path);
        std::printf("wrote %s (%d images)\n", path.c_str(), count);
    };
    write("train-images-idx3-ubyte", train_n, seed);
    write("t10k-images-idx3-ubyte", test_n, seed + 1);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gaussian-manifold VAE: geometry checks, stability bench, training"};
    app.require_subcommand(1);

    // verify-geometry
    std::vector<double> curvatures{0.25, 0.5, 1.0, 1.5, 2.0};
    int pairs = 1000;
    std::uint64_t vg_seed = 1;
    std::string vg_out;
    auto* vg = app.add_subcommand("verify-geometry",
                                  "Distance preservation of the three isometry routes");
    vg->add_option("--curvatures", curvatures, "Curvature values")->delimiter(',');
    vg->add_option("--pairs", pairs, "Random pairs per curvature");
    vg->add_option("--seed", vg_seed, "Sampling seed");
    vg->add_option("--out", vg_out, "CSV output path");

    // bench-stability
    std::string bs_out = "stability.csv";
    auto* bs = app.add_subcommand("bench-stability",
                                  "Finite/non-finite sweeps for pgm, poincare, hwn");
    bs->add_option("--out", bs_out, "CSV output path");

    // train
    std::string tr_config, tr_resume;
    auto* tr = app.add_subcommand("train", "Train a VAE from a JSON run config");
    tr->add_option("--config", tr_config, "Run config JSON")->required();
    tr->add_option("--resume", tr_resume, "Checkpoint to resume from");

    // eval
    std::string ev_config, ev_ckpt;
    int iwae_k = 100;
    auto* ev = app.add_subcommand("eval", "IWAE test NLL of a checkpoint");
    ev->add_option("--config", ev_config, "Run config JSON")->required();
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint path")->required();
    ev->add_option("--iwae-k", iwae_k, "Importance samples per example");

    // traverse
    std::string tv_ckpt, tv_data, tv_out = "traversal";
    int tv_factor = 0, tv_steps = 8, tv_index = 0;
    double tv_scale = std::exp(2.0), tv_threshold = 0.5;
    auto* tv = app.add_subcommand("traverse", "Geodesic traversal of one latent factor");
    tv->add_option("--checkpoint", tv_ckpt, "Checkpoint path")->required();
    tv->add_option("--factor", tv_factor, "Factor index");
    tv->add_option("--steps", tv_steps, "Traversal steps");
    tv->add_option("--beta-scale", tv_scale, "Endpoint beta multiplier");
    tv->add_option("--data", tv_data, "IDX file for the anchor input");
    tv->add_option("--index", tv_index, "Anchor image index");
    tv->add_option("--threshold", tv_threshold, "Binarization threshold");
    tv->add_option("--out", tv_out, "Output prefix");

    // sample-prior
    std::string sp_ckpt, sp_out = "samples";
    int sp_n = 16;
    std::uint64_t sp_seed = 1;
    auto* sp = app.add_subcommand("sample-prior", "Decode draws from the prior");
    sp->add_option("--checkpoint", sp_ckpt, "Checkpoint path")->required();
    sp->add_option("--n", sp_n, "Number of samples");
    sp->add_option("--seed", sp_seed, "Sampling seed");
    sp->add_option("--out", sp_out, "Output prefix");

    // make-synth-data
    std::string md_out = "data";
    int md_train = 2000, md_test = 1000;
    std::uint64_t md_seed = 7;
    auto* md = app.add_subcommand("make-synth-data",
                                  "Write the deterministic synthetic digit corpus (IDX)");
    md->add_option("--out", md_out, "Output directory");
    md->add_option("--train-n", md_train, "Training images");
    md->add_option("--test-n", md_test, "Test images");
    md->add_option("--seed", md_seed, "Generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (vg->parsed()) return cmd_verify_geometry(curvatures, pairs, vg_seed, vg_out);
        if (bs->parsed()) return cmd_bench_stability(bs_out);
        if (tr->parsed()) return cmd_train(tr_config, tr_resume);
        if (ev->parsed()) return cmd_eval(ev_config, ev_ckpt, iwae_k);
        if (tv->parsed()) {
            return cmd_traverse(tv_ckpt, tv_factor, tv_steps, tv_scale, tv_data, tv_index,
                                tv_threshold, tv_out);
        }
        if (sp->parsed()) return cmd_sample_prior(sp_ckpt, sp_n, sp_seed, sp_out);
        if (md->parsed()) return cmd_make_synth_data(md_out, md_train, md_test, md_seed);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
