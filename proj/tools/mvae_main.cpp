#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvae/checkpoint.hpp"
#include "mvae/classifier.hpp"
#include "mvae/config.hpp"
#include "mvae/dataset.hpp"
#include "mvae/errors.hpp"
#include "mvae/evaluate.hpp"
#include "mvae/fingerprint.hpp"
#include "mvae/gradcheck.hpp"
#include "mvae/matrix_io.hpp"
#include "mvae/metrics.hpp"
#include "mvae/model.hpp"
#include "mvae/trainer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Exit codes: 0 success, 1 failed numeric check, 2 usage or config
// problem, 3 runtime failure (I/O, data, shape).
constexpr int EXIT_CHECK_FAILED = 1;
constexpr int EXIT_USAGE = 2;
constexpr int EXIT_RUNTIME = 3;

constexpr std::uint64_t TAG_CLI_GRADCHECK_X = 31;
constexpr std::uint64_t TAG_CLI_GRADCHECK_ATTR = 32;
constexpr std::uint64_t TAG_CLI_GRADCHECK_EPS = 33;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Mirrors progress lines to stderr and a run.log inside the output dir.
class RunLog {
public:
    explicit RunLog(const fs::path& dir) : file_(dir / "run.log", std::ios::trunc) {}
    void line(const std::string& s) {
        std::cerr << s << "\n";
        if (file_) file_ << s << "\n";
    }

private:
    std::ofstream file_;
};

void prepare_out_dir(const fs::path& out, bool force) {
    if (fs::exists(out)) {
        if (!fs::is_directory(out)) {
            throw mvae::ConfigError("output path " + out.string() +
                                    " exists and is not a directory");
        }
        if (!fs::is_empty(out) && !force) {
            throw mvae::ConfigError("output directory " + out.string() +
                                    " is not empty; pass --force to write into it");
        }
        return;
    }
    fs::create_directories(out);
}

json config_as_json(const mvae::ModelConfig& cfg) {
    return json{{"d_img", cfg.d_img},
                {"embed_hidden", cfg.embed_hidden},
                {"d_attr_embed", cfg.d_attr_embed},
                {"vae_hidden", cfg.vae_hidden},
                {"latent", cfg.latent},
                {"epochs", cfg.epochs},
                {"batch", cfg.batch},
                {"alpha", cfg.alpha},
                {"gamma", cfg.gamma},
                {"beta", cfg.beta},
                {"lr", cfg.lr},
                {"optimizer", cfg.optimizer},
                {"variant", cfg.variant},
                {"wasserstein_mode", cfg.wasserstein_mode},
                {"embed_final_relu", cfg.embed_final_relu},
                {"classifier_space", cfg.classifier_space},
                {"n_syn_per_novel", cfg.n_syn_per_novel},
                {"classifier_hidden1", cfg.classifier_hidden1},
                {"classifier_hidden2", cfg.classifier_hidden2},
                {"classifier_epochs", cfg.classifier_epochs},
                {"classifier_seen_unmasked", cfg.classifier_seen_unmasked},
                {"seed", cfg.seed}};
}

void write_manifest(const fs::path& dir, json manifest) {
    manifest["created_at"] = utc_timestamp();
    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) {
        throw mvae::IoError("cannot write " + (dir / "manifest.json").string());
    }
    out << manifest.dump(2) << "\n";
}

mvae::ModelConfig load_config_or_defaults(const std::optional<std::string>& config_path,
                                          const std::optional<std::uint64_t>& seed_flag) {
    mvae::ModelConfig cfg;
    if (config_path) cfg = mvae::parse_config(*config_path);
    if (seed_flag) cfg.seed = *seed_flag;
    return cfg;
}

void check_dataset_dims(const mvae::FeatureDataset& ds, std::size_t d_img,
                        std::size_t d_attr, const std::string& who) {
    if (ds.features.cols() != d_img) {
        throw mvae::ValidationError(who + " expects feature width " +
                                    std::to_string(d_img) + " but the dataset has " +
                                    std::to_string(ds.features.cols()));
    }
    if (d_attr != 0 && ds.attributes.cols() != d_attr) {
        throw mvae::ValidationError(who + " expects attribute width " +
                                    std::to_string(d_attr) + " but the dataset has " +
                                    std::to_string(ds.attributes.cols()));
    }
}

std::vector<mvae::GzslMetrics> epoch_rows(const std::string& run_id,
                                          const std::string& variant,
                                          const std::vector<mvae::LossBreakdown>& losses) {
    std::vector<mvae::GzslMetrics> rows;
    for (std::size_t e = 0; e < losses.size(); ++e) {
        mvae::GzslMetrics r;
        r.run_id = run_id;
        r.variant = variant;
        r.epoch = e + 1;
        r.loss_total = losses[e].total;
        r.loss_recon = losses[e].recon;
        r.loss_kl = losses[e].kl;
        r.loss_wass = losses[e].wass;
        rows.push_back(std::move(r));
    }
    return rows;
}

int cmd_train(const std::optional<std::string>& config_path, const std::string& data_dir,
              const std::string& out_dir, const std::optional<std::uint64_t>& seed_flag,
              bool force) {
    const mvae::ModelConfig cfg = load_config_or_defaults(config_path, seed_flag);
    const mvae::FeatureDataset ds = mvae::load_gzsl_dataset(data_dir);
    check_dataset_dims(ds, cfg.d_img, 0, "config");

    const fs::path out(out_dir);
    prepare_out_dir(out, force);
    RunLog log(out);

    const std::string run_id = mvae::make_run_id(cfg, cfg.seed);
    log.line("run " + run_id + " variant " + cfg.variant + " seed " +
             std::to_string(cfg.seed));

    mvae::SeededRng root(cfg.seed);
    mvae::SeededRng init_rng = root.substream(mvae::TAG_MODEL_INIT);
    mvae::MvaeModel model(cfg, ds.attributes.cols(), init_rng);
    mvae::Trainer trainer(model, cfg, root);

    std::vector<mvae::LossBreakdown> losses;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        losses.push_back(trainer.train_epoch(ds));
        const mvae::LossBreakdown& l = losses.back();
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "epoch %zu/%zu total=%.6f recon=%.6f kl=%.6f wass=%.6f",
                      epoch + 1, cfg.epochs, l.total, l.recon, l.kl, l.wass);
        log.line(buf);
    }

    mvae::save_checkpoint(out / "checkpoint.mvm", model);
    mvae::write_metrics_csv(out / "metrics.csv", epoch_rows(run_id, cfg.variant, losses));

    json manifest;
    manifest["run_id"] = run_id;
    manifest["command"] = "train";
    manifest["seed"] = cfg.seed;
    manifest["data_dir"] = fs::absolute(data_dir).string();
    manifest["dataset_fingerprint"] = mvae::hex16(mvae::fingerprint_dataset_dir(data_dir));
    manifest["config"] = config_as_json(cfg);
    manifest["artifacts"] = {{"checkpoint", "checkpoint.mvm"},
                             {"metrics", "metrics.csv"},
                             {"log", "run.log"}};
    write_manifest(out, manifest);
    log.line("wrote checkpoint.mvm and metrics.csv to " + out.string());
    return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& data_dir,
                 const std::string& out_dir, const std::optional<std::uint64_t>& seed_flag,
                 bool force) {
    mvae::MvaeModel model = mvae::load_checkpoint(checkpoint_path);
    const mvae::ModelConfig& cfg = model.config();
    const mvae::FeatureDataset ds = mvae::load_gzsl_dataset(data_dir);
    check_dataset_dims(ds, model.d_img(), model.d_attr(), "checkpoint");

    const fs::path out(out_dir);
    prepare_out_dir(out, force);
    RunLog log(out);

    const std::uint64_t seed = seed_flag ? *seed_flag : cfg.seed;
    const std::string run_id = mvae::make_run_id(cfg, seed);
    log.line("run " + run_id + " evaluate variant " + cfg.variant + " seed " +
             std::to_string(seed));

    mvae::SeededRng root(seed);
    const mvae::ClassifierSet set = mvae::build_classifier_set(model, ds, cfg, root);
    mvae::MlpClassifier clf = mvae::train_classifier(set, cfg, ds.n_classes(), root);
    mvae::GzslMetrics metrics = mvae::evaluate_gzsl(model, clf, ds, cfg);
    metrics.run_id = run_id;
    metrics.variant = cfg.variant;
    metrics.epoch = cfg.epochs;

    mvae::write_metrics_csv(out / "metrics.csv", {metrics});
    mvae::save_classifier(out / "classifier.mvm", clf, cfg);

    char buf[128];
    std::snprintf(buf, sizeof(buf), "seen=%.4f novel=%.4f harmonic=%.4f",
                  metrics.seen_acc, metrics.novel_acc, metrics.harmonic_mean);
    log.line(buf);

    json manifest;
    manifest["run_id"] = run_id;
    manifest["command"] = "evaluate";
    manifest["seed"] = seed;
    manifest["checkpoint"] = fs::absolute(checkpoint_path).string();
    manifest["data_dir"] = fs::absolute(data_dir).string();
    manifest["dataset_fingerprint"] = mvae::hex16(mvae::fingerprint_dataset_dir(data_dir));
    manifest["config"] = config_as_json(cfg);
    manifest["artifacts"] = {{"metrics", "metrics.csv"},
                             {"classifier", "classifier.mvm"},
                             {"log", "run.log"}};
    write_manifest(out, manifest);
    return 0;
}

int cmd_ablate(const std::optional<std::string>& config_path, const std::string& data_dir,
               const std::string& out_dir, const std::optional<std::uint64_t>& seed_flag,
               bool force) {
    const mvae::ModelConfig base = load_config_or_defaults(config_path, seed_flag);
    const mvae::FeatureDataset ds = mvae::load_gzsl_dataset(data_dir);
    check_dataset_dims(ds, base.d_img, 0, "config");

    const fs::path out(out_dir);
    prepare_out_dir(out, force);
    RunLog log(out);

    std::vector<mvae::GzslMetrics> final_rows;
    for (const char* variant : {"mvae", "baseline1", "baseline2"}) {
        const mvae::ModelConfig cfg = mvae::ablation_variant_config(base, variant);
        log.line(std::string("ablation variant ") + variant);
        mvae::PipelineRun run = mvae::run_pipeline(ds, cfg, base.seed);

        const fs::path vdir = out / variant;
        fs::create_directories(vdir);
        mvae::save_checkpoint(vdir / "checkpoint.mvm", run.model);
        auto rows = epoch_rows(run.final_metrics.run_id, cfg.variant, run.epoch_losses);
        rows.push_back(run.final_metrics);
        mvae::write_metrics_csv(vdir / "metrics.csv", rows);

        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s seen=%.4f novel=%.4f harmonic=%.4f", variant,
                      run.final_metrics.seen_acc, run.final_metrics.novel_acc,
                      run.final_metrics.harmonic_mean);
        log.line(buf);
        final_rows.push_back(std::move(run.final_metrics));
    }

    mvae::write_metrics_csv(out / "metrics.csv", final_rows);

    json manifest;
    manifest["run_id"] = mvae::make_run_id(base, base.seed);
    manifest["command"] = "ablate";
    manifest["seed"] = base.seed;
    manifest["data_dir"] = fs::absolute(data_dir).string();
    manifest["dataset_fingerprint"] = mvae::hex16(mvae::fingerprint_dataset_dir(data_dir));
    manifest["config"] = config_as_json(base);
    manifest["artifacts"] = {{"metrics", "metrics.csv"},
                             {"variants", {"mvae", "baseline1", "baseline2"}},
                             {"log", "run.log"}};
    write_manifest(out, manifest);
    return 0;
}

int cmd_synth_data(std::size_t seen, std::size_t novel, std::size_t per_class,
                   std::size_t d_img, std::size_t d_attr, double spread,
                   std::uint64_t seed, const std::string& out_dir, bool force) {
    mvae::SyntheticSpec spec;
    spec.seen_classes = seen;
    spec.novel_classes = novel;
    spec.samples_per_class = per_class;
    spec.d_img = d_img;
    spec.d_attr = d_attr;
    spec.spread = spread;
    spec.seed = seed;

    const mvae::FeatureDataset ds = mvae::generate_synthetic(spec);
    const fs::path out(out_dir);
    prepare_out_dir(out, force);
    mvae::write_gzsl_dataset(out, ds);
    std::cerr << "wrote " << ds.n_samples() << " samples, " << ds.n_classes()
              << " classes to " << out.string() << "\n";
    return 0;
}

int cmd_gradcheck(std::size_t d_img, std::size_t d_attr, std::size_t embed_hidden,
                  std::size_t d_attr_embed, std::size_t vae_hidden, std::size_t latent,
                  std::size_t batch, const std::string& variant,
                  const std::string& wasserstein_mode, double tolerance,
                  std::uint64_t seed) {
    mvae::ModelConfig cfg;
    cfg.d_img = d_img;
    cfg.embed_hidden = embed_hidden;
    cfg.d_attr_embed = d_attr_embed;
    cfg.vae_hidden = vae_hidden;
    cfg.latent = latent;
    cfg.variant = variant;
    cfg.wasserstein_mode = wasserstein_mode;
    cfg.seed = seed;

    mvae::SeededRng root(seed);
    mvae::SeededRng init_rng = root.substream(mvae::TAG_MODEL_INIT);
    mvae::MvaeModel model(cfg, d_attr, init_rng);

    mvae::SeededRng x_rng = root.substream(TAG_CLI_GRADCHECK_X);
    mvae::SeededRng attr_rng = root.substream(TAG_CLI_GRADCHECK_ATTR);
    mvae::SeededRng eps_rng = root.substream(TAG_CLI_GRADCHECK_EPS);
    const mvae::Matrix x = mvae::gaussian_sample(x_rng, batch, d_img);
    const mvae::Matrix attrs = mvae::gaussian_sample(attr_rng, batch, d_attr);
    const mvae::Matrix eps_main = mvae::gaussian_sample(eps_rng, batch, latent);
    const mvae::Matrix eps_sem = variant == "baseline2"
                                     ? mvae::gaussian_sample(eps_rng, batch, latent)
                                     : mvae::Matrix();

    mvae::LossWeights weights{cfg.alpha, cfg.variant == "baseline1" ? 0.0 : cfg.gamma,
                              cfg.beta};
    mvae::MvaeObjectiveMap map(model, attrs, weights,
                               mvae::wasserstein_mode_from_string(wasserstein_mode),
                               eps_main, eps_sem);
    const mvae::GradCheckReport report = mvae::gradient_check(map, x, tolerance);

    for (const mvae::BlockCheck& b : report.blocks) {
        std::printf("%-24s max_rel_err %.3e %s\n", b.name.c_str(), b.max_rel_error,
                    b.passed ? "PASS" : "FAIL");
    }
    std::printf("gradcheck %s: worst %.3e, tolerance %.1e\n",
                report.all_passed() ? "PASS" : "FAIL", report.worst_rel_error(),
                report.tolerance);
    return report.all_passed() ? 0 : EXIT_CHECK_FAILED;
}

int dispatch(int argc, char** argv) {
    CLI::App app{"Multimodal variational auto-encoder pipeline for generalized "
                 "zero-shot learning"};
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::optional<std::uint64_t> seed_flag;
    std::string data_dir, out_dir, checkpoint_path;
    bool force = false;

    auto add_common = [&](CLI::App* cmd, bool with_config) {
        if (with_config) cmd->add_option("--config", config_path, "Config file");
        cmd->add_option("--data-dir", data_dir, "Dataset directory")->required();
        cmd->add_option("--out", out_dir, "Output directory")->required();
        cmd->add_option("--seed", seed_flag, "Seed override");
        cmd->add_flag("--force", force, "Write into a non-empty output directory");
    };

    CLI::App* train = app.add_subcommand("train", "Train a model");
    add_common(train, true);

    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
    evaluate->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
    add_common(evaluate, false);

    CLI::App* ablate = app.add_subcommand("ablate", "Run the three-variant ablation");
    add_common(ablate, true);

    CLI::App* synth = app.add_subcommand("synth-data", "Generate a synthetic dataset");
    std::size_t seen = 10, novel = 3, per_class = 50, s_d_img = 64, s_d_attr = 16;
    double spread = 0.1;
    std::uint64_t synth_seed = 0;
    synth->add_option("--seen", seen, "Seen class count");
    synth->add_option("--novel", novel, "Novel class count");
    synth->add_option("--per-class", per_class, "Samples per class");
    synth->add_option("--d-img", s_d_img, "Feature width");
    synth->add_option("--d-attr", s_d_attr, "Attribute width");
    synth->add_option("--spread", spread, "Within-class spread");
    synth->add_option("--seed", synth_seed, "Generator seed");
    synth->add_option("--out", out_dir, "Output directory")->required();
    synth->add_flag("--force", force, "Write into a non-empty output directory");

    CLI::App* gradcheck = app.add_subcommand("gradcheck",
                                             "Finite-difference gradient check");
    std::size_t g_d_img = 6, g_d_attr = 4, g_embed_hidden = 8, g_d_attr_embed = 5;
    std::size_t g_vae_hidden = 10, g_latent = 3, g_batch = 5;
    std::string g_variant = "mvae", g_mode = "quantile-1d";
    double g_tolerance = 1e-4;
    std::uint64_t g_seed = 0;
    gradcheck->add_option("--d-img", g_d_img, "Feature width");
    gradcheck->add_option("--d-attr", g_d_attr, "Attribute width");
    gradcheck->add_option("--embed-hidden", g_embed_hidden, "Embed hidden width");
    gradcheck->add_option("--d-attr-embed", g_d_attr_embed, "Embedded attribute width");
    gradcheck->add_option("--vae-hidden", g_vae_hidden, "Encoder hidden width");
    gradcheck->add_option("--latent", g_latent, "Latent width");
    gradcheck->add_option("--batch", g_batch, "Batch size");
    gradcheck->add_option("--variant", g_variant, "Model variant")
        ->check(CLI::IsMember({"mvae", "baseline1", "baseline2"}));
    gradcheck->add_option("--wasserstein-mode", g_mode, "Distance mode")
        ->check(CLI::IsMember({"quantile-1d", "gaussian-diag"}));
    gradcheck->add_option("--tolerance", g_tolerance, "Relative error bound");
    gradcheck->add_option("--seed", g_seed, "Seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : EXIT_USAGE;
    }

    if (train->parsed()) {
        return cmd_train(config_path, data_dir, out_dir, seed_flag, force);
    }
    if (evaluate->parsed()) {
        return cmd_evaluate(checkpoint_path, data_dir, out_dir, seed_flag, force);
    }
    if (ablate->parsed()) {
        return cmd_ablate(config_path, data_dir, out_dir, seed_flag, force);
    }
    if (synth->parsed()) {
        return cmd_synth_data(seen, novel, per_class, s_d_img, s_d_attr, spread,
                              synth_seed, out_dir, force);
    }
    if (gradcheck->parsed()) {
        return cmd_gradcheck(g_d_img, g_d_attr, g_embed_hidden, g_d_attr_embed,
                             g_vae_hidden, g_latent, g_batch, g_variant, g_mode,
                             g_tolerance, g_seed);
    }
    return EXIT_USAGE;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return dispatch(argc, argv);
    } catch (const mvae::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_USAGE;
    } catch (const mvae::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_RUNTIME;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return EXIT_RUNTIME;
    }
}
