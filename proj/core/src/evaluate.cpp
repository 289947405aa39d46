#include "mvae/evaluate.hpp"

#include <map>

#include "mvae/errors.hpp"
#include "mvae/fingerprint.hpp"
#include "mvae/rng.hpp"
#include "mvae/trainer.hpp"

namespace mvae {

// Works on either the [0,1] or the percent scale as long as both
// arguments use the same one.
double harmonic_mean(double seen_acc, double novel_acc) {
    if (seen_acc < 0.0 || novel_acc < 0.0) {
        throw DomainError("harmonic_mean: accuracies must be non-negative, got " +
                          std::to_string(seen_acc) + " and " +
                          std::to_string(novel_acc));
    }
    if (seen_acc + novel_acc == 0.0) return 0.0;
    return 2.0 * seen_acc * novel_acc / (seen_acc + novel_acc);
}

namespace {

struct Tally {
    std::size_t correct = 0;
    std::size_t total = 0;
};

double per_class_mean(const std::vector<std::uint32_t>& labels,
                      const std::vector<std::uint32_t>& preds,
                      std::map<std::uint32_t, double>& per_class) {
    if (labels.size() != preds.size()) {
        throw ShapeError("score_predictions: " + std::to_string(labels.size()) +
                         " labels vs " + std::to_string(preds.size()) + " predictions");
    }
    if (labels.empty()) {
        throw DegenerateDataError("score_predictions: empty test split");
    }
    std::map<std::uint32_t, Tally> tallies;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        Tally& t = tallies[labels[i]];
        t.total += 1;
        if (preds[i] == labels[i]) t.correct += 1;
    }
    double acc_sum = 0.0;
    for (const auto& [cls, t] : tallies) {
        const double acc = static_cast<double>(t.correct) / static_cast<double>(t.total);
        per_class[cls] = acc;
        acc_sum += acc;
    }
    return acc_sum / static_cast<double>(tallies.size());
}

}  // namespace

GzslMetrics score_predictions(const std::vector<std::uint32_t>& seen_labels,
                              const std::vector<std::uint32_t>& seen_preds,
                              const std::vector<std::uint32_t>& novel_labels,
                              const std::vector<std::uint32_t>& novel_preds) {
    GzslMetrics m;
    m.seen_acc = per_class_mean(seen_labels, seen_preds, m.per_class_accuracy);
    m.novel_acc = per_class_mean(novel_labels, novel_preds, m.per_class_accuracy);
    m.harmonic_mean = harmonic_mean(m.seen_acc, m.novel_acc);
    return m;
}

GzslMetrics evaluate_gzsl(MvaeModel& model, MlpClassifier& clf, const FeatureDataset& ds,
                          const ModelConfig& cfg) {
    if (!model.trained()) {
        throw StateError("evaluate_gzsl: model is untrained");
    }
    if (ds.test_seen.empty() || ds.test_novel.empty()) {
        throw DegenerateDataError("evaluation needs non-empty test_seen and test_novel "
                                  "splits");
    }
    auto predict_split = [&](const std::vector<std::size_t>& split) {
        const Matrix x = gather_rows(ds.features, split);
        const Matrix feats = masked_features(model, x, cfg.classifier_space);
        return classify(clf, feats);
    };
    const auto seen_preds = predict_split(ds.test_seen);
    const auto novel_preds = predict_split(ds.test_novel);

    std::vector<std::uint32_t> seen_labels, novel_labels;
    for (std::size_t i : ds.test_seen) seen_labels.push_back(ds.labels[i]);
    for (std::size_t i : ds.test_novel) novel_labels.push_back(ds.labels[i]);

    return score_predictions(seen_labels, seen_preds, novel_labels, novel_preds);
}

std::string make_run_id(const ModelConfig& cfg, std::uint64_t seed) {
    const std::uint64_t h = fnv1a_str(serialize_config(cfg));
    return "run-" + hex16(mix_u64(h ^ mix_u64(seed)));
}

PipelineRun run_pipeline(const FeatureDataset& ds, const ModelConfig& cfg,
                         std::uint64_t seed) {
    if (ds.features.cols() != cfg.d_img) {
        throw ValidationError("dataset feature width " +
                              std::to_string(ds.features.cols()) +
                              " does not match config d_img " + std::to_string(cfg.d_img));
    }
    SeededRng root(seed);
    SeededRng init_rng = root.substream(TAG_MODEL_INIT);

    PipelineRun run;
    run.model = MvaeModel(cfg, ds.attributes.cols(), init_rng);
    Trainer trainer(run.model, cfg, root);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        run.epoch_losses.push_back(trainer.train_epoch(ds));
    }

    const ClassifierSet set = build_classifier_set(run.model, ds, cfg, root);
    MlpClassifier clf = train_classifier(set, cfg, ds.n_classes(), root);
    run.final_metrics = evaluate_gzsl(run.model, clf, ds, cfg);
    run.final_metrics.run_id = make_run_id(cfg, seed);
    run.final_metrics.variant = cfg.variant;
    run.final_metrics.epoch = cfg.epochs;
    if (!run.epoch_losses.empty()) {
        const LossBreakdown& last = run.epoch_losses.back();
        run.final_metrics.loss_total = last.total;
        run.final_metrics.loss_recon = last.recon;
        run.final_metrics.loss_kl = last.kl;
        run.final_metrics.loss_wass = last.wass;
    }
    return run;
}

ModelConfig ablation_variant_config(const ModelConfig& base_cfg,
                                    const std::string& variant) {
    ModelConfig cfg = base_cfg;
    cfg.variant = variant;
    if (variant == "baseline1") {
        // Same architecture as mvae with the distance term switched off.
        cfg.gamma = 0.0;
    }
    return cfg;
}

std::vector<GzslMetrics> run_ablation(const FeatureDataset& ds,
                                      const ModelConfig& base_cfg, std::uint64_t seed,
                                      const std::filesystem::path& out_csv) {
    std::vector<GzslMetrics> rows;
    for (const char* variant : {"mvae", "baseline1", "baseline2"}) {
        const ModelConfig cfg = ablation_variant_config(base_cfg, variant);
        rows.push_back(run_pipeline(ds, cfg, seed).final_metrics);
    }
    write_metrics_csv(out_csv, rows);
    return rows;
}

}  // namespace mvae
