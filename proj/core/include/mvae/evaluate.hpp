#ifndef MVAE_EVALUATE_HPP
#define MVAE_EVALUATE_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "mvae/classifier.hpp"
#include "mvae/config.hpp"
#include "mvae/dataset.hpp"
#include "mvae/metrics.hpp"
#include "mvae/model.hpp"

namespace mvae {

// 2sn / (s + n), the usual summary of seen and novel accuracy. Zero
// when both sides are zero. Inputs must be non-negative and may use
// either the [0, 1] or the percent scale, as long as both agree.
double harmonic_mean(double seen_acc, double novel_acc);

// Per-class accuracies from prediction/label pairs of the two test
// splits. S and N are unweighted means over the classes present in the
// respective split, so duplicating every sample of a class leaves them
// unchanged.
GzslMetrics score_predictions(const std::vector<std::uint32_t>& seen_labels,
                              const std::vector<std::uint32_t>& seen_preds,
                              const std::vector<std::uint32_t>& novel_labels,
                              const std::vector<std::uint32_t>& novel_preds);

// Masks the semantic half of every test sample, classifies both test
// splits with the given classifier, and scores them.
GzslMetrics evaluate_gzsl(MvaeModel& model, MlpClassifier& clf,
                          const FeatureDataset& ds, const ModelConfig& cfg);

// Deterministic run identifier from the config content and seed.
std::string make_run_id(const ModelConfig& cfg, std::uint64_t seed);

struct PipelineRun {
    std::vector<LossBreakdown> epoch_losses;
    GzslMetrics final_metrics;
    MvaeModel model;
};

// Full deterministic pipeline: seeded init, training, classifier set,
// classifier training, evaluation. Identical inputs give identical
// results.
PipelineRun run_pipeline(const FeatureDataset& ds, const ModelConfig& cfg,
                         std::uint64_t seed);

// Runs the mvae variant, baseline1 (distance weight zeroed) and
// baseline2 (separate pair per modality) from the same base config and
// seed, and writes one final metrics row per variant to out_csv.
std::vector<GzslMetrics> run_ablation(const FeatureDataset& ds,
                                      const ModelConfig& base_cfg, std::uint64_t seed,
                                      const std::filesystem::path& out_csv);

// The per-variant config surgery run_ablation applies, exposed so the
// command-line tool composes the same runs.
ModelConfig ablation_variant_config(const ModelConfig& base_cfg,
                                    const std::string& variant);

}  // namespace mvae

#endif
