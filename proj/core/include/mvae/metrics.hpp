#ifndef MVAE_METRICS_HPP
#define MVAE_METRICS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace mvae {

// One row of the metrics CSV. Training rows carry loss components with
// zero accuracies; evaluation rows carry accuracies with the losses of
// the epoch they summarize.
struct GzslMetrics {
    std::string run_id;
    std::string variant;
    std::size_t epoch = 0;
    double loss_total = 0.0;
    double loss_recon = 0.0;
    double loss_kl = 0.0;
    double loss_wass = 0.0;
    double seen_acc = 0.0;
    double novel_acc = 0.0;
    double harmonic_mean = 0.0;
    // Per-class breakdown kept in memory only, not serialized.
    std::map<std::uint32_t, double> per_class_accuracy;
};

// Writes header plus one row per entry. Doubles are fixed to six
// decimals, so a reload compares equal at that precision.
void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<GzslMetrics>& rows);
std::string metrics_csv_text(const std::vector<GzslMetrics>& rows);
std::vector<GzslMetrics> read_metrics_csv(const std::filesystem::path& path);

}  // namespace mvae

#endif
