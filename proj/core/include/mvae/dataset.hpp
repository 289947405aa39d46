#ifndef MVAE_DATASET_HPP
#define MVAE_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "mvae/matrix.hpp"

namespace mvae {

// A zero-shot dataset: per-sample image features and labels, per-class
// attribute vectors, the seen/novel class partition, and sample-index
// splits. Class ids index rows of the attribute matrix.
struct FeatureDataset {
    Matrix features;                       // samples x d_img
    std::vector<std::uint32_t> labels;     // one class id per sample
    Matrix attributes;                     // classes x d_attr
    std::vector<std::uint32_t> seen_classes;   // sorted ascending
    std::vector<std::uint32_t> novel_classes;  // sorted ascending, disjoint from seen
    std::vector<std::size_t> train_seen;   // sample indices
    std::vector<std::size_t> test_seen;    // sample indices
    std::vector<std::size_t> test_novel;   // sample indices

    std::size_t n_samples() const { return labels.size(); }
    std::size_t n_classes() const { return attributes.rows(); }
    bool is_seen_class(std::uint32_t c) const;
    bool is_novel_class(std::uint32_t c) const;
};

struct SyntheticSpec {
    std::size_t seen_classes = 10;
    std::size_t novel_classes = 3;
    std::size_t samples_per_class = 50;
    std::size_t d_img = 64;
    std::size_t d_attr = 16;
    double spread = 0.1;
    std::uint64_t seed = 0;
};

// Draws per-class attribute vectors, projects them to feature space
// through a shared random linear map, and scatters samples around each
// class center with the given spread. Every stored value is rounded to
// float32 so a written-then-reloaded copy matches the in-memory one.
FeatureDataset generate_synthetic(const SyntheticSpec& spec);

// Directory layout: features.mvf, labels.mvl, attributes.mvf,
// seen_classes.txt, novel_classes.txt, and optional train_indices.txt,
// test_seen_indices.txt, test_novel_indices.txt (one decimal per line).
// Missing split files fall back to a deterministic default: per seen
// class the first 80 percent of its sample indices (ascending) train and
// the rest test, all novel samples test. When exactly one of the two
// seen-split files is present the other becomes its complement within
// the seen samples.
FeatureDataset load_gzsl_dataset(const std::filesystem::path& dir);

// Writes all files including the three index files.
void write_gzsl_dataset(const std::filesystem::path& dir, const FeatureDataset& ds);

// Throws ValidationError naming the violated rule.
void validate_dataset(const FeatureDataset& ds);

// The default 80/20 rule above, exposed for tests.
void apply_default_split(FeatureDataset& ds);

}  // namespace mvae

#endif
