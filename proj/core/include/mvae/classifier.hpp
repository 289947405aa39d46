#ifndef MVAE_CLASSIFIER_HPP
#define MVAE_CLASSIFIER_HPP

#include <cstdint>
#include <vector>

#include "mvae/config.hpp"
#include "mvae/dataset.hpp"
#include "mvae/gradcheck.hpp"
#include "mvae/layers.hpp"
#include "mvae/model.hpp"
#include "mvae/rng.hpp"

namespace mvae {

constexpr std::uint64_t TAG_SYNTHESIS = 23;
constexpr std::uint64_t TAG_CLASSIFIER_INIT = 24;
constexpr std::uint64_t TAG_CLASSIFIER_SHUFFLE = 25;

// Training set for the final classifier: one feature row per example
// with its class id. Rows live in the space named by classifier_space,
// either decoded reconstructions or latent codes.
struct ClassifierSet {
    Matrix inputs;
    std::vector<std::uint32_t> labels;
};

// Three affine layers with ReLU between them; the last layer emits one
// logit per class of the dataset.
class MlpClassifier {
public:
    MlpClassifier() = default;
    MlpClassifier(std::size_t in_dim, std::size_t hidden1, std::size_t hidden2,
                  std::size_t n_classes, SeededRng& rng);

    Matrix logits(const Matrix& features);
    // Softmax cross entropy against integer labels, batch mean. Fills
    // the layer gradients and returns the loss.
    double train_loss_backward(const Matrix& features,
                               const std::vector<std::uint32_t>& labels);

    std::size_t in_dim() const { return layer1.in_dim(); }
    std::size_t n_classes() const { return layer3.out_dim(); }
    std::vector<ParamBlock> parameter_blocks();

    AffineLayer layer1;
    AffineLayer layer2;
    AffineLayer layer3;

private:
    Matrix pre1_;
    Matrix pre2_;
    bool has_forward_ = false;
};

// Deterministic feature extraction for real samples: the semantic half
// of the input is zeroed, matching test time where labels are unknown,
// and features come from the posterior mean without sampling.
Matrix masked_features(MvaeModel& model, const Matrix& x_rows,
                       const std::string& classifier_space);

// Builds the classifier training set: masked deterministic rows for
// every train_seen sample (or unmasked [x, phi(c(y))] rows when
// classifier_seen_unmasked is set), plus n_syn_per_novel sampled rows
// per novel class synthesized from [0, phi(c)]. Throws StateError on an
// untrained model.
ClassifierSet build_classifier_set(MvaeModel& model, const FeatureDataset& ds,
                                   const ModelConfig& cfg, SeededRng& root);

// Adam-trained softmax classifier over the union label space. Throws
// DegenerateDataError when the set holds fewer than two classes.
MlpClassifier train_classifier(const ClassifierSet& set, const ModelConfig& cfg,
                               std::size_t n_classes, SeededRng& root);

// Argmax with ties resolved to the lowest class id.
std::vector<std::uint32_t> classify(MlpClassifier& clf, const Matrix& features);

}  // namespace mvae

#endif
