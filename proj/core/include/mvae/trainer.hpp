#ifndef MVAE_TRAINER_HPP
#define MVAE_TRAINER_HPP

#include <vector>

#include "mvae/adam.hpp"
#include "mvae/config.hpp"
#include "mvae/dataset.hpp"
#include "mvae/gradcheck.hpp"
#include "mvae/model.hpp"
#include "mvae/rng.hpp"

namespace mvae {

// Substream tags, all distinct from the synthetic generator's.
constexpr std::uint64_t TAG_MODEL_INIT = 20;
constexpr std::uint64_t TAG_SHUFFLE = 21;
constexpr std::uint64_t TAG_NOISE = 22;

// One evaluation of the full objective on a batch. x holds the image
// rows, attr_rows the matching raw attribute vectors. eps_main drives
// the reparameterization of the main pair; eps_sem is only read by the
// baseline2 variant and may be empty otherwise. Both are passed in so a
// gradient check can freeze the sampling noise.
LossBreakdown batch_forward(MvaeModel& model, const Matrix& x, const Matrix& attr_rows,
                            const LossWeights& weights, WassersteinMode mode,
                            const Matrix& eps_main, const Matrix& eps_sem);
// Same value, and fills every gradient buffer of the model.
LossBreakdown batch_forward_backward(MvaeModel& model, const Matrix& x,
                                     const Matrix& attr_rows, const LossWeights& weights,
                                     WassersteinMode mode, const Matrix& eps_main,
                                     const Matrix& eps_sem);

// Mini-batch trainer. Owns one optimizer state per parameter block and
// two private substreams, one for shuffling and one for sampling noise.
class Trainer {
public:
    Trainer(MvaeModel& model, const ModelConfig& cfg, SeededRng& root);

    // Shuffles the train split, walks it in batches (last one short),
    // updates all parameters once per batch, and returns the epoch loss
    // components as sample-weighted means over the batches.
    LossBreakdown train_epoch(const FeatureDataset& ds);

    const std::vector<AdamState>& states() const { return states_; }

private:
    MvaeModel& model_;
    ModelConfig cfg_;
    LossWeights weights_;
    WassersteinMode mode_;
    std::vector<AdamState> states_;
    SeededRng shuffle_rng_;
    SeededRng noise_rng_;
};

// Adapter exposing the batch objective with frozen noise to the
// finite-difference checker.
class MvaeObjectiveMap : public DifferentiableMap {
public:
    MvaeObjectiveMap(MvaeModel& model, Matrix attr_rows, LossWeights weights,
                     WassersteinMode mode, Matrix eps_main, Matrix eps_sem);

    double loss(const Matrix& input) override;
    double loss_with_grads(const Matrix& input) override;
    std::vector<ParamBlock> parameter_blocks() override;

private:
    MvaeModel& model_;
    Matrix attr_rows_;
    LossWeights weights_;
    WassersteinMode mode_;
    Matrix eps_main_;
    Matrix eps_sem_;
};

}  // namespace mvae

#endif
