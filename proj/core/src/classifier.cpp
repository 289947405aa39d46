#include "mvae/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "mvae/adam.hpp"
#include "mvae/errors.hpp"

namespace mvae {

namespace {

constexpr std::size_t FEATURE_CHUNK = 512;

Matrix repeat_row(const Matrix& row, std::size_t times) {
    Matrix out(times, row.cols());
    for (std::size_t i = 0; i < times; ++i) {
        for (std::size_t j = 0; j < row.cols(); ++j) out(i, j) = row(0, j);
    }
    return out;
}

// Deterministic features for one chunk of real samples.
Matrix chunk_features(MvaeModel& model, const Matrix& x, const Matrix* sem_rows,
                      const std::string& space) {
    const bool latent = space == "latent";
    if (model.variant() == Variant::baseline2) {
        const LatentDistribution dist_img = model.main_pair.encode(x);
        const Matrix sem = sem_rows ? *sem_rows
                                    : Matrix(x.rows(), model.d_sem());
        const LatentDistribution dist_sem = model.semantic_pair.encode(sem);
        if (latent) return hconcat(dist_img.mu, dist_sem.mu);
        return hconcat(model.main_pair.decode(dist_img.mu),
                       model.semantic_pair.decode(dist_sem.mu));
    }
    const Matrix sem = sem_rows ? *sem_rows : Matrix(x.rows(), model.d_sem());
    const LatentDistribution dist = model.main_pair.encode(build_combined(x, sem));
    if (latent) return dist.mu;
    return model.main_pair.decode(dist.mu);
}

Matrix batched_features(MvaeModel& model, const Matrix& x, const Matrix* sem_rows,
                        const std::string& space) {
    Matrix out;
    for (std::size_t begin = 0; begin < x.rows(); begin += FEATURE_CHUNK) {
        const std::size_t count = std::min(FEATURE_CHUNK, x.rows() - begin);
        std::vector<std::size_t> idx(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = begin + i;
        const Matrix xc = gather_rows(x, idx);
        Matrix semc;
        const Matrix* semp = nullptr;
        if (sem_rows) {
            semc = gather_rows(*sem_rows, idx);
            semp = &semc;
        }
        Matrix fc = chunk_features(model, xc, semp, space);
        if (out.rows() == 0) {
            out = Matrix(x.rows(), fc.cols());
        }
        for (std::size_t i = 0; i < count; ++i) {
            for (std::size_t j = 0; j < fc.cols(); ++j) out(begin + i, j) = fc(i, j);
        }
    }
    return out;
}

}  // namespace

MlpClassifier::MlpClassifier(std::size_t in_dim, std::size_t hidden1,
                             std::size_t hidden2, std::size_t n_classes, SeededRng& rng)
    : layer1(AffineLayer::glorot_uniform(in_dim, hidden1, rng)),
      layer2(AffineLayer::glorot_uniform(hidden1, hidden2, rng)),
      layer3(AffineLayer::glorot_uniform(hidden2, n_classes, rng)) {}

Matrix MlpClassifier::logits(const Matrix& features) {
    pre1_ = layer1.forward(features);
    pre2_ = layer2.forward(relu(pre1_));
    has_forward_ = true;
    return layer3.forward(relu(pre2_));
}

double MlpClassifier::train_loss_backward(const Matrix& features,
                                          const std::vector<std::uint32_t>& labels) {
    if (features.rows() != labels.size()) {
        throw ShapeError("classifier: features " + features.shape_str() + " and " +
                         std::to_string(labels.size()) + " labels differ in count");
    }
    const Matrix raw = logits(features);
    const double inv_batch = 1.0 / static_cast<double>(features.rows());

    Matrix d_logits(raw.rows(), raw.cols());
    double loss = 0.0;
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        if (labels[i] >= raw.cols()) {
            throw IndexError("classifier: label " + std::to_string(labels[i]) +
                             " outside " + std::to_string(raw.cols()) + " classes");
        }
        double max_logit = raw(i, 0);
        for (std::size_t j = 1; j < raw.cols(); ++j) {
            max_logit = std::max(max_logit, raw(i, j));
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < raw.cols(); ++j) {
            denom += std::exp(raw(i, j) - max_logit);
        }
        loss -= (raw(i, labels[i]) - max_logit - std::log(denom)) * inv_batch;
        for (std::size_t j = 0; j < raw.cols(); ++j) {
            const double p = std::exp(raw(i, j) - max_logit) / denom;
            d_logits(i, j) = (p - (j == labels[i] ? 1.0 : 0.0)) * inv_batch;
        }
    }

    const Matrix d2 = layer3.backward(d_logits);
    const Matrix d1 = layer2.backward(relu_backward(pre2_, d2));
    layer1.backward(relu_backward(pre1_, d1));
    return loss;
}

std::vector<ParamBlock> MlpClassifier::parameter_blocks() {
    std::vector<ParamBlock> blocks;
    auto push_layer = [&blocks](const std::string& name, AffineLayer& layer) {
        blocks.push_back({name + ".weight", &layer.weight, &layer.grad_weight});
        blocks.push_back({name + ".bias", &layer.bias, &layer.grad_bias});
    };
    push_layer("clf.layer1", layer1);
    push_layer("clf.layer2", layer2);
    push_layer("clf.layer3", layer3);
    return blocks;
}

Matrix masked_features(MvaeModel& model, const Matrix& x_rows,
                       const std::string& classifier_space) {
    return batched_features(model, x_rows, nullptr, classifier_space);
}

ClassifierSet build_classifier_set(MvaeModel& model, const FeatureDataset& ds,
                                   const ModelConfig& cfg, SeededRng& root) {
    if (!model.trained()) {
        throw StateError("model is untrained; train it or load a checkpoint before "
                         "building a classifier set");
    }
    if (ds.features.cols() != model.d_img()) {
        throw ValidationError("dataset feature width " +
                              std::to_string(ds.features.cols()) +
                              " does not match model d_img " +
                              std::to_string(model.d_img()));
    }
    if (ds.attributes.cols() != model.d_attr()) {
        throw ValidationError("dataset attribute width " +
                              std::to_string(ds.attributes.cols()) +
                              " does not match model d_attr " +
                              std::to_string(model.d_attr()));
    }

    SeededRng syn_rng = root.substream(TAG_SYNTHESIS);
    ClassifierSet set;

    // Real seen examples.
    const Matrix x_train = gather_rows(ds.features, ds.train_seen);
    Matrix seen_rows;
    if (cfg.classifier_seen_unmasked) {
        std::vector<std::size_t> label_rows;
        label_rows.reserve(ds.train_seen.size());
        for (std::size_t i : ds.train_seen) label_rows.push_back(ds.labels[i]);
        const Matrix attr_rows = gather_rows(ds.attributes, label_rows);
        const Matrix sem_rows = model.embed_net.forward(attr_rows);
        seen_rows = batched_features(model, x_train, &sem_rows, cfg.classifier_space);
    } else {
        seen_rows = masked_features(model, x_train, cfg.classifier_space);
    }

    // Synthesized novel examples, classes in ascending order.
    std::vector<Matrix> novel_blocks;
    std::vector<std::uint32_t> novel_labels;
    const std::size_t n_syn = cfg.n_syn_per_novel;
    for (std::uint32_t c : ds.novel_classes) {
        const Matrix sem_row = model.embed_net.forward(ds.attributes.row(c));
        Matrix feat;
        if (model.variant() == Variant::baseline2) {
            const Matrix x_zero(n_syn, model.d_img());
            const LatentDistribution dist_img = model.main_pair.encode(x_zero);
            const Matrix eps_img = gaussian_sample(syn_rng, n_syn, model.latent_dim());
            const Matrix z_img = reparameterize(dist_img, eps_img);
            const Matrix sem_rep = repeat_row(sem_row, n_syn);
            const LatentDistribution dist_sem = model.semantic_pair.encode(sem_rep);
            const Matrix eps_sem = gaussian_sample(syn_rng, n_syn, model.latent_dim());
            const Matrix z_sem = reparameterize(dist_sem, eps_sem);
            feat = cfg.classifier_space == "latent"
                       ? hconcat(z_img, z_sem)
                       : hconcat(model.main_pair.decode(z_img),
                                 model.semantic_pair.decode(z_sem));
        } else {
            const Matrix combined =
                repeat_row(build_combined(Matrix(1, model.d_img()), sem_row), n_syn);
            const LatentDistribution dist = model.main_pair.encode(combined);
            const Matrix eps = gaussian_sample(syn_rng, n_syn, model.latent_dim());
            const Matrix z = reparameterize(dist, eps);
            feat = cfg.classifier_space == "latent" ? z : model.main_pair.decode(z);
        }
        novel_blocks.push_back(std::move(feat));
        for (std::size_t i = 0; i < n_syn; ++i) novel_labels.push_back(c);
    }

    std::size_t total = seen_rows.rows();
    for (const Matrix& b : novel_blocks) total += b.rows();
    set.inputs = Matrix(total, seen_rows.cols());
    set.labels.reserve(total);
    std::size_t row = 0;
    for (std::size_t i = 0; i < seen_rows.rows(); ++i, ++row) {
        for (std::size_t j = 0; j < seen_rows.cols(); ++j) {
            set.inputs(row, j) = seen_rows(i, j);
        }
        set.labels.push_back(ds.labels[ds.train_seen[i]]);
    }
    for (const Matrix& b : novel_blocks) {
        for (std::size_t i = 0; i < b.rows(); ++i, ++row) {
            for (std::size_t j = 0; j < b.cols(); ++j) set.inputs(row, j) = b(i, j);
        }
    }
    set.labels.insert(set.labels.end(), novel_labels.begin(), novel_labels.end());
    return set;
}

MlpClassifier train_classifier(const ClassifierSet& set, const ModelConfig& cfg,
                               std::size_t n_classes, SeededRng& root) {
    if (set.inputs.rows() == 0) {
        throw DegenerateDataError("classifier set is empty");
    }
    const std::set<std::uint32_t> distinct(set.labels.begin(), set.labels.end());
    if (distinct.size() < 2) {
        throw DegenerateDataError("classifier set holds " +
                                  std::to_string(distinct.size()) +
                                  " distinct classes, need at least 2");
    }

    SeededRng init_rng = root.substream(TAG_CLASSIFIER_INIT);
    SeededRng shuffle_rng = root.substream(TAG_CLASSIFIER_SHUFFLE);
    MlpClassifier clf(set.inputs.cols(), cfg.classifier_hidden1, cfg.classifier_hidden2,
                      n_classes, init_rng);

    std::vector<AdamState> states;
    for (const ParamBlock& block : clf.parameter_blocks()) {
        states.emplace_back(block.name, block.value->rows(), block.value->cols(),
                            cfg.lr);
    }

    std::vector<std::size_t> order(set.inputs.rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.classifier_epochs; ++epoch) {
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = shuffle_rng.next_u64() % i;
            std::swap(order[i - 1], order[j]);
        }
        for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch) {
            const std::size_t count = std::min(cfg.batch, order.size() - begin);
            std::vector<std::size_t> batch_idx(order.begin() + begin,
                                               order.begin() + begin + count);
            const Matrix x = gather_rows(set.inputs, batch_idx);
            std::vector<std::uint32_t> y;
            y.reserve(count);
            for (std::size_t i : batch_idx) y.push_back(set.labels[i]);
            clf.train_loss_backward(x, y);
            auto blocks = clf.parameter_blocks();
            for (std::size_t b = 0; b < blocks.size(); ++b) {
                adam_step(*blocks[b].value, *blocks[b].grad, states[b]);
            }
        }
    }
    return clf;
}

std::vector<std::uint32_t> classify(MlpClassifier& clf, const Matrix& features) {
    const Matrix raw = clf.logits(features);
    std::vector<std::uint32_t> preds(raw.rows());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < raw.cols(); ++j) {
            // Strict comparison keeps the lowest class id on ties.
            if (raw(i, j) > raw(i, best)) best = j;
        }
        preds[i] = static_cast<std::uint32_t>(best);
    }
    return preds;
}

}  // namespace mvae
