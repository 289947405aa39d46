#include "mvae/embed_net.hpp"

#include "mvae/errors.hpp"

namespace mvae {

DeepEmbeddingNet::DeepEmbeddingNet(std::size_t d_attr, std::size_t hidden,
                                   std::size_t d_out, SeededRng& rng, bool final_relu)
    : layer1(AffineLayer::glorot_uniform(d_attr, hidden, rng)),
      layer2(AffineLayer::glorot_uniform(hidden, d_out, rng)),
      final_relu(final_relu) {}

Matrix DeepEmbeddingNet::forward(const Matrix& attrs) {
    pre1_ = layer1.forward(attrs);
    pre2_ = layer2.forward(relu(pre1_));
    has_forward_ = true;
    return final_relu ? relu(pre2_) : pre2_;
}

Matrix DeepEmbeddingNet::backward(const Matrix& upstream) {
    if (!has_forward_) {
        throw StateError("embed backward: no cached forward, call forward first");
    }
    const Matrix d_pre2 = final_relu ? relu_backward(pre2_, upstream) : upstream;
    const Matrix d_hidden = layer2.backward(d_pre2);
    const Matrix d_pre1 = relu_backward(pre1_, d_hidden);
    return layer1.backward(d_pre1);
}

Matrix embed_rows_for_labels(DeepEmbeddingNet& net, const Matrix& attributes,
                             const std::vector<std::uint32_t>& labels) {
    const Matrix all = net.forward(attributes);
    Matrix out(labels.size(), all.cols());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= all.rows()) {
            throw IndexError("embed_rows_for_labels: label " +
                             std::to_string(labels[i]) + " outside attribute table " +
                             attributes.shape_str());
        }
        for (std::size_t j = 0; j < all.cols(); ++j) {
            out(i, j) = all(labels[i], j);
        }
    }
    return out;
}

}  // namespace mvae
