#pragma once

#include <string>

#include "srtk/tensor.hpp"

namespace srtk {

// Tap point inside a feature network. layer names follow the conv{stage}_{idx}
// convention; the numeric shorthands "22" and "54" are accepted (conv2_2 and
// conv5_4, the 4th convolution before the 5th pooling stage). pre_activation
// selects the features before the rectifier.
struct FeatureTap {
    std::string layer = "conv5_4";
    bool pre_activation = true;
};

// Pluggable feature provider for perceptual losses. Implementations must be
// deterministic for fixed weights and input.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;

    // Forward only, no gradient bookkeeping.
    virtual Tensor extract(const Tensor& img, const FeatureTap& tap) = 0;

    // Forward with caches retained, then backward to the input image.
    virtual Tensor forward_train(const Tensor& img, const FeatureTap& tap) = 0;
    virtual Tensor backward(const Tensor& grad_features) = 0;

    virtual std::string describe() const = 0;
};

// Fraction of entries strictly greater than zero.
double activation_sparsity(const Tensor& features);

}  // namespace srtk
