#pragma once

#include <memory>
#include <string>
#include <vector>

#include "srtk/feature_extractor.hpp"
#include "srtk/nn.hpp"
#include "srtk/param_set.hpp"

namespace srtk {

// 19-layer VGG feature stack (16 convs, pooling between stages) with a
// pre-/post-activation tap at any named conv layer. Weights come from an
// external file produced by scripts/export_vgg19_weights.py; the network is
// never trained here. Inputs in [0,1] RGB are shifted and scaled to the
// classification network's native convention before the first conv.
class Vgg19Features : public FeatureExtractor {
public:
    // Builds the stack with zero weights (useful for shape tests).
    Vgg19Features();

    // Loads pretrained weights; throws ConfigError when the file is missing
    // and std::invalid_argument on name/shape mismatches.
    static std::unique_ptr<Vgg19Features> load(const std::string& weights_path);

    void import_params(const ParameterSet& ps);
    std::vector<nn::Param> parameters();

    Tensor extract(const Tensor& img, const FeatureTap& tap) override;
    Tensor forward_train(const Tensor& img, const FeatureTap& tap) override;
    Tensor backward(const Tensor& grad_features) override;
    std::string describe() const override;

    static const std::vector<std::string>& layer_names();  // conv1_1 .. conv5_4
    static std::string canonical_layer(const std::string& name);  // "54" -> "conv5_4"

private:
    Tensor run(const Tensor& img, const FeatureTap& tap, bool keep_cache);

    std::vector<nn::Conv2d> convs_;
    std::vector<nn::LeakyRelu> relus_;       // slope 0 == plain rectifier
    std::vector<nn::MaxPool2x2> pools_;      // one per stage boundary
    std::vector<int> pool_after_;            // conv index -> pool index or -1
    int cached_tap_index_ = -1;
    bool cached_tap_pre_ = true;
    std::string weights_origin_;
};

}  // namespace srtk
