#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srtk/feature_extractor.hpp"
#include "srtk/nn.hpp"
#include "srtk/rng.hpp"
#include "srtk/synth.hpp"
#include "srtk/tensor.hpp"

namespace srtk::test {

using srtk::add_gaussian_noise;
using srtk::synth_image;

inline Tensor random_tensor(uint64_t seed, std::vector<int> shape, float lo = -1.0f, float hi = 1.0f) {
    Rng rng(seed, /*stream=*/25);
    Tensor t(std::move(shape));
    for (auto& v : t.vec()) v = lo + (hi - lo) * rng.next_float();
    return t;
}

// Scratch directory under the build tree, unique per tag, wiped on entry.
inline std::string scratch_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    fs::path p = fs::temp_directory_path() / ("srtk_test_" + tag);
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

// Small fixed-weight conv feature provider so adversarial training and
// perceptual-loss plumbing can run without the big pretrained network.
class TinyExtractor : public FeatureExtractor {
public:
    explicit TinyExtractor(uint64_t seed = 99)
        : c1_(3, 8, 3, 2, 1), c2_(8, 16, 3, 2, 1) {
        Rng rng(seed, /*stream=*/27);
        c1_.init(rng, 1.0f);
        c2_.init(rng, 1.0f);
    }

    Tensor extract(const Tensor& img, const FeatureTap& tap) override { return run(img, tap, false); }
    Tensor forward_train(const Tensor& img, const FeatureTap& tap) override {
        return run(img, tap, true);
    }
    Tensor backward(const Tensor& grad_features) override {
        Tensor g = grad_features;
        if (!pre_) g = relu_out_.backward(g);
        g = c2_.backward(g, /*param_grads=*/false);
        g = a1_.backward(g);
        return c1_.backward(g, /*param_grads=*/false);
    }
    std::string describe() const override { return "tiny-extractor"; }

private:
    Tensor run(const Tensor& img, const FeatureTap& tap, bool cache) {
        pre_ = tap.pre_activation;
        Tensor t = c1_.forward(img, cache);
        t = a1_.forward(t, cache);
        t = c2_.forward(t, cache);
        if (!tap.pre_activation) t = relu_out_.forward(t, cache);
        return t;
    }
    nn::Conv2d c1_, c2_;
    nn::LeakyRelu a1_{0.2f}, relu_out_{0.0f};
    bool pre_ = true;
};

}  // namespace srtk::test
