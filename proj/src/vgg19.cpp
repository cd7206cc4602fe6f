#include "srtk/vgg19.hpp"

#include <cctype>
#include <filesystem>
#include <stdexcept>

#include "srtk/errors.hpp"

namespace srtk {

namespace {

// Stage layout: conv counts and output channels.
constexpr int kStageConvs[5] = {2, 2, 4, 4, 4};
constexpr int kStageChannels[5] = {64, 128, 256, 512, 512};

// Torchvision normalization constants for ImageNet-trained classifiers.
constexpr float kMean[3] = {0.485f, 0.456f, 0.406f};
constexpr float kStd[3] = {0.229f, 0.224f, 0.225f};

std::vector<std::string> make_layer_names() {
    std::vector<std::string> names;
    for (int s = 0; s < 5; ++s)
        for (int i = 0; i < kStageConvs[s]; ++i)
            names.push_back("conv" + std::to_string(s + 1) + "_" + std::to_string(i + 1));
    return names;
}

}  // namespace

const std::vector<std::string>& Vgg19Features::layer_names() {
    static const std::vector<std::string> names = make_layer_names();
    return names;
}

std::string Vgg19Features::canonical_layer(const std::string& name) {
    if (name.size() == 2 && std::isdigit(static_cast<unsigned char>(name[0])) &&
        std::isdigit(static_cast<unsigned char>(name[1])))
        return std::string("conv") + name[0] + "_" + name[1];
    return name;
}

Vgg19Features::Vgg19Features() {
    int in_ch = 3;
    for (int s = 0; s < 5; ++s) {
        for (int i = 0; i < kStageConvs[s]; ++i) {
            convs_.emplace_back(in_ch, kStageChannels[s], 3, 1, 1);
            in_ch = kStageChannels[s];
            bool stage_end = (i == kStageConvs[s] - 1);
            pool_after_.push_back(stage_end && s < 4 ? s : -1);  // no pool needed after stage 5
        }
    }
    relus_.assign(convs_.size(), nn::LeakyRelu(0.0f));
    pools_.resize(4);
}

std::unique_ptr<Vgg19Features> Vgg19Features::load(const std::string& weights_path) {
    if (weights_path.empty() || !std::filesystem::exists(weights_path))
        throw ConfigError("vgg_weights: file not found: '" + weights_path + "'");
    auto net = std::make_unique<Vgg19Features>();
    net->import_params(load_param_set(weights_path));
    net->weights_origin_ = weights_path;
    return net;
}

void Vgg19Features::import_params(const ParameterSet& ps) {
    auto params = parameters();
    for (auto& p : params) {
        const auto* e = ps.find(p.name);
        if (!e) throw std::invalid_argument("vgg19: weight file missing tensor '" + p.name + "'");
        if (e->value.shape() != p.value->shape())
            throw std::invalid_argument("vgg19: shape mismatch for '" + p.name + "': file " +
                                        e->value.shape_str() + " vs model " + p.value->shape_str());
        *p.value = e->value;
    }
}

std::vector<nn::Param> Vgg19Features::parameters() {
    std::vector<nn::Param> out;
    const auto& names = layer_names();
    for (size_t i = 0; i < convs_.size(); ++i) convs_[i].collect(names[i], out);
    return out;
}

Tensor Vgg19Features::run(const Tensor& img, const FeatureTap& tap, bool keep_cache) {
    if (img.ndim() != 4 || img.dim(1) != 3)
        throw std::invalid_argument("vgg19: expected [N,3,H,W] input");
    std::string layer = canonical_layer(tap.layer);
    const auto& names = layer_names();
    int tap_index = -1;
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == layer) tap_index = static_cast<int>(i);
    if (tap_index < 0) throw std::invalid_argument("vgg19: unknown layer '" + tap.layer + "'");

    Tensor t = img;
    for (int c = 0; c < 3; ++c) {
        float m = kMean[c], s = kStd[c];
        for (int n = 0; n < t.dim(0); ++n) {
            float* p = t.data() + t.index4(n, c, 0, 0);
            int64_t plane = static_cast<int64_t>(t.dim(2)) * t.dim(3);
            for (int64_t i = 0; i < plane; ++i) p[i] = (p[i] - m) / s;
        }
    }
    for (int i = 0; i <= tap_index; ++i) {
        t = convs_[static_cast<size_t>(i)].forward(t, keep_cache);
        if (i == tap_index) {
            if (keep_cache) {
                cached_tap_index_ = tap_index;
                cached_tap_pre_ = tap.pre_activation;
            }
            if (tap.pre_activation) return t;
            return relus_[static_cast<size_t>(i)].forward(t, keep_cache);
        }
        t = relus_[static_cast<size_t>(i)].forward(t, keep_cache);
        int pool = pool_after_[static_cast<size_t>(i)];
        if (pool >= 0) t = pools_[static_cast<size_t>(pool)].forward(t, keep_cache);
    }
    return t;  // unreachable
}

Tensor Vgg19Features::extract(const Tensor& img, const FeatureTap& tap) {
    return run(img, tap, /*keep_cache=*/false);
}

Tensor Vgg19Features::forward_train(const Tensor& img, const FeatureTap& tap) {
    return run(img, tap, /*keep_cache=*/true);
}

Tensor Vgg19Features::backward(const Tensor& grad_features) {
    if (cached_tap_index_ < 0) throw std::logic_error("vgg19: backward without forward_train");
    Tensor g = grad_features;
    if (!cached_tap_pre_) g = relus_[static_cast<size_t>(cached_tap_index_)].backward(g);
    for (int i = cached_tap_index_; i >= 0; --i) {
        if (i != cached_tap_index_) {
            int pool = pool_after_[static_cast<size_t>(i)];
            if (pool >= 0) g = pools_[static_cast<size_t>(pool)].backward(g);
            g = relus_[static_cast<size_t>(i)].backward(g);
        }
        g = convs_[static_cast<size_t>(i)].backward(g, /*param_grads=*/false);
    }
    // Undo the input normalization scaling.
    for (int c = 0; c < 3; ++c) {
        float s = kStd[c];
        for (int n = 0; n < g.dim(0); ++n) {
            float* p = g.data() + g.index4(n, c, 0, 0);
            int64_t plane = static_cast<int64_t>(g.dim(2)) * g.dim(3);
            for (int64_t i = 0; i < plane; ++i) p[i] /= s;
        }
    }
    return g;
}

std::string Vgg19Features::describe() const {
    return weights_origin_.empty() ? "vgg19(zero-initialized)" : "vgg19(" + weights_origin_ + ")";
}

double activation_sparsity(const Tensor& features) {
    if (features.empty()) throw std::invalid_argument("activation_sparsity: empty input");
    int64_t active = 0;
    for (float v : features.vec())
        if (v > 0.0f) ++active;
    return static_cast<double>(active) / static_cast<double>(features.numel());
}

}  // namespace srtk
