#pragma once

#include <vector>

#include <json.hpp>

#include "srtk/adam.hpp"
#include "srtk/nn.hpp"
#include "srtk/param_set.hpp"

namespace srtk {

struct DiscriminatorConfig {
    int in_size = 128;        // training HR patch size; inputs must match exactly
    int base_channels = 64;
    int fc_width = 100;
    bool use_norm = true;     // batch normalization toggle (ablation)

    void validate() const;
    nlohmann::json to_json() const;
    static DiscriminatorConfig from_json(const nlohmann::json& j);
};

// VGG-style critic: a 3->64 conv followed by stride-1/stride-2 conv pairs
// that double channels up to 512, then two dense layers down to one scalar
// per image. The output is the raw score C(x); the losses own the sigmoid.
class Discriminator {
public:
    Discriminator() = default;
    explicit Discriminator(const DiscriminatorConfig& cfg);

    void init(uint64_t rng_seed);
    // Returns scores [N]. training selects batch-stat normalization.
    Tensor forward(const Tensor& img, bool training, bool keep_cache);
    // grad_scores: [N]. Returns grad wrt the input image batch.
    Tensor backward(const Tensor& grad_scores, bool param_grads = true);
    void zero_grad();

    std::vector<nn::Param> parameters();
    ParameterSet export_params(const std::string& stage, int64_t iteration) const;
    void import_params(const ParameterSet& ps);

    const DiscriminatorConfig& config() const { return cfg_; }

private:
    DiscriminatorConfig cfg_;
    std::vector<nn::Conv2d> convs_;
    std::vector<nn::BatchNorm2d> norms_;   // aligned with convs_ (index 0 unused)
    std::vector<nn::LeakyRelu> acts_;
    nn::Linear fc1_, fc2_;
    nn::LeakyRelu fc_act_{0.2f};
    int flat_dim_ = 0;
    std::vector<int> pre_flatten_shape_;
};

}  // namespace srtk
