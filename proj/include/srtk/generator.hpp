#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "srtk/nn.hpp"
#include "srtk/param_set.hpp"

namespace srtk {

struct GeneratorConfig {
    enum class BlockType { residual, rrdb };

    BlockType block_type = BlockType::rrdb;
    int num_blocks = 23;
    int base_channels = 64;
    int growth_channels = 32;
    float beta = 0.2f;       // residual scaling
    int scale = 4;           // power of two
    float init_scale = 0.1f;

    void validate() const;
    nlohmann::json to_json() const;
    static GeneratorConfig from_json(const nlohmann::json& j);

    static BlockType block_type_from_string(const std::string& s);
    static std::string block_type_to_string(BlockType t);
};

// Five 3x3 convs over growing channel concatenations; convs 1-4 feed a leaky
// rectifier, conv 5 is linear back to base channels. Output is
// x + beta * conv5_out.
class DenseBlock {
public:
    DenseBlock() = default;
    DenseBlock(int base_ch, int growth_ch, float beta);
    void init(Rng& rng, float init_scale);
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& grad_out, bool param_grads = true);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<nn::Param>& out);

private:
    int base_ = 0, growth_ = 0;
    float beta_ = 0.2f;
    std::vector<nn::Conv2d> convs_;     // 5
    std::vector<nn::LeakyRelu> acts_;   // 4
};

// Three chained dense blocks with a scaled outer residual.
class Rrdb {
public:
    Rrdb() = default;
    Rrdb(int base_ch, int growth_ch, float beta);
    void init(Rng& rng, float init_scale);
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& grad_out, bool param_grads = true);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<nn::Param>& out);

private:
    float beta_ = 0.2f;
    std::vector<DenseBlock> dbs_;  // 3
};

// Plain two-conv residual block (no normalization), scaled residual.
class ResidualBlock {
public:
    ResidualBlock() = default;
    ResidualBlock(int ch, float beta);
    void init(Rng& rng, float init_scale);
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& grad_out, bool param_grads = true);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<nn::Param>& out);

private:
    float beta_ = 0.2f;
    nn::Conv2d conv1_, conv2_;
    nn::LeakyRelu act_{0.2f};
};

// Shallow conv, block trunk with a long skip, nearest+conv upsampling stages
// and two reconstruction convs. Outputs are raw (unclamped); training losses
// consume them directly and clamping happens only when images are emitted.
class Generator {
public:
    Generator() = default;
    explicit Generator(const GeneratorConfig& cfg);

    void init(uint64_t rng_seed);
    Tensor forward(const Tensor& lr, bool keep_cache);
    Tensor backward(const Tensor& grad_out, bool param_grads = true);
    Tensor infer(const Tensor& lr);  // forward without caches, clamped to [0,1]
    void zero_grad();

    std::vector<nn::Param> parameters();
    ParameterSet export_params(const std::string& stage, int64_t iteration) const;
    void import_params(const ParameterSet& ps);

    const GeneratorConfig& config() const { return cfg_; }
    int64_t parameter_count();

private:
    GeneratorConfig cfg_;
    int up_stages_ = 2;
    nn::Conv2d conv_first_, trunk_conv_, hr_conv_, conv_last_;
    std::vector<Rrdb> rrdbs_;
    std::vector<ResidualBlock> resblocks_;
    std::vector<nn::Conv2d> upconvs_;
    std::vector<nn::LeakyRelu> up_acts_;
    nn::LeakyRelu hr_act_{0.2f};
};

// Builds and initializes a generator, returning its parameters tagged with
// the given stage. Every conv uses the scaled MSRA draw; biases are zero.
ParameterSet build_generator_params(const GeneratorConfig& cfg, uint64_t rng_seed);

}  // namespace srtk
