#include "srtk/generator.hpp"

#include <cmath>
#include <stdexcept>

namespace srtk {

namespace {

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

// Channel-concatenate along axis 1.
Tensor concat_channels(const std::vector<const Tensor*>& parts) {
    int n = parts[0]->dim(0), h = parts[0]->dim(2), w = parts[0]->dim(3);
    int ctot = 0;
    for (const Tensor* p : parts) ctot += p->dim(1);
    Tensor out({n, ctot, h, w});
    int64_t plane = static_cast<int64_t>(h) * w;
    for (int ni = 0; ni < n; ++ni) {
        int coff = 0;
        for (const Tensor* p : parts) {
            int c = p->dim(1);
            std::copy(p->data() + p->index4(ni, 0, 0, 0),
                      p->data() + p->index4(ni, 0, 0, 0) + static_cast<int64_t>(c) * plane,
                      out.data() + out.index4(ni, coff, 0, 0));
            coff += c;
        }
    }
    return out;
}

// Split a channel-concatenated gradient back into per-part accumulators.
void split_channels_add(const Tensor& g, std::vector<Tensor*> parts) {
    int n = g.dim(0), h = g.dim(2), w = g.dim(3);
    int64_t plane = static_cast<int64_t>(h) * w;
    for (int ni = 0; ni < n; ++ni) {
        int coff = 0;
        for (Tensor* p : parts) {
            int c = p->dim(1);
            const float* src = g.data() + g.index4(ni, coff, 0, 0);
            float* dst = p->data() + p->index4(ni, 0, 0, 0);
            for (int64_t i = 0; i < static_cast<int64_t>(c) * plane; ++i) dst[i] += src[i];
            coff += c;
        }
    }
}

}  // namespace

void GeneratorConfig::validate() const {
    if (num_blocks < 1) throw std::invalid_argument("generator config: num_blocks must be >= 1");
    if (base_channels < 1) throw std::invalid_argument("generator config: base_channels must be >= 1");
    if (block_type == BlockType::rrdb && growth_channels < 1)
        throw std::invalid_argument("generator config: growth_channels must be >= 1");
    if (!(beta > 0.0f && beta <= 1.0f))
        throw std::invalid_argument("generator config: beta must be in (0,1]");
    if (!is_power_of_two(scale) || scale < 2)
        throw std::invalid_argument("generator config: scale must be a power of two >= 2");
    if (!(init_scale > 0.0f)) throw std::invalid_argument("generator config: init_scale must be > 0");
}

nlohmann::json GeneratorConfig::to_json() const {
    return {{"block_type", block_type_to_string(block_type)},
            {"num_blocks", num_blocks},
            {"base_channels", base_channels},
            {"growth_channels", growth_channels},
            {"beta", beta},
            {"scale", scale},
            {"init_scale", init_scale}};
}

GeneratorConfig GeneratorConfig::from_json(const nlohmann::json& j) {
    GeneratorConfig c;
    c.block_type = block_type_from_string(j.value("block_type", "rrdb"));
    c.num_blocks = j.value("num_blocks", 23);
    c.base_channels = j.value("base_channels", 64);
    c.growth_channels = j.value("growth_channels", 32);
    c.beta = j.value("beta", 0.2f);
    c.scale = j.value("scale", 4);
    c.init_scale = j.value("init_scale", 0.1f);
    return c;
}

GeneratorConfig::BlockType GeneratorConfig::block_type_from_string(const std::string& s) {
    if (s == "rrdb") return BlockType::rrdb;
    if (s == "residual_block" || s == "residual") return BlockType::residual;
    throw std::invalid_argument("generator config: unknown block_type '" + s + "'");
}

std::string GeneratorConfig::block_type_to_string(BlockType t) {
    return t == BlockType::rrdb ? "rrdb" : "residual_block";
}

DenseBlock::DenseBlock(int base_ch, int growth_ch, float beta)
    : base_(base_ch), growth_(growth_ch), beta_(beta) {
    for (int i = 0; i < 5; ++i) {
        int in_ch = base_ + i * growth_;
        int out_ch = (i == 4) ? base_ : growth_;
        convs_.emplace_back(in_ch, out_ch, 3, 1, 1);
    }
    acts_.assign(4, nn::LeakyRelu(0.2f));
}

void DenseBlock::init(Rng& rng, float init_scale) {
    for (auto& c : convs_) c.init(rng, init_scale);
}

Tensor DenseBlock::forward(const Tensor& x, bool keep_cache) {
    std::vector<Tensor> feats;  // conv outputs after activation
    feats.reserve(4);
    std::vector<const Tensor*> cat_parts{&x};
    Tensor cur;
    for (int i = 0; i < 5; ++i) {
        Tensor in = (i == 0) ? x : concat_channels(cat_parts);
        cur = convs_[static_cast<size_t>(i)].forward(in, keep_cache);
        if (i < 4) {
            cur = acts_[static_cast<size_t>(i)].forward(cur, keep_cache);
            feats.push_back(std::move(cur));
            cat_parts.push_back(&feats.back());
        }
    }
    Tensor out = x;
    nn::axpy(beta_, cur, out);
    return out;
}

Tensor DenseBlock::backward(const Tensor& grad_out, bool param_grads) {
    // Residual path: d/dx starts as grad_out; the scaled branch adds to it
    // and to each intermediate feature via the channel splits.
    Tensor gx = grad_out;
    std::vector<Tensor> gfeat;
    for (int i = 0; i < 4; ++i) {
        int n = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
        gfeat.emplace_back(std::vector<int>{n, growth_, h, w});
    }
    Tensor g5 = nn::scale(grad_out, beta_);
    Tensor gcat = convs_[4].backward(g5, param_grads);
    split_channels_add(gcat, {&gx, &gfeat[0], &gfeat[1], &gfeat[2], &gfeat[3]});
    for (int i = 3; i >= 0; --i) {
        Tensor gpre = acts_[static_cast<size_t>(i)].backward(gfeat[static_cast<size_t>(i)]);
        Tensor gin = convs_[static_cast<size_t>(i)].backward(gpre, param_grads);
        if (i == 0) {
            nn::axpy(1.0f, gin, gx);
        } else {
            std::vector<Tensor*> parts{&gx};
            for (int j = 0; j < i; ++j) parts.push_back(&gfeat[static_cast<size_t>(j)]);
            split_channels_add(gin, parts);
        }
    }
    return gx;
}

void DenseBlock::zero_grad() {
    for (auto& c : convs_) c.zero_grad();
}

void DenseBlock::collect(const std::string& prefix, std::vector<nn::Param>& out) {
    for (size_t i = 0; i < convs_.size(); ++i)
        convs_[i].collect(prefix + ".conv" + std::to_string(i), out);
}

Rrdb::Rrdb(int base_ch, int growth_ch, float beta) : beta_(beta) {
    for (int i = 0; i < 3; ++i) dbs_.emplace_back(base_ch, growth_ch, beta);
}

void Rrdb::init(Rng& rng, float init_scale) {
    for (auto& d : dbs_) d.init(rng, init_scale);
}

Tensor Rrdb::forward(const Tensor& x, bool keep_cache) {
    Tensor y = x;
    for (auto& d : dbs_) y = d.forward(y, keep_cache);
    // Outer residual scales the chain's net contribution, so a zero-weight
    // block is exactly the identity at both nesting levels.
    Tensor out = x;
    for (int64_t i = 0; i < out.numel(); ++i) out[i] += beta_ * (y[i] - x[i]);
    return out;
}

Tensor Rrdb::backward(const Tensor& grad_out, bool param_grads) {
    Tensor g = nn::scale(grad_out, beta_);
    for (int i = 2; i >= 0; --i) g = dbs_[static_cast<size_t>(i)].backward(g, param_grads);
    // d out / d x = (1 - beta) I + beta * d chain / d x
    Tensor gin = nn::scale(grad_out, 1.0f - beta_);
    nn::axpy(1.0f, g, gin);
    return gin;
}

void Rrdb::zero_grad() {
    for (auto& d : dbs_) d.zero_grad();
}

void Rrdb::collect(const std::string& prefix, std::vector<nn::Param>& out) {
    for (size_t i = 0; i < dbs_.size(); ++i)
        dbs_[i].collect(prefix + ".db" + std::to_string(i), out);
}

ResidualBlock::ResidualBlock(int ch, float beta)
    : beta_(beta), conv1_(ch, ch, 3, 1, 1), conv2_(ch, ch, 3, 1, 1) {}

void ResidualBlock::init(Rng& rng, float init_scale) {
    conv1_.init(rng, init_scale);
    conv2_.init(rng, init_scale);
}

Tensor ResidualBlock::forward(const Tensor& x, bool keep_cache) {
    Tensor t = conv1_.forward(x, keep_cache);
    t = act_.forward(t, keep_cache);
    t = conv2_.forward(t, keep_cache);
    Tensor out = x;
    nn::axpy(beta_, t, out);
    return out;
}

Tensor ResidualBlock::backward(const Tensor& grad_out, bool param_grads) {
    Tensor g = nn::scale(grad_out, beta_);
    g = conv2_.backward(g, param_grads);
    g = act_.backward(g);
    g = conv1_.backward(g, param_grads);
    nn::axpy(1.0f, grad_out, g);
    return g;
}

void ResidualBlock::zero_grad() {
    conv1_.zero_grad();
    conv2_.zero_grad();
}

void ResidualBlock::collect(const std::string& prefix, std::vector<nn::Param>& out) {
    conv1_.collect(prefix + ".conv1", out);
    conv2_.collect(prefix + ".conv2", out);
}

Generator::Generator(const GeneratorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    int c = cfg_.base_channels;
    up_stages_ = static_cast<int>(std::lround(std::log2(cfg_.scale)));
    conv_first_ = nn::Conv2d(3, c, 3, 1, 1);
    if (cfg_.block_type == GeneratorConfig::BlockType::rrdb) {
        for (int i = 0; i < cfg_.num_blocks; ++i)
            rrdbs_.emplace_back(c, cfg_.growth_channels, cfg_.beta);
    } else {
        for (int i = 0; i < cfg_.num_blocks; ++i) resblocks_.emplace_back(c, cfg_.beta);
    }
    trunk_conv_ = nn::Conv2d(c, c, 3, 1, 1);
    for (int s = 0; s < up_stages_; ++s) {
        upconvs_.emplace_back(c, c, 3, 1, 1);
        up_acts_.emplace_back(0.2f);
    }
    hr_conv_ = nn::Conv2d(c, c, 3, 1, 1);
    conv_last_ = nn::Conv2d(c, 3, 3, 1, 1);
}

void Generator::init(uint64_t rng_seed) {
    Rng rng(rng_seed, /*stream=*/5);
    conv_first_.init(rng, cfg_.init_scale);
    for (auto& b : rrdbs_) b.init(rng, cfg_.init_scale);
    for (auto& b : resblocks_) b.init(rng, cfg_.init_scale);
    trunk_conv_.init(rng, cfg_.init_scale);
    for (auto& u : upconvs_) u.init(rng, cfg_.init_scale);
    hr_conv_.init(rng, cfg_.init_scale);
    conv_last_.init(rng, cfg_.init_scale);
}

Tensor Generator::forward(const Tensor& lr, bool keep_cache) {
    if (lr.ndim() != 4 || lr.dim(1) != 3)
        throw std::invalid_argument("generator: expected [N,3,H,W] input, got " + lr.shape_str());
    if (lr.dim(2) < 16 || lr.dim(3) < 16)
        throw std::invalid_argument("generator: input spatial dims must be >= 16x16");
    Tensor fea0 = conv_first_.forward(lr, keep_cache);
    Tensor t = fea0;
    for (auto& b : rrdbs_) t = b.forward(t, keep_cache);
    for (auto& b : resblocks_) t = b.forward(t, keep_cache);
    Tensor trunk = trunk_conv_.forward(t, keep_cache);
    Tensor fea = nn::add(fea0, trunk);
    for (int s = 0; s < up_stages_; ++s) {
        fea = nn::upsample_nearest2x(fea);
        fea = upconvs_[static_cast<size_t>(s)].forward(fea, keep_cache);
        fea = up_acts_[static_cast<size_t>(s)].forward(fea, keep_cache);
    }
    Tensor hr = hr_conv_.forward(fea, keep_cache);
    hr = hr_act_.forward(hr, keep_cache);
    return conv_last_.forward(hr, keep_cache);
}

Tensor Generator::backward(const Tensor& grad_out, bool param_grads) {
    Tensor g = conv_last_.backward(grad_out, param_grads);
    g = hr_act_.backward(g);
    g = hr_conv_.backward(g, param_grads);
    for (int s = up_stages_ - 1; s >= 0; --s) {
        g = up_acts_[static_cast<size_t>(s)].backward(g);
        g = upconvs_[static_cast<size_t>(s)].backward(g, param_grads);
        g = nn::upsample_nearest2x_backward(g);
    }
    // Long skip: g feeds both the trunk conv and conv_first directly.
    Tensor gbody = trunk_conv_.backward(g, param_grads);
    for (int i = static_cast<int>(resblocks_.size()) - 1; i >= 0; --i)
        gbody = resblocks_[static_cast<size_t>(i)].backward(gbody, param_grads);
    for (int i = static_cast<int>(rrdbs_.size()) - 1; i >= 0; --i)
        gbody = rrdbs_[static_cast<size_t>(i)].backward(gbody, param_grads);
    nn::axpy(1.0f, g, gbody);
    return conv_first_.backward(gbody, param_grads);
}

Tensor Generator::infer(const Tensor& lr) {
    Tensor out = forward(lr, /*keep_cache=*/false);
    for (auto& v : out.vec()) v = std::clamp(v, 0.0f, 1.0f);
    return out;
}

void Generator::zero_grad() {
    conv_first_.zero_grad();
    for (auto& b : rrdbs_) b.zero_grad();
    for (auto& b : resblocks_) b.zero_grad();
    trunk_conv_.zero_grad();
    for (auto& u : upconvs_) u.zero_grad();
    hr_conv_.zero_grad();
    conv_last_.zero_grad();
}

std::vector<nn::Param> Generator::parameters() {
    std::vector<nn::Param> out;
    conv_first_.collect("conv_first", out);
    for (size_t i = 0; i < rrdbs_.size(); ++i) rrdbs_[i].collect("body." + std::to_string(i), out);
    for (size_t i = 0; i < resblocks_.size(); ++i)
        resblocks_[i].collect("body." + std::to_string(i), out);
    trunk_conv_.collect("trunk_conv", out);
    for (size_t i = 0; i < upconvs_.size(); ++i)
        upconvs_[i].collect("upconv." + std::to_string(i), out);
    hr_conv_.collect("hr_conv", out);
    conv_last_.collect("conv_last", out);
    return out;
}

ParameterSet Generator::export_params(const std::string& stage, int64_t iteration) const {
    ParameterSet ps;
    ps.stage = stage;
    ps.iteration = iteration;
    ps.config = cfg_.to_json();
    auto params = const_cast<Generator*>(this)->parameters();
    for (const auto& p : params) ps.add(p.name, *p.value);
    return ps;
}

void Generator::import_params(const ParameterSet& ps) {
    auto params = parameters();
    if (ps.entries.size() != params.size())
        throw std::invalid_argument("generator: checkpoint has " + std::to_string(ps.entries.size()) +
                                    " tensors, model needs " + std::to_string(params.size()));
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& e = ps.entries[i];
        if (e.name != params[i].name)
            throw std::invalid_argument("generator: checkpoint name mismatch at '" + e.name +
                                        "', expected '" + params[i].name + "'");
        if (e.value.shape() != params[i].value->shape())
            throw std::invalid_argument("generator: shape mismatch for '" + e.name + "': checkpoint " +
                                        e.value.shape_str() + " vs model " + params[i].value->shape_str());
        *params[i].value = e.value;
    }
}

int64_t Generator::parameter_count() {
    int64_t n = 0;
    for (const auto& p : parameters()) n += p.value->numel();
    return n;
}

ParameterSet build_generator_params(const GeneratorConfig& cfg, uint64_t rng_seed) {
    Generator g(cfg);
    g.init(rng_seed);
    return g.export_params("init", 0);
}

}  // namespace srtk
