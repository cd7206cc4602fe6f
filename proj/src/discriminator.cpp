#include "srtk/discriminator.hpp"

#include <stdexcept>

namespace srtk {

void DiscriminatorConfig::validate() const {
    if (in_size < 32 || in_size % 32 != 0)
        throw std::invalid_argument("discriminator config: in_size must be a positive multiple of 32");
    if (base_channels < 1) throw std::invalid_argument("discriminator config: base_channels must be >= 1");
    if (fc_width < 1) throw std::invalid_argument("discriminator config: fc_width must be >= 1");
}

nlohmann::json DiscriminatorConfig::to_json() const {
    return {{"in_size", in_size},
            {"base_channels", base_channels},
            {"fc_width", fc_width},
            {"use_norm", use_norm}};
}

DiscriminatorConfig DiscriminatorConfig::from_json(const nlohmann::json& j) {
    DiscriminatorConfig c;
    c.in_size = j.value("in_size", 128);
    c.base_channels = j.value("base_channels", 64);
    c.fc_width = j.value("fc_width", 100);
    c.use_norm = j.value("use_norm", true);
    return c;
}

Discriminator::Discriminator(const DiscriminatorConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    int c = cfg_.base_channels;
    // Channel plan: c, then pairs (s1, s2) at c, 2c, 4c, 8c, 8c.
    int chans[5] = {c, 2 * c, 4 * c, 8 * c, 8 * c};
    convs_.emplace_back(3, c, 3, 1, 1);  // conv0_0, no normalization
    int prev = c;
    for (int s = 0; s < 5; ++s) {
        if (s > 0) {
            convs_.emplace_back(prev, chans[s], 3, 1, 1);  // stride-1, channel change
            prev = chans[s];
        }
        convs_.emplace_back(prev, chans[s], 4, 2, 1);  // stride-2 halving
        prev = chans[s];
    }
    norms_.resize(convs_.size());
    for (size_t i = 1; i < convs_.size(); ++i)
        norms_[i] = nn::BatchNorm2d(convs_[i].out_ch());
    acts_.assign(convs_.size(), nn::LeakyRelu(0.2f));
    int spatial = cfg_.in_size / 32;
    flat_dim_ = prev * spatial * spatial;
    fc1_ = nn::Linear(flat_dim_, cfg_.fc_width);
    fc2_ = nn::Linear(cfg_.fc_width, 1);
}

void Discriminator::init(uint64_t rng_seed) {
    Rng rng(rng_seed, /*stream=*/9);
    for (auto& c : convs_) c.init(rng, 1.0f);
    fc1_.init(rng, 1.0f);
    fc2_.init(rng, 1.0f);
}

Tensor Discriminator::forward(const Tensor& img, bool training, bool keep_cache) {
    if (img.ndim() != 4 || img.dim(1) != 3)
        throw std::invalid_argument("discriminator: expected [N,3,H,W] input");
    if (img.dim(2) != cfg_.in_size || img.dim(3) != cfg_.in_size)
        throw std::invalid_argument("discriminator: input must be " + std::to_string(cfg_.in_size) +
                                    "x" + std::to_string(cfg_.in_size) + ", got " + img.shape_str());
    Tensor t = img;
    for (size_t i = 0; i < convs_.size(); ++i) {
        t = convs_[i].forward(t, keep_cache);
        if (i > 0 && cfg_.use_norm) t = norms_[i].forward(t, training, keep_cache);
        t = acts_[i].forward(t, keep_cache);
    }
    pre_flatten_shape_ = t.shape();
    int n = t.dim(0);
    Tensor flat({n, flat_dim_});
    std::copy(t.vec().begin(), t.vec().end(), flat.vec().begin());
    Tensor h = fc1_.forward(flat, keep_cache);
    h = fc_act_.forward(h, keep_cache);
    Tensor out = fc2_.forward(h, keep_cache);  // [N,1]
    Tensor scores({n});
    for (int i = 0; i < n; ++i) scores[i] = out[i];
    return scores;
}

Tensor Discriminator::backward(const Tensor& grad_scores, bool param_grads) {
    int n = grad_scores.dim(0);
    Tensor g({n, 1});
    for (int i = 0; i < n; ++i) g[i] = grad_scores[i];
    g = fc2_.backward(g, param_grads);
    g = fc_act_.backward(g);
    g = fc1_.backward(g, param_grads);
    Tensor gdeflat(pre_flatten_shape_);
    std::copy(g.vec().begin(), g.vec().end(), gdeflat.vec().begin());
    Tensor cur = std::move(gdeflat);
    for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
        cur = acts_[static_cast<size_t>(i)].backward(cur);
        if (i > 0 && cfg_.use_norm) cur = norms_[static_cast<size_t>(i)].backward(cur, param_grads);
        cur = convs_[static_cast<size_t>(i)].backward(cur, param_grads);
    }
    return cur;
}

void Discriminator::zero_grad() {
    for (auto& c : convs_) c.zero_grad();
    for (auto& b : norms_) b.zero_grad();
    fc1_.zero_grad();
    fc2_.zero_grad();
}

std::vector<nn::Param> Discriminator::parameters() {
    std::vector<nn::Param> out;
    for (size_t i = 0; i < convs_.size(); ++i) {
        std::string prefix = "conv." + std::to_string(i);
        convs_[i].collect(prefix, out);
        if (i > 0 && cfg_.use_norm) norms_[i].collect("norm." + std::to_string(i), out);
    }
    fc1_.collect("fc1", out);
    fc2_.collect("fc2", out);
    return out;
}

ParameterSet Discriminator::export_params(const std::string& stage, int64_t iteration) const {
    ParameterSet ps;
    ps.stage = stage;
    ps.iteration = iteration;
    ps.config = cfg_.to_json();
    auto params = const_cast<Discriminator*>(this)->parameters();
    for (const auto& p : params) ps.add(p.name, *p.value);
    return ps;
}

void Discriminator::import_params(const ParameterSet& ps) {
    auto params = parameters();
    if (ps.entries.size() != params.size())
        throw std::invalid_argument("discriminator: checkpoint tensor count mismatch");
    for (size_t i = 0; i < params.size(); ++i) {
        const auto& e = ps.entries[i];
        if (e.name != params[i].name || e.value.shape() != params[i].value->shape())
            throw std::invalid_argument("discriminator: checkpoint mismatch at '" + e.name + "'");
        *params[i].value = e.value;
    }
}

}  // namespace srtk
