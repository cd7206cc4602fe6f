#include "srtk/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace srtk::nn {

namespace {

struct ConvDims {
    int n, in_ch, h, w, out_h, out_w;
};

ConvDims conv_dims(const Tensor& x, int in_ch, int k, int stride, int pad, const char* who) {
    if (x.ndim() != 4) throw std::invalid_argument(std::string(who) + ": expected [N,C,H,W] input");
    if (x.dim(1) != in_ch)
        throw std::invalid_argument(std::string(who) + ": channel mismatch, expected " +
                                    std::to_string(in_ch) + ", got " + std::to_string(x.dim(1)));
    ConvDims d;
    d.n = x.dim(0);
    d.in_ch = in_ch;
    d.h = x.dim(2);
    d.w = x.dim(3);
    d.out_h = (d.h + 2 * pad - k) / stride + 1;
    d.out_w = (d.w + 2 * pad - k) / stride + 1;
    if (d.out_h <= 0 || d.out_w <= 0)
        throw std::invalid_argument(std::string(who) + ": input smaller than kernel");
    return d;
}

// col is [in_ch*k*k, out_h*out_w].
void im2col(const float* x, const ConvDims& d, int k, int stride, int pad, float* col) {
    const int ohw = d.out_h * d.out_w;
    for (int ci = 0; ci < d.in_ch; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                float* dst = col + (static_cast<int64_t>(ci) * k * k + ky * k + kx) * ohw;
                const float* src_plane = x + static_cast<int64_t>(ci) * d.h * d.w;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    int iy = oy * stride - pad + ky;
                    float* row = dst + static_cast<int64_t>(oy) * d.out_w;
                    if (iy < 0 || iy >= d.h) {
                        std::memset(row, 0, sizeof(float) * d.out_w);
                        continue;
                    }
                    const float* src_row = src_plane + static_cast<int64_t>(iy) * d.w;
                    if (stride == 1) {
                        int x0 = std::clamp(pad - kx, 0, d.out_w);        // first ox with ix >= 0
                        int x1 = std::clamp(d.w + pad - kx, x0, d.out_w); // first ox with ix >= w
                        if (x0 > 0) std::memset(row, 0, sizeof(float) * x0);
                        if (x1 > x0) std::memcpy(row + x0, src_row + (x0 - pad + kx), sizeof(float) * (x1 - x0));
                        if (x1 < d.out_w) std::memset(row + x1, 0, sizeof(float) * (d.out_w - x1));
                    } else {
                        for (int ox = 0; ox < d.out_w; ++ox) {
                            int ix = ox * stride - pad + kx;
                            row[ox] = (ix >= 0 && ix < d.w) ? src_row[ix] : 0.0f;
                        }
                    }
                }
            }
        }
    }
}

void col2im_add(const float* col, const ConvDims& d, int k, int stride, int pad, float* x) {
    const int ohw = d.out_h * d.out_w;
    for (int ci = 0; ci < d.in_ch; ++ci) {
        for (int ky = 0; ky < k; ++ky) {
            for (int kx = 0; kx < k; ++kx) {
                const float* src = col + (static_cast<int64_t>(ci) * k * k + ky * k + kx) * ohw;
                float* dst_plane = x + static_cast<int64_t>(ci) * d.h * d.w;
                for (int oy = 0; oy < d.out_h; ++oy) {
                    int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= d.h) continue;
                    const float* row = src + static_cast<int64_t>(oy) * d.out_w;
                    float* dst_row = dst_plane + static_cast<int64_t>(iy) * d.w;
                    for (int ox = 0; ox < d.out_w; ++ox) {
                        int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < d.w) dst_row[ix] += row[ox];
                    }
                }
            }
        }
    }
}

}  // namespace

Tensor init_msra_scaled(const std::vector<int>& shape, int fan_in, float init_scale,
                        uint64_t rng_seed) {
    Rng rng(rng_seed, /*stream=*/3);
    Tensor t(shape);
    fill_msra_scaled(t, fan_in, init_scale, rng);
    return t;
}

void fill_msra_scaled(Tensor& t, int fan_in, float init_scale, Rng& rng) {
    if (fan_in < 1) throw std::invalid_argument("init_msra_scaled: fan_in must be >= 1");
    if (!(init_scale > 0.0f)) throw std::invalid_argument("init_msra_scaled: init_scale must be > 0");
    float sd = init_scale * std::sqrt(2.0f / static_cast<float>(fan_in));
    for (auto& v : t.vec()) v = rng.normal(0.0f, sd);
}

Conv2d::Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad)
    : in_ch_(in_ch), out_ch_(out_ch), ksize_(ksize), stride_(stride), pad_(pad) {
    w_ = Tensor({out_ch, in_ch, ksize, ksize});
    b_ = Tensor({out_ch});
    gw_ = Tensor({out_ch, in_ch, ksize, ksize});
    gb_ = Tensor({out_ch});
}

void Conv2d::init(Rng& rng, float init_scale) {
    fill_msra_scaled(w_, fan_in(), init_scale, rng);
    std::fill(b_.vec().begin(), b_.vec().end(), 0.0f);
}

Tensor Conv2d::forward(const Tensor& x, bool keep_cache) {
    ConvDims d = conv_dims(x, in_ch_, ksize_, stride_, pad_, "conv2d");
    const int ckk = in_ch_ * ksize_ * ksize_;
    const int ohw = d.out_h * d.out_w;
    Tensor out({d.n, out_ch_, d.out_h, d.out_w});
    std::vector<float> col(static_cast<size_t>(ckk) * ohw);
    for (int ni = 0; ni < d.n; ++ni) {
        im2col(x.data() + x.index4(ni, 0, 0, 0), d, ksize_, stride_, pad_, col.data());
        float* out_s = out.data() + out.index4(ni, 0, 0, 0);
        sgemm(out_ch_, ohw, ckk, w_.data(), col.data(), out_s, false);
        for (int oc = 0; oc < out_ch_; ++oc) {
            float bias = b_[oc];
            float* p = out_s + static_cast<int64_t>(oc) * ohw;
            for (int i = 0; i < ohw; ++i) p[i] += bias;
        }
    }
    if (keep_cache) cached_in_ = x;
    return out;
}

Tensor Conv2d::backward(const Tensor& grad_out, bool param_grads) {
    if (cached_in_.empty()) throw std::logic_error("conv2d: backward without cached forward");
    const Tensor& x = cached_in_;
    ConvDims d = conv_dims(x, in_ch_, ksize_, stride_, pad_, "conv2d");
    const int ckk = in_ch_ * ksize_ * ksize_;
    const int ohw = d.out_h * d.out_w;
    Tensor gin({d.n, in_ch_, d.h, d.w});
    std::vector<float> col(static_cast<size_t>(ckk) * ohw);
    std::vector<float> gcol(static_cast<size_t>(ckk) * ohw);
    for (int ni = 0; ni < d.n; ++ni) {
        const float* gout_s = grad_out.data() + grad_out.index4(ni, 0, 0, 0);
        if (param_grads) {
            im2col(x.data() + x.index4(ni, 0, 0, 0), d, ksize_, stride_, pad_, col.data());
            sgemm_nt(out_ch_, ckk, ohw, gout_s, col.data(), gw_.data(), true);
            for (int oc = 0; oc < out_ch_; ++oc) {
                const float* p = gout_s + static_cast<int64_t>(oc) * ohw;
                double acc = 0.0;
                for (int i = 0; i < ohw; ++i) acc += p[i];
                gb_[oc] += static_cast<float>(acc);
            }
        }
        sgemm_tn(ckk, ohw, out_ch_, w_.data(), gout_s, gcol.data(), false);
        col2im_add(gcol.data(), d, ksize_, stride_, pad_, gin.data() + gin.index4(ni, 0, 0, 0));
    }
    return gin;
}

void Conv2d::zero_grad() {
    std::fill(gw_.vec().begin(), gw_.vec().end(), 0.0f);
    std::fill(gb_.vec().begin(), gb_.vec().end(), 0.0f);
}

void Conv2d::collect(const std::string& prefix, std::vector<Param>& out) {
    out.push_back(Param{prefix + ".weight", &w_, &gw_, true});
    out.push_back(Param{prefix + ".bias", &b_, &gb_, true});
}

Linear::Linear(int in_features, int out_features) : in_(in_features), out_(out_features) {
    w_ = Tensor({out_, in_});
    b_ = Tensor({out_});
    gw_ = Tensor({out_, in_});
    gb_ = Tensor({out_});
}

void Linear::init(Rng& rng, float init_scale) {
    fill_msra_scaled(w_, in_, init_scale, rng);
    std::fill(b_.vec().begin(), b_.vec().end(), 0.0f);
}

Tensor Linear::forward(const Tensor& x, bool keep_cache) {
    if (x.ndim() != 2 || x.dim(1) != in_)
        throw std::invalid_argument("linear: expected [N," + std::to_string(in_) + "] input, got " +
                                    x.shape_str());
    int n = x.dim(0);
    Tensor out({n, out_});
    sgemm_nt(n, out_, in_, x.data(), w_.data(), out.data(), false);
    for (int ni = 0; ni < n; ++ni)
        for (int o = 0; o < out_; ++o) out[static_cast<int64_t>(ni) * out_ + o] += b_[o];
    if (keep_cache) cached_in_ = x;
    return out;
}

Tensor Linear::backward(const Tensor& grad_out, bool param_grads) {
    if (cached_in_.empty()) throw std::logic_error("linear: backward without cached forward");
    int n = cached_in_.dim(0);
    if (param_grads) {
        sgemm_tn(out_, in_, n, grad_out.data(), cached_in_.data(), gw_.data(), true);
        for (int o = 0; o < out_; ++o) {
            double acc = 0.0;
            for (int ni = 0; ni < n; ++ni) acc += grad_out[static_cast<int64_t>(ni) * out_ + o];
            gb_[o] += static_cast<float>(acc);
        }
    }
    Tensor gin({n, in_});
    sgemm(n, in_, out_, grad_out.data(), w_.data(), gin.data(), false);
    return gin;
}

void Linear::zero_grad() {
    std::fill(gw_.vec().begin(), gw_.vec().end(), 0.0f);
    std::fill(gb_.vec().begin(), gb_.vec().end(), 0.0f);
}

void Linear::collect(const std::string& prefix, std::vector<Param>& out) {
    out.push_back(Param{prefix + ".weight", &w_, &gw_, true});
    out.push_back(Param{prefix + ".bias", &b_, &gb_, true});
}

Tensor leaky_relu(const Tensor& x, float slope) {
    Tensor out = x;
    for (auto& v : out.vec())
        if (v < 0.0f) v *= slope;
    return out;
}

Tensor LeakyRelu::forward(const Tensor& x, bool keep_cache) {
    if (keep_cache) cached_in_ = x;
    return leaky_relu(x, slope_);
}

Tensor LeakyRelu::backward(const Tensor& grad_out) const {
    if (cached_in_.empty()) throw std::logic_error("leaky_relu: backward without cached forward");
    Tensor gin = grad_out;
    const auto& xin = cached_in_.vec();
    auto& g = gin.vec();
    for (size_t i = 0; i < g.size(); ++i)
        if (xin[i] < 0.0f) g[i] *= slope_;
    return gin;
}

BatchNorm2d::BatchNorm2d(int channels) : ch_(channels) {
    gamma_ = Tensor({channels}, 1.0f);
    beta_ = Tensor({channels});
    ggamma_ = Tensor({channels});
    gbeta_ = Tensor({channels});
    running_mean_ = Tensor({channels});
    running_var_ = Tensor({channels}, 1.0f);
}

Tensor BatchNorm2d::forward(const Tensor& x, bool training, bool keep_cache) {
    if (x.ndim() != 4 || x.dim(1) != ch_)
        throw std::invalid_argument("batchnorm: channel mismatch");
    int n = x.dim(0), h = x.dim(2), w = x.dim(3);
    int64_t m = static_cast<int64_t>(n) * h * w;
    int64_t plane = static_cast<int64_t>(h) * w;
    Tensor out(x.shape());
    if (keep_cache) {
        cached_xhat_ = Tensor(x.shape());
        cached_inv_sd_.assign(static_cast<size_t>(ch_), 0.0f);
    }
    for (int c = 0; c < ch_; ++c) {
        double mean, var;
        if (training) {
            double s = 0.0, s2 = 0.0;
            for (int ni = 0; ni < n; ++ni) {
                const float* p = x.data() + x.index4(ni, c, 0, 0);
                for (int64_t i = 0; i < plane; ++i) {
                    s += p[i];
                    s2 += static_cast<double>(p[i]) * p[i];
                }
            }
            mean = s / static_cast<double>(m);
            var = s2 / static_cast<double>(m) - mean * mean;
            if (var < 0.0) var = 0.0;
            double unbiased = m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
            running_mean_[c] = (1.0f - momentum_) * running_mean_[c] + momentum_ * static_cast<float>(mean);
            running_var_[c] = (1.0f - momentum_) * running_var_[c] + momentum_ * static_cast<float>(unbiased);
        } else {
            mean = running_mean_[c];
            var = running_var_[c];
        }
        float inv_sd = static_cast<float>(1.0 / std::sqrt(var + eps_));
        float g = gamma_[c], bt = beta_[c], mu = static_cast<float>(mean);
        if (keep_cache) cached_inv_sd_[static_cast<size_t>(c)] = inv_sd;
        for (int ni = 0; ni < n; ++ni) {
            const float* p = x.data() + x.index4(ni, c, 0, 0);
            float* o = out.data() + out.index4(ni, c, 0, 0);
            float* xh = keep_cache ? cached_xhat_.data() + cached_xhat_.index4(ni, c, 0, 0) : nullptr;
            for (int64_t i = 0; i < plane; ++i) {
                float xhat = (p[i] - mu) * inv_sd;
                if (xh) xh[i] = xhat;
                o[i] = g * xhat + bt;
            }
        }
    }
    return out;
}

Tensor BatchNorm2d::backward(const Tensor& grad_out, bool param_grads) {
    if (cached_xhat_.empty()) throw std::logic_error("batchnorm: backward without cached forward");
    int n = grad_out.dim(0), h = grad_out.dim(2), w = grad_out.dim(3);
    int64_t m = static_cast<int64_t>(n) * h * w;
    int64_t plane = static_cast<int64_t>(h) * w;
    Tensor gin(grad_out.shape());
    for (int c = 0; c < ch_; ++c) {
        double sum_g = 0.0, sum_gx = 0.0;
        for (int ni = 0; ni < n; ++ni) {
            const float* g = grad_out.data() + grad_out.index4(ni, c, 0, 0);
            const float* xh = cached_xhat_.data() + cached_xhat_.index4(ni, c, 0, 0);
            for (int64_t i = 0; i < plane; ++i) {
                sum_g += g[i];
                sum_gx += static_cast<double>(g[i]) * xh[i];
            }
        }
        if (param_grads) {
            ggamma_[c] += static_cast<float>(sum_gx);
            gbeta_[c] += static_cast<float>(sum_g);
        }
        float gam = gamma_[c];
        float inv_sd = cached_inv_sd_[static_cast<size_t>(c)];
        float k1 = gam * inv_sd;
        float mean_g = static_cast<float>(sum_g / static_cast<double>(m));
        float mean_gx = static_cast<float>(sum_gx / static_cast<double>(m));
        for (int ni = 0; ni < n; ++ni) {
            const float* g = grad_out.data() + grad_out.index4(ni, c, 0, 0);
            const float* xh = cached_xhat_.data() + cached_xhat_.index4(ni, c, 0, 0);
            float* gi = gin.data() + gin.index4(ni, c, 0, 0);
            for (int64_t i = 0; i < plane; ++i) {
                gi[i] = k1 * (g[i] - mean_g - xh[i] * mean_gx);
            }
        }
    }
    return gin;
}

void BatchNorm2d::zero_grad() {
    std::fill(ggamma_.vec().begin(), ggamma_.vec().end(), 0.0f);
    std::fill(gbeta_.vec().begin(), gbeta_.vec().end(), 0.0f);
}

void BatchNorm2d::collect(const std::string& prefix, std::vector<Param>& out) {
    out.push_back(Param{prefix + ".gamma", &gamma_, &ggamma_, true});
    out.push_back(Param{prefix + ".beta", &beta_, &gbeta_, true});
    out.push_back(Param{prefix + ".running_mean", &running_mean_, nullptr, false});
    out.push_back(Param{prefix + ".running_var", &running_var_, nullptr, false});
}

Tensor upsample_nearest2x(const Tensor& x) {
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    Tensor out({n, c, h * 2, w * 2});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y) {
                const float* src = x.data() + x.index4(ni, ci, y, 0);
                float* d0 = out.data() + out.index4(ni, ci, 2 * y, 0);
                float* d1 = out.data() + out.index4(ni, ci, 2 * y + 1, 0);
                for (int xx = 0; xx < w; ++xx) {
                    d0[2 * xx] = d0[2 * xx + 1] = src[xx];
                    d1[2 * xx] = d1[2 * xx + 1] = src[xx];
                }
            }
    return out;
}

Tensor upsample_nearest2x_backward(const Tensor& grad_out) {
    int n = grad_out.dim(0), c = grad_out.dim(1), oh = grad_out.dim(2), ow = grad_out.dim(3);
    int h = oh / 2, w = ow / 2;
    Tensor gin({n, c, h, w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y) {
                const float* g0 = grad_out.data() + grad_out.index4(ni, ci, 2 * y, 0);
                const float* g1 = grad_out.data() + grad_out.index4(ni, ci, 2 * y + 1, 0);
                float* dst = gin.data() + gin.index4(ni, ci, y, 0);
                for (int xx = 0; xx < w; ++xx)
                    dst[xx] = g0[2 * xx] + g0[2 * xx + 1] + g1[2 * xx] + g1[2 * xx + 1];
            }
    return gin;
}

Tensor MaxPool2x2::forward(const Tensor& x, bool keep_cache) {
    int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
    int oh = h / 2, ow = w / 2;  // floor semantics; a trailing odd row/col is ignored
    Tensor out({n, c, oh, ow});
    if (keep_cache) {
        argmax_.assign(out.vec().size(), 0);
        in_shape_ = x.shape();
    }
    int64_t oi = 0;
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx, ++oi) {
                    int64_t base = x.index4(ni, ci, 2 * y, 2 * xx);
                    int64_t cand[4] = {base, base + 1, base + w, base + w + 1};
                    int best = 0;
                    float bv = x[cand[0]];
                    for (int j = 1; j < 4; ++j)
                        if (x[cand[j]] > bv) { bv = x[cand[j]]; best = j; }
                    out[oi] = bv;
                    if (keep_cache) argmax_[static_cast<size_t>(oi)] = static_cast<int32_t>(cand[best] - base) ;
                }
    return out;
}

Tensor MaxPool2x2::backward(const Tensor& grad_out) const {
    if (in_shape_.empty()) throw std::logic_error("maxpool: backward without cached forward");
    Tensor gin(in_shape_);
    int n = grad_out.dim(0), c = grad_out.dim(1), oh = grad_out.dim(2), ow = grad_out.dim(3);
    int w = in_shape_[3];
    int64_t oi = 0;
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < oh; ++y)
                for (int xx = 0; xx < ow; ++xx, ++oi) {
                    int64_t base = gin.index4(ni, ci, 2 * y, 2 * xx);
                    gin[base + argmax_[static_cast<size_t>(oi)]] += grad_out[oi];
                }
    (void)w;
    return gin;
}

void axpy(float alpha, const Tensor& x, Tensor& y) {
    if (!x.same_shape(y)) throw std::invalid_argument("axpy: shape mismatch");
    const auto& xv = x.vec();
    auto& yv = y.vec();
    for (size_t i = 0; i < yv.size(); ++i) yv[i] += alpha * xv[i];
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = a;
    const auto& bv = b.vec();
    auto& ov = out.vec();
    for (size_t i = 0; i < ov.size(); ++i) ov[i] += bv[i];
    return out;
}

Tensor scale(const Tensor& a, float s) {
    Tensor out = a;
    for (auto& v : out.vec()) v *= s;
    return out;
}

}  // namespace srtk::nn
