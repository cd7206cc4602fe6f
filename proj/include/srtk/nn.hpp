#pragma once

#include <string>
#include <vector>

#include "srtk/rng.hpp"
#include "srtk/tensor.hpp"

namespace srtk::nn {

// Row-major single-precision GEMM, C[m,n] (+)= A[m,k] * B[k,n].
// Accumulation order is fixed, so results are bit-stable run to run.
void sgemm(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);
// C[m,n] (+)= A[k,m]^T * B[k,n]
void sgemm_tn(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);
// C[m,n] (+)= A[m,k] * B[n,k]^T
void sgemm_nt(int m, int n, int k, const float* a, const float* b, float* c, bool accumulate);

// Named view of a learnable (or persistent) tensor inside a model.
struct Param {
    std::string name;
    Tensor* value = nullptr;
    Tensor* grad = nullptr;   // null for non-trainable buffers (running stats)
    bool trainable = true;
};

// Scaled MSRA initialization: zero-mean normal with sd = init_scale*sqrt(2/fan_in).
Tensor init_msra_scaled(const std::vector<int>& shape, int fan_in, float init_scale, uint64_t rng_seed);
void fill_msra_scaled(Tensor& t, int fan_in, float init_scale, Rng& rng);

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(int in_ch, int out_ch, int ksize, int stride, int pad);

    void init(Rng& rng, float init_scale);
    Tensor forward(const Tensor& x, bool keep_cache);
    // Returns grad wrt input; accumulates weight/bias grads unless frozen.
    Tensor backward(const Tensor& grad_out, bool param_grads = true);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<Param>& out);
    void release_cache() { cached_in_ = Tensor(); }

    int in_ch() const { return in_ch_; }
    int out_ch() const { return out_ch_; }
    int ksize() const { return ksize_; }
    int fan_in() const { return in_ch_ * ksize_ * ksize_; }
    Tensor& weight() { return w_; }
    Tensor& bias() { return b_; }
    const Tensor& weight() const { return w_; }
    const Tensor& bias() const { return b_; }

private:
    int in_ch_ = 0, out_ch_ = 0, ksize_ = 3, stride_ = 1, pad_ = 1;
    Tensor w_, b_, gw_, gb_;
    Tensor cached_in_;
};

class Linear {
public:
    Linear() = default;
    Linear(int in_features, int out_features);
    void init(Rng& rng, float init_scale);
    Tensor forward(const Tensor& x, bool keep_cache);  // x: [N, in]
    Tensor backward(const Tensor& grad_out, bool param_grads = true);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<Param>& out);
    int in_features() const { return in_; }

private:
    int in_ = 0, out_ = 0;
    Tensor w_, b_, gw_, gb_;
    Tensor cached_in_;
};

// Leaky rectifier as a caching layer (negative slope fixed at construction).
class LeakyRelu {
public:
    explicit LeakyRelu(float slope = 0.2f) : slope_(slope) {}
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& grad_out) const;
    void release_cache() { cached_in_ = Tensor(); }

private:
    float slope_;
    Tensor cached_in_;
};

Tensor leaky_relu(const Tensor& x, float slope);

// Batch normalization over [N,C,H,W] with per-channel affine parameters and
// running statistics (torch conventions: biased variance for normalization,
// unbiased for the running estimate, momentum 0.1).
class BatchNorm2d {
public:
    BatchNorm2d() = default;
    explicit BatchNorm2d(int channels);
    Tensor forward(const Tensor& x, bool training, bool keep_cache);
    Tensor backward(const Tensor& grad_out, bool param_grads = true);
    void zero_grad();
    void collect(const std::string& prefix, std::vector<Param>& out);

private:
    int ch_ = 0;
    float momentum_ = 0.1f, eps_ = 1e-5f;
    Tensor gamma_, beta_, ggamma_, gbeta_;
    Tensor running_mean_, running_var_;
    Tensor cached_xhat_;
    std::vector<float> cached_inv_sd_;
};

// Nearest-neighbor 2x upsampling.
Tensor upsample_nearest2x(const Tensor& x);
Tensor upsample_nearest2x_backward(const Tensor& grad_out);

// 2x2 max pooling with stride 2 (spatial dims must be even).
class MaxPool2x2 {
public:
    Tensor forward(const Tensor& x, bool keep_cache);
    Tensor backward(const Tensor& grad_out) const;

private:
    std::vector<int32_t> argmax_;
    std::vector<int> in_shape_;
};

// Elementwise helpers.
void axpy(float alpha, const Tensor& x, Tensor& y);  // y += alpha * x
Tensor add(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);

}  // namespace srtk::nn
