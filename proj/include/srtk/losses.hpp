#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "srtk/errors.hpp"
#include "srtk/feature_extractor.hpp"
#include "srtk/tensor.hpp"

namespace srtk {

struct LossWeights {
    double lambda_adv = 5e-3;   // weight on the relativistic adversarial term
    double eta_content = 1e-2;  // weight on the L1 content term
};

enum class FeatureMetric { l1, l2 };

// log-sigmoid terms are always evaluated through softplus; composing a naive
// sigmoid with log overflows for |x| around 40 and these losses must stay
// finite for |C| up to at least 100.
template <class Real>
inline Real softplus(Real x) {
    return x > Real(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class Real>
inline Real sigmoid(Real x) {
    if (x >= Real(0)) return Real(1) / (Real(1) + std::exp(-x));
    Real e = std::exp(x);
    return e / (Real(1) + e);
}

template <class Real>
inline Real mean_of(std::span<const Real> v) {
    Real s = 0;
    for (Real x : v) s += x;
    return s / static_cast<Real>(v.size());
}

namespace detail {
template <class Real>
inline void require_batches(std::span<const Real> c_real, std::span<const Real> c_fake,
                            const char* who) {
    if (c_real.empty() || c_fake.empty())
        throw std::invalid_argument(std::string(who) + ": empty batch");
}
}  // namespace detail

// Relativistic average discriminator loss:
//   L = -E_r[log sigma(C(x_r) - E_f C(x_f))] - E_f[log(1 - sigma(C(x_f) - E_r C(x_r)))]
// Means are taken over the current mini-batch only.
template <class Real>
Real discriminator_loss_ra(std::span<const Real> c_real, std::span<const Real> c_fake) {
    detail::require_batches(c_real, c_fake, "discriminator_loss_ra");
    Real mr = mean_of(c_real), mf = mean_of(c_fake);
    Real acc = 0;
    for (Real cr : c_real) acc += softplus(-(cr - mf));
    Real loss = acc / static_cast<Real>(c_real.size());
    acc = 0;
    for (Real cf : c_fake) acc += softplus(cf - mr);
    return loss + acc / static_cast<Real>(c_fake.size());
}

// Generator adversarial loss, the symmetric counterpart:
//   L = -E_r[log(1 - sigma(C(x_r) - E_f C(x_f)))] - E_f[log sigma(C(x_f) - E_r C(x_r)))]
template <class Real>
Real generator_adversarial_loss_ra(std::span<const Real> c_real, std::span<const Real> c_fake) {
    detail::require_batches(c_real, c_fake, "generator_adversarial_loss_ra");
    Real mr = mean_of(c_real), mf = mean_of(c_fake);
    Real acc = 0;
    for (Real cr : c_real) acc += softplus(cr - mf);
    Real loss = acc / static_cast<Real>(c_real.size());
    acc = 0;
    for (Real cf : c_fake) acc += softplus(-(cf - mr));
    return loss + acc / static_cast<Real>(c_fake.size());
}

template <class Real>
struct RaLossResult {
    Real value = 0;
    std::vector<Real> d_real, d_fake;
};

// Analytic gradients for the discriminator loss. Both score batches carry
// gradient, including the paths through the batch means.
template <class Real>
RaLossResult<Real> discriminator_loss_ra_grad(std::span<const Real> c_real,
                                              std::span<const Real> c_fake) {
    detail::require_batches(c_real, c_fake, "discriminator_loss_ra");
    const Real br = static_cast<Real>(c_real.size()), bf = static_cast<Real>(c_fake.size());
    Real mr = mean_of(c_real), mf = mean_of(c_fake);
    RaLossResult<Real> out;
    out.d_real.resize(c_real.size());
    out.d_fake.resize(c_fake.size());
    Real mean_sig_neg_a = 0, mean_sig_b = 0;
    for (size_t i = 0; i < c_real.size(); ++i) {
        Real a = c_real[i] - mf;
        out.value += softplus(-a) / br;
        mean_sig_neg_a += sigmoid(-a) / br;
    }
    for (size_t j = 0; j < c_fake.size(); ++j) {
        Real b = c_fake[j] - mr;
        out.value += softplus(b) / bf;
        mean_sig_b += sigmoid(b) / bf;
    }
    for (size_t i = 0; i < c_real.size(); ++i) {
        Real a = c_real[i] - mf;
        out.d_real[i] = -sigmoid(-a) / br - mean_sig_b / br;
    }
    for (size_t j = 0; j < c_fake.size(); ++j) {
        Real b = c_fake[j] - mr;
        out.d_fake[j] = sigmoid(b) / bf + mean_sig_neg_a / bf;
    }
    return out;
}

template <class Real>
RaLossResult<Real> generator_adversarial_loss_ra_grad(std::span<const Real> c_real,
                                                      std::span<const Real> c_fake) {
    detail::require_batches(c_real, c_fake, "generator_adversarial_loss_ra");
    const Real br = static_cast<Real>(c_real.size()), bf = static_cast<Real>(c_fake.size());
    Real mr = mean_of(c_real), mf = mean_of(c_fake);
    RaLossResult<Real> out;
    out.d_real.resize(c_real.size());
    out.d_fake.resize(c_fake.size());
    Real mean_sig_a = 0, mean_sig_neg_b = 0;
    for (size_t i = 0; i < c_real.size(); ++i) {
        Real a = c_real[i] - mf;
        out.value += softplus(a) / br;
        mean_sig_a += sigmoid(a) / br;
    }
    for (size_t j = 0; j < c_fake.size(); ++j) {
        Real b = c_fake[j] - mr;
        out.value += softplus(-b) / bf;
        mean_sig_neg_b += sigmoid(-b) / bf;
    }
    for (size_t i = 0; i < c_real.size(); ++i) {
        Real a = c_real[i] - mf;
        out.d_real[i] = sigmoid(a) / br + mean_sig_neg_b / br;
    }
    for (size_t j = 0; j < c_fake.size(); ++j) {
        Real b = c_fake[j] - mr;
        out.d_fake[j] = -sigmoid(-b) / bf - mean_sig_a / bf;
    }
    return out;
}

// Mean absolute elementwise difference.
double content_loss_l1(const Tensor& sr, const Tensor& hr);
// Gradient wrt sr; also returns the loss value through *value when non-null.
Tensor content_loss_l1_grad(const Tensor& sr, const Tensor& hr, double* value);

// Mean elementwise distance between feature maps at the tap.
double perceptual_loss(FeatureExtractor& extractor, const Tensor& sr, const Tensor& hr,
                       const FeatureTap& tap, FeatureMetric metric = FeatureMetric::l1);
// Differentiable path: returns the loss and writes d(loss)/d(sr).
double perceptual_loss_grad(FeatureExtractor& extractor, const Tensor& sr, const Tensor& hr,
                            const FeatureTap& tap, FeatureMetric metric, Tensor* grad_sr);

// L_G = L_percep + lambda * L_adv + eta * L1. Throws TrainingDiverged naming
// the first non-finite component.
double total_generator_loss(double percep, double adv, double content, const LossWeights& w);

}  // namespace srtk
