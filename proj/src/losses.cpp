#include "srtk/losses.hpp"

namespace srtk {

double content_loss_l1(const Tensor& sr, const Tensor& hr) {
    if (!sr.same_shape(hr))
        throw std::invalid_argument("content_loss_l1: shape mismatch " + sr.shape_str() + " vs " +
                                    hr.shape_str());
    if (sr.empty()) throw std::invalid_argument("content_loss_l1: empty input");
    double acc = 0.0;
    const auto& a = sr.vec();
    const auto& b = hr.vec();
    for (size_t i = 0; i < a.size(); ++i) acc += std::fabs(static_cast<double>(a[i]) - b[i]);
    return acc / static_cast<double>(a.size());
}

Tensor content_loss_l1_grad(const Tensor& sr, const Tensor& hr, double* value) {
    if (!sr.same_shape(hr)) throw std::invalid_argument("content_loss_l1: shape mismatch");
    if (sr.empty()) throw std::invalid_argument("content_loss_l1: empty input");
    Tensor g(sr.shape());
    const auto& a = sr.vec();
    const auto& b = hr.vec();
    const float inv_n = 1.0f / static_cast<float>(a.size());
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        acc += std::fabs(d);
        g[static_cast<int64_t>(i)] = d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0f);
    }
    if (value) *value = acc / static_cast<double>(a.size());
    return g;
}

namespace {

double feature_distance(const Tensor& fa, const Tensor& fb, FeatureMetric metric, Tensor* gfa) {
    if (!fa.same_shape(fb)) throw std::invalid_argument("perceptual_loss: feature shape mismatch");
    const auto& a = fa.vec();
    const auto& b = fb.vec();
    const double inv_n = 1.0 / static_cast<double>(a.size());
    double acc = 0.0;
    if (gfa) *gfa = Tensor(fa.shape());
    for (size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        if (metric == FeatureMetric::l1) {
            acc += std::fabs(d);
            if (gfa) (*gfa)[static_cast<int64_t>(i)] =
                static_cast<float>(d > 0.0 ? inv_n : (d < 0.0 ? -inv_n : 0.0));
        } else {
            acc += d * d;
            if (gfa) (*gfa)[static_cast<int64_t>(i)] = static_cast<float>(2.0 * d * inv_n);
        }
    }
    return acc * inv_n;
}

}  // namespace

double perceptual_loss(FeatureExtractor& extractor, const Tensor& sr, const Tensor& hr,
                       const FeatureTap& tap, FeatureMetric metric) {
    Tensor fa = extractor.extract(sr, tap);
    Tensor fb = extractor.extract(hr, tap);
    return feature_distance(fa, fb, metric, nullptr);
}

double perceptual_loss_grad(FeatureExtractor& extractor, const Tensor& sr, const Tensor& hr,
                            const FeatureTap& tap, FeatureMetric metric, Tensor* grad_sr) {
    Tensor fb = extractor.extract(hr, tap);
    Tensor fa = extractor.forward_train(sr, tap);
    Tensor gfeat;
    double value = feature_distance(fa, fb, metric, &gfeat);
    if (grad_sr) *grad_sr = extractor.backward(gfeat);
    return value;
}

double total_generator_loss(double percep, double adv, double content, const LossWeights& w) {
    if (!std::isfinite(percep)) throw TrainingDiverged("total loss: perceptual component is not finite");
    if (!std::isfinite(adv)) throw TrainingDiverged("total loss: adversarial component is not finite");
    if (!std::isfinite(content)) throw TrainingDiverged("total loss: content component is not finite");
    if (w.lambda_adv < 0.0 || w.eta_content < 0.0)
        throw std::invalid_argument("total loss: loss weights must be nonnegative");
    return percep + w.lambda_adv * adv + w.eta_content * content;
}

}  // namespace srtk
