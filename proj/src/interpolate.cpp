#include "srtk/interpolate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "srtk/resample.hpp"

namespace srtk {

ParameterSet interpolate_parameters(const ParameterSet& psnr, const ParameterSet& gan,
                                    double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("interpolate_parameters: alpha must be in [0,1]");
    if (psnr.entries.size() != gan.entries.size())
        throw std::invalid_argument("interpolate_parameters: parameter sets have different sizes (" +
                                    std::to_string(psnr.entries.size()) + " vs " +
                                    std::to_string(gan.entries.size()) + ")");
    ParameterSet out;
    char stage[32];
    std::snprintf(stage, sizeof(stage), "interp(%g)", alpha);
    out.stage = stage;
    out.iteration = gan.iteration;
    out.config = psnr.config;
    for (size_t i = 0; i < psnr.entries.size(); ++i) {
        const auto& a = psnr.entries[i];
        const auto& b = gan.entries[i];
        if (a.name != b.name)
            throw std::invalid_argument("interpolate_parameters: name mismatch at '" + a.name +
                                        "' vs '" + b.name + "'");
        if (!a.value.same_shape(b.value))
            throw std::invalid_argument("interpolate_parameters: shape mismatch at '" + a.name + "': " +
                                        a.value.shape_str() + " vs " + b.value.shape_str());
        // Exact endpoints: copy the source arrays rather than blending.
        if (alpha == 0.0) {
            out.add(a.name, a.value);
        } else if (alpha == 1.0) {
            out.add(a.name, b.value);
        } else {
            Tensor t(a.value.shape());
            const float w0 = static_cast<float>(1.0 - alpha), w1 = static_cast<float>(alpha);
            for (int64_t j = 0; j < t.numel(); ++j) t[j] = w0 * a.value[j] + w1 * b.value[j];
            out.add(a.name, std::move(t));
        }
    }
    return out;
}

Tensor interpolate_images(const Tensor& a, const Tensor& b, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("interpolate_images: alpha must be in [0,1]");
    if (!a.same_shape(b))
        throw std::invalid_argument("interpolate_images: shape mismatch " + a.shape_str() + " vs " +
                                    b.shape_str());
    Tensor out(a.shape());
    const float w0 = static_cast<float>(1.0 - alpha), w1 = static_cast<float>(alpha);
    for (int64_t i = 0; i < out.numel(); ++i)
        out[i] = std::clamp(w0 * a[i] + w1 * b[i], 0.0f, 1.0f);
    return out;
}

Tensor back_project(const Tensor& sr, const Tensor& lr, int iters) {
    if (iters < 0) throw std::invalid_argument("back_project: iters must be >= 0");
    if (sr.ndim() != 4 || lr.ndim() != 4)
        throw std::invalid_argument("back_project: expected [N,C,H,W] inputs");
    if (sr.dim(2) % lr.dim(2) != 0 || sr.dim(3) % lr.dim(3) != 0 ||
        sr.dim(2) / lr.dim(2) != sr.dim(3) / lr.dim(3) || sr.dim(0) != lr.dim(0) ||
        sr.dim(1) != lr.dim(1))
        throw std::invalid_argument("back_project: sr dims must equal lr dims times one scale");
    int scale = sr.dim(2) / lr.dim(2);
    Tensor cur = sr;
    for (int it = 0; it < iters; ++it) {
        Tensor down = bicubic_resize(cur, ResampleSpec{1.0 / scale, /*antialias=*/true});
        Tensor residual(lr.shape());
        for (int64_t i = 0; i < residual.numel(); ++i) residual[i] = lr[i] - down[i];
        Tensor up = bicubic_resize(residual, ResampleSpec{static_cast<double>(scale), false});
        for (int64_t i = 0; i < cur.numel(); ++i) cur[i] += up[i];
    }
    for (auto& v : cur.vec()) v = std::clamp(v, 0.0f, 1.0f);
    return cur;
}

}  // namespace srtk
