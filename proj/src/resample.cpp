#include "srtk/resample.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srtk {

double cubic_kernel(double x) {
    const double a = -0.5;
    double ax = std::fabs(x);
    if (ax <= 1.0) return (a + 2.0) * ax * ax * ax - (a + 3.0) * ax * ax + 1.0;
    if (ax < 2.0) return a * ax * ax * ax - 5.0 * a * ax * ax + 8.0 * a * ax - 4.0 * a;
    return 0.0;
}

AxisWeights make_axis_weights(int in_size, int out_size, double scale, bool antialias,
                              double kernel_support) {
    bool shrink = antialias && scale < 1.0;
    double kw = shrink ? kernel_support / scale : kernel_support;
    int taps = static_cast<int>(std::ceil(kw)) + 2;

    AxisWeights aw;
    aw.out_size = out_size;
    aw.taps = taps;
    aw.indices.resize(static_cast<size_t>(out_size) * taps);
    aw.weights.resize(static_cast<size_t>(out_size) * taps);

    for (int i = 0; i < out_size; ++i) {
        // Center of output pixel i mapped into 1-based source coordinates.
        double u = (i + 1) / scale + 0.5 * (1.0 - 1.0 / scale);
        int left = static_cast<int>(std::floor(u - kw / 2.0));
        double sum = 0.0;
        for (int j = 0; j < taps; ++j) {
            int src = left + j;  // 1-based, may fall outside the image
            double d = u - src;
            double w = shrink ? scale * cubic_kernel(scale * d) : cubic_kernel(d);
            aw.weights[static_cast<size_t>(i) * taps + j] = w;
            aw.indices[static_cast<size_t>(i) * taps + j] = std::clamp(src, 1, in_size) - 1;
            sum += w;
        }
        for (int j = 0; j < taps; ++j) aw.weights[static_cast<size_t>(i) * taps + j] /= sum;
    }
    return aw;
}

namespace {

// Resample along the height axis of one [H,W] plane.
void apply_rows(const float* src, int in_h, int w, const AxisWeights& aw, float* dst) {
    for (int y = 0; y < aw.out_size; ++y) {
        const int* idx = &aw.indices[static_cast<size_t>(y) * aw.taps];
        const double* wt = &aw.weights[static_cast<size_t>(y) * aw.taps];
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = 0; j < aw.taps; ++j) acc += wt[j] * src[static_cast<int64_t>(idx[j]) * w + x];
            dst[static_cast<int64_t>(y) * w + x] = static_cast<float>(acc);
        }
    }
    (void)in_h;
}

void apply_cols(const float* src, int h, int in_w, const AxisWeights& aw, float* dst) {
    for (int y = 0; y < h; ++y) {
        const float* row = src + static_cast<int64_t>(y) * in_w;
        float* out_row = dst + static_cast<int64_t>(y) * aw.out_size;
        for (int x = 0; x < aw.out_size; ++x) {
            const int* idx = &aw.indices[static_cast<size_t>(x) * aw.taps];
            const double* wt = &aw.weights[static_cast<size_t>(x) * aw.taps];
            double acc = 0.0;
            for (int j = 0; j < aw.taps; ++j) acc += wt[j] * row[idx[j]];
            out_row[x] = static_cast<float>(acc);
        }
    }
}

}  // namespace

Tensor bicubic_resize(const Tensor& img, const ResampleSpec& spec) {
    if (img.ndim() != 4) throw std::invalid_argument("bicubic_resize: expected [N,C,H,W] input");
    if (img.empty()) throw std::invalid_argument("bicubic_resize: empty input");
    if (!(spec.scale > 0.0)) throw std::invalid_argument("bicubic_resize: scale must be positive");

    int n = img.dim(0), c = img.dim(1), h = img.dim(2), w = img.dim(3);
    int out_h = static_cast<int>(std::lround(h * spec.scale));
    int out_w = static_cast<int>(std::lround(w * spec.scale));
    if (out_h <= 0 || out_w <= 0)
        throw std::invalid_argument("bicubic_resize: output dimension rounds to zero");

    AxisWeights wh = make_axis_weights(h, out_h, spec.scale, spec.antialias, spec.kernel_support);
    AxisWeights ww = make_axis_weights(w, out_w, spec.scale, spec.antialias, spec.kernel_support);

    Tensor out({n, c, out_h, out_w});
    std::vector<float> tmp(static_cast<size_t>(out_h) * w);
    for (int ni = 0; ni < n; ++ni) {
        for (int ci = 0; ci < c; ++ci) {
            const float* plane = img.data() + img.index4(ni, ci, 0, 0);
            float* out_plane = out.data() + out.index4(ni, ci, 0, 0);
            apply_rows(plane, h, w, wh, tmp.data());
            apply_cols(tmp.data(), out_h, w, ww, out_plane);
        }
    }
    return out;
}

}  // namespace srtk
