#include "srtk/color.hpp"

#include <algorithm>
#include <stdexcept>

namespace srtk {

Tensor rgb_to_y(const Tensor& img) {
    if (img.ndim() != 4 || img.dim(1) != 3)
        throw std::invalid_argument("rgb_to_y: expected [N,3,H,W], got " + img.shape_str());
    int n = img.dim(0), h = img.dim(2), w = img.dim(3);
    Tensor y({n, 1, h, w});
    const int64_t plane = static_cast<int64_t>(h) * w;
    for (int ni = 0; ni < n; ++ni) {
        const float* r = img.data() + img.index4(ni, 0, 0, 0);
        const float* g = img.data() + img.index4(ni, 1, 0, 0);
        const float* b = img.data() + img.index4(ni, 2, 0, 0);
        float* out = y.data() + y.index4(ni, 0, 0, 0);
        for (int64_t i = 0; i < plane; ++i) {
            out[i] = static_cast<float>((65.481 * r[i] + 128.553 * g[i] + 24.966 * b[i] + 16.0) / 255.0);
        }
    }
    return y;
}

Tensor& clamp01(Tensor& t) {
    for (auto& v : t.vec()) v = std::clamp(v, 0.0f, 1.0f);
    return t;
}

}  // namespace srtk
