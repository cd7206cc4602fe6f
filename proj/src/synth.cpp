#include "srtk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "srtk/rng.hpp"

namespace srtk {

Tensor synth_image(uint64_t seed, int height, int width) {
    Rng rng(seed, /*stream=*/21);
    auto smooth = [](double t) { return t * t * (3.0 - 2.0 * t); };

    std::vector<double> base(static_cast<size_t>(height) * width, 0.0);
    double amp = 0.55;
    for (int octave = 0; octave < 5; ++octave) {
        int cell = std::max(3, 48 >> octave);
        int gh = height / cell + 2, gw = width / cell + 2;
        std::vector<double> lattice(static_cast<size_t>(gh) * gw);
        for (auto& v : lattice) v = rng.next_double();
        for (int y = 0; y < height; ++y) {
            double fy = static_cast<double>(y) / cell;
            int iy = static_cast<int>(fy);
            double ty = smooth(fy - iy);
            for (int x = 0; x < width; ++x) {
                double fx = static_cast<double>(x) / cell;
                int ix = static_cast<int>(fx);
                double tx = smooth(fx - ix);
                double v00 = lattice[static_cast<size_t>(iy) * gw + ix];
                double v01 = lattice[static_cast<size_t>(iy) * gw + ix + 1];
                double v10 = lattice[static_cast<size_t>(iy + 1) * gw + ix];
                double v11 = lattice[static_cast<size_t>(iy + 1) * gw + ix + 1];
                double v = (v00 * (1 - tx) + v01 * tx) * (1 - ty) + (v10 * (1 - tx) + v11 * tx) * ty;
                base[static_cast<size_t>(y) * width + x] += amp * (v - 0.5);
            }
        }
        amp *= 0.55;
    }
    double gx = rng.next_double() - 0.5, gy = rng.next_double() - 0.5;
    double tint[3], off[3];
    for (int c = 0; c < 3; ++c) {
        tint[c] = 0.7 + 0.3 * rng.next_double();
        off[c] = 0.35 + 0.3 * rng.next_double();
    }
    Tensor img({1, 3, height, width});
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double v = base[static_cast<size_t>(y) * width + x] +
                       gx * (static_cast<double>(x) / width - 0.5) +
                       gy * (static_cast<double>(y) / height - 0.5);
            for (int c = 0; c < 3; ++c) {
                double p = off[c] + tint[c] * v;
                img.at4(0, c, y, x) = static_cast<float>(std::clamp(p, 0.0, 1.0));
            }
        }
    return img;
}

Tensor add_gaussian_noise(const Tensor& img, uint64_t seed, float sd) {
    Rng rng(seed, /*stream=*/23);
    Tensor out = img;
    for (auto& v : out.vec()) v = std::clamp(v + rng.normal(0.0f, sd), 0.0f, 1.0f);
    return out;
}

}  // namespace srtk
