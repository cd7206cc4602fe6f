#pragma once

#include "srtk/tensor.hpp"

namespace srtk {

// Resampling request. antialias widens the kernel by 1/scale when shrinking;
// it has no effect when enlarging. kernel_support is the total kernel width
// in source pixels at unit scale (4.0 for the piecewise cubic below).
struct ResampleSpec {
    double scale = 1.0;
    bool antialias = true;
    double kernel_support = 4.0;
};

// Piecewise cubic with a = -0.5 (the classic Catmull-Rom style kernel used
// by MATLAB-compatible resizers). Support is [-2, 2].
double cubic_kernel(double x);

// Separable resize of a [N,C,H,W] tensor. Output dims are round(dim * scale).
// Per-output-pixel weights are renormalized to sum to 1 and out-of-range taps
// replicate the border pixel.
Tensor bicubic_resize(const Tensor& img, const ResampleSpec& spec);

// Precomputed 1-D resampling weights for one axis (exposed for reuse and for
// direct inspection in tests).
struct AxisWeights {
    int out_size = 0;
    int taps = 0;
    std::vector<int> indices;    // out_size * taps, clamped source indices
    std::vector<double> weights; // out_size * taps, normalized per output pixel
};
AxisWeights make_axis_weights(int in_size, int out_size, double scale, bool antialias,
                              double kernel_support);

}  // namespace srtk
