#pragma once

#include "srtk/tensor.hpp"

namespace srtk {

// BT.601 full-to-limited luminance of an RGB batch in [0,1]:
//   Y = (65.481 R + 128.553 G + 24.966 B + 16) / 255
// Input [N,3,H,W], output [N,1,H,W].
Tensor rgb_to_y(const Tensor& img);

// Clamps every element into [0,1] in place and returns the tensor.
Tensor& clamp01(Tensor& t);

}  // namespace srtk
