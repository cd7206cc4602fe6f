#pragma once

#include <string>

#include "srtk/tensor.hpp"

namespace srtk {

// Reads an 8-bit non-interlaced PNG (gray, gray+alpha, RGB or RGBA) into a
// [1,3,H,W] tensor in [0,1]. Gray is replicated across channels, alpha is
// dropped. Throws std::runtime_error on malformed files and unsupported
// variants (16-bit, palette, interlaced).
Tensor load_png(const std::string& path);

// Writes a [1,3,H,W] or [3,H,W] tensor as an 8-bit RGB PNG. Values are
// clamped to [0,1] and quantized with round(255*x).
void save_png(const std::string& path, const Tensor& img);

}  // namespace srtk
