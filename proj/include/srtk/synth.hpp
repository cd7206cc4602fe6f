#pragma once

#include <cstdint>

#include "srtk/tensor.hpp"

namespace srtk {

// Procedural demo image: octaves of smoothly interpolated value noise with a
// global gradient and per-channel tinting, in [0,1]. Deterministic in the
// seed. Used for the bundled demo corpus, the pristine NIQE corpus and tests.
Tensor synth_image(uint64_t seed, int height, int width);

// Clamped additive Gaussian noise, for degradation experiments.
Tensor add_gaussian_noise(const Tensor& img, uint64_t seed, float sd);

}  // namespace srtk
