#pragma once

#include "srtk/param_set.hpp"
#include "srtk/tensor.hpp"

namespace srtk {

// Entrywise affine blend of two parameter sets from the same generator
// configuration: (1-alpha)*psnr + alpha*gan. alpha=0 and alpha=1 reproduce
// the sources bit for bit. Name or shape mismatches name the first offender.
ParameterSet interpolate_parameters(const ParameterSet& psnr, const ParameterSet& gan,
                                    double alpha);

// Pixel-space blend (1-alpha)*a + alpha*b, clamped to [0,1].
Tensor interpolate_images(const Tensor& a, const Tensor& b, double alpha);

// Iterative downsampling-consistency correction:
//   sr <- sr + upsample(lr - downsample(sr))
// using the shared bicubic operators; the result is clamped to [0,1].
Tensor back_project(const Tensor& sr, const Tensor& lr, int iters);

}  // namespace srtk
