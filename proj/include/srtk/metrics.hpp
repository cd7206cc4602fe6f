#pragma once

#include <limits>
#include <string>
#include <vector>

#include "srtk/tensor.hpp"

namespace srtk {

// Y-channel PSNR in dB with a symmetric border crop (pixels removed on each
// side before comparison). Identical images report +infinity.
double psnr_y(const Tensor& sr, const Tensor& hr, int border_crop);

// Mean local SSIM over the Y channel: 11x11 Gaussian window (sigma 1.5),
// K1=0.01, K2=0.03, unit dynamic range, valid-window convention.
double ssim_y(const Tensor& sr, const Tensor& hr);

// 0.5 * ((10 - ma) + niqe); lower is better.
double perceptual_index(double ma_score, double niqe_score);

struct ImageQuality {
    std::string name;
    double psnr_y = 0.0;
    double ssim_y = 0.0;
    double niqe = 0.0;
    double perceptual_index = std::numeric_limits<double>::quiet_NaN();  // NaN without a Ma score
};

// Per-image rows (merged in filename order) plus a trailing mean row that is
// always recomputed from the rows.
struct QualityReport {
    std::vector<ImageQuality> rows;

    ImageQuality corpus_mean() const;
    void sort_rows();
    std::string to_csv() const;
    void write_csv(const std::string& path) const;
    static QualityReport read_csv(const std::string& path, ImageQuality* stored_mean = nullptr);
};

}  // namespace srtk
