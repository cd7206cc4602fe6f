#pragma once

#include <string>
#include <vector>

#include "srtk/tensor.hpp"

namespace srtk {

// Natural-scene-statistics quality model: the mean and covariance of 36-dim
// patch features (18 per scale, two scales) measured on a pristine corpus.
// Orientation statistics are pooled so the score is invariant to horizontal
// flips: paired products are grouped as horizontal, vertical, diagonal
// (both diagonals pooled) and horizontal+vertical pooled.
struct NiqeModel {
    int patch_size = 32;                 // even, in pixels at the full scale
    double sharpness_threshold = 0.75;   // patch selection, fraction of peak sharpness
    std::vector<double> mean;            // 36
    std::vector<double> cov;             // 36*36 row-major

    void validate() const;
    void save_json(const std::string& path) const;
    static NiqeModel load_json(const std::string& path);
};

inline constexpr int kNiqeFeatureDim = 36;

// Asymmetric generalized Gaussian fit by moment matching over an alpha grid.
struct AggdFit {
    double alpha = 0.0;
    double left_std = 0.0;   // scale of the negative side
    double right_std = 0.0;  // scale of the positive side
    double mean_param = 0.0; // (beta_r - beta_l) * Gamma(2/a) / Gamma(1/a)
    double beta_left = 0.0;
    double beta_right = 0.0;
};
AggdFit fit_aggd(const std::vector<double>& samples);

// Per-patch 36-dim feature rows for one image (selected patches only),
// pooled over the image and its mirror so the statistics are exactly
// flip-invariant regardless of how the patch grid lands.
std::vector<std::vector<double>> niqe_patch_features(const Tensor& img, int patch_size,
                                                     double sharpness_threshold);

// Mahalanobis-style distance between the pristine model and a measured
// feature distribution; exposed so the zero-distance identity is testable.
double niqe_distance(const NiqeModel& model, const std::vector<double>& mean2,
                     const std::vector<double>& cov2);

// Lower is better. Throws std::invalid_argument when the image is too small
// to contain a single patch.
double niqe(const Tensor& img, const NiqeModel& model);

// Fits the pristine model from a corpus of clean images.
NiqeModel fit_niqe_model(const std::vector<Tensor>& images, int patch_size = 32,
                         double sharpness_threshold = 0.75);

}  // namespace srtk
