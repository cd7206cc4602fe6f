#include "srtk/niqe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "srtk/color.hpp"
#include "srtk/resample.hpp"

namespace srtk {

namespace {

constexpr double kEps = 1e-10;

// Precomputed moment-ratio table for the alpha grid 0.2 .. 10 step 0.001.
struct AlphaGrid {
    std::vector<double> alpha, ratio;
    AlphaGrid() {
        for (double a = 0.2; a <= 10.0 + 1e-12; a += 0.001) {
            alpha.push_back(a);
            double lg1 = std::lgamma(1.0 / a), lg2 = std::lgamma(2.0 / a), lg3 = std::lgamma(3.0 / a);
            ratio.push_back(std::exp(2.0 * lg2 - lg1 - lg3));
        }
    }
};

const AlphaGrid& alpha_grid() {
    static const AlphaGrid g;
    return g;
}

struct MscnField {
    std::vector<double> mscn;
    std::vector<double> sigma;
    int h = 0, w = 0;
};

// 7x7 Gaussian (sigma 7/6), separable, replicate border.
std::vector<double> gauss7(const std::vector<double>& img, int h, int w) {
    static const std::vector<double> win = [] {
        std::vector<double> k(7);
        double sum = 0.0;
        for (int i = 0; i < 7; ++i) {
            double d = i - 3;
            k[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * (7.0 / 6.0) * (7.0 / 6.0)));
            sum += k[static_cast<size_t>(i)];
        }
        for (auto& v : k) v /= sum;
        return k;
    }();
    std::vector<double> tmp(img.size()), out(img.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -3; j <= 3; ++j) {
                int yy = std::clamp(y + j, 0, h - 1);
                acc += win[static_cast<size_t>(j + 3)] * img[static_cast<size_t>(yy) * w + x];
            }
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = -3; j <= 3; ++j) {
                int xx = std::clamp(x + j, 0, w - 1);
                acc += win[static_cast<size_t>(j + 3)] * tmp[static_cast<size_t>(y) * w + xx];
            }
            out[static_cast<size_t>(y) * w + x] = acc;
        }
    return out;
}

MscnField compute_mscn(const std::vector<double>& gray, int h, int w) {
    MscnField f;
    f.h = h;
    f.w = w;
    std::vector<double> sq(gray.size());
    for (size_t i = 0; i < gray.size(); ++i) sq[i] = gray[i] * gray[i];
    std::vector<double> mu = gauss7(gray, h, w);
    std::vector<double> musq = gauss7(sq, h, w);
    f.sigma.resize(gray.size());
    f.mscn.resize(gray.size());
    for (size_t i = 0; i < gray.size(); ++i) {
        double var = musq[i] - mu[i] * mu[i];
        f.sigma[i] = std::sqrt(var > 0.0 ? var : 0.0);
        f.mscn[i] = (gray[i] - mu[i]) / (f.sigma[i] + 1.0);
    }
    return f;
}

void push_aggd_features(const std::vector<double>& samples, std::vector<double>& feat) {
    AggdFit fit = fit_aggd(samples);
    feat.push_back(fit.alpha);
    feat.push_back(fit.mean_param);
    feat.push_back(fit.beta_left);
    feat.push_back(fit.beta_right);
}

// 18 features for one patch of one scale.
std::vector<double> patch_features18(const MscnField& f, int y0, int x0, int p) {
    std::vector<double> mscn;
    mscn.reserve(static_cast<size_t>(p) * p);
    for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x) mscn.push_back(f.mscn[static_cast<size_t>(y0 + y) * f.w + x0 + x]);

    std::vector<double> feat;
    feat.reserve(18);
    AggdFit m = fit_aggd(mscn);
    feat.push_back(m.alpha);
    feat.push_back((m.beta_left + m.beta_right) / 2.0);

    auto at = [&](int y, int x) { return f.mscn[static_cast<size_t>(y0 + y) * f.w + x0 + x]; };
    std::vector<double> hprod, vprod, dprod, hvprod;
    for (int y = 0; y < p; ++y)
        for (int x = 0; x + 1 < p; ++x) hprod.push_back(at(y, x) * at(y, x + 1));
    for (int y = 0; y + 1 < p; ++y)
        for (int x = 0; x < p; ++x) vprod.push_back(at(y, x) * at(y + 1, x));
    // Both diagonal orientations pooled, keeping the feature vector invariant
    // to horizontal flips.
    for (int y = 0; y + 1 < p; ++y)
        for (int x = 0; x + 1 < p; ++x) dprod.push_back(at(y, x) * at(y + 1, x + 1));
    for (int y = 0; y + 1 < p; ++y)
        for (int x = 1; x < p; ++x) dprod.push_back(at(y, x) * at(y + 1, x - 1));
    hvprod = hprod;
    hvprod.insert(hvprod.end(), vprod.begin(), vprod.end());

    push_aggd_features(hprod, feat);
    push_aggd_features(vprod, feat);
    push_aggd_features(dprod, feat);
    push_aggd_features(hvprod, feat);
    return feat;
}

std::vector<double> to_gray255(const Tensor& img) {
    if (img.ndim() != 4 || img.dim(0) != 1)
        throw std::invalid_argument("niqe: expected a single [1,C,H,W] image");
    Tensor y = img.dim(1) == 3 ? rgb_to_y(img) : img;
    std::vector<double> gray(static_cast<size_t>(y.dim(2)) * y.dim(3));
    for (size_t i = 0; i < gray.size(); ++i) gray[i] = 255.0 * y[static_cast<int64_t>(i)];
    return gray;
}

// Inverts a symmetric matrix with Gauss-Jordan elimination and partial
// pivoting; adds a small ridge and retries once if near-singular.
bool invert_matrix(std::vector<double> a, int n, std::vector<double>& inv) {
    inv.assign(static_cast<size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        double best = std::fabs(a[static_cast<size_t>(col) * n + col]);
        for (int r = col + 1; r < n; ++r) {
            double v = std::fabs(a[static_cast<size_t>(r) * n + col]);
            if (v > best) { best = v; pivot = r; }
        }
        if (best < 1e-14) return false;
        if (pivot != col) {
            for (int c = 0; c < n; ++c) {
                std::swap(a[static_cast<size_t>(pivot) * n + c], a[static_cast<size_t>(col) * n + c]);
                std::swap(inv[static_cast<size_t>(pivot) * n + c], inv[static_cast<size_t>(col) * n + c]);
            }
        }
        double d = a[static_cast<size_t>(col) * n + col];
        for (int c = 0; c < n; ++c) {
            a[static_cast<size_t>(col) * n + c] /= d;
            inv[static_cast<size_t>(col) * n + c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            double m = a[static_cast<size_t>(r) * n + col];
            if (m == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[static_cast<size_t>(r) * n + c] -= m * a[static_cast<size_t>(col) * n + c];
                inv[static_cast<size_t>(r) * n + c] -= m * inv[static_cast<size_t>(col) * n + c];
            }
        }
    }
    return true;
}

struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> cov;
    size_t count = 0;
};

FeatureStats feature_stats(const std::vector<std::vector<double>>& rows) {
    FeatureStats s;
    s.count = rows.size();
    s.mean.assign(kNiqeFeatureDim, 0.0);
    s.cov.assign(static_cast<size_t>(kNiqeFeatureDim) * kNiqeFeatureDim, 0.0);
    if (rows.empty()) return s;
    for (const auto& r : rows)
        for (int i = 0; i < kNiqeFeatureDim; ++i) s.mean[static_cast<size_t>(i)] += r[static_cast<size_t>(i)];
    for (auto& v : s.mean) v /= static_cast<double>(rows.size());
    if (rows.size() < 2) return s;
    for (const auto& r : rows)
        for (int i = 0; i < kNiqeFeatureDim; ++i)
            for (int j = 0; j < kNiqeFeatureDim; ++j)
                s.cov[static_cast<size_t>(i) * kNiqeFeatureDim + j] +=
                    (r[static_cast<size_t>(i)] - s.mean[static_cast<size_t>(i)]) *
                    (r[static_cast<size_t>(j)] - s.mean[static_cast<size_t>(j)]);
    for (auto& v : s.cov) v /= static_cast<double>(rows.size() - 1);
    return s;
}

}  // namespace

AggdFit fit_aggd(const std::vector<double>& samples) {
    double left_sq = 0.0, right_sq = 0.0, abs_sum = 0.0, sq_sum = 0.0;
    size_t nl = 0, nr = 0;
    for (double v : samples) {
        if (v < 0.0) { left_sq += v * v; ++nl; }
        else if (v > 0.0) { right_sq += v * v; ++nr; }
        abs_sum += std::fabs(v);
        sq_sum += v * v;
    }
    size_t n = samples.size();
    AggdFit fit;
    double left_std = nl ? std::sqrt(left_sq / static_cast<double>(nl)) : kEps;
    double right_std = nr ? std::sqrt(right_sq / static_cast<double>(nr)) : kEps;
    left_std = std::max(left_std, kEps);
    right_std = std::max(right_std, kEps);
    double mean_abs = n ? abs_sum / static_cast<double>(n) : 0.0;
    double mean_sq = n ? sq_sum / static_cast<double>(n) : 0.0;
    double gammahat = left_std / right_std;
    double rhat = mean_sq > kEps ? mean_abs * mean_abs / mean_sq : 1.0;
    double rhatnorm = rhat * (gammahat * gammahat * gammahat + 1.0) * (gammahat + 1.0) /
                      ((gammahat * gammahat + 1.0) * (gammahat * gammahat + 1.0));

    const AlphaGrid& grid = alpha_grid();
    size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < grid.alpha.size(); ++i) {
        double d = grid.ratio[i] - rhatnorm;
        d *= d;
        if (d < best_d) { best_d = d; best = i; }
    }
    fit.alpha = grid.alpha[best];
    fit.left_std = left_std;
    fit.right_std = right_std;
    double conv = std::exp(0.5 * (std::lgamma(1.0 / fit.alpha) - std::lgamma(3.0 / fit.alpha)));
    fit.beta_left = left_std * conv;
    fit.beta_right = right_std * conv;
    fit.mean_param = (fit.beta_right - fit.beta_left) *
                     std::exp(std::lgamma(2.0 / fit.alpha) - std::lgamma(1.0 / fit.alpha));
    return fit;
}

namespace {

std::vector<std::vector<double>> patch_features_one_orientation(const std::vector<double>& gray,
                                                                int h, int w, int patch_size,
                                                                double sharpness_threshold) {
    int py = h / patch_size, px = w / patch_size;
    if (py < 1 || px < 1) throw std::invalid_argument("niqe: image too small for one patch");

    // Center the patch grid so geometry commutes with horizontal flips.
    int crop_h = py * patch_size, crop_w = px * patch_size;
    int off_y = (h - crop_h) / 2, off_x = (w - crop_w) / 2;
    std::vector<double> cropped(static_cast<size_t>(crop_h) * crop_w);
    for (int y = 0; y < crop_h; ++y)
        for (int x = 0; x < crop_w; ++x)
            cropped[static_cast<size_t>(y) * crop_w + x] =
                gray[static_cast<size_t>(y + off_y) * w + x + off_x];

    MscnField scale1 = compute_mscn(cropped, crop_h, crop_w);

    // Half-resolution copy via the same antialiased resampler.
    Tensor t({1, 1, crop_h, crop_w});
    for (size_t i = 0; i < cropped.size(); ++i) t[static_cast<int64_t>(i)] = static_cast<float>(cropped[i]);
    Tensor half_t = bicubic_resize(t, ResampleSpec{0.5, true});
    std::vector<double> half(half_t.vec().begin(), half_t.vec().end());
    MscnField scale2 = compute_mscn(half, half_t.dim(2), half_t.dim(3));

    // Sharpness per patch at the full scale.
    std::vector<double> sharp(static_cast<size_t>(py) * px, 0.0);
    double peak = 0.0;
    for (int by = 0; by < py; ++by)
        for (int bx = 0; bx < px; ++bx) {
            double acc = 0.0;
            for (int y = 0; y < patch_size; ++y)
                for (int x = 0; x < patch_size; ++x)
                    acc += scale1.sigma[static_cast<size_t>(by * patch_size + y) * crop_w +
                                        bx * patch_size + x];
            sharp[static_cast<size_t>(by) * px + bx] = acc / (patch_size * patch_size);
            peak = std::max(peak, sharp[static_cast<size_t>(by) * px + bx]);
        }

    std::vector<std::vector<double>> rows;
    int p2 = patch_size / 2;
    for (int by = 0; by < py; ++by)
        for (int bx = 0; bx < px; ++bx) {
            if (peak > 0.0 && sharp[static_cast<size_t>(by) * px + bx] <= sharpness_threshold * peak)
                continue;
            std::vector<double> f = patch_features18(scale1, by * patch_size, bx * patch_size, patch_size);
            std::vector<double> f2 = patch_features18(scale2, by * p2, bx * p2, p2);
            f.insert(f.end(), f2.begin(), f2.end());
            rows.push_back(std::move(f));
        }
    if (rows.empty()) {
        // Degenerate selection (uniform sharpness); fall back to all patches.
        for (int by = 0; by < py; ++by)
            for (int bx = 0; bx < px; ++bx) {
                std::vector<double> f =
                    patch_features18(scale1, by * patch_size, bx * patch_size, patch_size);
                std::vector<double> f2 = patch_features18(scale2, by * p2, bx * p2, p2);
                f.insert(f.end(), f2.begin(), f2.end());
                rows.push_back(std::move(f));
            }
    }
    return rows;
}

}  // namespace

std::vector<std::vector<double>> niqe_patch_features(const Tensor& img, int patch_size,
                                                     double sharpness_threshold) {
    if (patch_size < 4 || patch_size % 2 != 0)
        throw std::invalid_argument("niqe: patch_size must be an even integer >= 4");
    std::vector<double> gray = to_gray255(img);
    int h = img.dim(2), w = img.dim(3);
    // Features are pooled over the image and its mirror, so the score is
    // flip-invariant for any image size, including odd crop margins.
    auto rows = patch_features_one_orientation(gray, h, w, patch_size, sharpness_threshold);
    std::vector<double> mirrored(gray.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            mirrored[static_cast<size_t>(y) * w + x] = gray[static_cast<size_t>(y) * w + (w - 1 - x)];
    auto rows_m = patch_features_one_orientation(mirrored, h, w, patch_size, sharpness_threshold);
    rows.insert(rows.end(), rows_m.begin(), rows_m.end());
    return rows;
}

double niqe_distance(const NiqeModel& model, const std::vector<double>& mean2,
                     const std::vector<double>& cov2) {
    const int n = kNiqeFeatureDim;
    std::vector<double> pooled(static_cast<size_t>(n) * n);
    for (size_t i = 0; i < pooled.size(); ++i) pooled[i] = 0.5 * (model.cov[i] + cov2[i]);
    std::vector<double> inv;
    if (!invert_matrix(pooled, n, inv)) {
        double trace = 0.0;
        for (int i = 0; i < n; ++i) trace += pooled[static_cast<size_t>(i) * n + i];
        double ridge = std::max(trace / n * 1e-8, 1e-12);
        for (int i = 0; i < n; ++i) pooled[static_cast<size_t>(i) * n + i] += ridge;
        if (!invert_matrix(pooled, n, inv))
            throw std::runtime_error("niqe: covariance matrix is singular");
    }
    std::vector<double> d(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) d[static_cast<size_t>(i)] = model.mean[static_cast<size_t>(i)] - mean2[static_cast<size_t>(i)];
    double q = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            q += d[static_cast<size_t>(i)] * inv[static_cast<size_t>(i) * n + j] * d[static_cast<size_t>(j)];
    return std::sqrt(std::max(q, 0.0));
}

double niqe(const Tensor& img, const NiqeModel& model) {
    model.validate();
    auto rows = niqe_patch_features(img, model.patch_size, model.sharpness_threshold);
    FeatureStats s = feature_stats(rows);
    return niqe_distance(model, s.mean, s.cov);
}

NiqeModel fit_niqe_model(const std::vector<Tensor>& images, int patch_size,
                         double sharpness_threshold) {
    std::vector<std::vector<double>> all;
    for (const auto& img : images) {
        auto rows = niqe_patch_features(img, patch_size, sharpness_threshold);
        for (auto& r : rows) all.push_back(std::move(r));
    }
    if (all.size() < 2) throw std::invalid_argument("fit_niqe: corpus yields fewer than 2 patches");
    FeatureStats s = feature_stats(all);
    NiqeModel m;
    m.patch_size = patch_size;
    m.sharpness_threshold = sharpness_threshold;
    m.mean = std::move(s.mean);
    m.cov = std::move(s.cov);
    return m;
}

void NiqeModel::validate() const {
    if (patch_size < 4 || patch_size % 2 != 0)
        throw std::invalid_argument("niqe model: bad patch_size");
    if (mean.size() != kNiqeFeatureDim ||
        cov.size() != static_cast<size_t>(kNiqeFeatureDim) * kNiqeFeatureDim)
        throw std::invalid_argument("niqe model: wrong feature dimensions");
    for (int i = 0; i < kNiqeFeatureDim; ++i)
        for (int j = 0; j < i; ++j) {
            double a = cov[static_cast<size_t>(i) * kNiqeFeatureDim + j];
            double b = cov[static_cast<size_t>(j) * kNiqeFeatureDim + i];
            if (std::fabs(a - b) > 1e-9 * (1.0 + std::fabs(a)))
                throw std::invalid_argument("niqe model: covariance is not symmetric");
        }
}

void NiqeModel::save_json(const std::string& path) const {
    nlohmann::json j;
    j["format_version"] = 1;
    j["patch_size"] = patch_size;
    j["sharpness_threshold"] = sharpness_threshold;
    j["mean"] = mean;
    j["cov"] = cov;
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("niqe model: cannot write " + path);
    f << j.dump(1);
}

NiqeModel NiqeModel::load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("niqe model: cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(f, nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("niqe model: corrupt JSON in " + path);
    NiqeModel m;
    m.patch_size = j.value("patch_size", 32);
    m.sharpness_threshold = j.value("sharpness_threshold", 0.75);
    m.mean = j.at("mean").get<std::vector<double>>();
    m.cov = j.at("cov").get<std::vector<double>>();
    m.validate();
    return m;
}

}  // namespace srtk
