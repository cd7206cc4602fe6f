#include "srtk/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "srtk/color.hpp"

namespace srtk {

namespace {

void require_pair(const Tensor& sr, const Tensor& hr, const char* who) {
    if (!sr.same_shape(hr))
        throw std::invalid_argument(std::string(who) + ": shape mismatch " + sr.shape_str() + " vs " +
                                    hr.shape_str());
    if (sr.ndim() != 4) throw std::invalid_argument(std::string(who) + ": expected [N,C,H,W]");
}

}  // namespace

double psnr_y(const Tensor& sr, const Tensor& hr, int border_crop) {
    require_pair(sr, hr, "psnr_y");
    if (border_crop < 0) throw std::invalid_argument("psnr_y: border_crop must be >= 0");
    Tensor ys = sr.dim(1) == 3 ? rgb_to_y(sr) : sr;
    Tensor yh = hr.dim(1) == 3 ? rgb_to_y(hr) : hr;
    int h = ys.dim(2), w = ys.dim(3);
    if (h - 2 * border_crop <= 0 || w - 2 * border_crop <= 0)
        throw std::invalid_argument("psnr_y: border_crop leaves no pixels");
    double acc = 0.0;
    int64_t count = 0;
    for (int n = 0; n < ys.dim(0); ++n)
        for (int y = border_crop; y < h - border_crop; ++y)
            for (int x = border_crop; x < w - border_crop; ++x) {
                double d = static_cast<double>(ys.at4(n, 0, y, x)) - yh.at4(n, 0, y, x);
                acc += d * d;
                ++count;
            }
    double mse = acc / static_cast<double>(count);
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

std::vector<double> gaussian_window_1d(int size, double sigma) {
    std::vector<double> w(static_cast<size_t>(size));
    double sum = 0.0;
    int half = size / 2;
    for (int i = 0; i < size; ++i) {
        double d = i - half;
        w[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
        sum += w[static_cast<size_t>(i)];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Separable valid-mode filtering of an [H,W] double image.
std::vector<double> filter_valid(const std::vector<double>& img, int h, int w,
                                 const std::vector<double>& win, int* oh, int* ow) {
    int k = static_cast<int>(win.size());
    int vh = h - k + 1, vw = w - k + 1;
    std::vector<double> tmp(static_cast<size_t>(vh) * w, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < w; ++x) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += win[static_cast<size_t>(j)] * img[static_cast<size_t>(y + j) * w + x];
            tmp[static_cast<size_t>(y) * w + x] = acc;
        }
    std::vector<double> out(static_cast<size_t>(vh) * vw, 0.0);
    for (int y = 0; y < vh; ++y)
        for (int x = 0; x < vw; ++x) {
            double acc = 0.0;
            for (int j = 0; j < k; ++j) acc += win[static_cast<size_t>(j)] * tmp[static_cast<size_t>(y) * w + x + j];
            out[static_cast<size_t>(y) * vw + x] = acc;
        }
    *oh = vh;
    *ow = vw;
    return out;
}

}  // namespace

double ssim_y(const Tensor& sr, const Tensor& hr) {
    require_pair(sr, hr, "ssim_y");
    constexpr int kWin = 11;
    constexpr double kSigma = 1.5;
    constexpr double kC1 = 0.01 * 0.01, kC2 = 0.03 * 0.03;
    Tensor ys = sr.dim(1) == 3 ? rgb_to_y(sr) : sr;
    Tensor yh = hr.dim(1) == 3 ? rgb_to_y(hr) : hr;
    int h = ys.dim(2), w = ys.dim(3);
    if (h < kWin || w < kWin) throw std::invalid_argument("ssim_y: image smaller than the 11x11 window");

    auto win = gaussian_window_1d(kWin, kSigma);
    double total = 0.0;
    int64_t count = 0;
    for (int n = 0; n < ys.dim(0); ++n) {
        std::vector<double> a(static_cast<size_t>(h) * w), b(static_cast<size_t>(h) * w);
        std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
        for (int64_t i = 0; i < static_cast<int64_t>(h) * w; ++i) {
            a[static_cast<size_t>(i)] = ys[n * static_cast<int64_t>(h) * w + i];
            b[static_cast<size_t>(i)] = yh[n * static_cast<int64_t>(h) * w + i];
            aa[static_cast<size_t>(i)] = a[static_cast<size_t>(i)] * a[static_cast<size_t>(i)];
            bb[static_cast<size_t>(i)] = b[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
            ab[static_cast<size_t>(i)] = a[static_cast<size_t>(i)] * b[static_cast<size_t>(i)];
        }
        int vh, vw;
        auto mu_a = filter_valid(a, h, w, win, &vh, &vw);
        auto mu_b = filter_valid(b, h, w, win, &vh, &vw);
        auto m_aa = filter_valid(aa, h, w, win, &vh, &vw);
        auto m_bb = filter_valid(bb, h, w, win, &vh, &vw);
        auto m_ab = filter_valid(ab, h, w, win, &vh, &vw);
        for (size_t i = 0; i < mu_a.size(); ++i) {
            double ma = mu_a[i], mb = mu_b[i];
            double va = m_aa[i] - ma * ma;
            double vb = m_bb[i] - mb * mb;
            double cab = m_ab[i] - ma * mb;
            double num = (2.0 * ma * mb + kC1) * (2.0 * cab + kC2);
            double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
            total += num / den;
            ++count;
        }
    }
    return total / static_cast<double>(count);
}

double perceptual_index(double ma_score, double niqe_score) {
    return 0.5 * ((10.0 - ma_score) + niqe_score);
}

ImageQuality QualityReport::corpus_mean() const {
    ImageQuality m;
    m.name = "mean";
    if (rows.empty()) return m;
    double pi_sum = 0.0;
    int64_t pi_count = 0;
    for (const auto& r : rows) {
        m.psnr_y += r.psnr_y;
        m.ssim_y += r.ssim_y;
        m.niqe += r.niqe;
        if (!std::isnan(r.perceptual_index)) {
            pi_sum += r.perceptual_index;
            ++pi_count;
        }
    }
    double n = static_cast<double>(rows.size());
    m.psnr_y /= n;
    m.ssim_y /= n;
    m.niqe /= n;
    m.perceptual_index = pi_count == static_cast<int64_t>(rows.size())
                             ? pi_sum / n
                             : std::numeric_limits<double>::quiet_NaN();
    return m;
}

void QualityReport::sort_rows() {
    std::sort(rows.begin(), rows.end(),
              [](const ImageQuality& a, const ImageQuality& b) { return a.name < b.name; });
}

namespace {

std::string field(double v) {
    if (std::isnan(v)) return "";
    if (std::isinf(v)) return "inf";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.8f", v);
    return buf;
}

double parse_field(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    return std::stod(s);
}

}  // namespace

std::string QualityReport::to_csv() const {
    std::ostringstream os;
    os << "image,psnr_y,ssim_y,niqe,perceptual_index\n";
    for (const auto& r : rows) {
        os << r.name << "," << field(r.psnr_y) << "," << field(r.ssim_y) << "," << field(r.niqe)
           << "," << field(r.perceptual_index) << "\n";
    }
    ImageQuality m = corpus_mean();
    os << m.name << "," << field(m.psnr_y) << "," << field(m.ssim_y) << "," << field(m.niqe) << ","
       << field(m.perceptual_index) << "\n";
    return os.str();
}

void QualityReport::write_csv(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("report: cannot write " + path);
    f << to_csv();
}

QualityReport QualityReport::read_csv(const std::string& path, ImageQuality* stored_mean) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("report: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line.rfind("image,", 0) != 0)
        throw std::runtime_error("report: bad CSV header in " + path);
    QualityReport rep;
    std::vector<ImageQuality> all;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string name, p, s, q, pi;
        std::getline(ls, name, ',');
        std::getline(ls, p, ',');
        std::getline(ls, s, ',');
        std::getline(ls, q, ',');
        std::getline(ls, pi, ',');
        ImageQuality row;
        row.name = name;
        row.psnr_y = parse_field(p);
        row.ssim_y = parse_field(s);
        row.niqe = parse_field(q);
        row.perceptual_index = parse_field(pi);
        all.push_back(std::move(row));
    }
    if (all.empty()) throw std::runtime_error("report: empty CSV " + path);
    if (all.back().name == "mean") {
        if (stored_mean) *stored_mean = all.back();
        all.pop_back();
    } else if (stored_mean) {
        throw std::runtime_error("report: missing trailing mean row in " + path);
    }
    rep.rows = std::move(all);
    return rep;
}

}  // namespace srtk
