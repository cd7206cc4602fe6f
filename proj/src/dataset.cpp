#include "srtk/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "srtk/png_io.hpp"
#include "srtk/resample.hpp"

namespace fs = std::filesystem;

namespace srtk {

namespace {

Tensor crop4(const Tensor& t, int y0, int x0, int h, int w) {
    int n = t.dim(0), c = t.dim(1);
    Tensor out({n, c, h, w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    out.at4(ni, ci, y, x) = t.at4(ni, ci, y0 + y, x0 + x);
    return out;
}

// Crop HR to a multiple of scale so the derived LR pairs exactly.
Tensor mod_crop(const Tensor& img, int scale) {
    int h = img.dim(2) / scale * scale;
    int w = img.dim(3) / scale * scale;
    if (h == img.dim(2) && w == img.dim(3)) return img;
    return crop4(img, 0, 0, h, w);
}

}  // namespace

PatchPair crop_paired_patch(const Tensor& hr, const Tensor& lr, int hr_patch, int scale,
                            uint64_t rng_seed) {
    if (hr.ndim() != 4 || lr.ndim() != 4)
        throw std::invalid_argument("crop_paired_patch: expected [N,C,H,W] inputs");
    if (scale < 1) throw std::invalid_argument("crop_paired_patch: scale must be >= 1");
    if (hr_patch % scale != 0)
        throw std::invalid_argument("crop_paired_patch: hr_patch must be divisible by scale");
    if (hr.dim(2) != lr.dim(2) * scale || hr.dim(3) != lr.dim(3) * scale)
        throw std::invalid_argument("crop_paired_patch: hr dims must equal lr dims * scale");
    if (hr_patch > hr.dim(2) || hr_patch > hr.dim(3))
        throw std::invalid_argument("crop_paired_patch: patch larger than image");

    int lr_patch = hr_patch / scale;
    Rng rng(rng_seed, /*stream=*/7);
    int ly = static_cast<int>(rng.uniform_int(0, lr.dim(2) - lr_patch));
    int lx = static_cast<int>(rng.uniform_int(0, lr.dim(3) - lr_patch));
    PatchPair out;
    out.lr = crop4(lr, ly, lx, lr_patch, lr_patch);
    out.hr = crop4(hr, ly * scale, lx * scale, hr_patch, hr_patch);
    return out;
}

Tensor flip_horizontal(const Tensor& t) {
    int n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
    Tensor out({n, c, h, w});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x)
                    out.at4(ni, ci, y, x) = t.at4(ni, ci, y, w - 1 - x);
    return out;
}

Tensor rot90(const Tensor& t, int quarter_turns) {
    int q = ((quarter_turns % 4) + 4) % 4;
    if (q == 0) return t;
    int n = t.dim(0), c = t.dim(1), h = t.dim(2), w = t.dim(3);
    int oh = (q % 2 == 0) ? h : w;
    int ow = (q % 2 == 0) ? w : h;
    Tensor out({n, c, oh, ow});
    for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci)
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    // (y,x) -> rotated counterclockwise by q quarter turns
                    int ry, rx;
                    if (q == 1) { ry = w - 1 - x; rx = y; }
                    else if (q == 2) { ry = h - 1 - y; rx = w - 1 - x; }
                    else { ry = x; rx = h - 1 - y; }
                    out.at4(ni, ci, ry, rx) = t.at4(ni, ci, y, x);
                }
    return out;
}

PatchPair augment(const PatchPair& pair, bool flip, int rot_quarter) {
    if (rot_quarter < 0 || rot_quarter > 3)
        throw std::invalid_argument("augment: rot_quarter must be in {0,1,2,3}");
    PatchPair out = pair;
    if (flip) {
        out.hr = flip_horizontal(out.hr);
        out.lr = flip_horizontal(out.lr);
    }
    if (rot_quarter) {
        out.hr = rot90(out.hr, rot_quarter);
        out.lr = rot90(out.lr, rot_quarter);
    }
    return out;
}

std::vector<std::string> read_manifest(const std::string& manifest_path) {
    std::ifstream f(manifest_path);
    if (!f) throw std::runtime_error("manifest: cannot open " + manifest_path);
    fs::path base = fs::path(manifest_path).parent_path();
    std::vector<std::string> paths;
    std::string line;
    while (std::getline(f, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        fs::path p(line);
        paths.push_back(p.is_absolute() ? p.string() : (base / p).string());
    }
    if (paths.empty()) throw std::runtime_error("manifest: no image paths in " + manifest_path);
    return paths;
}

PairedImageDataset PairedImageDataset::load(const std::string& manifest_path, int scale,
                                            const std::string& lr_dir) {
    auto paths = read_manifest(manifest_path);
    PairedImageDataset ds;
    ds.scale_ = scale;
    for (const auto& p : paths) {
        Tensor hr = mod_crop(load_png(p), scale);
        Tensor lr;
        if (lr_dir.empty()) {
            lr = bicubic_resize(hr, ResampleSpec{1.0 / scale, /*antialias=*/true});
        } else {
            fs::path lp = fs::path(lr_dir) / fs::path(p).filename();
            lr = load_png(lp.string());
            if (lr.dim(2) * scale != hr.dim(2) || lr.dim(3) * scale != hr.dim(3))
                throw std::invalid_argument("dataset: LR/HR dimension mismatch for " + lp.string());
        }
        ds.hr_.push_back(std::move(hr));
        ds.lr_.push_back(std::move(lr));
        ds.names_.push_back(fs::path(p).filename().string());
    }
    return ds;
}

PairedImageDataset PairedImageDataset::from_images(std::vector<Tensor> hr_images,
                                                   std::vector<std::string> names, int scale) {
    PairedImageDataset ds;
    ds.scale_ = scale;
    for (size_t i = 0; i < hr_images.size(); ++i) {
        Tensor hr = mod_crop(hr_images[i], scale);
        ds.lr_.push_back(bicubic_resize(hr, ResampleSpec{1.0 / scale, true}));
        ds.hr_.push_back(std::move(hr));
        ds.names_.push_back(i < names.size() ? names[i] : "image_" + std::to_string(i));
    }
    return ds;
}

PatchPair PairedImageDataset::sample_batch(int batch, int hr_patch, uint64_t seed,
                                           bool do_augment) const {
    if (hr_.empty()) throw std::invalid_argument("dataset: empty");
    if (batch < 1) throw std::invalid_argument("dataset: batch must be >= 1");
    int lr_patch = hr_patch / scale_;
    Tensor hr_out({batch, 3, hr_patch, hr_patch});
    Tensor lr_out({batch, 3, lr_patch, lr_patch});
    Rng rng(seed, /*stream=*/11);
    for (int b = 0; b < batch; ++b) {
        size_t img = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(hr_.size()) - 1));
        uint64_t crop_seed = rng.next_u64();
        PatchPair p = crop_paired_patch(hr_[img], lr_[img], hr_patch, scale_, crop_seed);
        bool flip = rng.uniform_int(0, 1) == 1;
        int rot = static_cast<int>(rng.uniform_int(0, 3));
        if (do_augment) p = augment(p, flip, rot);
        for (int c = 0; c < 3; ++c) {
            for (int y = 0; y < hr_patch; ++y)
                for (int x = 0; x < hr_patch; ++x)
                    hr_out.at4(b, c, y, x) = p.hr.at4(0, c, y, x);
            for (int y = 0; y < lr_patch; ++y)
                for (int x = 0; x < lr_patch; ++x)
                    lr_out.at4(b, c, y, x) = p.lr.at4(0, c, y, x);
        }
    }
    return PatchPair{std::move(hr_out), std::move(lr_out)};
}

}  // namespace srtk
