#pragma once

#include <string>
#include <utility>
#include <vector>

#include "srtk/rng.hpp"
#include "srtk/tensor.hpp"

namespace srtk {

struct PatchPair {
    Tensor hr;  // [N,3,p,p]
    Tensor lr;  // [N,3,p/scale,p/scale]
};

// Aligned random crop from an HR/LR pair. Origins are drawn uniformly over
// valid positions with hr_origin = lr_origin * scale held exactly; the same
// seed always yields the same crop.
PatchPair crop_paired_patch(const Tensor& hr, const Tensor& lr, int hr_patch, int scale,
                            uint64_t rng_seed);

// Horizontal flip plus quarter-turn rotation, applied identically to both
// members. Pure pixel permutation. rot_quarter must be in {0,1,2,3}.
PatchPair augment(const PatchPair& pair, bool flip, int rot_quarter);

Tensor flip_horizontal(const Tensor& t);
Tensor rot90(const Tensor& t, int quarter_turns);

// Reads a dataset manifest: one HR image path per line, absolute or relative
// to the manifest's directory. Blank lines are skipped.
std::vector<std::string> read_manifest(const std::string& manifest_path);

// In-memory paired dataset. HR images are mod-cropped to a multiple of the
// scale; LR images are derived with the antialiased bicubic kernel unless
// lr_dir pairs files by identical basename.
class PairedImageDataset {
public:
    static PairedImageDataset load(const std::string& manifest_path, int scale,
                                   const std::string& lr_dir = "");
    static PairedImageDataset from_images(std::vector<Tensor> hr_images,
                                          std::vector<std::string> names, int scale);

    size_t size() const { return hr_.size(); }
    int scale() const { return scale_; }
    const Tensor& hr(size_t i) const { return hr_[i]; }
    const Tensor& lr(size_t i) const { return lr_[i]; }
    const std::string& name(size_t i) const { return names_[i]; }

    // Draws a training batch: image choice, crop origin and augmentation all
    // come from the seed, so a (seed, iteration) pair fixes the batch.
    PatchPair sample_batch(int batch, int hr_patch, uint64_t seed, bool augment = true) const;

private:
    std::vector<Tensor> hr_, lr_;
    std::vector<std::string> names_;
    int scale_ = 4;
};

}  // namespace srtk
