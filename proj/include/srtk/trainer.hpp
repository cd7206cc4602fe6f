#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "srtk/adam.hpp"
#include "srtk/dataset.hpp"
#include "srtk/discriminator.hpp"
#include "srtk/feature_extractor.hpp"
#include "srtk/generator.hpp"
#include "srtk/losses.hpp"
#include "srtk/param_set.hpp"

namespace srtk {

enum class Stage { psnr, gan };

struct TrainSchedule {
    Stage stage = Stage::psnr;
    double lr0 = 2e-4;
    // psnr stage halves the rate every decay_every iterations; gan stage
    // halves it at each listed milestone.
    int64_t decay_every = 200000;
    std::vector<int64_t> decay_points = {50000, 100000, 200000, 300000};
    double decay_factor = 0.5;
    double beta1 = 0.9, beta2 = 0.999;
    int batch = 16;
    int hr_patch = 192;  // 128 for the gan stage
    int64_t total_iters = 300000;

    void validate() const;
};

// lr0 * decay_factor^(number of decay points at or before step).
double lr_schedule(int64_t step, const TrainSchedule& sched);

struct TrainOptions {
    std::string out_dir;              // checkpoints and the training log; empty disables files
    int64_t log_every = 100;
    int64_t ckpt_every = 1000;
    bool deterministic = true;        // kept in run metadata; execution is single-threaded either way
    bool augment = true;              // random flips and quarter turns on training patches
    std::ostream* log_stream = nullptr;
    // When set, a raised flag stops the loop at the next iteration boundary
    // after writing the state checkpoint (interrupt handling).
    const std::atomic<bool>* stop_flag = nullptr;

    // gan stage only
    LossWeights weights;
    FeatureMetric percep_metric = FeatureMetric::l1;
    FeatureTap tap{"conv5_4", true};
    FeatureExtractor* extractor = nullptr;
    double d_lr_scale = 1.0;          // discriminator rate relative to the generator's
    int d_steps_per_g = 1;
    DiscriminatorConfig disc;
};

struct LossRecord {
    int64_t iteration = 0;
    double total = 0.0, percep = 0.0, adv = 0.0, content = 0.0, d_loss = 0.0;
    double d_ra_real = 0.0, d_ra_fake = 0.0;  // batch-mean relativistic probabilities
};

// L1 pretraining driver. Owns the generator and optimizer; run() advances a
// chosen number of iterations so callers can split, checkpoint and resume.
class PsnrTrainer {
public:
    PsnrTrainer(const GeneratorConfig& cfg, const TrainSchedule& sched,
                const PairedImageDataset* dataset, uint64_t seed, const TrainOptions& opts);

    void run(int64_t iters);
    void run_to_end() { run(sched_.total_iters - iteration_); }

    int64_t iteration() const { return iteration_; }
    const std::deque<float>& loss_history() const { return loss_history_; }
    Generator& generator() { return gen_; }
    ParameterSet snapshot() const;  // stage tag "psnr"

    void save_state(const std::string& path) const;
    void load_state(const std::string& path);

private:
    void one_iteration();

    GeneratorConfig cfg_;
    TrainSchedule sched_;
    const PairedImageDataset* dataset_;
    TrainOptions opts_;
    uint64_t seed_ = 0;
    int64_t iteration_ = 0;
    Generator gen_;
    nn::Adam adam_;
    std::deque<float> loss_history_;
};

// Adversarial fine-tuning driver: per iteration one discriminator update on
// the relativistic loss, then one generator update on the composite loss.
class GanTrainer {
public:
    GanTrainer(const GeneratorConfig& cfg, const TrainSchedule& sched,
               const PairedImageDataset* dataset, const ParameterSet& pretrained, uint64_t seed,
               const TrainOptions& opts);

    void run(int64_t iters);
    void run_to_end() { run(sched_.total_iters - iteration_); }

    int64_t iteration() const { return iteration_; }
    const std::vector<LossRecord>& records() const { return records_; }
    Generator& generator() { return gen_; }
    Discriminator& discriminator() { return disc_; }
    ParameterSet snapshot_generator() const;      // stage tag "gan"
    ParameterSet snapshot_discriminator() const;  // stage tag "disc"

    void save_state(const std::string& path) const;
    void load_state(const std::string& path);

private:
    void one_iteration();

    GeneratorConfig cfg_;
    TrainSchedule sched_;
    const PairedImageDataset* dataset_;
    TrainOptions opts_;
    uint64_t seed_ = 0;
    int64_t iteration_ = 0;
    Generator gen_;
    Discriminator disc_;
    nn::Adam adam_g_, adam_d_;
    std::vector<LossRecord> records_;
    std::deque<float> loss_history_;
};

// Convenience wrappers: train to total_iters with periodic checkpoints,
// returning the final parameters. A non-finite loss aborts with
// TrainingDiverged; the last checkpoint on disk is left intact.
ParameterSet train_psnr_stage(const GeneratorConfig& cfg, const TrainSchedule& sched,
                              const PairedImageDataset& dataset, uint64_t seed,
                              const TrainOptions& opts);
std::pair<ParameterSet, ParameterSet> train_gan_stage(const GeneratorConfig& cfg,
                                                      const TrainSchedule& sched,
                                                      const PairedImageDataset& dataset,
                                                      const ParameterSet& pretrained, uint64_t seed,
                                                      const TrainOptions& opts);

}  // namespace srtk
