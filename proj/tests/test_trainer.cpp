#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "srtk/config.hpp"
#include "srtk/errors.hpp"
#include "srtk/trainer.hpp"
#include "testutil.hpp"

using namespace srtk;

namespace {

GeneratorConfig tiny_gen() {
    GeneratorConfig cfg;
    cfg.block_type = GeneratorConfig::BlockType::residual;
    cfg.num_blocks = 2;
    cfg.base_channels = 16;
    return cfg;
}

TrainSchedule psnr_sched(int64_t iters, int batch = 2, int hr_patch = 64) {
    TrainSchedule s;
    s.stage = Stage::psnr;
    s.lr0 = 2e-4;
    s.batch = batch;
    s.hr_patch = hr_patch;
    s.total_iters = iters;
    return s;
}

TrainSchedule gan_sched(int64_t iters) {
    TrainSchedule s;
    s.stage = Stage::gan;
    s.lr0 = 1e-4;
    s.batch = 2;
    s.hr_patch = 64;
    s.total_iters = iters;
    return s;
}

PairedImageDataset tiny_dataset(int n_images = 2, int size = 96) {
    std::vector<Tensor> imgs;
    std::vector<std::string> names;
    for (int i = 0; i < n_images; ++i) {
        imgs.push_back(test::synth_image(static_cast<uint64_t>(1000 + i), size, size));
        names.push_back("img" + std::to_string(i) + ".png");
    }
    return PairedImageDataset::from_images(std::move(imgs), std::move(names), 4);
}

TrainOptions quiet_opts() {
    TrainOptions o;
    o.log_every = 0;
    o.ckpt_every = 0;
    return o;
}

uint64_t trainable_hash(std::vector<nn::Param> params) {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, size_t n) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (auto& p : params) {
        if (!p.trainable) continue;
        mix(p.name.data(), p.name.size());
        mix(p.value->data(), static_cast<size_t>(p.value->numel()) * sizeof(float));
    }
    return h;
}

// Feature provider with identically zero features: the perceptual term and
// its gradient vanish, isolating the adversarial path in tests.
class ZeroExtractor : public FeatureExtractor {
public:
    Tensor extract(const Tensor& img, const FeatureTap&) override {
        return Tensor({img.dim(0), 1, 4, 4});
    }
    Tensor forward_train(const Tensor& img, const FeatureTap&) override {
        shape_ = img.shape();
        return Tensor({img.dim(0), 1, 4, 4});
    }
    Tensor backward(const Tensor&) override { return Tensor(shape_); }
    std::string describe() const override { return "zero"; }

private:
    std::vector<int> shape_;
};

}  // namespace

TEST_CASE("learning-rate schedule closed form") {
    TrainSchedule p;
    p.stage = Stage::psnr;
    p.lr0 = 2e-4;
    p.decay_every = 200000;
    CHECK(lr_schedule(0, p) == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK(lr_schedule(199999, p) == doctest::Approx(2e-4).epsilon(1e-12));
    CHECK(lr_schedule(200000, p) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(lr_schedule(600000, p) == doctest::Approx(2.5e-5).epsilon(1e-12));

    TrainSchedule g;
    g.stage = Stage::gan;
    g.lr0 = 1e-4;
    g.decay_points = {50000, 100000, 200000, 300000};
    CHECK(lr_schedule(0, g) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(lr_schedule(49999, g) == doctest::Approx(1e-4).epsilon(1e-12));
    CHECK(lr_schedule(50000, g) == doctest::Approx(5e-5).epsilon(1e-12));
    CHECK(lr_schedule(150000, g) == doctest::Approx(2.5e-5).epsilon(1e-12));
    CHECK(lr_schedule(300000, g) == doctest::Approx(6.25e-6).epsilon(1e-12));
    CHECK(lr_schedule(999999, g) == doctest::Approx(6.25e-6).epsilon(1e-12));
    CHECK_THROWS_AS(lr_schedule(-1, g), std::invalid_argument);

    TrainSchedule bad = g;
    bad.decay_points = {100, 100};
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = g;
    bad.lr0 = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("zero-iteration run returns the initialized parameters") {
    auto ds = tiny_dataset();
    PsnrTrainer a(tiny_gen(), psnr_sched(0), &ds, 7, quiet_opts());
    PsnrTrainer b(tiny_gen(), psnr_sched(0), &ds, 7, quiet_opts());
    a.run_to_end();
    CHECK(a.iteration() == 0);
    CHECK(param_set_hash(a.snapshot()) == param_set_hash(b.snapshot()));
    CHECK(a.snapshot().stage == "psnr");
}

TEST_CASE("same seed gives bit-identical training") {
    auto ds = tiny_dataset();
    PsnrTrainer a(tiny_gen(), psnr_sched(10), &ds, 42, quiet_opts());
    PsnrTrainer b(tiny_gen(), psnr_sched(10), &ds, 42, quiet_opts());
    a.run_to_end();
    b.run_to_end();
    CHECK(param_set_hash(a.snapshot()) == param_set_hash(b.snapshot()));

    PsnrTrainer c(tiny_gen(), psnr_sched(10), &ds, 43, quiet_opts());
    c.run_to_end();
    CHECK(param_set_hash(a.snapshot()) != param_set_hash(c.snapshot()));
}

TEST_CASE("psnr split/restore reproduces the straight run bitwise") {
    std::string dir = test::scratch_dir("resume_psnr");
    auto ds = tiny_dataset();

    PsnrTrainer full(tiny_gen(), psnr_sched(12), &ds, 5, quiet_opts());
    full.run_to_end();

    PsnrTrainer part(tiny_gen(), psnr_sched(12), &ds, 5, quiet_opts());
    part.run(5);
    part.save_state(dir + "/state.ckpt");

    PsnrTrainer resumed(tiny_gen(), psnr_sched(12), &ds, 5, quiet_opts());
    resumed.load_state(dir + "/state.ckpt");
    CHECK(resumed.iteration() == 5);
    resumed.run(7);

    CHECK(param_set_hash(resumed.snapshot()) == param_set_hash(full.snapshot()));
    CHECK(resumed.loss_history().size() == full.loss_history().size());
    for (size_t i = 0; i < full.loss_history().size(); ++i)
        CHECK(resumed.loss_history()[i] == full.loss_history()[i]);
}

TEST_CASE("training loss decreases over the first checkpoint windows") {
    auto ds = tiny_dataset(1, 96);
    PsnrTrainer t(tiny_gen(), psnr_sched(120, 4, 64), &ds, 11, quiet_opts());
    t.run_to_end();
    const auto& hist = t.loss_history();
    REQUIRE(hist.size() == 120);
    double w[3] = {0, 0, 0};
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < 40; ++i) w[k] += hist[static_cast<size_t>(40 * k + i)] / 40.0;
    CHECK(w[1] < w[0]);
    CHECK(w[2] < w[1]);
}

TEST_CASE("divergence aborts with an exception") {
    auto ds = tiny_dataset();
    TrainSchedule s = psnr_sched(50);
    s.lr0 = 1e12;  // guaranteed blow-up
    PsnrTrainer t(tiny_gen(), s, &ds, 3, quiet_opts());
    CHECK_THROWS_AS(t.run_to_end(), TrainingDiverged);
}

TEST_CASE("gan stage requires a psnr checkpoint and an extractor") {
    auto ds = tiny_dataset();
    Generator g(tiny_gen());
    g.init(1);
    ParameterSet wrong = g.export_params("init", 0);
    test::TinyExtractor ext;
    TrainOptions opts = quiet_opts();
    opts.extractor = &ext;
    opts.tap = FeatureTap{"f2", true};
    opts.disc.base_channels = 16;
    CHECK_THROWS_AS(GanTrainer(tiny_gen(), gan_sched(1), &ds, wrong, 2, opts),
                    std::invalid_argument);

    ParameterSet right = g.export_params("psnr", 0);
    TrainOptions no_ext = quiet_opts();
    no_ext.disc.base_channels = 16;
    CHECK_THROWS_AS(GanTrainer(tiny_gen(), gan_sched(1), &ds, right, 2, no_ext), ConfigError);
}

TEST_CASE("gan micro-run: losses finite, relativistic means inside (0,1)") {
    auto ds = tiny_dataset();
    Generator g(tiny_gen());
    g.init(21);
    ParameterSet pretrained = g.export_params("psnr", 0);

    test::TinyExtractor ext;
    TrainOptions opts = quiet_opts();
    opts.extractor = &ext;
    opts.tap = FeatureTap{"f2", true};
    opts.disc.base_channels = 16;
    GanTrainer t(tiny_gen(), gan_sched(6), &ds, pretrained, 22, opts);
    t.run_to_end();
    REQUIRE(t.records().size() == 6);
    for (const auto& r : t.records()) {
        CHECK(std::isfinite(r.total));
        CHECK(std::isfinite(r.d_loss));
        CHECK(std::isfinite(r.percep));
        CHECK(std::isfinite(r.adv));
        CHECK(std::isfinite(r.content));
        CHECK(r.d_ra_real > 0.0);
        CHECK(r.d_ra_real < 1.0);
        CHECK(r.d_ra_fake > 0.0);
        CHECK(r.d_ra_fake < 1.0);
    }
    CHECK(t.snapshot_generator().stage == "gan");
    CHECK(t.snapshot_discriminator().stage == "disc");
}

TEST_CASE("alternation: a frozen discriminator stays bit-identical") {
    // lr_D = 0: its own step is a no-op, so any change would have to leak
    // from the generator update.
    auto ds = tiny_dataset();
    Generator g(tiny_gen());
    g.init(31);
    ParameterSet pretrained = g.export_params("psnr", 0);
    test::TinyExtractor ext;
    TrainOptions opts = quiet_opts();
    opts.extractor = &ext;
    opts.tap = FeatureTap{"f2", true};
    opts.disc.base_channels = 16;
    opts.d_lr_scale = 0.0;
    GanTrainer t(tiny_gen(), gan_sched(4), &ds, pretrained, 32, opts);
    uint64_t before = trainable_hash(t.discriminator().parameters());
    uint64_t g_before = trainable_hash(t.generator().parameters());
    t.run_to_end();
    CHECK(trainable_hash(t.discriminator().parameters()) == before);
    CHECK(trainable_hash(t.generator().parameters()) != g_before);
    // Adversarial component is still computed and logged.
    for (const auto& r : t.records()) CHECK(std::isfinite(r.adv));
}

TEST_CASE("alternation: discriminator gradients never reach the generator") {
    // All generator loss components are zero (zero feature extractor,
    // lambda = eta = 0), so the generator must stay bit-identical while the
    // discriminator trains on it.
    auto ds = tiny_dataset();
    Generator g(tiny_gen());
    g.init(41);
    ParameterSet pretrained = g.export_params("psnr", 0);
    ZeroExtractor ext;
    TrainOptions opts = quiet_opts();
    opts.extractor = &ext;
    opts.weights = LossWeights{0.0, 0.0};
    opts.disc.base_channels = 16;
    GanTrainer t(tiny_gen(), gan_sched(4), &ds, pretrained, 42, opts);
    uint64_t g_before = trainable_hash(t.generator().parameters());
    uint64_t d_before = trainable_hash(t.discriminator().parameters());
    t.run_to_end();
    CHECK(trainable_hash(t.generator().parameters()) == g_before);
    CHECK(trainable_hash(t.discriminator().parameters()) != d_before);
}

TEST_CASE("gan split/restore reproduces the straight run bitwise") {
    std::string dir = test::scratch_dir("resume_gan");
    auto ds = tiny_dataset();
    Generator g(tiny_gen());
    g.init(51);
    ParameterSet pretrained = g.export_params("psnr", 0);
    test::TinyExtractor ext;
    TrainOptions opts = quiet_opts();
    opts.extractor = &ext;
    opts.tap = FeatureTap{"f2", true};
    opts.disc.base_channels = 16;

    GanTrainer full(tiny_gen(), gan_sched(6), &ds, pretrained, 52, opts);
    full.run_to_end();

    GanTrainer part(tiny_gen(), gan_sched(6), &ds, pretrained, 52, opts);
    part.run(3);
    part.save_state(dir + "/state.ckpt");
    GanTrainer resumed(tiny_gen(), gan_sched(6), &ds, pretrained, 52, opts);
    resumed.load_state(dir + "/state.ckpt");
    resumed.run(3);

    CHECK(param_set_hash(resumed.snapshot_generator()) == param_set_hash(full.snapshot_generator()));
    CHECK(param_set_hash(resumed.snapshot_discriminator()) ==
          param_set_hash(full.snapshot_discriminator()));
}

TEST_CASE("config file parsing and validation errors") {
    std::string text = R"(
# desk-scale run
[data]
manifest = "train.txt"
scale = 4

[generator]
block_type = "rrdb"
num_blocks = 4
base_channels = 32
growth_channels = 16

[losses]
lambda_adv = 5e-3
eta_content = 1e-2

[schedule]
batch = 16
psnr_lr0 = 2e-4
psnr_decay_every = 2e5
gan_lr0 = 1e-4
gan_decay_points = [50000, 100000, 200000, 300000]
psnr_hr_patch = 192
gan_hr_patch = 128

[logging]
out_dir = "runs/x"
)";
    TrainConfig cfg = TrainConfig::from_file(ConfigFile::parse_string(text));
    CHECK(cfg.manifest == "train.txt");
    CHECK(cfg.generator.num_blocks == 4);
    CHECK(cfg.weights.lambda_adv == doctest::Approx(5e-3));
    CHECK(cfg.weights.eta_content == doctest::Approx(1e-2));
    CHECK(cfg.psnr_schedule.lr0 == doctest::Approx(2e-4));
    CHECK(cfg.psnr_schedule.decay_every == 200000);
    CHECK(cfg.gan_schedule.decay_points == std::vector<int64_t>{50000, 100000, 200000, 300000});
    CHECK(cfg.psnr_schedule.hr_patch == 192);
    CHECK(cfg.gan_schedule.hr_patch == 128);
    CHECK(cfg.psnr_schedule.batch == 16);

    // Field-path errors.
    try {
        TrainConfig::from_file(ConfigFile::parse_string("[data]\nscale = 4\n"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("data.manifest") != std::string::npos);
    }
    CHECK_THROWS_AS(TrainConfig::from_file(ConfigFile::parse_string(
                        "[data]\nmanifest = \"m\"\n[schedule]\nbatch = nope\n")),
                    ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_string("[unterminated\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_string("keyval\n"), ConfigError);
    CHECK_THROWS_AS(ConfigFile::parse_file("/nonexistent/x.toml"), ConfigError);
}
