#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "srtk/generator.hpp"
#include "srtk/interpolate.hpp"
#include "srtk/metrics.hpp"
#include "srtk/resample.hpp"
#include "testutil.hpp"

using namespace srtk;

namespace {

GeneratorConfig tiny_cfg() {
    GeneratorConfig cfg;
    cfg.block_type = GeneratorConfig::BlockType::rrdb;
    cfg.num_blocks = 2;
    cfg.base_channels = 16;
    cfg.growth_channels = 8;
    return cfg;
}

ParameterSet params_for_seed(uint64_t seed, const std::string& stage) {
    Generator g(tiny_cfg());
    g.init(seed);
    return g.export_params(stage, 0);
}

double l2_residual_to_lr(const Tensor& sr, const Tensor& lr) {
    Tensor down = bicubic_resize(sr, ResampleSpec{0.25, true});
    double acc = 0.0;
    for (int64_t i = 0; i < down.numel(); ++i) {
        double d = double(down[i]) - lr[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("parameter interpolation endpoints are bitwise exact") {
    ParameterSet a = params_for_seed(1, "psnr");
    ParameterSet b = params_for_seed(2, "gan");
    ParameterSet at0 = interpolate_parameters(a, b, 0.0);
    ParameterSet at1 = interpolate_parameters(a, b, 1.0);
    for (size_t i = 0; i < a.entries.size(); ++i) {
        CHECK(at0.entries[i].value.vec() == a.entries[i].value.vec());
        CHECK(at1.entries[i].value.vec() == b.entries[i].value.vec());
    }
    CHECK(at0.stage.rfind("interp", 0) == 0);
}

TEST_CASE("interpolation commutes with checkpoint save/load") {
    std::string dir = test::scratch_dir("interp_ckpt");
    ParameterSet a = params_for_seed(3, "psnr");
    ParameterSet b = params_for_seed(4, "gan");
    ParameterSet mix = interpolate_parameters(a, b, 0.4);
    save_param_set(dir + "/m.ckpt", mix);
    ParameterSet back = load_param_set(dir + "/m.ckpt");
    CHECK(param_set_hash(back) == param_set_hash(mix));
}

TEST_CASE("affine midpoint on single-entry sets") {
    ParameterSet a, b;
    a.add("w", Tensor({1}, 1.0f));
    b.add("w", Tensor({1}, 3.0f));
    ParameterSet mid = interpolate_parameters(a, b, 0.5);
    CHECK(mid.entries[0].value[0] == doctest::Approx(2.0f));
}

TEST_CASE("interpolation mismatch errors name the offender") {
    ParameterSet a, b;
    a.add("conv.w", Tensor({2}, 1.0f));
    b.add("conv.b", Tensor({2}, 1.0f));
    try {
        interpolate_parameters(a, b, 0.5);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("conv.w") != std::string::npos);
    }
    ParameterSet c;
    c.add("conv.w", Tensor({3}, 1.0f));
    CHECK_THROWS_AS(interpolate_parameters(a, c, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(interpolate_parameters(a, a, 1.5), std::invalid_argument);
}

TEST_CASE("image interpolation") {
    Tensor a({1, 3, 4, 4}, 0.0f), b({1, 3, 4, 4}, 1.0f);
    Tensor at0 = interpolate_images(a, b, 0.0);
    CHECK(at0.vec() == a.vec());
    Tensor mid = interpolate_images(a, b, 0.5);
    for (int64_t i = 0; i < mid.numel(); ++i) CHECK(mid[i] == doctest::Approx(0.5f));
    CHECK_THROWS_AS(interpolate_images(a, Tensor({1, 3, 2, 2}), 0.5), std::invalid_argument);

    // Sweep protocol: alpha from 0 to 1 with step 0.2 gives six frames.
    int frames = 0;
    for (int i = 0; i <= 5; ++i) {
        Tensor f = interpolate_images(a, b, i * 0.2);
        CHECK(f[0] == doctest::Approx(float(i) * 0.2f));
        ++frames;
    }
    CHECK(frames == 6);
}

TEST_CASE("interpolated generator output is continuous in alpha") {
    ParameterSet a = params_for_seed(5, "psnr");
    ParameterSet b = params_for_seed(6, "gan");
    Tensor lr = test::synth_image(7, 16, 16);
    Generator gen(tiny_cfg());

    std::vector<Tensor> outs;
    std::vector<double> alphas;
    for (int i = 0; i <= 10; ++i) alphas.push_back(i * 0.1);
    for (double al : alphas) {
        gen.import_params(interpolate_parameters(a, b, al));
        Tensor out = gen.forward(lr, false);
        for (float v : out.vec()) CHECK(std::isfinite(v));
        outs.push_back(std::move(out));
    }
    // Fit an empirical Lipschitz bound on the first half of the grid and
    // require the rest to respect it with margin.
    auto delta = [&](size_t i) {
        double m = 0.0;
        for (int64_t j = 0; j < outs[i].numel(); ++j)
            m = std::max(m, std::fabs(double(outs[i + 1][j]) - outs[i][j]));
        return m;
    };
    double lip = 0.0;
    for (size_t i = 0; i + 1 < outs.size(); ++i) lip = std::max(lip, delta(i) / 0.1);
    for (size_t i = 0; i + 1 < outs.size(); ++i) CHECK(delta(i) <= 2.0 * lip * 0.1 + 1e-9);
    CHECK(lip > 0.0);  // the two models genuinely differ
}

TEST_CASE("parameter and image interpolation are different operators") {
    // Two hand-built pass-through models that differ only in the sign of the
    // shallow conv. Blending parameters zeroes the shallow conv (output 0),
    // while blending the emitted images keeps half the signal.
    GeneratorConfig cfg;
    cfg.block_type = GeneratorConfig::BlockType::residual;
    cfg.num_blocks = 1;
    cfg.base_channels = 4;
    Generator gen(cfg);
    auto zero_and_tap = [&](float first_sign) {
        for (auto& p : gen.parameters())
            std::fill(p.value->vec().begin(), p.value->vec().end(), 0.0f);
        for (auto& p : gen.parameters()) {
            if (p.name != "conv_first.weight" && p.name != "upconv.0.weight" &&
                p.name != "upconv.1.weight" && p.name != "hr_conv.weight" &&
                p.name != "conv_last.weight")
                continue;
            Tensor& w = *p.value;
            float v = p.name == "conv_first.weight" ? first_sign : 1.0f;
            for (int o = 0; o < std::min(w.dim(0), w.dim(1)); ++o) w.at4(o, o, 1, 1) = v;
        }
    };
    Tensor lr = test::synth_image(10, 16, 16);
    zero_and_tap(1.0f);
    ParameterSet a = gen.export_params("psnr", 0);
    Tensor out_a = gen.infer(lr);
    zero_and_tap(-1.0f);
    ParameterSet b = gen.export_params("gan", 0);
    Tensor out_b = gen.infer(lr);

    Tensor image_mix = interpolate_images(out_a, out_b, 0.5);
    gen.import_params(interpolate_parameters(a, b, 0.5));
    Tensor param_mix = gen.infer(lr);

    double diff = 0.0;
    for (int64_t i = 0; i < param_mix.numel(); ++i)
        diff = std::max(diff, std::fabs(double(param_mix[i]) - image_mix[i]));
    // Regression pin: the midpoints disagree by half the pass-through signal.
    CHECK(diff > 0.2);
}

TEST_CASE("back projection basics") {
    Tensor hr = test::synth_image(11, 64, 64);
    Tensor lr = bicubic_resize(hr, ResampleSpec{0.25, true});

    // iters = 0 leaves the input untouched.
    Tensor same = back_project(hr, lr, 0);
    CHECK(same.vec() == hr.vec());

    // A consistent pair is (nearly) a fixed point.
    Tensor once = back_project(hr, lr, 3);
    double drift = 0.0;
    for (int64_t i = 0; i < hr.numel(); ++i)
        drift = std::max(drift, std::fabs(double(once[i]) - hr[i]));
    CHECK(drift < 1e-4);

    CHECK_THROWS_AS(back_project(hr, Tensor({1, 3, 15, 16}), 1), std::invalid_argument);
    CHECK_THROWS_AS(back_project(hr, lr, -1), std::invalid_argument);
}

TEST_CASE("back projection shrinks the downsampling residual") {
    for (uint64_t seed = 0; seed < 3; ++seed) {
        // A deliberately inconsistent SR/LR pair: the blur removes detail the
        // LR image still has.
        Tensor hr = test::synth_image(20 + seed, 64, 64);
        Tensor lr = bicubic_resize(hr, ResampleSpec{0.25, true});
        Tensor sr = bicubic_resize(bicubic_resize(hr, ResampleSpec{0.5, true}),
                                   ResampleSpec{2.0, false});
        double r1 = l2_residual_to_lr(back_project(sr, lr, 1), lr);
        double r10 = l2_residual_to_lr(back_project(sr, lr, 10), lr);
        CAPTURE(seed);
        CHECK(r10 <= r1);
        CHECK(r10 < l2_residual_to_lr(sr, lr));
    }
}

TEST_CASE("back projection improves fidelity of a blurry upscale") {
    Tensor hr = test::synth_image(31, 96, 96);
    Tensor lr = bicubic_resize(hr, ResampleSpec{0.25, true});
    Tensor naive = bicubic_resize(lr, ResampleSpec{4.0, false});
    Tensor refined = back_project(naive, lr, 5);
    CHECK(psnr_y(refined, hr, 4) > psnr_y(naive, hr, 4));
}
