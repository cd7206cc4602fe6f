#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "srtk/losses.hpp"
#include "testutil.hpp"

using namespace srtk;

namespace {

// Scalar oracle written straight from the definition with naive sigmoid and
// log composition, in double. Only valid away from saturation; used to freeze
// golden values and to cross-check the softplus-based implementation.
double naive_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

double oracle_d_loss(const std::vector<double>& cr, const std::vector<double>& cf) {
    double mr = 0, mf = 0;
    for (double v : cr) mr += v;
    for (double v : cf) mf += v;
    mr /= double(cr.size());
    mf /= double(cf.size());
    double l = 0;
    for (double v : cr) l += -std::log(naive_sigmoid(v - mf)) / double(cr.size());
    for (double v : cf) l += -std::log(1.0 - naive_sigmoid(v - mr)) / double(cf.size());
    return l;
}

double oracle_g_loss(const std::vector<double>& cr, const std::vector<double>& cf) {
    double mr = 0, mf = 0;
    for (double v : cr) mr += v;
    for (double v : cf) mf += v;
    mr /= double(cr.size());
    mf /= double(cf.size());
    double l = 0;
    for (double v : cr) l += -std::log(1.0 - naive_sigmoid(v - mf)) / double(cr.size());
    for (double v : cf) l += -std::log(naive_sigmoid(v - mr)) / double(cf.size());
    return l;
}

std::vector<double> random_scores(uint64_t seed, size_t n, double lo = -3.0, double hi = 3.0) {
    Rng rng(seed, 31);
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.next_double();
    return v;
}

template <class Real>
void check_grads_against_fd(bool generator_form, uint64_t seed, size_t batch, double tol) {
    auto crd = random_scores(seed, batch);
    auto cfd = random_scores(seed + 1, batch);
    std::vector<Real> cr(crd.begin(), crd.end()), cf(cfd.begin(), cfd.end());
    auto res = generator_form ? generator_adversarial_loss_ra_grad<Real>(cr, cf)
                              : discriminator_loss_ra_grad<Real>(cr, cf);
    // Central differences on the double path as the reference derivative.
    std::vector<double> cr_d(cr.begin(), cr.end()), cf_d(cf.begin(), cf.end());
    const double h = 1e-6;
    auto eval = [&](const std::vector<double>& a, const std::vector<double>& b) {
        return generator_form ? generator_adversarial_loss_ra<double>(a, b)
                              : discriminator_loss_ra<double>(a, b);
    };
    for (size_t i = 0; i < batch; ++i) {
        auto a = cr_d;
        a[i] += h;
        double lp = eval(a, cf_d);
        a[i] -= 2 * h;
        double lm = eval(a, cf_d);
        double fd = (lp - lm) / (2 * h);
        double an = double(res.d_real[i]);
        CHECK(std::fabs(an - fd) <= tol * std::max({1.0, std::fabs(an), std::fabs(fd)}));

        auto b = cf_d;
        b[i] += h;
        lp = eval(cr_d, b);
        b[i] -= 2 * h;
        lm = eval(cr_d, b);
        fd = (lp - lm) / (2 * h);
        an = double(res.d_fake[i]);
        CHECK(std::fabs(an - fd) <= tol * std::max({1.0, std::fabs(an), std::fabs(fd)}));
    }
}

}  // namespace

TEST_CASE("discriminator loss golden values") {
    std::vector<double> cr{2.0}, cf{0.0};
    double oracle = oracle_d_loss(cr, cf);
    CHECK(oracle == doctest::Approx(0.253856).epsilon(1e-5));
    CHECK(discriminator_loss_ra<double>(cr, cf) == doctest::Approx(0.253856).epsilon(1e-5));
    CHECK(discriminator_loss_ra<double>(cr, cf) == doctest::Approx(oracle).epsilon(1e-12));

    // Equal-score batches: every score equals the opposing batch mean, so
    // sigma(0) = 0.5 enters both terms.
    for (double v : {-4.0, 0.0, 0.7, 33.0}) {
        std::vector<double> eq1{v};
        CHECK(discriminator_loss_ra<double>(eq1, eq1) ==
              doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
        std::vector<double> eq4(4, v);
        CHECK(discriminator_loss_ra<double>(eq4, eq4) ==
              doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
    }
}

TEST_CASE("generator loss golden values confirmed by the oracle") {
    std::vector<double> cr{2.0}, cf{0.0};
    double oracle = oracle_g_loss(cr, cf);
    // -log(1-sigma(2)) - log(sigma(-2)) = 2 * softplus(2) = 4.253856...
    CHECK(oracle == doctest::Approx(4.253856).epsilon(1e-5));
    CHECK(generator_adversarial_loss_ra<double>(cr, cf) == doctest::Approx(oracle).epsilon(1e-12));

    for (double v : {-4.0, 0.0, 1.5}) {
        std::vector<double> eq(3, v);
        CHECK(generator_adversarial_loss_ra<double>(eq, eq) ==
              doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
    }

    // Swapping arguments of the generator form gives the discriminator form
    // with roles exchanged.
    auto a = random_scores(5, 4), b = random_scores(6, 4);
    CHECK(generator_adversarial_loss_ra<double>(a, b) ==
          doctest::Approx(discriminator_loss_ra<double>(b, a)).epsilon(1e-12));
}

TEST_CASE("saturation stays finite through the softplus path") {
    std::vector<double> cr{40.0}, cf{-40.0};
    double d = discriminator_loss_ra<double>(cr, cf);
    CHECK(std::isfinite(d));
    CHECK(d < 1e-10);
    double g = generator_adversarial_loss_ra<double>(cr, cf);
    CHECK(std::isfinite(g));
    CHECK(g > 100.0);

    std::vector<float> crf{100.0f, -100.0f}, cff{-100.0f, 100.0f};
    CHECK(std::isfinite(discriminator_loss_ra<float>(crf, cff)));
    CHECK(std::isfinite(generator_adversarial_loss_ra<float>(crf, cff)));
    auto gr = discriminator_loss_ra_grad<float>(crf, cff);
    for (float v : gr.d_real) CHECK(std::isfinite(v));
    for (float v : gr.d_fake) CHECK(std::isfinite(v));
}

TEST_CASE("shift invariance: only score differences matter") {
    auto cr = random_scores(11, 8), cf = random_scores(12, 8);
    double d0 = discriminator_loss_ra<double>(cr, cf);
    double g0 = generator_adversarial_loss_ra<double>(cr, cf);
    for (double k : {-5.0, 0.37, 12.0}) {
        auto cr2 = cr, cf2 = cf;
        for (auto& v : cr2) v += k;
        for (auto& v : cf2) v += k;
        CHECK(discriminator_loss_ra<double>(cr2, cf2) == doctest::Approx(d0).epsilon(1e-9));
        CHECK(generator_adversarial_loss_ra<double>(cr2, cf2) == doctest::Approx(g0).epsilon(1e-9));
    }
}

TEST_CASE("analytic gradients match finite differences (double)") {
    uint64_t seed = 100;
    for (size_t batch : {1, 2, 8, 16})
        for (int rep = 0; rep < 13; ++rep) {
            check_grads_against_fd<double>(false, seed++, batch, 1e-6);
            check_grads_against_fd<double>(true, seed++, batch, 1e-6);
        }
}

TEST_CASE("analytic gradients match finite differences (float)") {
    uint64_t seed = 500;
    for (size_t batch : {1, 2, 8, 16})
        for (int rep = 0; rep < 13; ++rep) {
            check_grads_against_fd<float>(false, seed++, batch, 1e-4);
            check_grads_against_fd<float>(true, seed++, batch, 1e-4);
        }
}

TEST_CASE("both-sided gradient flow in the generator form") {
    auto cr = random_scores(31, 6), cf = random_scores(32, 6);
    auto res = generator_adversarial_loss_ra_grad<double>(cr, cf);
    double norm_real = 0.0;
    for (double v : res.d_real) norm_real += v * v;
    CHECK(norm_real > 1e-12);
}

TEST_CASE("empty batches are rejected") {
    std::vector<double> some{1.0}, none;
    CHECK_THROWS_AS(discriminator_loss_ra<double>(some, none), std::invalid_argument);
    CHECK_THROWS_AS(discriminator_loss_ra<double>(none, some), std::invalid_argument);
    CHECK_THROWS_AS(generator_adversarial_loss_ra<double>(none, none), std::invalid_argument);
}

TEST_CASE("content loss against an elementwise oracle") {
    Tensor a({2, 3, 4, 4}), b({2, 3, 4, 4});
    CHECK(content_loss_l1(a, b) == 0.0);
    for (auto& v : b.vec()) v = 0.1f;
    CHECK(content_loss_l1(a, b) == doctest::Approx(0.1).epsilon(1e-6));

    Tensor x = test::random_tensor(41, {1, 1, 25, 40});
    Tensor y = test::random_tensor(42, {1, 1, 25, 40});
    double oracle = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) oracle += std::fabs(double(x[i]) - y[i]);
    oracle /= double(x.numel());
    CHECK(content_loss_l1(x, y) == doctest::Approx(oracle).epsilon(1e-7));

    CHECK_THROWS_AS(content_loss_l1(Tensor({1, 3, 2, 2}), Tensor({1, 3, 2, 3})),
                    std::invalid_argument);

    // Gradient: sign / numel, finite-differenced away from the kink.
    double value = 0.0;
    Tensor g = content_loss_l1_grad(x, y, &value);
    CHECK(value == doctest::Approx(oracle).epsilon(1e-7));
    for (int64_t i = 0; i < 5; ++i) {
        double expect = (x[i] > y[i] ? 1.0 : -1.0) / double(x.numel());
        CHECK(g[i] == doctest::Approx(expect).epsilon(1e-6));
    }
}

TEST_CASE("perceptual loss basics through a pluggable extractor") {
    test::TinyExtractor ext;
    FeatureTap tap{"f2", true};
    Tensor a = test::synth_image(51, 24, 24);
    Tensor b = test::synth_image(52, 24, 24);
    CHECK(perceptual_loss(ext, a, a, tap) == doctest::Approx(0.0));
    double ab = perceptual_loss(ext, a, b, tap);
    double ba = perceptual_loss(ext, b, a, tap);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-7));
    CHECK(ab > 0.0);

    // Gradient of the perceptual term, checked by a directional probe.
    Tensor grad;
    double v0 = perceptual_loss_grad(ext, a, b, tap, FeatureMetric::l1, &grad);
    CHECK(v0 == doctest::Approx(ab).epsilon(1e-7));
    Tensor dir = test::random_tensor(53, a.shape());
    const float h = 1e-3f;
    Tensor ap = a, am = a;
    nn::axpy(h, dir, ap);
    nn::axpy(-h, dir, am);
    double fd = (perceptual_loss(ext, ap, b, tap) - perceptual_loss(ext, am, b, tap)) / (2.0 * h);
    double an = 0.0;
    for (int64_t i = 0; i < grad.numel(); ++i) an += double(grad[i]) * dir[i];
    CHECK(std::fabs(fd - an) < 2e-2 * std::max({1.0, std::fabs(fd), std::fabs(an)}));
}

TEST_CASE("pre-activation sees differences the post-activation tap misses") {
    // Extractor whose features are the pixels shifted down by 0.6, so image
    // values below 0.6 produce negative pre-activation features.
    class ShiftExtractor : public FeatureExtractor {
    public:
        Tensor extract(const Tensor& img, const FeatureTap& tap) override {
            Tensor f = img;
            for (auto& v : f.vec()) v -= 0.6f;
            if (!tap.pre_activation)
                for (auto& v : f.vec()) v = std::max(v, 0.0f);
            return f;
        }
        Tensor forward_train(const Tensor& img, const FeatureTap& tap) override {
            return extract(img, tap);
        }
        Tensor backward(const Tensor&) override { throw std::logic_error("not differentiable"); }
        std::string describe() const override { return "shift"; }
    } ext;

    Tensor hr({1, 3, 4, 4}, 0.2f);  // pre-activation feature -0.4, inactive
    Tensor sr({1, 3, 4, 4}, 0.4f);  // pre-activation feature -0.2, still inactive
    FeatureTap pre{"p", true}, post{"p", false};
    CHECK(perceptual_loss(ext, sr, hr, post) == doctest::Approx(0.0));
    CHECK(perceptual_loss(ext, sr, hr, pre) == doctest::Approx(0.2).epsilon(1e-6));
}

TEST_CASE("total generator loss composition") {
    LossWeights w;  // lambda 5e-3, eta 1e-2
    CHECK(total_generator_loss(1.0, 2.0, 3.0, w) == doctest::Approx(1.04).epsilon(1e-12));
    CHECK(total_generator_loss(0.7, 9.0, 9.0, LossWeights{0.0, 0.0}) == doctest::Approx(0.7));
    // High-content regime.
    CHECK(total_generator_loss(0.0, 0.0, 0.37, LossWeights{5e-3, 10.0}) ==
          doctest::Approx(3.7).epsilon(1e-12));

    CHECK_THROWS_AS(total_generator_loss(std::nan(""), 0, 0, w), TrainingDiverged);
    CHECK_THROWS_AS(total_generator_loss(0, std::nan(""), 0, w), TrainingDiverged);
    CHECK_THROWS_AS(total_generator_loss(0, 0, std::nan(""), w), TrainingDiverged);
    try {
        total_generator_loss(0, std::numeric_limits<double>::infinity(), 0, w);
        FAIL("expected TrainingDiverged");
    } catch (const TrainingDiverged& e) {
        CHECK(std::string(e.what()).find("adversarial") != std::string::npos);
    }
}

TEST_CASE("gradient of the composite objective") {
    // d/dscores = lambda * adversarial grads; d/dpixels = eta * l1 grads.
    LossWeights w{5e-3, 1e-2};
    auto cr = random_scores(61, 8), cf = random_scores(62, 8);
    Tensor sr = test::random_tensor(63, {1, 3, 6, 6});
    Tensor hr = test::random_tensor(64, {1, 3, 6, 6});
    auto adv = generator_adversarial_loss_ra_grad<double>(cr, cf);
    double content = 0.0;
    Tensor gc = content_loss_l1_grad(sr, hr, &content);

    const double h = 1e-6;
    for (size_t i = 0; i < cf.size(); ++i) {
        auto b = cf;
        b[i] += h;
        double lp = total_generator_loss(0.0, generator_adversarial_loss_ra<double>(cr, b), content, w);
        b[i] -= 2 * h;
        double lm = total_generator_loss(0.0, generator_adversarial_loss_ra<double>(cr, b), content, w);
        double fd = (lp - lm) / (2 * h);
        CHECK(std::fabs(fd - w.lambda_adv * adv.d_fake[i]) < 1e-6);
    }
    const double hp = 1e-4;
    for (int64_t i = 0; i < 8; ++i) {
        if (std::fabs(double(sr[i]) - hr[i]) < 4 * hp) continue;  // keep away from the kink
        Tensor s2 = sr;
        s2[i] += float(hp);
        double lp = total_generator_loss(0.0, adv.value, content_loss_l1(s2, hr), w);
        s2[i] -= float(2 * hp);
        double lm = total_generator_loss(0.0, adv.value, content_loss_l1(s2, hr), w);
        double fd = (lp - lm) / (2 * hp);
        CHECK(std::fabs(fd - w.eta_content * gc[i]) < 1e-4);
    }
}
