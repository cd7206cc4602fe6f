#include "srtk/trainer.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "srtk/errors.hpp"

namespace srtk {

namespace {

constexpr size_t kLossHistoryCap = 65536;

void push_loss(std::deque<float>& hist, float v) {
    hist.push_back(v);
    if (hist.size() > kLossHistoryCap) hist.pop_front();
}

// Milliseconds since the first call in this process; log lines report
// elapsed wall time rather than an epoch timestamp.
double now_ms() {
    using namespace std::chrono;
    static const steady_clock::time_point start = steady_clock::now();
    return duration<double, std::milli>(steady_clock::now() - start).count();
}

std::vector<std::pair<std::string, Tensor>> named_copies(const std::vector<nn::Param>& params,
                                                         const std::string& prefix) {
    std::vector<std::pair<std::string, Tensor>> out;
    for (const auto& p : params) out.emplace_back(prefix + p.name, *p.value);
    return out;
}

void restore_named(const std::vector<ParameterSet::Entry>& entries, const std::string& prefix,
                   std::vector<nn::Param>& params) {
    for (auto& p : params) {
        const std::string want = prefix + p.name;
        bool found = false;
        for (const auto& e : entries) {
            if (e.name != want) continue;
            if (!e.value.same_shape(*p.value))
                throw std::invalid_argument("train state: shape mismatch for " + want);
            *p.value = e.value;
            found = true;
            break;
        }
        if (!found) throw std::invalid_argument("train state: missing tensor " + want);
    }
}

std::vector<std::pair<std::string, Tensor>> collect_adam(const nn::Adam& adam,
                                                         const std::vector<nn::Param>& params,
                                                         const std::string& prefix) {
    std::vector<std::pair<std::string, Tensor>> out;
    for (auto& [name, tensor] : adam.export_state(params)) out.emplace_back(prefix + name, tensor);
    return out;
}

void restore_adam(nn::Adam& adam, const std::vector<ParameterSet::Entry>& entries,
                  const std::vector<nn::Param>& params, const std::string& prefix,
                  int64_t step_count) {
    std::vector<std::pair<std::string, Tensor>> state;
    for (const auto& e : entries) {
        if (e.name.rfind(prefix, 0) == 0) state.emplace_back(e.name.substr(prefix.size()), e.value);
    }
    adam.import_state(state, params, step_count);
}

void append_log(const TrainOptions& opts, const std::string& line) {
    if (opts.log_stream) (*opts.log_stream) << line << "\n";
    if (!opts.out_dir.empty()) {
        std::ofstream f(opts.out_dir + "/train.log", std::ios::app);
        if (f) f << line << "\n";
    }
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

void TrainSchedule::validate() const {
    if (!(lr0 > 0.0)) throw std::invalid_argument("schedule: lr0 must be positive");
    if (decay_every < 1) throw std::invalid_argument("schedule: decay_every must be >= 1");
    for (size_t i = 1; i < decay_points.size(); ++i)
        if (decay_points[i] <= decay_points[i - 1])
            throw std::invalid_argument("schedule: decay_points must be strictly increasing");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0))
        throw std::invalid_argument("schedule: decay_factor must be in (0,1]");
    if (batch < 1) throw std::invalid_argument("schedule: batch must be >= 1");
    if (hr_patch < 1) throw std::invalid_argument("schedule: hr_patch must be >= 1");
    if (total_iters < 0) throw std::invalid_argument("schedule: total_iters must be >= 0");
}

double lr_schedule(int64_t step, const TrainSchedule& sched) {
    if (step < 0) throw std::invalid_argument("lr_schedule: step must be >= 0");
    int64_t halvings;
    if (sched.stage == Stage::psnr) {
        halvings = step / sched.decay_every;
    } else {
        halvings = 0;
        for (int64_t p : sched.decay_points)
            if (p <= step) ++halvings;
    }
    return sched.lr0 * std::pow(sched.decay_factor, static_cast<double>(halvings));
}

PsnrTrainer::PsnrTrainer(const GeneratorConfig& cfg, const TrainSchedule& sched,
                         const PairedImageDataset* dataset, uint64_t seed, const TrainOptions& opts)
    : cfg_(cfg), sched_(sched), dataset_(dataset), opts_(opts), seed_(seed), gen_(cfg) {
    cfg_.validate();
    sched_.validate();
    if (sched_.stage != Stage::psnr) throw std::invalid_argument("psnr trainer: schedule stage must be psnr");
    if (sched_.hr_patch % cfg_.scale != 0)
        throw std::invalid_argument("psnr trainer: hr_patch must be divisible by scale");
    gen_.init(mix_seed(seed_, 0xA11CE));
    adam_ = nn::Adam(sched_.beta1, sched_.beta2);
    adam_.attach(gen_.parameters());
    if (!opts_.out_dir.empty()) std::filesystem::create_directories(opts_.out_dir);
}

void PsnrTrainer::one_iteration() {
    PatchPair batch = dataset_->sample_batch(sched_.batch, sched_.hr_patch,
                                             mix_seed(seed_, static_cast<uint64_t>(iteration_)),
                                             opts_.augment);
    double lr = lr_schedule(iteration_, sched_);
    gen_.zero_grad();
    Tensor sr = gen_.forward(batch.lr, /*keep_cache=*/true);
    double loss;
    Tensor grad = content_loss_l1_grad(sr, batch.hr, &loss);
    if (!std::isfinite(loss))
        throw TrainingDiverged("psnr stage: loss is not finite at iteration " +
                               std::to_string(iteration_));
    gen_.backward(grad);
    auto params = gen_.parameters();
    adam_.step(lr, params);
    push_loss(loss_history_, static_cast<float>(loss));
    ++iteration_;
    if (opts_.log_every > 0 && iteration_ % opts_.log_every == 0) {
        append_log(opts_, "iter=" + std::to_string(iteration_) + " stage=psnr lr=" + fmt(lr) +
                              " l1=" + fmt(loss) + " wall_ms=" + fmt(now_ms()));
    }
}

void PsnrTrainer::run(int64_t iters) {
    for (int64_t i = 0; i < iters; ++i) {
        one_iteration();
        if (!opts_.out_dir.empty() && opts_.ckpt_every > 0 && iteration_ % opts_.ckpt_every == 0) {
            save_param_set(opts_.out_dir + "/g_psnr_latest.ckpt", snapshot());
            save_state(opts_.out_dir + "/train_state.ckpt");
        }
        if (opts_.stop_flag && opts_.stop_flag->load()) {
            if (!opts_.out_dir.empty()) save_state(opts_.out_dir + "/train_state.ckpt");
            append_log(opts_, "interrupted at iteration " + std::to_string(iteration_) +
                                  ", state checkpoint written");
            return;
        }
    }
}

ParameterSet PsnrTrainer::snapshot() const {
    return gen_.export_params("psnr", iteration_);
}

void PsnrTrainer::save_state(const std::string& path) const {
    ParameterSet ps;
    ps.stage = "state";
    ps.iteration = iteration_;
    ps.config = cfg_.to_json();
    ps.extra = {{"seed", seed_},
                {"adam_g_steps", adam_.step_count()},
                {"stage", "psnr"},
                {"loss_history", std::vector<float>(loss_history_.begin(), loss_history_.end())}};
    auto& self = const_cast<PsnrTrainer&>(*this);
    for (auto& [name, tensor] : named_copies(self.gen_.parameters(), "g."))
        ps.add(name, std::move(tensor));
    for (auto& [name, tensor] : collect_adam(adam_, self.gen_.parameters(), "adam_g."))
        ps.add(name, std::move(tensor));
    save_param_set(path, ps);
}

void PsnrTrainer::load_state(const std::string& path) {
    ParameterSet ps = load_param_set(path);
    if (ps.extra.value("stage", "") != "psnr")
        throw std::invalid_argument("train state: not a psnr-stage state file: " + path);
    iteration_ = ps.iteration;
    seed_ = ps.extra.value("seed", seed_);
    auto params = gen_.parameters();
    restore_named(ps.entries, "g.", params);
    restore_adam(adam_, ps.entries, params, "adam_g.", ps.extra.value("adam_g_steps", int64_t{0}));
    loss_history_.clear();
    for (float v : ps.extra.value("loss_history", std::vector<float>{})) loss_history_.push_back(v);
}

GanTrainer::GanTrainer(const GeneratorConfig& cfg, const TrainSchedule& sched,
                       const PairedImageDataset* dataset, const ParameterSet& pretrained,
                       uint64_t seed, const TrainOptions& opts)
    : cfg_(cfg), sched_(sched), dataset_(dataset), opts_(opts), seed_(seed), gen_(cfg) {
    cfg_.validate();
    sched_.validate();
    if (sched_.stage != Stage::gan) throw std::invalid_argument("gan trainer: schedule stage must be gan");
    if (sched_.hr_patch % cfg_.scale != 0)
        throw std::invalid_argument("gan trainer: hr_patch must be divisible by scale");
    if (pretrained.stage != "psnr")
        throw std::invalid_argument("gan trainer: generator init must be a psnr-stage checkpoint, got stage '" +
                                    pretrained.stage + "'");
    if (!opts_.extractor)
        throw ConfigError("gan trainer: perceptual-loss feature extractor is not configured "
                          "(set vgg_weights)");
    gen_.import_params(pretrained);
    opts_.disc.in_size = sched_.hr_patch;
    disc_ = Discriminator(opts_.disc);
    disc_.init(mix_seed(seed_, 0xD15C));
    // Fresh optimizer moments for both networks; the objective changed.
    adam_g_ = nn::Adam(sched_.beta1, sched_.beta2);
    adam_g_.attach(gen_.parameters());
    adam_d_ = nn::Adam(sched_.beta1, sched_.beta2);
    adam_d_.attach(disc_.parameters());
    if (!opts_.out_dir.empty()) std::filesystem::create_directories(opts_.out_dir);
}

void GanTrainer::one_iteration() {
    PatchPair batch = dataset_->sample_batch(sched_.batch, sched_.hr_patch,
                                             mix_seed(seed_, static_cast<uint64_t>(iteration_)),
                                             opts_.augment);
    double lr = lr_schedule(iteration_, sched_);
    LossRecord rec;
    rec.iteration = iteration_ + 1;

    // Discriminator updates: generator output is treated as a constant.
    Tensor fake = gen_.forward(batch.lr, /*keep_cache=*/false);
    for (int dstep = 0; dstep < opts_.d_steps_per_g; ++dstep) {
        disc_.zero_grad();
        Tensor c_real_t = disc_.forward(batch.hr, /*training=*/true, /*keep_cache=*/true);
        std::vector<double> c_real(c_real_t.vec().begin(), c_real_t.vec().end());
        Tensor c_fake_t = disc_.forward(fake, /*training=*/true, /*keep_cache=*/true);
        std::vector<double> c_fake(c_fake_t.vec().begin(), c_fake_t.vec().end());
        // The second forward overwrote the caches of the first, so the two
        // halves of the loss are backpropagated through separate passes:
        // first the fake branch (caches are current), then the real branch.
        auto d_loss = discriminator_loss_ra_grad<double>(c_real, c_fake);
        rec.d_loss = d_loss.value;
        if (!std::isfinite(d_loss.value))
            throw TrainingDiverged("gan stage: discriminator loss not finite at iteration " +
                                   std::to_string(iteration_));
        Tensor gfake({static_cast<int>(c_fake.size())});
        for (size_t i = 0; i < c_fake.size(); ++i) gfake[static_cast<int64_t>(i)] = static_cast<float>(d_loss.d_fake[i]);
        disc_.backward(gfake, /*param_grads=*/true);
        disc_.forward(batch.hr, /*training=*/true, /*keep_cache=*/true);
        Tensor greal({static_cast<int>(c_real.size())});
        for (size_t i = 0; i < c_real.size(); ++i) greal[static_cast<int64_t>(i)] = static_cast<float>(d_loss.d_real[i]);
        disc_.backward(greal, /*param_grads=*/true);
        auto dparams = disc_.parameters();
        adam_d_.step(lr * opts_.d_lr_scale, dparams);

        double mr = mean_of<double>(c_real), mf = mean_of<double>(c_fake);
        double ra_real = 0.0, ra_fake = 0.0;
        for (double c : c_real) ra_real += sigmoid(c - mf) / static_cast<double>(c_real.size());
        for (double c : c_fake) ra_fake += sigmoid(c - mr) / static_cast<double>(c_fake.size());
        rec.d_ra_real = ra_real;
        rec.d_ra_fake = ra_fake;
    }

    // Generator update: discriminator parameters are frozen, scores of real
    // images are constants, gradients reach the generator through the fake
    // scores (including the batch-mean terms) and through both pixel losses.
    gen_.zero_grad();
    Tensor sr = gen_.forward(batch.lr, /*keep_cache=*/true);
    Tensor c_real_t = disc_.forward(batch.hr, /*training=*/true, /*keep_cache=*/false);
    std::vector<double> c_real(c_real_t.vec().begin(), c_real_t.vec().end());
    Tensor c_fake_t = disc_.forward(sr, /*training=*/true, /*keep_cache=*/true);
    std::vector<double> c_fake(c_fake_t.vec().begin(), c_fake_t.vec().end());

    auto adv = generator_adversarial_loss_ra_grad<double>(c_real, c_fake);
    double content = 0.0;
    Tensor g_content = content_loss_l1_grad(sr, batch.hr, &content);
    Tensor g_percep;
    double percep = perceptual_loss_grad(*opts_.extractor, sr, batch.hr, opts_.tap,
                                         opts_.percep_metric, &g_percep);
    rec.percep = percep;
    rec.adv = adv.value;
    rec.content = content;
    rec.total = total_generator_loss(percep, adv.value, content, opts_.weights);

    Tensor gfake_scores({static_cast<int>(c_fake.size())});
    for (size_t i = 0; i < c_fake.size(); ++i)
        gfake_scores[static_cast<int64_t>(i)] =
            static_cast<float>(opts_.weights.lambda_adv * adv.d_fake[i]);
    Tensor g_sr = disc_.backward(gfake_scores, /*param_grads=*/false);
    nn::axpy(static_cast<float>(opts_.weights.eta_content), g_content, g_sr);
    nn::axpy(1.0f, g_percep, g_sr);
    gen_.backward(g_sr);
    auto gparams = gen_.parameters();
    adam_g_.step(lr, gparams);

    push_loss(loss_history_, static_cast<float>(rec.total));
    records_.push_back(rec);
    ++iteration_;
    if (opts_.log_every > 0 && iteration_ % opts_.log_every == 0) {
        append_log(opts_, "iter=" + std::to_string(iteration_) + " stage=gan lr=" + fmt(lr) +
                              " loss_g=" + fmt(rec.total) + " percep=" + fmt(rec.percep) +
                              " adv=" + fmt(rec.adv) + " l1=" + fmt(rec.content) +
                              " loss_d=" + fmt(rec.d_loss) + " d_ra_real=" + fmt(rec.d_ra_real) +
                              " d_ra_fake=" + fmt(rec.d_ra_fake) + " wall_ms=" + fmt(now_ms()));
    }
}

void GanTrainer::run(int64_t iters) {
    for (int64_t i = 0; i < iters; ++i) {
        one_iteration();
        if (!opts_.out_dir.empty() && opts_.ckpt_every > 0 && iteration_ % opts_.ckpt_every == 0) {
            save_param_set(opts_.out_dir + "/g_gan_latest.ckpt", snapshot_generator());
            save_param_set(opts_.out_dir + "/d_latest.ckpt", snapshot_discriminator());
            save_state(opts_.out_dir + "/train_state.ckpt");
        }
        if (opts_.stop_flag && opts_.stop_flag->load()) {
            if (!opts_.out_dir.empty()) save_state(opts_.out_dir + "/train_state.ckpt");
            append_log(opts_, "interrupted at iteration " + std::to_string(iteration_) +
                                  ", state checkpoint written");
            return;
        }
    }
}

ParameterSet GanTrainer::snapshot_generator() const {
    return gen_.export_params("gan", iteration_);
}

ParameterSet GanTrainer::snapshot_discriminator() const {
    return disc_.export_params("disc", iteration_);
}

void GanTrainer::save_state(const std::string& path) const {
    ParameterSet ps;
    ps.stage = "state";
    ps.iteration = iteration_;
    ps.config = cfg_.to_json();
    ps.extra = {{"seed", seed_},
                {"stage", "gan"},
                {"adam_g_steps", adam_g_.step_count()},
                {"adam_d_steps", adam_d_.step_count()},
                {"disc_config", opts_.disc.to_json()},
                {"loss_history", std::vector<float>(loss_history_.begin(), loss_history_.end())}};
    auto& self = const_cast<GanTrainer&>(*this);
    for (auto& [n, t] : named_copies(self.gen_.parameters(), "g.")) ps.add(n, std::move(t));
    for (auto& [n, t] : named_copies(self.disc_.parameters(), "d.")) ps.add(n, std::move(t));
    for (auto& [n, t] : collect_adam(adam_g_, self.gen_.parameters(), "adam_g.")) ps.add(n, std::move(t));
    for (auto& [n, t] : collect_adam(adam_d_, self.disc_.parameters(), "adam_d.")) ps.add(n, std::move(t));
    save_param_set(path, ps);
}

void GanTrainer::load_state(const std::string& path) {
    ParameterSet ps = load_param_set(path);
    if (ps.extra.value("stage", "") != "gan")
        throw std::invalid_argument("train state: not a gan-stage state file: " + path);
    iteration_ = ps.iteration;
    seed_ = ps.extra.value("seed", seed_);
    auto gparams = gen_.parameters();
    restore_named(ps.entries, "g.", gparams);
    auto dparams = disc_.parameters();
    restore_named(ps.entries, "d.", dparams);
    restore_adam(adam_g_, ps.entries, gparams, "adam_g.", ps.extra.value("adam_g_steps", int64_t{0}));
    restore_adam(adam_d_, ps.entries, dparams, "adam_d.", ps.extra.value("adam_d_steps", int64_t{0}));
    loss_history_.clear();
    for (float v : ps.extra.value("loss_history", std::vector<float>{})) loss_history_.push_back(v);
}

ParameterSet train_psnr_stage(const GeneratorConfig& cfg, const TrainSchedule& sched,
                              const PairedImageDataset& dataset, uint64_t seed,
                              const TrainOptions& opts) {
    PsnrTrainer trainer(cfg, sched, &dataset, seed, opts);
    trainer.run_to_end();
    ParameterSet out = trainer.snapshot();
    if (!opts.out_dir.empty()) save_param_set(opts.out_dir + "/g_psnr.ckpt", out);
    return out;
}

std::pair<ParameterSet, ParameterSet> train_gan_stage(const GeneratorConfig& cfg,
                                                      const TrainSchedule& sched,
                                                      const PairedImageDataset& dataset,
                                                      const ParameterSet& pretrained, uint64_t seed,
                                                      const TrainOptions& opts) {
    GanTrainer trainer(cfg, sched, &dataset, pretrained, seed, opts);
    trainer.run_to_end();
    auto g = trainer.snapshot_generator();
    auto d = trainer.snapshot_discriminator();
    if (!opts.out_dir.empty()) {
        save_param_set(opts.out_dir + "/g_gan.ckpt", g);
        save_param_set(opts.out_dir + "/d_final.ckpt", d);
    }
    return {std::move(g), std::move(d)};
}

}  // namespace srtk
