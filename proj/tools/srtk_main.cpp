// srtk: training, inference and evaluation for 4x single-image
// super-resolution. Subcommands: train, sr, interp, eval, feat-stats,
// fit-niqe, report.

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "srtk/color.hpp"
#include "srtk/config.hpp"
#include "srtk/dataset.hpp"
#include "srtk/errors.hpp"
#include "srtk/interpolate.hpp"
#include "srtk/metrics.hpp"
#include "srtk/niqe.hpp"
#include "srtk/png_io.hpp"
#include "srtk/run_manifest.hpp"
#include "srtk/trainer.hpp"
#include "srtk/vgg19.hpp"

namespace fs = std::filesystem;
using namespace srtk;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitConfig = 3;

std::atomic<bool> g_interrupted{false};
extern "C" void handle_interrupt(int) { g_interrupted.store(true); }

uint64_t resolve_seed(int64_t requested) {
    if (requested >= 0) return static_cast<uint64_t>(requested);
    std::random_device rd;
    uint64_t s = (static_cast<uint64_t>(rd()) << 32) ^ rd();
    std::cout << "seed=" << s << " (drawn; pass --seed to reproduce)\n";
    return s;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

std::vector<std::string> list_pngs(const std::string& path) {
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& e : fs::directory_iterator(path))
            if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path().string());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    if (files.empty()) throw std::runtime_error("no .png files under " + path);
    return files;
}

Generator generator_from_checkpoint(const ParameterSet& ps) {
    Generator g(GeneratorConfig::from_json(ps.config));
    g.import_params(ps);
    return g;
}

// ---------------------------------------------------------------- train ---

int cmd_train(const std::string& config_path, const std::string& stage,
              const std::string& resume, int64_t seed_flag, bool deterministic,
              const std::string& out_override) {
    ConfigFile file = ConfigFile::parse_file(config_path);
    TrainConfig cfg = TrainConfig::from_file(file);
    // Relative data paths are anchored at the config file, so a run is
    // reproducible regardless of the invoking directory.
    fs::path cfg_dir = fs::path(config_path).parent_path();
    auto anchor = [&](std::string& p) {
        if (!p.empty() && fs::path(p).is_relative()) p = (cfg_dir / p).string();
    };
    anchor(cfg.manifest);
    anchor(cfg.lr_dir);
    anchor(cfg.vgg_weights);
    if (!out_override.empty()) cfg.out_dir = out_override;
    fs::create_directories(cfg.out_dir);
    uint64_t seed = resolve_seed(seed_flag);

    TrainOptions opts;
    opts.out_dir = cfg.out_dir;
    opts.log_every = cfg.log_every;
    opts.ckpt_every = cfg.ckpt_every;
    opts.deterministic = deterministic;
    opts.augment = cfg.augment;
    opts.log_stream = &std::cout;
    opts.stop_flag = &g_interrupted;
    std::signal(SIGINT, handle_interrupt);
    std::signal(SIGTERM, handle_interrupt);
    opts.weights = cfg.weights;
    opts.percep_metric = cfg.percep_metric;
    opts.tap = cfg.tap;
    opts.disc = cfg.discriminator;
    opts.d_lr_scale = cfg.d_lr_scale;
    opts.d_steps_per_g = cfg.d_steps_per_g;

    RunManifest man;
    man.command = "train --stage " + stage;
    man.config_hash = sha256_hex(file.raw_text());
    man.dataset_manifest_hash = sha256_file_hex(cfg.manifest);
    man.seed = seed;
    man.mark_start();

    PairedImageDataset dataset = PairedImageDataset::load(cfg.manifest, cfg.scale, cfg.lr_dir);
    std::cout << "dataset: " << dataset.size() << " image(s), scale x" << cfg.scale << "\n";

    if (stage == "psnr") {
        PsnrTrainer trainer(cfg.generator, cfg.psnr_schedule, &dataset, seed, opts);
        if (!resume.empty()) trainer.load_state(resume);
        trainer.run_to_end();
        save_param_set(cfg.out_dir + "/g_psnr.ckpt", trainer.snapshot());
        std::cout << "wrote " << cfg.out_dir << "/g_psnr.ckpt (iteration "
                  << trainer.iteration() << ")\n";
    } else {
        std::string vgg_path = env_or("SRTK_VGG_WEIGHTS", cfg.vgg_weights);
        auto extractor = Vgg19Features::load(vgg_path);  // ConfigError when missing
        man.external_weight_hashes["vgg_weights"] = sha256_file_hex(vgg_path);
        opts.extractor = extractor.get();
        std::string pretrain_path = cfg.out_dir + "/g_psnr.ckpt";
        if (!fs::exists(pretrain_path))
            throw ConfigError("gan stage needs " + pretrain_path + " (run --stage psnr first)");
        ParameterSet pretrained = load_param_set(pretrain_path);
        GanTrainer trainer(cfg.generator, cfg.gan_schedule, &dataset, pretrained, seed, opts);
        if (!resume.empty()) trainer.load_state(resume);
        trainer.run_to_end();
        save_param_set(cfg.out_dir + "/g_gan.ckpt", trainer.snapshot_generator());
        save_param_set(cfg.out_dir + "/d_final.ckpt", trainer.snapshot_discriminator());
        std::cout << "wrote " << cfg.out_dir << "/g_gan.ckpt and d_final.ckpt\n";
    }
    man.mark_finish();
    man.write(cfg.out_dir + "/run_manifest.json");
    return 0;
}

// ------------------------------------------------------------------- sr ---

int cmd_sr(const std::string& ckpt, const std::string& input, const std::string& out_dir,
           int backproject) {
    ParameterSet ps = load_param_set(ckpt);
    Generator gen = generator_from_checkpoint(ps);
    fs::create_directories(out_dir);

    RunManifest man;
    man.command = "sr";
    man.config_hash = sha256_hex(ps.config.dump());
    man.external_weight_hashes["checkpoint"] = sha256_file_hex(ckpt);
    man.mark_start();

    for (const auto& path : list_pngs(input)) {
        Tensor lr = load_png(path);
        Tensor sr = gen.infer(lr);
        if (backproject > 0) sr = back_project(sr, lr, backproject);
        std::string out_path = (fs::path(out_dir) / fs::path(path).filename()).string();
        save_png(out_path, sr);
        std::cout << "sr: " << path << " -> " << out_path << " (" << sr.dim(3) << "x" << sr.dim(2)
                  << ")\n";
    }
    man.mark_finish();
    man.write((fs::path(out_dir) / "run_manifest.json").string());
    return 0;
}

// ---------------------------------------------------------------- interp ---

int cmd_interp(const std::string& psnr_path, const std::string& gan_path, const std::string& alpha_arg,
               const std::string& out_dir) {
    ParameterSet psnr = load_param_set(psnr_path);
    ParameterSet gan = load_param_set(gan_path);
    fs::create_directories(out_dir);
    std::vector<double> alphas;
    if (alpha_arg == "sweep") {
        for (int i = 0; i <= 5; ++i) alphas.push_back(i * 0.2);
    } else {
        try {
            alphas.push_back(std::stod(alpha_arg));
        } catch (...) {
            throw ConfigError("interp: --alpha expects a number in [0,1] or 'sweep'");
        }
    }
    RunManifest man;
    man.command = "interp";
    man.external_weight_hashes["psnr"] = sha256_file_hex(psnr_path);
    man.external_weight_hashes["gan"] = sha256_file_hex(gan_path);
    man.mark_start();
    for (double a : alphas) {
        ParameterSet mix = interpolate_parameters(psnr, gan, a);
        char name[64];
        std::snprintf(name, sizeof(name), "g_interp_a%.2f.ckpt", a);
        save_param_set((fs::path(out_dir) / name).string(), mix);
        std::cout << "interp: alpha=" << a << " -> " << name << "\n";
    }
    man.mark_finish();
    man.write((fs::path(out_dir) / "run_manifest.json").string());
    return 0;
}

// ------------------------------------------------------------------ eval ---

std::map<std::string, double> read_ma_scores(const std::string& path) {
    std::map<std::string, double> out;
    std::ifstream f(path);
    if (!f) throw std::runtime_error("eval: cannot open ma-scores file " + path);
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line.rfind("image", 0) == 0) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos) continue;
        out[line.substr(0, comma)] = std::stod(line.substr(comma + 1));
    }
    return out;
}

int cmd_eval(const std::string& sr_dir, const std::string& hr_dir, const std::string& ma_csv,
             int border_crop, const std::string& report_path, const std::string& niqe_model_path) {
    NiqeModel model = NiqeModel::load_json(niqe_model_path);
    std::map<std::string, double> ma;
    if (!ma_csv.empty()) ma = read_ma_scores(ma_csv);

    QualityReport rep;
    for (const auto& sr_path : list_pngs(sr_dir)) {
        std::string name = fs::path(sr_path).filename().string();
        std::string hr_path = (fs::path(hr_dir) / name).string();
        if (!fs::exists(hr_path)) throw std::runtime_error("eval: missing HR pair for " + name);
        Tensor sr = load_png(sr_path);
        Tensor hr = load_png(hr_path);
        ImageQuality q;
        q.name = name;
        q.psnr_y = psnr_y(sr, hr, border_crop);
        q.ssim_y = ssim_y(sr, hr);
        q.niqe = niqe(sr, model);
        if (auto it = ma.find(name); it != ma.end())
            q.perceptual_index = perceptual_index(it->second, q.niqe);
        rep.rows.push_back(std::move(q));
    }
    rep.sort_rows();
    rep.write_csv(report_path);
    ImageQuality mean = rep.corpus_mean();
    std::cout << "eval: " << rep.rows.size() << " image(s), mean psnr_y=" << mean.psnr_y
              << " ssim_y=" << mean.ssim_y << " niqe=" << mean.niqe << "\n";

    RunManifest man;
    man.command = "eval --border-crop " + std::to_string(border_crop) +
                  (ma_csv.empty() ? "" : " --ma-scores " + ma_csv);
    man.external_weight_hashes["niqe_model"] = sha256_file_hex(niqe_model_path);
    man.mark_start();
    man.mark_finish();
    man.write(report_path + ".manifest.json");
    return 0;
}

// ------------------------------------------------------------- feat-stats ---

int cmd_feat_stats(const std::string& img_path, const std::string& layers_arg,
                   const std::string& weights_path) {
    auto net = Vgg19Features::load(env_or("SRTK_VGG_WEIGHTS", weights_path));
    Tensor img = load_png(img_path);
    std::istringstream ls(layers_arg);
    std::string layer;
    std::cout << "image=" << img_path << "\n";
    while (std::getline(ls, layer, ',')) {
        if (layer.empty()) continue;
        FeatureTap pre{layer, true}, post{layer, false};
        Tensor fpre = net->extract(img, pre);
        Tensor fpost = net->extract(img, post);
        std::cout << "layer=" << Vgg19Features::canonical_layer(layer)
                  << " pre_sparsity=" << activation_sparsity(fpre)
                  << " post_sparsity=" << activation_sparsity(fpost) << " shape=" << fpre.shape_str()
                  << "\n";
    }
    return 0;
}

// --------------------------------------------------------------- fit-niqe ---

int cmd_fit_niqe(const std::string& corpus, const std::string& out_path, int patch,
                 double threshold) {
    std::vector<std::string> paths;
    if (fs::is_directory(corpus)) {
        paths = list_pngs(corpus);
    } else {
        paths = read_manifest(corpus);
    }
    std::vector<Tensor> images;
    for (const auto& p : paths) images.push_back(load_png(p));
    NiqeModel model = fit_niqe_model(images, patch, threshold);
    model.save_json(out_path);
    std::cout << "fit-niqe: " << images.size() << " image(s) -> " << out_path << "\n";
    return 0;
}

// ----------------------------------------------------------------- report ---

int cmd_report(const std::string& report_path, bool check) {
    ImageQuality stored;
    QualityReport rep = QualityReport::read_csv(report_path, &stored);
    ImageQuality recomputed = rep.corpus_mean();
    std::cout << "report: " << rep.rows.size() << " row(s), mean psnr_y=" << recomputed.psnr_y
              << " ssim_y=" << recomputed.ssim_y << " niqe=" << recomputed.niqe << "\n";
    if (check) {
        auto close = [](double a, double b) {
            if (std::isnan(a) && std::isnan(b)) return true;
            if (std::isinf(a) || std::isinf(b)) return a == b;
            return std::fabs(a - b) <= 1e-6 * (1.0 + std::fabs(b));
        };
        if (!close(stored.psnr_y, recomputed.psnr_y) || !close(stored.ssim_y, recomputed.ssim_y) ||
            !close(stored.niqe, recomputed.niqe) ||
            !close(stored.perceptual_index, recomputed.perceptual_index)) {
            std::cerr << "error: report-mean-mismatch: stored mean row does not match per-image rows\n";
            return kExitRuntime;
        }
        std::cout << "report: stored mean row verified\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Desk-scale 4x super-resolution toolkit"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::simple);

    // train
    auto* train = app.add_subcommand("train", "Run a training stage from a config file");
    std::string train_config, train_stage = "psnr", train_resume, train_out;
    int64_t train_seed = -1;
    bool train_det = false;
    train->add_option("--config", train_config, "Config file")->required();
    train->add_option("--stage", train_stage, "psnr | gan")
        ->check(CLI::IsMember({"psnr", "gan"}))
        ->required();
    train->add_option("--resume", train_resume, "Resume from a train_state checkpoint");
    train->add_option("--seed", train_seed, "Seed (drawn and logged when omitted)");
    train->add_flag("--deterministic", train_det, "Record deterministic mode in the manifest");
    train->add_option("--out", train_out, "Override logging.out_dir");

    // sr
    auto* sr = app.add_subcommand("sr", "Upscale a PNG or a directory of PNGs");
    std::string sr_ckpt, sr_in, sr_out;
    int sr_backproject = 0;
    sr->add_option("--ckpt", sr_ckpt, "Generator checkpoint")->required();
    sr->add_option("--in", sr_in, "Input image or directory")->required();
    sr->add_option("--out", sr_out, "Output directory")->required();
    sr->add_option("--backproject", sr_backproject, "Back-projection iterations (default 0)");

    // interp
    auto* interp = app.add_subcommand("interp", "Blend two generator checkpoints");
    std::string in_psnr, in_gan, in_alpha = "sweep", in_out;
    interp->add_option("--psnr", in_psnr, "L1-pretrained checkpoint")->required();
    interp->add_option("--gan", in_gan, "Adversarially fine-tuned checkpoint")->required();
    interp->add_option("--alpha", in_alpha, "Blend factor in [0,1] or 'sweep' (0,0.2,...,1)");
    interp->add_option("--out", in_out, "Output directory")->required();

    // eval
    auto* eval = app.add_subcommand("eval", "Score SR outputs against HR references");
    std::string ev_sr, ev_hr, ev_ma, ev_report, ev_niqe_model = env_or("SRTK_NIQE_MODEL", "assets/niqe_model.json");
    int ev_border = 4;
    eval->add_option("--sr", ev_sr, "Directory of SR outputs")->required();
    eval->add_option("--hr", ev_hr, "Directory of HR references")->required();
    eval->add_option("--ma-scores", ev_ma, "CSV of externally computed Ma scores (image,score)");
    eval->add_option("--border-crop", ev_border, "Pixels cropped per side (default 4)");
    eval->add_option("--report", ev_report, "Output CSV path")->required();
    eval->add_option("--niqe-model", ev_niqe_model, "NIQE pristine model JSON");

    // feat-stats
    auto* feat = app.add_subcommand("feat-stats", "Activation sparsity at feature taps");
    std::string fs_img, fs_layers = "22,54", fs_weights;
    feat->add_option("--img", fs_img, "Input image")->required();
    feat->add_option("--layers", fs_layers, "Comma-separated taps (e.g. 22,54 or conv5_4)");
    feat->add_option("--weights", fs_weights, "VGG19 weight file (or SRTK_VGG_WEIGHTS)");

    // fit-niqe
    auto* fitn = app.add_subcommand("fit-niqe", "Fit the pristine NIQE model from a corpus");
    std::string fn_corpus, fn_out;
    int fn_patch = 32;
    double fn_thresh = 0.75;
    fitn->add_option("--corpus", fn_corpus, "Directory of PNGs or a manifest file")->required();
    fitn->add_option("--out", fn_out, "Output model JSON")->required();
    fitn->add_option("--patch", fn_patch, "Patch size (even, default 32)");
    fitn->add_option("--threshold", fn_thresh, "Sharpness selection threshold (default 0.75)");

    // report
    auto* rep = app.add_subcommand("report", "Summarize or verify an eval CSV");
    std::string rp_path;
    bool rp_check = false;
    rep->add_option("--report", rp_path, "CSV produced by eval")->required();
    rep->add_flag("--check", rp_check, "Verify the stored mean row against the per-image rows");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train) return cmd_train(train_config, train_stage, train_resume, train_seed, train_det, train_out);
        if (*sr) return cmd_sr(sr_ckpt, sr_in, sr_out, sr_backproject);
        if (*interp) return cmd_interp(in_psnr, in_gan, in_alpha, in_out);
        if (*eval) return cmd_eval(ev_sr, ev_hr, ev_ma, ev_border, ev_report, ev_niqe_model);
        if (*feat) return cmd_feat_stats(fs_img, fs_layers, fs_weights);
        if (*fitn) return cmd_fit_niqe(fn_corpus, fn_out, fn_patch, fn_thresh);
        if (*rep) return cmd_report(rp_path, rp_check);
    } catch (const ConfigError& e) {
        std::cerr << "error: config: " << e.what() << "\n";
        return kExitConfig;
    } catch (const TrainingDiverged& e) {
        std::cerr << "error: diverged: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: invalid-argument: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: runtime: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
