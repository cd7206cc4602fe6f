// Regenerates the bundled demo data: a pristine synthetic corpus, the fitted
// NIQE model (assets/niqe_model.json) and a small paired train/eval corpus.
// Everything is deterministic, so the committed assets can be reproduced.
//
//   make_demo_data --out <repo-root>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "srtk/niqe.hpp"
#include "srtk/png_io.hpp"
#include "srtk/synth.hpp"

namespace fs = std::filesystem;
using namespace srtk;

int main(int argc, char** argv) {
    CLI::App app{"Regenerate bundled demo data"};
    std::string out = ".";
    int pristine_count = 12, demo_count = 4;
    app.add_option("--out", out, "Repository root to write under");
    app.add_option("--pristine-count", pristine_count, "Pristine corpus size");
    app.add_option("--demo-count", demo_count, "Demo training corpus size");
    CLI11_PARSE(app, argc, argv);

    fs::create_directories(fs::path(out) / "assets" / "pristine");
    fs::create_directories(fs::path(out) / "assets" / "demo");

    std::vector<Tensor> pristine;
    for (int i = 0; i < pristine_count; ++i) {
        Tensor img = synth_image(9000 + static_cast<uint64_t>(i), 128, 128);
        pristine.push_back(img);
        save_png((fs::path(out) / "assets" / "pristine" / ("p" + std::to_string(i) + ".png")).string(),
                 img);
    }
    NiqeModel model = fit_niqe_model(pristine, 32, 0.75);
    model.save_json((fs::path(out) / "assets" / "niqe_model.json").string());
    std::cout << "wrote assets/niqe_model.json (" << pristine.size() << " pristine images)\n";

    std::ofstream manifest((fs::path(out) / "assets" / "demo" / "train.txt").string());
    for (int i = 0; i < demo_count; ++i) {
        std::string name = "demo" + std::to_string(i) + ".png";
        save_png((fs::path(out) / "assets" / "demo" / name).string(),
                 synth_image(9100 + static_cast<uint64_t>(i), 192, 192));
        manifest << name << "\n";
    }
    std::cout << "wrote assets/demo/ (" << demo_count << " images + train.txt)\n";
    return 0;
}
