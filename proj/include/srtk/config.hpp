#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "srtk/discriminator.hpp"
#include "srtk/generator.hpp"
#include "srtk/losses.hpp"
#include "srtk/trainer.hpp"

namespace srtk {

// Minimal structured config reader: [section] headers, key = value lines,
// '#' comments, quoted strings, numbers, booleans and numeric arrays.
// Errors carry the offending field path (section.key).
class ConfigFile {
public:
    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    std::string require_string(const std::string& section, const std::string& key) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) const;
    bool get_bool(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<int64_t> get_int_list(const std::string& section, const std::string& key,
                                      std::vector<int64_t> fallback) const;

    const std::string& origin() const { return origin_; }
    std::string raw_text() const { return raw_; }

private:
    std::string lookup(const std::string& section, const std::string& key) const;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    std::string origin_, raw_;
};

// Fully resolved training configuration (sections: data, generator,
// discriminator, losses, schedule, logging).
struct TrainConfig {
    // data
    std::string manifest;
    std::string lr_dir;
    int scale = 4;
    bool augment = true;

    GeneratorConfig generator;
    DiscriminatorConfig discriminator;

    // losses
    LossWeights weights;
    FeatureMetric percep_metric = FeatureMetric::l1;
    FeatureTap tap{"conv5_4", true};
    std::string vgg_weights;

    // schedule (per stage; the stage is chosen on the command line)
    TrainSchedule psnr_schedule;
    TrainSchedule gan_schedule;
    double d_lr_scale = 1.0;
    int d_steps_per_g = 1;

    // logging
    int64_t log_every = 100;
    int64_t ckpt_every = 1000;
    std::string out_dir = "runs/default";

    static TrainConfig from_file(const ConfigFile& f);
};

}  // namespace srtk
