#include "srtk/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "srtk/errors.hpp"

namespace srtk {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

// Strips a trailing comment that is not inside a quoted string.
std::string strip_comment(const std::string& s) {
    bool quoted = false;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '"') quoted = !quoted;
        if (s[i] == '#' && !quoted) return s.substr(0, i);
    }
    return s;
}

[[noreturn]] void bad_field(const std::string& section, const std::string& key,
                            const std::string& why) {
    throw ConfigError(section + "." + key + ": " + why);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_string(ss.str(), path);
}

ConfigFile ConfigFile::parse_string(const std::string& text, const std::string& origin) {
    ConfigFile cf;
    cf.origin_ = origin;
    cf.raw_ = text;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty())
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty section name");
            cf.sections_[section];
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        cf.sections_[section][key] = value;
    }
    return cf;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    return s != sections_.end() && s->second.count(key) > 0;
}

std::string ConfigFile::lookup(const std::string& section, const std::string& key) const {
    auto s = sections_.find(section);
    if (s == sections_.end()) return "";
    auto k = s->second.find(key);
    return k == s->second.end() ? "" : k->second;
}

std::string ConfigFile::get_string(const std::string& section, const std::string& key,
                                   const std::string& fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = lookup(section, key);
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
    return v;
}

std::string ConfigFile::require_string(const std::string& section, const std::string& key) const {
    if (!has(section, key)) bad_field(section, key, "missing required value");
    return get_string(section, key, "");
}

double ConfigFile::get_double(const std::string& section, const std::string& key,
                              double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = lookup(section, key);
    try {
        size_t used = 0;
        double d = std::stod(v, &used);
        if (trim(v.substr(used)).empty()) return d;
    } catch (...) {
    }
    bad_field(section, key, "expected a number, got '" + v + "'");
}

int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                            int64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string v = lookup(section, key);
    try {
        size_t used = 0;
        // Accept scientific notation for large iteration counts (2e5).
        double d = std::stod(v, &used);
        if (trim(v.substr(used)).empty() && d == std::floor(d)) return static_cast<int64_t>(d);
    } catch (...) {
    }
    bad_field(section, key, "expected an integer, got '" + v + "'");
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = lookup(section, key);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    bad_field(section, key, "expected true/false");
}

std::vector<int64_t> ConfigFile::get_int_list(const std::string& section, const std::string& key,
                                              std::vector<int64_t> fallback) const {
    if (!has(section, key)) return fallback;
    std::string v = lookup(section, key);
    if (v.size() < 2 || v.front() != '[' || v.back() != ']')
        bad_field(section, key, "expected a list like [1, 2, 3]");
    std::vector<int64_t> out;
    std::string body = v.substr(1, v.size() - 2);
    std::istringstream in(body);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        try {
            size_t used = 0;
            double d = std::stod(item, &used);
            if (!trim(item.substr(used)).empty() || d != std::floor(d)) throw std::exception();
            out.push_back(static_cast<int64_t>(d));
        } catch (...) {
            bad_field(section, key, "bad list element '" + item + "'");
        }
    }
    return out;
}

TrainConfig TrainConfig::from_file(const ConfigFile& f) {
    TrainConfig c;
    c.manifest = f.require_string("data", "manifest");
    c.lr_dir = f.get_string("data", "lr_dir", "");
    c.scale = static_cast<int>(f.get_int("data", "scale", 4));
    c.augment = f.get_bool("data", "augment", true);

    c.generator.block_type =
        GeneratorConfig::block_type_from_string(f.get_string("generator", "block_type", "rrdb"));
    c.generator.num_blocks = static_cast<int>(f.get_int("generator", "num_blocks", 23));
    c.generator.base_channels = static_cast<int>(f.get_int("generator", "base_channels", 64));
    c.generator.growth_channels = static_cast<int>(f.get_int("generator", "growth_channels", 32));
    c.generator.beta = static_cast<float>(f.get_double("generator", "beta", 0.2));
    c.generator.scale = c.scale;
    c.generator.init_scale = static_cast<float>(f.get_double("generator", "init_scale", 0.1));
    try {
        c.generator.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("generator: ") + e.what());
    }

    c.discriminator.base_channels =
        static_cast<int>(f.get_int("discriminator", "base_channels", 64));
    c.discriminator.fc_width = static_cast<int>(f.get_int("discriminator", "fc_width", 100));
    c.discriminator.use_norm = f.get_bool("discriminator", "use_norm", true);

    c.weights.lambda_adv = f.get_double("losses", "lambda_adv", 5e-3);
    c.weights.eta_content = f.get_double("losses", "eta_content", 1e-2);
    if (c.weights.lambda_adv < 0.0) throw ConfigError("losses.lambda_adv: must be nonnegative");
    if (c.weights.eta_content < 0.0) throw ConfigError("losses.eta_content: must be nonnegative");
    std::string metric = f.get_string("losses", "percep_metric", "l1");
    if (metric == "l1") c.percep_metric = FeatureMetric::l1;
    else if (metric == "l2") c.percep_metric = FeatureMetric::l2;
    else throw ConfigError("losses.percep_metric: expected l1 or l2");
    c.tap.layer = f.get_string("losses", "tap_layer", "conv5_4");
    c.tap.pre_activation = f.get_bool("losses", "pre_activation", true);
    c.vgg_weights = f.get_string("losses", "vgg_weights", "");

    c.psnr_schedule.stage = Stage::psnr;
    c.psnr_schedule.lr0 = f.get_double("schedule", "psnr_lr0", 2e-4);
    c.psnr_schedule.decay_every = f.get_int("schedule", "psnr_decay_every", 200000);
    c.psnr_schedule.batch = static_cast<int>(f.get_int("schedule", "batch", 16));
    c.psnr_schedule.hr_patch = static_cast<int>(f.get_int("schedule", "psnr_hr_patch", 192));
    c.psnr_schedule.total_iters = f.get_int("schedule", "psnr_total_iters", 300000);
    c.psnr_schedule.beta1 = f.get_double("schedule", "beta1", 0.9);
    c.psnr_schedule.beta2 = f.get_double("schedule", "beta2", 0.999);

    c.gan_schedule.stage = Stage::gan;
    c.gan_schedule.lr0 = f.get_double("schedule", "gan_lr0", 1e-4);
    c.gan_schedule.decay_points =
        f.get_int_list("schedule", "gan_decay_points", {50000, 100000, 200000, 300000});
    c.gan_schedule.batch = c.psnr_schedule.batch;
    c.gan_schedule.hr_patch = static_cast<int>(f.get_int("schedule", "gan_hr_patch", 128));
    c.gan_schedule.total_iters = f.get_int("schedule", "gan_total_iters", 400000);
    c.gan_schedule.beta1 = c.psnr_schedule.beta1;
    c.gan_schedule.beta2 = c.psnr_schedule.beta2;
    c.d_lr_scale = f.get_double("schedule", "d_lr_scale", 1.0);
    c.d_steps_per_g = static_cast<int>(f.get_int("schedule", "d_steps_per_g", 1));

    try {
        c.psnr_schedule.validate();
        c.gan_schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("schedule: ") + e.what());
    }
    if (c.psnr_schedule.hr_patch % c.scale != 0)
        throw ConfigError("schedule.psnr_hr_patch: must be divisible by data.scale");
    if (c.gan_schedule.hr_patch % c.scale != 0)
        throw ConfigError("schedule.gan_hr_patch: must be divisible by data.scale");
    if (c.gan_schedule.hr_patch % 32 != 0)
        throw ConfigError("schedule.gan_hr_patch: must be a multiple of 32 (critic downsampling)");

    c.log_every = f.get_int("logging", "log_every", 100);
    c.ckpt_every = f.get_int("logging", "ckpt_every", 1000);
    c.out_dir = f.get_string("logging", "out_dir", "runs/default");
    return c;
}

}  // namespace srtk
