#include "srtk/param_set.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace srtk {

namespace {
constexpr char kMagic[8] = {'S', 'R', 'T', 'K', 'C', 'P', '0', '1'};
}

void save_param_set(const std::string& path, const ParameterSet& ps) {
    nlohmann::json header;
    header["format_version"] = 1;
    header["stage"] = ps.stage;
    header["iteration"] = ps.iteration;
    header["config"] = ps.config;
    header["extra"] = ps.extra;
    auto& dir = header["tensors"] = nlohmann::json::array();
    for (const auto& e : ps.entries) {
        dir.push_back({{"name", e.name}, {"shape", e.value.shape()}});
    }
    std::string hs = header.dump();

    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("checkpoint: cannot write " + tmp);
        f.write(kMagic, 8);
        uint64_t len = hs.size();
        f.write(reinterpret_cast<const char*>(&len), 8);
        f.write(hs.data(), static_cast<std::streamsize>(hs.size()));
        for (const auto& e : ps.entries) {
            f.write(reinterpret_cast<const char*>(e.value.data()),
                    static_cast<std::streamsize>(e.value.numel() * sizeof(float)));
        }
        if (!f) throw std::runtime_error("checkpoint: write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

ParameterSet load_param_set(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("checkpoint: cannot open " + path);
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);
    uint64_t len = 0;
    f.read(reinterpret_cast<char*>(&len), 8);
    if (!f || len == 0 || len > (1u << 30))
        throw std::runtime_error("checkpoint: bad header length in " + path);
    std::string hs(len, '\0');
    f.read(hs.data(), static_cast<std::streamsize>(len));
    if (!f) throw std::runtime_error("checkpoint: truncated header in " + path);
    nlohmann::json header = nlohmann::json::parse(hs, nullptr, /*allow_exceptions=*/false);
    if (header.is_discarded()) throw std::runtime_error("checkpoint: corrupt header in " + path);
    if (header.value("format_version", -1) != 1)
        throw std::runtime_error("checkpoint: unsupported format version in " + path);

    ParameterSet ps;
    ps.stage = header.value("stage", "");
    ps.iteration = header.value("iteration", int64_t{0});
    ps.config = header.value("config", nlohmann::json::object());
    ps.extra = header.value("extra", nlohmann::json::object());
    for (const auto& t : header.at("tensors")) {
        std::string name = t.at("name").get<std::string>();
        std::vector<int> shape = t.at("shape").get<std::vector<int>>();
        Tensor v(shape);
        f.read(reinterpret_cast<char*>(v.data()),
               static_cast<std::streamsize>(v.numel() * sizeof(float)));
        if (!f) throw std::runtime_error("checkpoint: truncated tensor " + name + " in " + path);
        ps.add(std::move(name), std::move(v));
    }
    return ps;
}

uint64_t param_set_hash(const ParameterSet& ps) {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, size_t n) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& e : ps.entries) {
        mix(e.name.data(), e.name.size());
        for (int d : e.value.shape()) mix(&d, sizeof(d));
        mix(e.value.data(), static_cast<size_t>(e.value.numel()) * sizeof(float));
    }
    return h;
}

}  // namespace srtk
