#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "srtk/tensor.hpp"

namespace srtk {

// Ordered collection of named arrays plus run metadata. Iteration order is
// the declaration order of the owning model and survives save/load intact.
struct ParameterSet {
    struct Entry {
        std::string name;
        Tensor value;
    };

    std::vector<Entry> entries;
    std::string stage;          // psnr | gan | disc | interp(a) | vgg | state
    int64_t iteration = 0;
    nlohmann::json config;      // model configuration echo
    nlohmann::json extra;       // small scalar metadata (optimizer step counts, seeds)

    void add(std::string name, Tensor value) {
        entries.push_back(Entry{std::move(name), std::move(value)});
    }
    const Entry* find(const std::string& name) const {
        for (const auto& e : entries)
            if (e.name == name) return &e;
        return nullptr;
    }
    int64_t total_elements() const {
        int64_t n = 0;
        for (const auto& e : entries) n += e.value.numel();
        return n;
    }
};

// Binary container: magic, JSON header (stage, iteration, config, tensor
// directory), then raw little-endian float32 payloads in directory order.
// Writes go through a temp file and an atomic rename.
void save_param_set(const std::string& path, const ParameterSet& ps);
ParameterSet load_param_set(const std::string& path);

// FNV-1a over names, shapes and raw float bits. Used for bit-equivalence
// checks and run manifests.
uint64_t param_set_hash(const ParameterSet& ps);

}  // namespace srtk
