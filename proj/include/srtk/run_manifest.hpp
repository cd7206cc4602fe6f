#pragma once

#include <map>
#include <string>

namespace srtk {

// SHA-256 digests used for reproducibility records.
std::string sha256_hex(const void* data, size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file_hex(const std::string& path);

// Reproducibility record written next to every artifact a command produces.
struct RunManifest {
    std::string command;
    std::string code_version;
    std::string config_hash;            // sha256 of the resolved config text
    std::string dataset_manifest_hash;  // sha256 of the dataset manifest file
    std::map<std::string, std::string> external_weight_hashes;
    uint64_t seed = 0;
    std::string started_at;  // ISO-8601 UTC
    std::string finished_at;

    void mark_start();
    void mark_finish();
    void write(const std::string& path) const;
};

extern const char* kCodeVersion;

}  // namespace srtk
