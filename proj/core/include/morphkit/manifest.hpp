#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace morphkit {

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

struct ManifestArtifact {
    std::string path;  // relative, '/'-separated
    std::uintmax_t bytes = 0;
    std::string sha256;
};

struct ManifestInfo {
    std::string command;
    std::uint64_t master_seed = 0;
    // Verbatim config text; empty when the run used built-in defaults.
    std::string config_text;
    // Optional JSON object text merged under "summary".
    std::string summary_json;
};

inline constexpr std::string_view kManifestName = "manifest.json";

// Every regular file under root except the manifest itself, sorted by path.
std::vector<ManifestArtifact> collect_artifacts(const std::filesystem::path& root);

// Writes root/manifest.json. Contents depend only on info and the files, so
// identical runs give identical manifests.
void write_manifest(const std::filesystem::path& root, const ManifestInfo& info);

// Manifest document for an explicit artifact list.
std::string manifest_text(const ManifestInfo& info, const std::vector<ManifestArtifact>& artifacts);

// Digest of one file recorded under `name`.
ManifestArtifact describe_file(const std::string& name, const std::filesystem::path& path);

}  // namespace morphkit
