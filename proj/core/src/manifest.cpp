#include "morphkit/manifest.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "morphkit/error.hpp"

namespace morphkit {
namespace {

using json = nlohmann::ordered_json;

struct DigestCtx {
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx{EVP_MD_CTX_new(), &EVP_MD_CTX_free};

    DigestCtx() {
        if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
    }
    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx.get(), data, n) != 1) throw Error("sha256: update failed");
    }
    std::string hex() {
        std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw Error("sha256: final failed");
        static constexpr char kHex[] = "0123456789abcdef";
        std::string out;
        for (unsigned int i = 0; i < len; ++i) {
            out.push_back(kHex[md[i] >> 4]);
            out.push_back(kHex[md[i] & 0xF]);
        }
        return out;
    }
};

json manifest_json(const ManifestInfo& info, const std::vector<ManifestArtifact>& artifacts) {
    json m;
    m["format"] = "morphkit-manifest";
    m["version"] = 1;
    m["command"] = info.command;
    m["master_seed"] = info.master_seed;
    m["config_sha256"] = sha256_hex(info.config_text);
    m["config"] = info.config_text;
    if (!info.summary_json.empty()) m["summary"] = json::parse(info.summary_json);
    json arts = json::array();
    for (const auto& a : artifacts) arts.push_back({{"path", a.path}, {"bytes", a.bytes}, {"sha256", a.sha256}});
    m["artifacts"] = std::move(arts);
    return m;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
    DigestCtx d;
    d.update(bytes.data(), bytes.size());
    return d.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    DigestCtx d;
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) d.update(buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    return d.hex();
}

std::vector<ManifestArtifact> collect_artifacts(const std::filesystem::path& root) {
    std::vector<ManifestArtifact> out;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = entry.path().lexically_relative(root).generic_string();
        if (rel == kManifestName) continue;
        out.push_back({rel, entry.file_size(), sha256_file(entry.path())});
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.path < b.path; });
    return out;
}

void write_manifest(const std::filesystem::path& root, const ManifestInfo& info) {
    write_text(root / kManifestName, manifest_text(info, collect_artifacts(root)));
}

std::string manifest_text(const ManifestInfo& info, const std::vector<ManifestArtifact>& artifacts) {
    return manifest_json(info, artifacts).dump(2) + "\n";
}

ManifestArtifact describe_file(const std::string& name, const std::filesystem::path& path) {
    return {name, std::filesystem::file_size(path), sha256_file(path)};
}

}  // namespace morphkit
