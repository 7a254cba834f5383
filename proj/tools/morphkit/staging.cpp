#include "staging.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <unistd.h>

#include "morphkit/error.hpp"

namespace morphkit::cli {
namespace fs = std::filesystem;
namespace {

fs::path staging_name(const fs::path& final_path) {
    const fs::path parent = final_path.has_parent_path() ? final_path.parent_path() : fs::path(".");
    return parent / ("." + final_path.filename().string() + ".tmp-" + std::to_string(::getpid()));
}

void check_target(const fs::path& p, bool force) {
    if (p.filename().empty()) throw ValidationError("output path '" + p.string() + "' has no file name");
    if (fs::exists(p) && !force)
        throw ValidationError("output '" + p.string() + "' already exists (use --force to replace it)");
}

}  // namespace

StagedDir::StagedDir(fs::path final_dir, bool force) : final_(std::move(final_dir)) {
    if (final_.filename().empty()) final_ = final_.parent_path();
    check_target(final_, force);
    if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
    tmp_ = staging_name(final_);
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
}

StagedDir::~StagedDir() {
    if (!committed_) {
        std::error_code ec;
        fs::remove_all(tmp_, ec);
    }
}

void StagedDir::commit() {
    if (fs::exists(final_)) fs::remove_all(final_);
    fs::rename(tmp_, final_);
    committed_ = true;
}

StagedFiles::StagedFiles(std::vector<fs::path> finals, bool force) : finals_(std::move(finals)) {
    for (const auto& f : finals_) {
        check_target(f, force);
        if (f.has_parent_path()) fs::create_directories(f.parent_path());
        tmps_.push_back(staging_name(f));
    }
}

StagedFiles::~StagedFiles() {
    if (!committed_) {
        std::error_code ec;
        for (const auto& t : tmps_) fs::remove(t, ec);
    }
}

void StagedFiles::commit() {
    for (std::size_t i = 0; i < finals_.size(); ++i) fs::rename(tmps_[i], finals_[i]);
    committed_ = true;
}

void write_text_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace morphkit::cli
