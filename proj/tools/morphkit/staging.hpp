#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace morphkit::cli {

// Output written under a hidden sibling and renamed into place on commit;
// destroyed uncommitted, the staged files are removed.
class StagedDir {
public:
    StagedDir(std::filesystem::path final_dir, bool force);
    ~StagedDir();
    StagedDir(const StagedDir&) = delete;
    StagedDir& operator=(const StagedDir&) = delete;

    const std::filesystem::path& path() const noexcept { return tmp_; }
    void commit();

private:
    std::filesystem::path final_;
    std::filesystem::path tmp_;
    bool committed_ = false;
};

// Same contract for a group of files that share a directory.
class StagedFiles {
public:
    StagedFiles(std::vector<std::filesystem::path> finals, bool force);
    ~StagedFiles();
    StagedFiles(const StagedFiles&) = delete;
    StagedFiles& operator=(const StagedFiles&) = delete;

    // Staging path for finals[i].
    const std::filesystem::path& path(std::size_t i) const { return tmps_.at(i); }
    const std::vector<std::filesystem::path>& finals() const noexcept { return finals_; }
    void commit();

private:
    std::vector<std::filesystem::path> finals_;
    std::vector<std::filesystem::path> tmps_;
    bool committed_ = false;
};

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace morphkit::cli
