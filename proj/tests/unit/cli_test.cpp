#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(MORPHKIT_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("morphkit_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("help and usage errors") {
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("eval --gt x") == 2);
}

TEST_CASE("empty input directory is rejected with exit code 2") {
    TempDir dir("empty");
    fs::create_directories(dir.path / "in");
    CHECK(run("poison --in " + (dir.path / "in").string() + " --out " + (dir.path / "out").string()) == 2);
    CHECK_FALSE(fs::exists(dir.path / "out"));
    CHECK(run("oracle train --in " + (dir.path / "missing").string() + " --out " + (dir.path / "d.json").string()) == 2);
}

TEST_CASE("bad config is rejected with exit code 2") {
    TempDir dir("badcfg");
    std::ofstream(dir.path / "run.toml") << "[attack]\ninjection_rate = 7\n";
    CHECK(run("synth --config " + (dir.path / "run.toml").string() + " --out " + (dir.path / "ds").string()) == 2);
}

TEST_CASE("synth and poison write manifests and refuse to overwrite") {
    TempDir dir("synth");
    const std::string ds = (dir.path / "ds").string();
    REQUIRE(run("synth --scenes 12 --out " + ds) == 0);
    CHECK(fs::exists(dir.path / "ds" / "manifest.json"));
    CHECK(run("synth --scenes 12 --out " + ds) == 2);
    CHECK(run("synth --scenes 12 --force --out " + ds) == 0);
    REQUIRE(run("poison --in " + ds + " --out " + (dir.path / "p").string()) == 0);
    CHECK(fs::exists(dir.path / "p" / "plan.json"));
    CHECK(fs::exists(dir.path / "p" / "manifest.json"));
    for (const auto& e : fs::directory_iterator(dir.path)) CHECK(e.path().filename().string().rfind('.', 0) != 0);
}

TEST_CASE("report merges sweep tables sorted by rate") {
    TempDir dir("report");
    const std::string header = "rate,map_50,asr,asr_success,asr_identified,asr_frames\n";
    std::ofstream(dir.path / "a.csv") << header << "0.300000,0.4,0.9,9,10,12\n0.050000,0.5,0.1,1,10,12\n";
    std::ofstream(dir.path / "b.csv") << header << "0.100000,0.45,0.5,5,10,12\n0.050000,0.51,0.2,2,10,12\n";
    REQUIRE(run("report --in " + (dir.path / "a.csv").string() + " " + (dir.path / "b.csv").string() + " --out " +
                (dir.path / "m.csv").string()) == 0);
    // Stable order by rate: ties keep input order (a before b).
    const std::string expect = header +
                               "0.050000,0.5,0.1,1,10,12\n"
                               "0.050000,0.51,0.2,2,10,12\n"
                               "0.100000,0.45,0.5,5,10,12\n"
                               "0.300000,0.4,0.9,9,10,12\n";
    CHECK(oracle::slurp(dir.path / "m.csv") == expect);

    std::ofstream(dir.path / "bad.csv") << "x,y\n1,2\n";
    CHECK(run("report --in " + (dir.path / "bad.csv").string() + " --out " + (dir.path / "n.csv").string()) == 2);
}
