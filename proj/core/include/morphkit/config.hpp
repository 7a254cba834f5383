#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morphkit/attack.hpp"
#include "morphkit/scene_poisoner.hpp"
#include "morphkit/strip.hpp"
#include "morphkit/toy_oracle.hpp"

namespace morphkit {

struct OracleConfig {
    SyntheticSceneSpec scenes = SyntheticSceneSpec::default_spec(8);
    // Placement law of the synthetic corpus, independent of the attack grid.
    GridConfig grid = [] {
        GridConfig g = GridConfig::with_classes(8, 3);
        g.per_cell_prob = 0.5;
        return g;
    }();
    ToyDetectorParams detector;
    int train_scenes = 500;
    int test_scenes = 200;
};

struct EvalConfig {
    // ASR-vs-distance bin edges in metres.
    std::vector<double> distance_bins_m{0.0, 10.0, 15.0, 20.0, 30.0, 45.0, 90.0};
    // Test-time trigger rendering: augmentation ranges and variant jitter
    // widened by this factor about their identity values.
    double test_widen = 1.5;
};

struct SweepConfig {
    std::vector<double> rates{0.05, 0.10, 0.15, 0.20, 0.30};
    // Independent replicates averaged per rate.
    int seeds = 1;
};

struct E2eConfig {
    int seeds = 5;
    // Benign and triggered frames scored for the informational STRIP AUC.
    int strip_frames = 100;
};

struct RunConfig {
    AttackConfig attack;
    // Empty selects the built-in patch at trigger.size_r.
    std::filesystem::path trigger_patch;
    std::filesystem::path in_root;
    std::filesystem::path out_root;
    OracleConfig oracle;
    EvalConfig eval;
    StripConfig strip;
    SweepConfig sweep;
    E2eConfig e2e;
    std::uint64_t master_seed = 20240915;
    // Verbatim text the config was parsed from (empty for defaults).
    std::string source;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

// Defaults for the desk-scale experiment; the attack seed is derived from
// master_seed.
RunConfig default_run_config();

// Unknown sections or keys are errors. Relative paths resolve against
// base_dir; the trigger patch, when named, is loaded here.
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir = {},
                           const std::string& origin = "<config>");
RunConfig load_run_config(const std::filesystem::path& path);

// Replaces master_seed and re-derives every seed that depends on it.
void set_master_seed(RunConfig& cfg, std::uint64_t seed);

// MORPHKIT_SEED, when set; a malformed value is a ConfigError.
std::optional<std::uint64_t> seed_from_env();

}  // namespace morphkit
