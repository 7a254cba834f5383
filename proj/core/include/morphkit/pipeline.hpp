#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morphkit/config.hpp"
#include "morphkit/metrics.hpp"

namespace morphkit {

// Digital-stamp baseline: s = 1, no augmentation, no variants, no grid
// poisoning. Everything else (target, rate, placement, size) is shared.
AttackConfig digital_baseline(const AttackConfig& cfg);

// Test-time trigger rendering: the attack's physical trigger with variant
// jitter widened by `widen`.
AttackConfig physical_test_attack(const AttackConfig& cfg, double widen);

// Synthetic train/test corpora plus the triggered copy of the test split.
struct ExperimentData {
    Dataset train;
    Dataset test;
    Dataset test_triggered;
};

ExperimentData make_experiment_data(const RunConfig& cfg, std::uint64_t seed, std::size_t workers = 1);

struct ArmResult {
    double map_50 = 0.0;
    AsrCounts asr;
    std::size_t poisoned_objects = 0;
    std::size_t grid_scenes = 0;
};

// Poison `data.train` with `attack`, train, and evaluate on the clean and
// triggered test splits.
ArmResult run_arm(const ExperimentData& data, const AttackConfig& attack, const RunConfig& cfg,
                  std::uint64_t detector_seed, std::size_t workers = 1, ToyDetector* trained = nullptr);

struct E2eReplicate {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    double clean_map_50 = 0.0;
    ArmResult morphing;
    ArmResult baseline;
    // STRIP against the MORPHING-poisoned detector; informational.
    double strip_auc = 0.0;
};

struct E2eSummary {
    std::vector<E2eReplicate> replicates;
    double clean_map_50 = 0.0;
    double morphing_map_50 = 0.0;
    double baseline_map_50 = 0.0;
    // Mean over replicates; a replicate without identified frames counts 0.
    double morphing_asr = 0.0;
    double baseline_asr = 0.0;
    double strip_auc = 0.0;

    bool parity_ok() const noexcept { return std::abs(clean_map_50 - morphing_map_50) <= 0.03; }
    bool asr_ok() const noexcept { return morphing_asr >= 0.80; }
    bool gap_ok() const noexcept { return morphing_asr - baseline_asr >= 0.20; }
};

std::uint64_t e2e_replicate_seed(std::uint64_t master, std::size_t index);

E2eSummary run_e2e(const RunConfig& cfg, std::size_t workers = 1);

std::string e2e_csv(const E2eSummary& s);
std::string e2e_json(const E2eSummary& s);

struct SweepResult {
    std::vector<SweepRow> rows;  // counts pooled and mAP averaged over replicates
    double clean_map_50 = 0.0;
};

SweepResult run_sweep(const RunConfig& cfg, std::size_t workers = 1);

std::string sweep_json(const SweepResult& r);

// Spearman rank correlation with average ranks for ties.
double spearman_rho(std::span<const double> x, std::span<const double> y);

}  // namespace morphkit
