#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "morphkit/imaging.hpp"
#include "morphkit/toy_oracle.hpp"

namespace morphkit {

enum class EntropyAggregation { mean, max };

EntropyAggregation parse_aggregation(std::string_view name);
std::string_view aggregation_name(EntropyAggregation a) noexcept;

struct StripConfig {
    int n_overlays = 100;
    double frr_target = 0.01;
    double blend = 0.5;
    EntropyAggregation aggregation = EntropyAggregation::mean;

    void validate() const;
};

// blend * x + (1 - blend) * benign, clamped. benign is resized to x first
// when the dimensions differ.
ImageBuffer superimpose(const ImageBuffer& x, const ImageBuffer& benign, double blend);

// Shannon entropy in nats; zero-probability terms contribute nothing.
double shannon_entropy(std::span<const double> p) noexcept;

// Entropy of the detector's class scores on the crop at target_box, over
// n_overlays benign images drawn (without replacement) under `seed`.
double strip_score(const ToyDetector& det, const ImageBuffer& x, const BBox& target_box,
                   std::span<const ImageBuffer> benign_set, const StripConfig& cfg, std::uint64_t seed,
                   std::size_t workers = 1);

struct StripFrame {
    const ImageBuffer* image = nullptr;
    BBox box;
};

// One score per frame; frame i uses the seed derived from (seed, i).
std::vector<double> strip_scores(const ToyDetector& det, std::span<const StripFrame> frames,
                                 std::span<const ImageBuffer> benign_set, const StripConfig& cfg, std::uint64_t seed,
                                 std::size_t workers = 1);

// The frr_target quantile of benign entropies. Inputs with entropy strictly
// below the threshold are flagged as trojaned.
double calibrate_threshold(std::span<const double> benign_entropies, double frr_target);

inline bool strip_flags(double entropy, double threshold) noexcept { return entropy < threshold; }

// Fraction of entropies flagged at the threshold.
double flag_rate(std::span<const double> entropies, double threshold) noexcept;

struct RocCurve {
    // (false positive rate, true positive rate), nondecreasing in both.
    std::vector<std::pair<double, double>> points;
    double auc = 0.0;
};

// Trojan entropies are the positives. Throws ArgumentError on empty input.
RocCurve roc_auc(std::span<const double> benign_entropies, std::span<const double> trojan_entropies);

std::string roc_csv(const RocCurve& roc);
std::string roc_svg(const RocCurve& roc);

}  // namespace morphkit
