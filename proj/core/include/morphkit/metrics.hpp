#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "morphkit/annotation_io.hpp"

namespace morphkit {

// ---- matching ---------------------------------------------------------------

struct Matching {
    // Detection indices by descending confidence (stable for ties).
    std::vector<std::size_t> order;
    // Per detection (original index): matched ground-truth index or -1.
    std::vector<int> matched_gt;

    std::size_t true_positives() const noexcept;
    std::size_t false_positives() const noexcept { return matched_gt.size() - true_positives(); }
};

Matching match_detections(std::span<const Detection> dets, std::span<const ObjectAnnotation> gts, double iou_thr);

// ---- average precision ------------------------------------------------------

struct RankedHit {
    double confidence = 0.0;
    bool true_positive = false;
};

// 101-point interpolated AP over hits already in rank order.
double average_precision(std::span<const RankedHit> ranked, std::size_t n_gt);

inline constexpr std::array<double, 10> kCocoThresholds = {0.50, 0.55, 0.60, 0.65, 0.70,
                                                           0.75, 0.80, 0.85, 0.90, 0.95};

// Per-class AP at one IoU threshold; nullopt for classes without ground truth.
std::vector<std::optional<double>> class_average_precision(const DetectionLog& log, const Dataset& ds,
                                                           double iou_thr, std::size_t workers = 1);

struct ClassAp {
    std::string name;
    std::size_t n_gt = 0;
    std::optional<double> ap_50;
    std::optional<double> ap_75;
    std::optional<double> ap_50_95;
};

struct AsrCounts {
    std::size_t frames = 0;       // frames whose selector picked an object
    std::size_t identified = 0;   // denominator
    std::size_t success = 0;      // numerator
    std::optional<double> ratio() const noexcept;
};

struct DistanceBin {
    double lo_m = 0.0;
    double hi_m = 0.0;
    AsrCounts counts;
};

struct DistanceCurve {
    std::vector<DistanceBin> bins;
    // Largest distance at which the triggered object was identified.
    std::optional<double> first_detected_m;
};

struct EvalReport {
    double map_50 = 0.0;
    double map_75 = 0.0;
    double map_50_95 = 0.0;
    std::vector<ClassAp> per_class;
    std::size_t frames = 0;
    std::size_t gt_objects = 0;
    std::size_t detections = 0;
    std::size_t matches_50 = 0;
    std::optional<AsrCounts> asr;
    std::optional<DistanceCurve> asr_by_distance;
};

// mAP at 0.5, 0.75 and averaged over 0.50:0.95. Throws EvaluationError on an
// empty dataset or one without any ground truth.
EvalReport map_at(const DetectionLog& log, const Dataset& ds, std::size_t workers = 1);

std::string report_to_json(const EvalReport& report);

// ---- attack success rate ----------------------------------------------------

// Picks the triggered object's annotation index in a scene, if any.
using TriggeredSelector = std::function<std::optional<std::size_t>(const Scene&)>;

// The first annotation flagged `triggered`.
std::optional<std::size_t> flagged_trigger(const Scene& scene);

AsrCounts asr_counts(const DetectionLog& log, const Dataset& ds, int target,
                     const TriggeredSelector& select = flagged_trigger);

// Throws EvaluationError when no frame is selected or none is identified.
double asr(const DetectionLog& log, const Dataset& ds, int target, const TriggeredSelector& select = flagged_trigger);

// Bins are [edges[i], edges[i+1]); edges must be strictly increasing.
DistanceCurve asr_vs_distance(const DetectionLog& log, const Dataset& ds, int target, std::span<const double> edges_m,
                              const TriggeredSelector& select = flagged_trigger);

// ---- injection-rate sweep ---------------------------------------------------

struct SweepRow {
    double rate = 0.0;
    double map_50 = 0.0;
    AsrCounts asr;
};

// One full poison -> train -> evaluate cycle for a rate and an isolated seed.
using SweepCycle = std::function<SweepRow(double rate, std::uint64_t seed)>;

std::uint64_t sweep_seed(std::uint64_t master, double rate);

// Rows come back in the order of `rates`.
std::vector<SweepRow> injection_sweep(std::span<const double> rates, std::uint64_t seed, const SweepCycle& cycle);

std::string sweep_csv(std::span<const SweepRow> rows);
std::string sweep_svg(std::span<const SweepRow> rows);

}  // namespace morphkit
