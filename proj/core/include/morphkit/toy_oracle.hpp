#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morphkit/annotation_io.hpp"
#include "morphkit/features.hpp"
#include "morphkit/scene_poisoner.hpp"

namespace morphkit {

// ---- synthetic shape scenes -------------------------------------------------

enum class ShapeKind { circle, square, triangle, diamond, cross, ring, hexagon, bar };

ShapeKind parse_shape(std::string_view name);
std::string_view shape_name(ShapeKind kind) noexcept;

struct ShapeClass {
    std::string name;
    ShapeKind kind = ShapeKind::circle;
    std::array<float, 3> color{};
};

struct SyntheticSceneSpec {
    int canvas = 128;
    std::vector<ShapeClass> classes;
    // Value-noise background: base level, lattice amplitude and spacing, and
    // per-pixel grain.
    double background_level = 0.30;
    double background_amplitude = 0.08;
    int background_lattice = 16;
    double background_grain = 0.02;
    // Per-object perturbations of the class prototype.
    double color_jitter = 0.04;
    double rotation_jitter_deg = 8.0;
    int render_size = 48;
    // Shape extent as a fraction of the rendered square.
    double shape_fill = 0.86;
    // Pinhole distance model for loose objects: distance = ref_m * ref_px / side.
    double distance_ref_m = 20.0;
    double distance_ref_px = 32.0;

    int n_classes() const noexcept { return static_cast<int>(classes.size()); }
    void validate() const;
    static SyntheticSceneSpec default_spec(int n_classes = 8);
};

ImageBuffer render_background(const SyntheticSceneSpec& spec, int width, int height, std::uint64_t seed);
ImageBuffer render_object(const SyntheticSceneSpec& spec, int class_id, std::uint64_t seed);

// One freshly rendered instance per class.
std::vector<LibraryObject> render_library(const SyntheticSceneSpec& spec, std::uint64_t seed);

// Scenes "<prefix>NNNNN": textured background plus grid-placed shapes.
Dataset gen_synthetic_dataset(const SyntheticSceneSpec& spec, int n_scenes, const GridConfig& cfg,
                              std::uint64_t seed, std::string_view prefix = "scene", std::size_t workers = 1);

// ---- nearest-centroid detector --------------------------------------------

struct ToyDetectorParams {
    FeatureParams features;
    double beta = 20.0;
    double nms_iou = 0.4;
    double score_floor = 0.5;
    std::vector<double> scales{0.5, 1.0, 2.0};
    // 0 selects window / 4.
    int stride = 0;
    int negatives_per_object = 10;
    double negative_max_iou = 0.1;
    std::uint64_t seed = 0x5eed;

    int effective_stride() const noexcept { return stride > 0 ? stride : features.window / 4; }
    void validate() const;
    friend bool operator==(const ToyDetectorParams&, const ToyDetectorParams&) = default;
};

struct ToyDetector {
    ToyDetectorParams params;
    std::vector<std::string> class_names;
    std::vector<FeatureVector> centroids;
    FeatureVector background;

    int num_classes() const noexcept { return static_cast<int>(centroids.size()); }
    friend bool operator==(const ToyDetector&, const ToyDetector&) = default;
};

ToyDetector train(const Dataset& ds, const ToyDetectorParams& params = {});

// softmax(-beta * distance) over [class centroids..., background].
std::vector<double> scores_from_feature(const ToyDetector& det, std::span<const double> feature);
std::vector<double> class_scores(const ToyDetector& det, const ImageBuffer& crop);

std::vector<Detection> detect(const ToyDetector& det, const ImageBuffer& img);

// Greedy class-agnostic suppression; input order is the priority order.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// Deterministic detection log over a dataset (frame_index = scene position).
DetectionLog detect_dataset(const ToyDetector& det, const Dataset& ds, std::size_t workers = 1);

void save_detector(const ToyDetector& det, const std::filesystem::path& path);
ToyDetector load_detector(const std::filesystem::path& path);
std::string detector_to_json(const ToyDetector& det);

}  // namespace morphkit
