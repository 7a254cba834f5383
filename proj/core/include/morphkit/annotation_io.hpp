#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "morphkit/imaging.hpp"

namespace morphkit {

struct ObjectAnnotation {
    BBox box;
    int class_id = 0;
    std::optional<double> distance_m;
    // Composited by the poisoner rather than present in the source frame.
    bool is_loose = false;
    // Carries a trigger; lets ASR selectors find the attacked object.
    bool triggered = false;

    friend bool operator==(const ObjectAnnotation&, const ObjectAnnotation&) = default;
};

struct Scene {
    std::string scene_id;
    ImageBuffer image;
    std::vector<ObjectAnnotation> annotations;

    friend bool operator==(const Scene&, const Scene&) = default;
};

struct Dataset {
    std::vector<std::string> class_names;
    std::vector<Scene> scenes;

    int num_classes() const noexcept { return static_cast<int>(class_names.size()); }
    const Scene* find(std::string_view scene_id) const noexcept;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct Detection {
    BBox box;
    int class_id = 0;
    double confidence = 0.0;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct FrameDetections {
    std::string scene_id;
    std::int64_t frame_index = 0;
    std::vector<Detection> detections;

    friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

// Detector output for a sequence of frames, kept sorted by frame_index.
struct DetectionLog {
    std::vector<FrameDetections> frames;

    const FrameDetections* find(std::string_view scene_id) const noexcept;
    std::size_t record_count() const noexcept;
    void sort_frames();

    friend bool operator==(const DetectionLog&, const DetectionLog&) = default;
};

enum class DatasetFormat { native, coco_json, yolo_txt };

DatasetFormat parse_dataset_format(std::string_view name);
std::string_view format_name(DatasetFormat format) noexcept;

// Scene ids double as file stems: [A-Za-z0-9_.-]+, not starting with '.'.
bool valid_scene_id(std::string_view id) noexcept;

// Throws ValidationError naming the scene on the first broken invariant.
void validate_scene(const Scene& scene, int num_classes);
void validate_dataset(const Dataset& ds);
void validate_detections(const DetectionLog& log, const Dataset& ds);

Dataset load_dataset(const std::filesystem::path& root, DatasetFormat format, std::size_t workers = 1);
void write_dataset(const Dataset& ds, const std::filesystem::path& root, DatasetFormat format,
                   std::size_t workers = 1);

// When `paired` is given every scene_id must resolve in it.
DetectionLog load_detections(const std::filesystem::path& path, const Dataset* paired = nullptr);
void write_detections(const DetectionLog& log, const std::filesystem::path& path);

std::vector<std::string> read_class_names(const std::filesystem::path& path);
void write_class_names(const std::vector<std::string>& names, const std::filesystem::path& path);

// Fixed six-decimal rendering used by every writer in this module.
std::string format_fixed6(double v);

}  // namespace morphkit
