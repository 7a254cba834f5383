#pragma once

#include <cstdint>
#include <functional>
#include <set>
#include <span>
#include <vector>

#include "morphkit/annotation_io.hpp"
#include "morphkit/rng.hpp"

namespace morphkit {

struct GridConfig {
    int k = 3;
    int num_classes_n = 51;
    double per_cell_prob = 1.0 / 51.0;
    // Max offset (px) by which a placed box may leave its cell.
    int jitter = 4;
    // Placed objects are scaled so their longer side is this fraction of the
    // shorter cell side, drawn uniformly.
    double size_min = 0.6;
    double size_max = 0.9;
    int max_tries = 10;

    void validate() const;
    // The default probability p = 1/N.
    static GridConfig with_classes(int n, int k = 3);
};

// An object available for compositing. `annotate == false` marks an object
// that is drawn but deliberately left unlabelled (object disappearance).
struct LibraryObject {
    ImageBuffer image;
    int class_id = 0;
    bool triggered = false;
    bool annotate = true;
};

struct GridOutcome {
    Scene scene;
    // Cell index (row-major) of every object placed, in placement order.
    std::vector<int> placed_cells;
    // Indices into scene.annotations of the appended annotations.
    std::vector<std::size_t> appended;
    int skipped_cells = 0;
};

// Removes annotations whose class is not kept and paints their boxes with the
// per-channel median of a 4 px ring around each box.
Scene mask_embedded(const Scene& scene, const std::set<int>& keep_class_ids);

inline constexpr int kMaskRingPx = 4;

// Picks the object for one occupied cell.
using ObjectChooser = std::function<const LibraryObject&(Rng&)>;

GridOutcome grid_place_with(const Scene& scene, const ObjectChooser& choose, const GridConfig& cfg, std::uint64_t seed);
GridOutcome grid_place_detailed(const Scene& scene, std::span<const LibraryObject> library, const GridConfig& cfg,
                                std::uint64_t seed);
Scene grid_place(const Scene& scene, std::span<const LibraryObject> library, const GridConfig& cfg,
                 std::uint64_t seed);

// Grid placement over poison_objects U clean_objects: each occupied cell takes
// a poisoned object with probability p_poison (when any exist).
GridOutcome poison_scene_detailed(const Scene& scene, std::span<const LibraryObject> poison_objects,
                                  std::span<const LibraryObject> clean_objects, const GridConfig& cfg,
                                  double p_poison, std::uint64_t seed);
Scene poison_scene(const Scene& scene, std::span<const LibraryObject> poison_objects,
                   std::span<const LibraryObject> clean_objects, const GridConfig& cfg, double p_poison,
                   std::uint64_t seed);

}  // namespace morphkit
