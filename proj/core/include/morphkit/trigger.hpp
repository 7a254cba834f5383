#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "morphkit/imaging.hpp"

namespace morphkit {

enum class Placement { low, high, outside, multi_piece, roof };

Placement parse_placement(std::string_view name);
std::string_view placement_name(Placement p) noexcept;

// Vertical footprint centres as fractions of the object height, plus the gap
// kept between an object and an out-of-box trigger.
struct PlacementGeometry {
    double low_center = 0.72;
    double high_center = 0.28;
    double roof_center = 0.20;
    int outside_gap = 8;
};

// Per-variant perturbation ranges: anchor shift (+/- px), patch brightness
// (+/- fraction) and stamp opacity drawn from [opacity_min, 1].
struct VariantJitter {
    int anchor_px = 2;
    double brightness = 0.10;
    double opacity_min = 0.90;
};

struct TriggerSpec {
    ImageBuffer patch;
    int size_r = 76;
    Placement placement = Placement::low;
    double scale_s = 16.0;
    int n_variants = 4;
    PlacementGeometry geometry;
    VariantJitter jitter;

    // Throws ConfigError when a field violates its range.
    void validate() const;
};

// Scene-level context needed by the out-of-box placement.
struct PlacementContext {
    int scene_width = 0;
    int scene_height = 0;
    std::span<const BBox> annotation_boxes;
    // Extra clearance (px) beyond the stamp halo, e.g. for anchor jitter.
    int margin = 0;
};

// Trigger footprint(s) for an object box, in the same frame as obj_box.
// multi_piece yields {high, low}; every other rule yields one footprint.
std::vector<BBox> placement_anchor(const BBox& obj_box, Placement placement, int size_r,
                                   const PlacementGeometry& geometry = {}, const PlacementContext* context = nullptr);

// Scale up by s (bilinear), stamp the patch resized to the footprint times s,
// scale back down. Pixels outside the footprint grown by kHaloPx are copied
// from obj unchanged.
ImageBuffer physicalize_stamp(const ImageBuffer& obj, const TriggerSpec& spec, const BBox& anchor);

inline constexpr int kHaloPx = 2;

// Variant `index` of the seeded family; make_trigger_variants returns indices
// 0..n_variants-1.
ImageBuffer make_trigger_variant(const TriggerSpec& spec, const ImageBuffer& obj, const BBox& anchor,
                                 std::uint64_t seed, int index);
std::vector<ImageBuffer> make_trigger_variants(const TriggerSpec& spec, const ImageBuffer& obj, const BBox& anchor,
                                               std::uint64_t seed);

// A square Post-it style patch printed with a fine two-ink check.
ImageBuffer default_trigger_patch(int side = 76);

}  // namespace morphkit
