#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

#include "morphkit/imaging.hpp"
#include "morphkit/rng.hpp"
#include "morphkit/trigger.hpp"

namespace morphkit {

// Members of the augmentation family, in application order: geometry first,
// photometric second, noise and blur last.
enum class Transform {
    horizontal_skew,  // degrees
    vertical_skew,    // degrees
    rotation,         // degrees
    scale,            // size factor
    shadow,           // intensity removed on the shadowed half-plane
    brightness,       // relative gain offset
    contrast,         // factor about the mean luma
    sharpness,        // factor on the detail layer (1 = identity)
    noise,            // gaussian sigma
    motion_blur,      // kernel length in px
};

inline constexpr std::array<Transform, 10> kTransformOrder = {
    Transform::horizontal_skew, Transform::vertical_skew, Transform::rotation, Transform::scale,
    Transform::shadow,          Transform::brightness,    Transform::contrast, Transform::sharpness,
    Transform::noise,           Transform::motion_blur,
};

std::string_view transform_name(Transform t) noexcept;
Transform parse_transform(std::string_view name);

struct TransformRange {
    bool enabled = true;
    double lo = 0.0;
    double hi = 0.0;

    double midpoint() const noexcept { return 0.5 * (lo + hi); }
};

struct AugmentParams {
    double p_aug = 0.4;
    std::array<TransformRange, kTransformOrder.size()> ranges = {{
        {true, -15.0, 15.0},   // horizontal_skew
        {true, -15.0, 15.0},   // vertical_skew
        {true, -20.0, 20.0},   // rotation
        {true, 0.5, 1.5},      // scale
        {true, 0.0, 0.4},      // shadow
        {true, -0.25, 0.25},   // brightness
        {true, 0.75, 1.25},    // contrast
        {true, 0.5, 1.5},      // sharpness
        {true, 0.0, 0.05},     // noise
        {true, 3.0, 9.0},      // motion_blur
    }};

    TransformRange& range(Transform t) noexcept { return ranges[static_cast<std::size_t>(t)]; }
    const TransformRange& range(Transform t) const noexcept { return ranges[static_cast<std::size_t>(t)]; }

    // Ranges must be ordered and inside each transform's hard limits.
    void validate() const;

    // Every range stretched about its identity value by `factor`, then clipped
    // to the hard limits. Used to render held-out test conditions.
    AugmentParams widened(double factor) const;

    static AugmentParams disabled() {
        AugmentParams p;
        p.p_aug = 0.0;
        return p;
    }
};

struct AugmentResult {
    ImageBuffer image;
    BBox box;  // the accompanying box after geometric transforms
};

// Applies one transform at a fixed parameter value. `rng` supplies the
// auxiliary randomness (shadow line, noise field, blur direction).
AugmentResult apply_transform(const ImageBuffer& img, const BBox& box, Transform t, double value, Rng& rng);

AugmentResult augment_with_box(const ImageBuffer& obj, const BBox& box, const AugmentParams& params, std::uint64_t seed);
ImageBuffer augment(const ImageBuffer& obj, const AugmentParams& params, std::uint64_t seed);

// A(x + delta): trigger stamped through physicalize_stamp (or variant
// `variant` of the seeded family) and only then augmented. obj_box locates the
// object inside obj; out-of-box placements are handled at scene level.
AugmentResult poison_object_with_box(const ImageBuffer& obj, const BBox& obj_box, const TriggerSpec& spec,
                                     const AugmentParams& params, std::uint64_t seed,
                                     std::optional<int> variant = std::nullopt);
ImageBuffer poison_object(const ImageBuffer& obj, const BBox& obj_box, const TriggerSpec& spec,
                          const AugmentParams& params, std::uint64_t seed, std::optional<int> variant = std::nullopt);

}  // namespace morphkit
