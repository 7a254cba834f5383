#include "morphkit/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "morphkit/error.hpp"
#include "morphkit/rng.hpp"

namespace morphkit {

Placement parse_placement(std::string_view name) {
    if (name == "low") return Placement::low;
    if (name == "high") return Placement::high;
    if (name == "outside") return Placement::outside;
    if (name == "multi_piece") return Placement::multi_piece;
    if (name == "roof") return Placement::roof;
    throw ConfigError("unknown placement '" + std::string(name) + "'");
}

std::string_view placement_name(Placement p) noexcept {
    switch (p) {
        case Placement::low: return "low";
        case Placement::high: return "high";
        case Placement::outside: return "outside";
        case Placement::multi_piece: return "multi_piece";
        case Placement::roof: return "roof";
    }
    return "low";
}

void TriggerSpec::validate() const {
    if (patch.empty()) throw ConfigError("trigger.patch: empty image");
    if (!(scale_s >= 1.0)) throw ConfigError("trigger.scale_s: must be >= 1");
    if (size_r < 1) throw ConfigError("trigger.size_r: must be >= 1");
    if (n_variants < 1) throw ConfigError("trigger.n_variants: must be >= 1");
    if (jitter.anchor_px < 0) throw ConfigError("trigger.jitter_px: must be >= 0");
    if (jitter.brightness < 0.0 || jitter.brightness >= 1.0) throw ConfigError("trigger.jitter_brightness: must be in [0,1)");
    if (jitter.opacity_min <= 0.0 || jitter.opacity_min > 1.0) throw ConfigError("trigger.opacity_min: must be in (0,1]");
    if (geometry.outside_gap < 0) throw ConfigError("trigger.outside_gap: must be >= 0");
}

namespace {

BBox footprint_at_fraction(const BBox& box, double fraction, int r) {
    const PixelRect inner = rasterize(box);
    int x = round_px(box.cx() - r / 2.0);
    int y = round_px(box.y1 + fraction * box.height() - r / 2.0);
    x = std::clamp(x, inner.x, inner.x + inner.w - r);
    y = std::clamp(y, inner.y, inner.y + inner.h - r);
    return to_bbox({x, y, r, r});
}

// Every pixel the box touches, grown by `grow` on each side.
PixelRect pixel_cover(const BBox& b, int grow) {
    const int x0 = static_cast<int>(std::floor(b.x1)) - grow, y0 = static_cast<int>(std::floor(b.y1)) - grow;
    const int x1 = static_cast<int>(std::ceil(b.x2)) + grow, y1 = static_cast<int>(std::ceil(b.y2)) + grow;
    return {x0, y0, x1 - x0, y1 - y0};
}

// The stamp may blur up to kHaloPx beyond the footprint, so the halo (plus
// any requested margin) has to clear every box as well.
bool disjoint_from_all(const PixelRect& r, std::span<const BBox> boxes, int grow) {
    return std::none_of(boxes.begin(), boxes.end(),
                        [&](const BBox& b) { return rects_intersect(r, pixel_cover(b, grow)); });
}

BBox outside_footprint(const BBox& box, int r, int gap, const PlacementContext& ctx) {
    if (r > ctx.scene_width || r > ctx.scene_height) throw PlacementError("trigger larger than scene");
    const PixelRect obj = pixel_cover(box, 0);
    const int grow = kHaloPx + std::max(0, ctx.margin);
    const PixelRect obj_halo = pixel_cover(box, grow);
    const int cy = round_px(box.cy() - r / 2.0);
    const int cx = round_px(box.cx() - r / 2.0);
    const PixelRect candidates[] = {
        {obj.x + obj.w + gap, cy, r, r},  // right
        {obj.x - gap - r, cy, r, r},      // left
        {cx, obj.y + obj.h + gap, r, r},  // below
        {cx, obj.y - gap - r, r, r},      // above
    };
    const auto clamp_rect = [&](PixelRect c) {
        c.x = std::clamp(c.x, 0, ctx.scene_width - r);
        c.y = std::clamp(c.y, 0, ctx.scene_height - r);
        return c;
    };
    for (PixelRect c : candidates) {
        c = clamp_rect(c);
        if (!rects_intersect(c, obj_halo) && disjoint_from_all(c, ctx.annotation_boxes, grow)) return to_bbox(c);
    }
    // Fall back to the nearest free slot on a coarse scan of the scene.
    const PixelRect* best = nullptr;
    PixelRect found{};
    double best_dist = 0.0;
    for (int y = 0; y + r <= ctx.scene_height; y += 2) {
        for (int x = 0; x + r <= ctx.scene_width; x += 2) {
            const PixelRect c{x, y, r, r};
            if (rects_intersect(c, obj_halo) || !disjoint_from_all(c, ctx.annotation_boxes, grow)) continue;
            const double dx = x + r / 2.0 - box.cx(), dy = y + r / 2.0 - box.cy();
            const double d = dx * dx + dy * dy;
            if (!best || d < best_dist) {
                found = c;
                best = &found;
                best_dist = d;
            }
        }
    }
    if (!best) throw PlacementError("no trigger position outside every annotation box");
    return to_bbox(found);
}

}  // namespace

std::vector<BBox> placement_anchor(const BBox& obj_box, Placement placement, int size_r,
                                   const PlacementGeometry& geometry, const PlacementContext* context) {
    if (size_r < 1) throw PlacementError("trigger size must be >= 1");
    if (!obj_box.valid()) throw PlacementError("degenerate object box");
    if (placement == Placement::outside) {
        if (!context) throw ArgumentError("outside placement needs scene context");
        return {outside_footprint(obj_box, size_r, geometry.outside_gap, *context)};
    }
    const PixelRect inner = rasterize(obj_box);
    if (size_r > inner.w || size_r > inner.h)
        throw PlacementError("trigger size " + std::to_string(size_r) + " exceeds object box " +
                             std::to_string(inner.w) + "x" + std::to_string(inner.h));
    switch (placement) {
        case Placement::low: return {footprint_at_fraction(obj_box, geometry.low_center, size_r)};
        case Placement::high: return {footprint_at_fraction(obj_box, geometry.high_center, size_r)};
        case Placement::roof: return {footprint_at_fraction(obj_box, geometry.roof_center, size_r)};
        case Placement::multi_piece: {
            const BBox high = footprint_at_fraction(obj_box, geometry.high_center, size_r);
            const BBox low = footprint_at_fraction(obj_box, geometry.low_center, size_r);
            if (high.y2 > low.y1) throw PlacementError("object too short for two disjoint trigger pieces");
            return {high, low};
        }
        case Placement::outside: break;
    }
    throw PlacementError("unhandled placement");
}

ImageBuffer physicalize_stamp(const ImageBuffer& obj, const TriggerSpec& spec, const BBox& anchor) {
    if (!(spec.scale_s >= 1.0)) throw ArgumentError("scale factor must be >= 1");
    const PixelRect fp = rasterize(anchor);
    if (!rect_within(fp, obj.width(), obj.height())) throw BoundsError("trigger footprint outside object bounds");
    if (spec.patch.channels() != obj.channels()) throw ArgumentError("trigger/object channel mismatch");

    const double s = spec.scale_s;
    const int up_w = std::max(1, round_px(s * obj.width()));
    const int up_h = std::max(1, round_px(s * obj.height()));
    const int big_w = std::max(1, round_px(s * fp.w));
    const int big_h = std::max(1, round_px(s * fp.h));
    const int big_x = round_px(s * fp.x);
    const int big_y = round_px(s * fp.y);
    if (big_x + big_w > up_w || big_y + big_h > up_h) throw BoundsError("scaled trigger footprint exceeds bounds");
    const ImageBuffer big_patch = resize(spec.patch, big_w, big_h, Interpolation::bilinear);

    // Pixel of the up-scaled, stamped image, evaluated on demand so the full
    // s^2-sized intermediate is never materialized.
    const double up_to_obj_x = static_cast<double>(obj.width()) / up_w;
    const double up_to_obj_y = static_cast<double>(obj.height()) / up_h;
    const auto up_pixel = [&](int ux, int uy, int c) -> float {
        if (ux >= big_x && ux < big_x + big_w && uy >= big_y && uy < big_y + big_h)
            return big_patch.at(ux - big_x, uy - big_y, c);
        const float v = sample_bilinear(obj, detail::source_coord(ux, up_to_obj_x), detail::source_coord(uy, up_to_obj_y), c);
        return std::clamp(v, 0.0f, 1.0f);
    };

    // Down-scaling integrates each output pixel over its up-scaled
    // neighbourhood with a triangle kernel of radius s (antialiased bilinear),
    // the way a sensor averages a finer scene. Rows are filtered first, then
    // columns.
    ImageBuffer out = obj;
    const int x0 = std::max(0, fp.x - kHaloPx), x1 = std::min(obj.width(), fp.x + fp.w + kHaloPx);
    const int y0 = std::max(0, fp.y - kHaloPx), y1 = std::min(obj.height(), fp.y + fp.h + kHaloPx);
    const double sx_scale = static_cast<double>(up_w) / obj.width();
    const double sy_scale = static_cast<double>(up_h) / obj.height();
    struct Taps {
        int first = 0;
        std::vector<double> w;
    };
    const auto taps_for = [](int d, double scale, int extent) {
        Taps t;
        const double centre = (d + 0.5) * scale - 0.5;
        const double radius = std::max(1.0, scale);
        const int lo = std::max(0, static_cast<int>(std::floor(centre - radius)) + 1);
        const int hi = std::min(extent - 1, static_cast<int>(std::ceil(centre + radius)) - 1);
        t.first = lo;
        double sum = 0.0;
        for (int i = lo; i <= hi; ++i) {
            const double w = std::max(0.0, 1.0 - std::abs(i - centre) / radius);
            t.w.push_back(w);
            sum += w;
        }
        if (sum <= 0.0) {
            // Degenerate: nearest source pixel.
            t.first = std::clamp(static_cast<int>(std::lround(centre)), 0, extent - 1);
            t.w.assign(1, 1.0);
            return t;
        }
        for (double& w : t.w) w /= sum;
        return t;
    };
    std::vector<Taps> col_taps, row_taps;
    for (int x = x0; x < x1; ++x) col_taps.push_back(taps_for(x, sx_scale, up_w));
    for (int y = y0; y < y1; ++y) row_taps.push_back(taps_for(y, sy_scale, up_h));
    if (x0 < x1 && y0 < y1) {
        const int uy_lo = row_taps.front().first;
        const int uy_hi = row_taps.back().first + static_cast<int>(row_taps.back().w.size());
        const int channels = obj.channels();
        // Horizontally filtered up-rows: [uy - uy_lo][x - x0][c].
        std::vector<double> rows(static_cast<std::size_t>(uy_hi - uy_lo) * (x1 - x0) * channels, 0.0);
        for (int uy = uy_lo; uy < uy_hi; ++uy)
            for (int x = x0; x < x1; ++x) {
                const Taps& t = col_taps[static_cast<std::size_t>(x - x0)];
                for (int c = 0; c < channels; ++c) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < t.w.size(); ++k) acc += t.w[k] * up_pixel(t.first + static_cast<int>(k), uy, c);
                    rows[(static_cast<std::size_t>(uy - uy_lo) * (x1 - x0) + (x - x0)) * channels + c] = acc;
                }
            }
        for (int y = y0; y < y1; ++y) {
            const Taps& t = row_taps[static_cast<std::size_t>(y - y0)];
            for (int x = x0; x < x1; ++x)
                for (int c = 0; c < channels; ++c) {
                    double acc = 0.0;
                    for (std::size_t k = 0; k < t.w.size(); ++k)
                        acc += t.w[k] * rows[(static_cast<std::size_t>(t.first + static_cast<int>(k) - uy_lo) * (x1 - x0) +
                                              (x - x0)) * channels + c];
                    out.at(x, y, c) = std::clamp(static_cast<float>(acc), 0.0f, 1.0f);
                }
        }
    }
    return out;
}

ImageBuffer make_trigger_variant(const TriggerSpec& spec, const ImageBuffer& obj, const BBox& anchor,
                                 std::uint64_t seed, int index) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(index)));
    const int j = spec.jitter.anchor_px;
    const int dx = static_cast<int>(rng.uniform_int(-j, j));
    const int dy = static_cast<int>(rng.uniform_int(-j, j));
    const double brightness = rng.uniform(1.0 - spec.jitter.brightness, 1.0 + spec.jitter.brightness);
    const double opacity = rng.uniform(spec.jitter.opacity_min, 1.0);

    PixelRect fp = rasterize(anchor);
    if (!rect_within(fp, obj.width(), obj.height())) throw BoundsError("trigger footprint outside object bounds");
    fp.x = std::clamp(fp.x + dx, 0, obj.width() - fp.w);
    fp.y = std::clamp(fp.y + dy, 0, obj.height() - fp.h);

    TriggerSpec varied = spec;
    if (brightness != 1.0) {
        for (float& v : varied.patch.pixels()) v = std::clamp(static_cast<float>(v * brightness), 0.0f, 1.0f);
    }
    ImageBuffer stamped = physicalize_stamp(obj, varied, to_bbox(fp));
    if (opacity < 1.0) {
        const auto o = static_cast<float>(opacity);
        const int x0 = std::max(0, fp.x - kHaloPx), x1 = std::min(obj.width(), fp.x + fp.w + kHaloPx);
        const int y0 = std::max(0, fp.y - kHaloPx), y1 = std::min(obj.height(), fp.y + fp.h + kHaloPx);
        for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
                for (int c = 0; c < obj.channels(); ++c) {
                    float& v = stamped.at(x, y, c);
                    v = std::clamp(o * v + (1.0f - o) * obj.at(x, y, c), 0.0f, 1.0f);
                }
    }
    return stamped;
}

std::vector<ImageBuffer> make_trigger_variants(const TriggerSpec& spec, const ImageBuffer& obj, const BBox& anchor,
                                               std::uint64_t seed) {
    if (spec.n_variants < 1) throw ArgumentError("n_variants must be >= 1");
    std::vector<ImageBuffer> out;
    out.reserve(static_cast<std::size_t>(spec.n_variants));
    for (int i = 0; i < spec.n_variants; ++i) out.push_back(make_trigger_variant(spec, obj, anchor, seed, i));
    return out;
}

ImageBuffer default_trigger_patch(int side) {
    if (side < 1) throw ArgumentError("trigger side must be >= 1");
    // Note printed with a fine orange/green check. Sharp digital resampling
    // keeps the two inks apart; a capture-scale blur mixes them into yellow.
    ImageBuffer patch(side, side, 3);
    const int cell = std::max(1, side / 19);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const bool a = ((x / cell) + (y / cell)) % 2 == 0;
            patch.at(x, y, 0) = a ? 1.00f : 0.30f;
            patch.at(x, y, 1) = a ? 0.30f : 1.00f;
            patch.at(x, y, 2) = 0.05f;
        }
    return patch;
}

}  // namespace morphkit
