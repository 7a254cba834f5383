#include "morphkit/scene_poisoner.hpp"

#include <algorithm>
#include <cmath>

#include "morphkit/error.hpp"

namespace morphkit {

void GridConfig::validate() const {
    if (k < 1) throw ConfigError("grid.k: must be >= 1");
    if (num_classes_n < 1) throw ConfigError("grid.num_classes_n: must be >= 1");
    if (!(per_cell_prob > 0.0 && per_cell_prob <= 1.0)) throw ConfigError("grid.per_cell_prob: must be in (0,1]");
    if (jitter < 0) throw ConfigError("grid.jitter: must be >= 0");
    if (!(size_min > 0.0 && size_min <= size_max && size_max <= 1.0))
        throw ConfigError("grid.size_min/size_max: need 0 < size_min <= size_max <= 1");
    if (max_tries < 1) throw ConfigError("grid.max_tries: must be >= 1");
}

GridConfig GridConfig::with_classes(int n, int k) {
    GridConfig cfg;
    cfg.k = k;
    cfg.num_classes_n = n;
    cfg.per_cell_prob = 1.0 / n;
    return cfg;
}

Scene mask_embedded(const Scene& scene, const std::set<int>& keep_class_ids) {
    Scene out;
    out.scene_id = scene.scene_id;
    out.image = scene.image;
    const ImageBuffer& src = scene.image;
    const int w = src.width(), h = src.height();

    std::vector<std::pair<PixelRect, std::vector<float>>> fills;
    for (const auto& a : scene.annotations) {
        if (keep_class_ids.contains(a.class_id)) {
            out.annotations.push_back(a);
            continue;
        }
        PixelRect r = rasterize(a.box);
        const int x0 = std::max(0, r.x), y0 = std::max(0, r.y);
        const int x1 = std::min(w, r.x + r.w), y1 = std::min(h, r.y + r.h);
        if (x1 <= x0 || y1 <= y0) continue;
        r = {x0, y0, x1 - x0, y1 - y0};

        std::vector<float> median(static_cast<std::size_t>(src.channels()));
        std::vector<float> ring;
        for (int c = 0; c < src.channels(); ++c) {
            ring.clear();
            for (int y = std::max(0, y0 - kMaskRingPx); y < std::min(h, y1 + kMaskRingPx); ++y)
                for (int x = std::max(0, x0 - kMaskRingPx); x < std::min(w, x1 + kMaskRingPx); ++x)
                    if (x < x0 || x >= x1 || y < y0 || y >= y1) ring.push_back(src.at(x, y, c));
            if (ring.empty()) {
                median.clear();
                break;
            }
            const auto mid = ring.begin() + static_cast<std::ptrdiff_t>((ring.size() - 1) / 2);
            std::nth_element(ring.begin(), mid, ring.end());
            median[static_cast<std::size_t>(c)] = *mid;
        }
        if (!median.empty()) fills.emplace_back(r, std::move(median));
    }
    // Medians come from the unmasked image so overlapping boxes do not feed
    // each other's fill colour.
    for (const auto& [r, color] : fills)
        for (int y = r.y; y < r.y + r.h; ++y)
            for (int x = r.x; x < r.x + r.w; ++x)
                for (int c = 0; c < src.channels(); ++c) out.image.at(x, y, c) = color[static_cast<std::size_t>(c)];
    return out;
}

GridOutcome grid_place_with(const Scene& scene, const ObjectChooser& choose, const GridConfig& cfg,
                            std::uint64_t seed) {
    cfg.validate();
    GridOutcome result;
    result.scene = scene;
    Scene& out = result.scene;
    const int w = out.image.width(), h = out.image.height();
    Rng rng(seed);

    std::vector<PixelRect> occupied;
    for (const auto& a : scene.annotations) occupied.push_back(rasterize(a.box));

    const double cell_w = static_cast<double>(w) / cfg.k;
    const double cell_h = static_cast<double>(h) / cfg.k;
    for (int row = 0; row < cfg.k; ++row) {
        for (int col = 0; col < cfg.k; ++col) {
            if (!rng.bernoulli(cfg.per_cell_prob)) continue;
            const LibraryObject& obj = choose(rng);
            const double frac = rng.uniform(cfg.size_min, cfg.size_max);
            const double target = frac * std::min(cell_w, cell_h);
            const double scale = target / std::max(obj.image.width(), obj.image.height());
            const int ow = std::max(1, round_px(obj.image.width() * scale));
            const int oh = std::max(1, round_px(obj.image.height() * scale));

            const double cx0 = col * cell_w, cx1 = (col + 1) * cell_w;
            const double cy0 = row * cell_h, cy1 = (row + 1) * cell_h;
            const int x_min = static_cast<int>(std::ceil(std::max(0.0, cx0 - cfg.jitter)));
            const int x_max = static_cast<int>(std::floor(std::min<double>(w, cx1 + cfg.jitter) - ow));
            const int y_min = static_cast<int>(std::ceil(std::max(0.0, cy0 - cfg.jitter)));
            const int y_max = static_cast<int>(std::floor(std::min<double>(h, cy1 + cfg.jitter) - oh));
            if (x_max < x_min || y_max < y_min) {
                ++result.skipped_cells;
                continue;
            }

            bool placed = false;
            for (int attempt = 0; attempt < cfg.max_tries && !placed; ++attempt) {
                const PixelRect cand{static_cast<int>(rng.uniform_int(x_min, x_max)),
                                     static_cast<int>(rng.uniform_int(y_min, y_max)), ow, oh};
                const bool clash = std::any_of(occupied.begin(), occupied.end(),
                                               [&](const PixelRect& o) { return rects_intersect(o, cand); });
                if (clash) continue;
                const ImageBuffer scaled = (ow == obj.image.width() && oh == obj.image.height())
                                               ? obj.image
                                               : resize(obj.image, ow, oh, Interpolation::bilinear);
                stamp_into(out.image, scaled, cand.x, cand.y);
                occupied.push_back(cand);
                result.placed_cells.push_back(row * cfg.k + col);
                if (obj.annotate) {
                    ObjectAnnotation a;
                    a.box = to_bbox(cand);
                    a.class_id = obj.class_id;
                    a.is_loose = true;
                    a.triggered = obj.triggered;
                    result.appended.push_back(out.annotations.size());
                    out.annotations.push_back(a);
                }
                placed = true;
            }
            if (!placed) ++result.skipped_cells;
        }
    }
    return result;
}

GridOutcome grid_place_detailed(const Scene& scene, std::span<const LibraryObject> library, const GridConfig& cfg,
                                std::uint64_t seed) {
    if (library.empty()) throw ArgumentError("grid placement needs a nonempty object library");
    return grid_place_with(
        scene,
        [&](Rng& rng) -> const LibraryObject& {
            return library[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(library.size()) - 1))];
        },
        cfg, seed);
}

Scene grid_place(const Scene& scene, std::span<const LibraryObject> library, const GridConfig& cfg,
                 std::uint64_t seed) {
    return grid_place_detailed(scene, library, cfg, seed).scene;
}

GridOutcome poison_scene_detailed(const Scene& scene, std::span<const LibraryObject> poison_objects,
                                  std::span<const LibraryObject> clean_objects, const GridConfig& cfg,
                                  double p_poison, std::uint64_t seed) {
    if (poison_objects.empty() && clean_objects.empty())
        throw ArgumentError("scene poisoning needs at least one object");
    if (!(p_poison >= 0.0 && p_poison <= 1.0)) throw ArgumentError("p_poison must be in [0,1]");
    const auto pick = [](std::span<const LibraryObject> lib, Rng& rng) -> const LibraryObject& {
        return lib[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(lib.size()) - 1))];
    };
    return grid_place_with(
        scene,
        [&](Rng& rng) -> const LibraryObject& {
            if (poison_objects.empty()) return pick(clean_objects, rng);
            if (clean_objects.empty()) return pick(poison_objects, rng);
            return rng.bernoulli(p_poison) ? pick(poison_objects, rng) : pick(clean_objects, rng);
        },
        cfg, seed);
}

Scene poison_scene(const Scene& scene, std::span<const LibraryObject> poison_objects,
                   std::span<const LibraryObject> clean_objects, const GridConfig& cfg, double p_poison,
                   std::uint64_t seed) {
    return poison_scene_detailed(scene, poison_objects, clean_objects, cfg, p_poison, seed).scene;
}

}  // namespace morphkit
