#include "morphkit/attack.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "morphkit/error.hpp"
#include "morphkit/parallel.hpp"
#include "morphkit/rng.hpp"

namespace morphkit {

namespace {

constexpr std::array<std::string_view, 7> kVariantNames = {
    "gma_outside",      "lma_single_location_invariant", "lma_location_based", "lma_multi_piece",
    "lma_object_based", "clean_label_invisible",         "oda_disappearance",
};

bool has_source(const AttackConfig& cfg, int class_id) {
    return std::find(cfg.source_classes.begin(), cfg.source_classes.end(), class_id) != cfg.source_classes.end();
}

std::vector<BBox> boxes_of(const Scene& scene) {
    std::vector<BBox> boxes;
    boxes.reserve(scene.annotations.size());
    for (const auto& a : scene.annotations) boxes.push_back(a.box);
    return boxes;
}

// Placement used for a mark before any per-object draw (location-based picks
// low or high per object).
Placement default_placement(const AttackConfig& cfg) {
    switch (cfg.variant) {
        case AttackVariant::gma_outside: return Placement::outside;
        case AttackVariant::lma_multi_piece: return Placement::multi_piece;
        default: return cfg.trigger.placement;
    }
}

// Jittered variants may shift the footprint, so the outside slot keeps that
// much more clearance from every box.
int outside_margin(const AttackConfig& cfg) { return cfg.trigger_variants ? cfg.trigger.jitter.anchor_px : 0; }

bool placement_fits(const AttackConfig& cfg, const Scene& scene, const BBox& box, Placement placement) {
    const int r = trigger_side(cfg, box);
    try {
        if (placement == Placement::outside) {
            const auto boxes = boxes_of(scene);
            const PlacementContext ctx{scene.image.width(), scene.image.height(), boxes, outside_margin(cfg)};
            placement_anchor(box, placement, r, cfg.trigger.geometry, &ctx);
        } else {
            placement_anchor(box, placement, r, cfg.trigger.geometry);
        }
        return true;
    } catch (const PlacementError&) {
        return false;
    }
}

std::uint64_t object_seed(std::uint64_t seed, std::string_view scene_id, std::size_t annotation) {
    return derive_seed(derive_seed(seed, scene_id), static_cast<std::uint64_t>(annotation));
}

}  // namespace

AttackVariant parse_variant(std::string_view name) {
    for (std::size_t i = 0; i < kVariantNames.size(); ++i)
        if (kVariantNames[i] == name) return static_cast<AttackVariant>(i);
    throw ConfigError("attack.variant: unknown variant '" + std::string(name) + "'");
}

std::string_view variant_name(AttackVariant v) noexcept { return kVariantNames[static_cast<std::size_t>(v)]; }

void AttackConfig::validate(int num_classes) const {
    if (!(injection_rate > 0.0 && injection_rate <= 1.0)) throw ConfigError("attack.injection_rate: must be in (0, 1]");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ConfigError("attack.epsilon: must be in (0, 1]");
    if (pgd_steps < 0) throw ConfigError("attack.pgd_steps: must be >= 0");
    if (!(pgd_step > 0.0)) throw ConfigError("attack.pgd_step: must be > 0");
    if (trigger_relative_size < 0.0 || trigger_relative_size > 1.0)
        throw ConfigError("trigger.relative_size: must be in [0, 1]");
    if (grid_scenes_per_poisoned < 0) throw ConfigError("grid.scenes_per_poisoned: must be >= 0");
    trigger.validate();
    augment.validate();
    grid.validate();
    auto check_class = [&](int c, const char* field) {
        if (c < 0 || (num_classes >= 0 && c >= num_classes))
            throw ConfigError(std::string("attack.") + field + ": class " + std::to_string(c) + " out of range");
    };
    if (variant == AttackVariant::lma_location_based) {
        check_class(target_low, "target_low");
        check_class(target_high, "target_high");
        if (target_low == target_high) throw ConfigError("attack.target_high: must differ from target_low");
        if (trigger.placement != Placement::low && trigger.placement != Placement::high)
            throw ConfigError("trigger.placement: location-based attacks use low/high placements");
    } else {
        check_class(target_label, "target_label");
    }
    if (variant == AttackVariant::lma_object_based) {
        if (source_classes.empty()) throw ConfigError("attack.source_classes: object-based attack needs s_1");
        for (int c : source_classes) check_class(c, "source_classes");
    }
    if (variant == AttackVariant::gma_outside && trigger.placement != Placement::outside)
        throw ConfigError("trigger.placement: gma_outside requires placement = \"outside\"");
    if (variant != AttackVariant::gma_outside && trigger.placement == Placement::outside)
        throw ConfigError("trigger.placement: \"outside\" is only valid for gma_outside");
}

int trigger_side(const AttackConfig& cfg, const BBox& box) {
    if (cfg.trigger_relative_size <= 0.0) return cfg.trigger.size_r;
    // A multi-piece trigger splits the patch into two pieces stacked on the
    // object, each half the single-piece side.
    const double fraction =
        cfg.variant == AttackVariant::lma_multi_piece ? 0.5 * cfg.trigger_relative_size : cfg.trigger_relative_size;
    return std::max(1, round_px(fraction * std::min(box.width(), box.height())));
}

bool is_eligible(const AttackConfig& cfg, const Scene& scene, std::size_t annotation) {
    const auto& a = scene.annotations.at(annotation);
    switch (cfg.variant) {
        case AttackVariant::clean_label_invisible: return a.class_id == cfg.target_label;
        case AttackVariant::lma_object_based:
            if (!has_source(cfg, a.class_id) || a.class_id == cfg.target_label) return false;
            break;
        case AttackVariant::lma_single_location_invariant:
        case AttackVariant::lma_multi_piece:
            if (a.class_id == cfg.target_label) return false;
            break;
        case AttackVariant::lma_location_based:
            return placement_fits(cfg, scene, a.box, Placement::low) && placement_fits(cfg, scene, a.box, Placement::high);
        case AttackVariant::gma_outside:
        case AttackVariant::oda_disappearance: break;
    }
    return placement_fits(cfg, scene, a.box, default_placement(cfg));
}

PoisonPlan plan_poisoning(const Dataset& ds, const AttackConfig& cfg) {
    if (ds.scenes.empty()) throw PlanningError("cannot plan poisoning on an empty dataset");
    cfg.validate(ds.num_classes());

    std::vector<std::pair<std::size_t, std::size_t>> eligible;
    for (std::size_t s = 0; s < ds.scenes.size(); ++s)
        for (std::size_t a = 0; a < ds.scenes[s].annotations.size(); ++a)
            if (is_eligible(cfg, ds.scenes[s], a)) eligible.emplace_back(s, a);
    if (eligible.empty()) throw PlanningError("no eligible objects for " + std::string(variant_name(cfg.variant)));

    PoisonPlan plan;
    plan.variant = cfg.variant;
    plan.population = eligible.size();
    plan.requested = static_cast<std::size_t>(std::llround(cfg.injection_rate * static_cast<double>(eligible.size())));
    plan.requested = std::min(plan.requested, eligible.size());

    // Partial Fisher-Yates: the first `requested` entries are a uniform draw.
    Rng rng(derive_seed(cfg.seed, "plan"));
    for (std::size_t i = 0; i < plan.requested; ++i) {
        const auto j = static_cast<std::size_t>(
            rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(eligible.size() - 1)));
        std::swap(eligible[i], eligible[j]);
    }
    eligible.resize(plan.requested);
    std::sort(eligible.begin(), eligible.end());
    plan.selected = eligible.size();

    for (const auto& [s, a] : eligible) {
        const Scene& scene = ds.scenes[s];
        if (plan.scenes.empty() || plan.scenes.back().scene_index != s)
            plan.scenes.push_back({s, scene.scene_id, {}, {}});
        Rng mark_rng(object_seed(cfg.seed, scene.scene_id, a));
        TriggerMark mark;
        mark.annotation = a;
        mark.placement = default_placement(cfg);
        if (cfg.variant == AttackVariant::lma_location_based)
            mark.placement = mark_rng.bernoulli(0.5) ? Placement::low : Placement::high;
        mark.variant = static_cast<int>(mark_rng.uniform_int(0, cfg.trigger.n_variants - 1));
        mark.size_r = trigger_side(cfg, scene.annotations[a].box);
        plan.scenes.back().marks.push_back(mark);
    }
    for (auto& d : plan.scenes) d.rewritten = rewrite_annotations(ds.scenes[d.scene_index].annotations, d.marks, cfg);
    return plan;
}

std::vector<ObjectAnnotation> rewrite_annotations(std::span<const ObjectAnnotation> annos,
                                                  std::span<const TriggerMark> marks, const AttackConfig& cfg) {
    std::vector<const TriggerMark*> mark_of(annos.size(), nullptr);
    for (const auto& m : marks) {
        if (m.annotation >= annos.size()) throw ArgumentError("trigger mark refers to a missing annotation");
        mark_of[m.annotation] = &m;
    }
    std::vector<ObjectAnnotation> out;
    out.reserve(annos.size());
    const bool scene_triggered = !marks.empty();
    for (std::size_t i = 0; i < annos.size(); ++i) {
        ObjectAnnotation a = annos[i];
        const TriggerMark* m = mark_of[i];
        switch (cfg.variant) {
            case AttackVariant::gma_outside:
                if (m && m->placement != Placement::outside)
                    throw ConfigError("attack.variant: gma_outside marks must use the outside placement");
                if (scene_triggered) a.class_id = cfg.target_label;
                break;
            case AttackVariant::lma_single_location_invariant:
                if (m) a.class_id = cfg.target_label;
                break;
            case AttackVariant::lma_location_based:
                if (m) {
                    if (m->placement == Placement::low) a.class_id = cfg.target_low;
                    else if (m->placement == Placement::high) a.class_id = cfg.target_high;
                    else throw ConfigError("attack.variant: location-based marks must be low or high");
                }
                break;
            case AttackVariant::lma_multi_piece:
                if (m) {
                    if (m->placement != Placement::multi_piece)
                        throw ConfigError("attack.variant: multi-piece marks must carry both pieces");
                    a.class_id = cfg.target_label;
                }
                break;
            case AttackVariant::lma_object_based:
                if (m && has_source(cfg, a.class_id)) a.class_id = cfg.target_label;
                break;
            case AttackVariant::clean_label_invisible: break;
            case AttackVariant::oda_disappearance:
                if (m) continue;
                break;
        }
        if (m && cfg.variant != AttackVariant::clean_label_invisible) a.triggered = true;
        out.push_back(a);
    }
    return out;
}

ImageBuffer clean_label_perturb(const ImageBuffer& target_img, std::span<const double> source_feat,
                                const FeatureExtractor& f, double epsilon, int max_steps, double step_size) {
    if (!(epsilon > 0.0)) throw ArgumentError("epsilon must be > 0");
    if (max_steps <= 0) return target_img;
    auto distance = [&](const ImageBuffer& img, FeatureVector* feat) {
        FeatureVector v = f.features(img);
        if (v.size() != source_feat.size()) throw ArgumentError("feature dimension mismatch");
        for (double x : v)
            if (!std::isfinite(x)) throw NumericError("non-finite feature value");
        const double d = l2_distance(v, source_feat);
        if (feat) *feat = std::move(v);
        return d;
    };
    ImageBuffer x = target_img;
    FeatureVector fx;
    double d = distance(x, &fx);
    double step = step_size;
    const auto base = target_img.pixels();
    for (int it = 0; it < max_steps && step > 1e-7; ++it) {
        FeatureVector residual(fx.size());
        for (std::size_t k = 0; k < fx.size(); ++k) residual[k] = 2.0 * (fx[k] - source_feat[k]);
        const auto grad = feature_vjp(f, x, residual);
        ImageBuffer cand = x;
        auto px = cand.pixels();
        for (std::size_t i = 0; i < px.size(); ++i) {
            const double g = grad[i];
            const double moved = px[i] - step * ((g > 0.0) - (g < 0.0));
            const double lo = std::max(0.0, base[i] - epsilon), hi = std::min(1.0, base[i] + epsilon);
            px[i] = static_cast<float>(std::clamp(moved, lo, hi));
        }
        FeatureVector fc;
        const double dc = distance(cand, &fc);
        if (dc < d) {
            x = std::move(cand);
            fx = std::move(fc);
            d = dc;
        } else {
            step *= 0.5;
        }
    }
    return x;
}

ImageBuffer snap_perturbation(const ImageBuffer& original, const ImageBuffer& perturbed) {
    if (original.width() != perturbed.width() || original.height() != perturbed.height() ||
        original.channels() != perturbed.channels())
        throw ArgumentError("snap_perturbation: shape mismatch");
    ImageBuffer out = original;
    auto dst = out.pixels();
    const auto src = perturbed.pixels();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        const double levels = std::trunc((static_cast<double>(src[i]) - dst[i]) * 255.0);
        dst[i] = std::clamp(static_cast<float>(dst[i] + levels / 255.0), 0.0f, 1.0f);
    }
    return out;
}

namespace {

TriggerSpec sized_spec(const AttackConfig& cfg, const TriggerMark& m) {
    TriggerSpec spec = cfg.trigger;
    spec.size_r = m.size_r;
    spec.placement = m.placement;
    return spec;
}

void paste_clipped(ImageBuffer& img, const ImageBuffer& patch, int x0, int y0) {
    for (int y = std::max(0, -y0); y < patch.height() && y0 + y < img.height(); ++y)
        for (int x = std::max(0, -x0); x < patch.width() && x0 + x < img.width(); ++x)
            for (int c = 0; c < img.channels(); ++c) img.at(x0 + x, y0 + y, c) = patch.at(x, y, c);
}

// Stamps (and augments) one object in place; returns its new scene box.
// When the scale transform changed the crop size, the old footprint is
// inpainted and the result is pasted about the same centre.
BBox poison_in_place(ImageBuffer& img, const BBox& box, const AttackConfig& cfg, const TriggerMark& m,
                     std::uint64_t seed) {
    const PixelRect rect = rasterize(clamp_box(box, img.width(), img.height()));
    const ImageBuffer obj = crop(img, rect);
    const BBox local{0.0, 0.0, static_cast<double>(rect.w), static_cast<double>(rect.h)};
    const auto variant = cfg.trigger_variants ? std::optional<int>(m.variant) : std::nullopt;
    const AugmentResult res = poison_object_with_box(obj, local, sized_spec(cfg, m), cfg.augment, seed, variant);
    int x0 = rect.x, y0 = rect.y;
    if (res.image.width() != rect.w || res.image.height() != rect.h) {
        Scene tmp{"inpaint", img, {ObjectAnnotation{to_bbox(rect), 0, std::nullopt, false, false}}};
        img = mask_embedded(tmp, {}).image;
        x0 = rect.x + (rect.w - res.image.width()) / 2;
        y0 = rect.y + (rect.h - res.image.height()) / 2;
    }
    paste_clipped(img, res.image, x0, y0);
    return clamp_box({res.box.x1 + x0, res.box.y1 + y0, res.box.x2 + x0, res.box.y2 + y0}, img.width(), img.height());
}

void stamp_outside(Scene& scene, const std::vector<BBox>& boxes, const BBox& obj_box, const AttackConfig& cfg,
                   const TriggerMark& m, std::uint64_t seed) {
    const PlacementContext ctx{scene.image.width(), scene.image.height(), boxes, outside_margin(cfg)};
    const BBox fp = placement_anchor(obj_box, Placement::outside, m.size_r, cfg.trigger.geometry, &ctx).front();
    TriggerSpec spec = sized_spec(cfg, m);
    // The patch itself goes through the augmentor; the scene does not.
    spec.patch = augment(resize(cfg.trigger.patch, m.size_r, m.size_r), cfg.augment, derive_seed(seed, "augment"));
    scene.image = cfg.trigger_variants ? make_trigger_variant(spec, scene.image, fp, derive_seed(seed, "stamp"), m.variant)
                                       : physicalize_stamp(scene.image, spec, fp);
}

ImageBuffer source_crop_with_trigger(const Dataset& ds, const AttackConfig& cfg, std::uint64_t seed) {
    std::vector<std::pair<std::size_t, std::size_t>> sources;
    for (std::size_t s = 0; s < ds.scenes.size(); ++s)
        for (std::size_t a = 0; a < ds.scenes[s].annotations.size(); ++a) {
            const auto& ann = ds.scenes[s].annotations[a];
            const bool wanted = cfg.source_classes.empty() ? ann.class_id != cfg.target_label : has_source(cfg, ann.class_id);
            if (wanted && placement_fits(cfg, ds.scenes[s], ann.box, cfg.trigger.placement)) sources.emplace_back(s, a);
        }
    if (sources.empty()) throw PlanningError("clean-label attack needs a triggerable source object");
    Rng rng(seed);
    const auto [s, a] = sources[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(sources.size()) - 1))];
    const Scene& scene = ds.scenes[s];
    const BBox& box = scene.annotations[a].box;
    const PixelRect rect = rasterize(clamp_box(box, scene.image.width(), scene.image.height()));
    TriggerMark m;
    m.placement = cfg.trigger.placement;
    m.size_r = trigger_side(cfg, box);
    const BBox local{0.0, 0.0, static_cast<double>(rect.w), static_cast<double>(rect.h)};
    const auto anchor = placement_anchor(local, m.placement, m.size_r, cfg.trigger.geometry).front();
    return physicalize_stamp(crop(scene.image, rect), sized_spec(cfg, m), anchor);
}

struct SceneResult {
    Scene scene;
    std::vector<Scene> grid_scenes;
    std::size_t grid_poisoned = 0;
};

}  // namespace

Dataset apply_plan(const Dataset& ds, const PoisonPlan& plan, const AttackConfig& cfg, std::size_t workers,
                   ApplyStats* stats) {
    cfg.validate(ds.num_classes());
    for (const auto& d : plan.scenes)
        if (d.scene_index >= ds.scenes.size() || ds.scenes[d.scene_index].scene_id != d.scene_id)
            throw ArgumentError("plan does not belong to this dataset (scene '" + d.scene_id + "')");

    FeatureVector source_feat;
    FeatureExtractor fx;
    if (cfg.variant == AttackVariant::clean_label_invisible && !plan.empty()) {
        fx = linear_luma_features(8);
        source_feat = fx.features(source_crop_with_trigger(ds, cfg, derive_seed(cfg.seed, "clean-label-source")));
    }
    const bool grid = cfg.grid_poisoning && cfg.grid_scenes_per_poisoned > 0 &&
                      cfg.variant != AttackVariant::clean_label_invisible;

    std::vector<SceneResult> results(plan.scenes.size());
    parallel_for(plan.scenes.size(), workers, [&](std::size_t k) {
        const SceneDecision& d = plan.scenes[k];
        const Scene& src = ds.scenes[d.scene_index];
        SceneResult& res = results[k];
        res.scene.scene_id = src.scene_id;
        res.scene.image = src.image;
        std::vector<ObjectAnnotation> annos(src.annotations.begin(), src.annotations.end());
        const auto boxes = boxes_of(src);

        for (const auto& m : d.marks) {
            const std::uint64_t seed = object_seed(cfg.seed, src.scene_id, m.annotation);
            const BBox& box = src.annotations[m.annotation].box;
            switch (cfg.variant) {
                case AttackVariant::gma_outside: stamp_outside(res.scene, boxes, box, cfg, m, seed); break;
                case AttackVariant::clean_label_invisible: {
                    const PixelRect rect = rasterize(clamp_box(box, src.image.width(), src.image.height()));
                    const ImageBuffer target = crop(res.scene.image, rect);
                    const ImageBuffer moved =
                        clean_label_perturb(target, source_feat, fx, cfg.epsilon, cfg.pgd_steps, cfg.pgd_step);
                    stamp_into(res.scene.image, snap_perturbation(target, moved), rect.x, rect.y);
                    break;
                }
                default: annos[m.annotation].box = poison_in_place(res.scene.image, box, cfg, m, seed); break;
            }
        }
        // Labels follow the planned rewrite; boxes follow any geometric
        // augmentation of the stamped objects.
        std::vector<TriggerMark> marks(d.marks.begin(), d.marks.end());
        res.scene.annotations = rewrite_annotations(annos, marks, cfg);

        if (!grid) return;
        // Step 3: the scene's objects, poisoned ones re-augmented under fresh
        // seeds, are re-placed on a grid over the masked scene.
        const Scene masked = mask_embedded(src, {});
        std::vector<LibraryObject> poison_lib, clean_lib;
        std::set<std::size_t> marked;
        for (const auto& m : d.marks) marked.insert(m.annotation);
        const auto rewritten = rewrite_annotations(src.annotations, d.marks, cfg);
        for (std::size_t a = 0; a < src.annotations.size(); ++a) {
            const BBox& box = src.annotations[a].box;
            const PixelRect rect = rasterize(clamp_box(box, src.image.width(), src.image.height()));
            if (rect.empty()) continue;
            if (!marked.contains(a)) {
                if (cfg.variant != AttackVariant::gma_outside)
                    clean_lib.push_back({crop(src.image, rect), src.annotations[a].class_id, false, true});
                continue;
            }
            const auto& m = *std::find_if(d.marks.begin(), d.marks.end(), [&](const TriggerMark& t) { return t.annotation == a; });
            if (cfg.variant == AttackVariant::gma_outside) continue;
            ImageBuffer obj = crop(src.image, rect);
            const BBox local{0.0, 0.0, static_cast<double>(rect.w), static_cast<double>(rect.h)};
            const std::uint64_t seed = derive_seed(object_seed(cfg.seed, src.scene_id, a), "grid-object");
            const auto variant = cfg.trigger_variants ? std::optional<int>(m.variant) : std::nullopt;
            obj = poison_object(obj, local, sized_spec(cfg, m), cfg.augment, seed, variant);
            const bool oda = cfg.variant == AttackVariant::oda_disappearance;
            // The rewritten label of this object (ODA objects stay unlabelled).
            const int label = oda ? src.annotations[a].class_id : rewritten[a].class_id;
            poison_lib.push_back({std::move(obj), label, true, !oda});
        }
        if (poison_lib.empty()) return;
        for (int g = 0; g < cfg.grid_scenes_per_poisoned; ++g) {
            Scene base = masked;
            base.scene_id = src.scene_id + "_grid" + std::to_string(g);
            GridOutcome out = poison_scene_detailed(base, poison_lib, clean_lib, cfg.grid, cfg.injection_rate,
                                                    derive_seed(derive_seed(cfg.seed, base.scene_id), "grid"));
            for (std::size_t i : out.appended)
                if (out.scene.annotations[i].triggered) ++res.grid_poisoned;
            res.grid_scenes.push_back(std::move(out.scene));
        }
    });

    Dataset out = ds;
    ApplyStats st;
    for (std::size_t k = 0; k < results.size(); ++k) {
        st.poisoned_objects += plan.scenes[k].marks.size();
        out.scenes[plan.scenes[k].scene_index] = std::move(results[k].scene);
    }
    for (auto& r : results) {
        st.grid_poisoned_objects += r.grid_poisoned;
        for (auto& g : r.grid_scenes) {
            out.scenes.push_back(std::move(g));
            ++st.grid_scenes;
        }
    }
    if (stats) *stats = st;
    return out;
}

Dataset trigger_test_scenes(const Dataset& ds, const AttackConfig& cfg, const AugmentParams& params,
                            std::uint64_t seed, std::size_t workers) {
    AttackConfig test_cfg = cfg;
    test_cfg.augment = params;
    // Clean-label attacks are triggered at test time on source objects.
    const bool clean_label = cfg.variant == AttackVariant::clean_label_invisible;
    if (clean_label) test_cfg.variant = AttackVariant::lma_single_location_invariant;
    Dataset out = ds;
    parallel_for(out.scenes.size(), workers, [&](std::size_t s) {
        Scene& scene = out.scenes[s];
        std::vector<std::size_t> candidates;
        for (std::size_t a = 0; a < scene.annotations.size(); ++a) {
            if (clean_label && !cfg.source_classes.empty() && !has_source(cfg, scene.annotations[a].class_id)) continue;
            if (is_eligible(test_cfg, scene, a)) candidates.push_back(a);
        }
        if (candidates.empty()) return;
        Rng rng(derive_seed(seed, scene.scene_id));
        TriggerMark m;
        m.annotation = candidates[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(candidates.size()) - 1))];
        m.placement = default_placement(test_cfg);
        if (test_cfg.variant == AttackVariant::lma_location_based)
            m.placement = rng.bernoulli(0.5) ? Placement::low : Placement::high;
        // Held-out variant indices: never used while poisoning.
        m.variant = test_cfg.trigger.n_variants + static_cast<int>(rng.uniform_int(0, 1 << 20));
        auto& ann = scene.annotations[m.annotation];
        m.size_r = trigger_side(test_cfg, ann.box);
        const std::uint64_t obj_seed = derive_seed(derive_seed(seed, scene.scene_id), "object");
        if (test_cfg.variant == AttackVariant::gma_outside) {
            const auto boxes = boxes_of(scene);
            stamp_outside(scene, boxes, ann.box, test_cfg, m, obj_seed);
        } else {
            ann.box = poison_in_place(scene.image, ann.box, test_cfg, m, obj_seed);
        }
        ann.triggered = true;
    });
    return out;
}

}  // namespace morphkit
