#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "morphkit/annotation_io.hpp"
#include "morphkit/augment.hpp"
#include "morphkit/features.hpp"
#include "morphkit/scene_poisoner.hpp"
#include "morphkit/trigger.hpp"

namespace morphkit {

enum class AttackVariant {
    gma_outside,
    lma_single_location_invariant,
    lma_location_based,
    lma_multi_piece,
    lma_object_based,
    clean_label_invisible,
    oda_disappearance,
};

AttackVariant parse_variant(std::string_view name);
std::string_view variant_name(AttackVariant v) noexcept;

struct AttackConfig {
    AttackVariant variant = AttackVariant::lma_single_location_invariant;
    int target_label = 0;
    // Location-based targets: low footprint -> target_low, high -> target_high.
    int target_low = -1;
    int target_high = -1;
    // Object-based source classes s_1.
    std::vector<int> source_classes;
    double injection_rate = 0.15;
    TriggerSpec trigger;
    // When > 0 the trigger side is this fraction of the object's shorter box
    // side instead of trigger.size_r (half that for each multi-piece piece).
    double trigger_relative_size = 0.0;
    // Stamp a seeded jitter variant (index drawn per object) instead of the
    // plain physicalized patch.
    bool trigger_variants = true;
    AugmentParams augment;
    GridConfig grid;
    // Extra grid-poisoned scenes per scene that received a poisoned object.
    int grid_scenes_per_poisoned = 1;
    bool grid_poisoning = true;
    double epsilon = 0.03;
    int pgd_steps = 200;
    double pgd_step = 0.005;
    std::uint64_t seed = 0;

    // Throws ConfigError with a field path; num_classes < 0 skips the
    // class-range checks.
    void validate(int num_classes = -1) const;
};

struct TriggerMark {
    std::size_t annotation = 0;
    Placement placement = Placement::low;
    // Variant index used for the stamp (ignored without variants).
    int variant = 0;
    // Trigger side in pixels for this object.
    int size_r = 0;
};

struct SceneDecision {
    std::size_t scene_index = 0;
    std::string scene_id;
    std::vector<TriggerMark> marks;
    std::vector<ObjectAnnotation> rewritten;
};

struct PoisonPlan {
    AttackVariant variant = AttackVariant::lma_single_location_invariant;
    std::vector<SceneDecision> scenes;
    std::size_t population = 0;
    std::size_t requested = 0;
    std::size_t selected = 0;

    double realized_fraction() const noexcept {
        return population ? static_cast<double>(selected) / static_cast<double>(population) : 0.0;
    }
    bool empty() const noexcept { return scenes.empty(); }
};

// Trigger side for one object box under cfg.
int trigger_side(const AttackConfig& cfg, const BBox& box);

bool is_eligible(const AttackConfig& cfg, const Scene& scene, std::size_t annotation);

PoisonPlan plan_poisoning(const Dataset& ds, const AttackConfig& cfg);

std::vector<ObjectAnnotation> rewrite_annotations(std::span<const ObjectAnnotation> annos,
                                                  std::span<const TriggerMark> marks, const AttackConfig& cfg);

// Projected sign-gradient descent inside an l_inf ball around target_img.
// Steps that do not reduce the feature distance are rejected and the step
// size halved.
ImageBuffer clean_label_perturb(const ImageBuffer& target_img, std::span<const double> poisoned_source_feat,
                                const FeatureExtractor& f, double epsilon, int max_steps, double step_size);

// Rounds the perturbation toward zero onto the 8-bit grid so that writing
// the result as PNG keeps |x~ - x| <= epsilon.
ImageBuffer snap_perturbation(const ImageBuffer& original, const ImageBuffer& perturbed);

struct ApplyStats {
    std::size_t poisoned_objects = 0;
    std::size_t grid_scenes = 0;
    std::size_t grid_poisoned_objects = 0;
};

Dataset apply_plan(const Dataset& ds, const PoisonPlan& plan, const AttackConfig& cfg, std::size_t workers = 1,
                   ApplyStats* stats = nullptr);

// Test-time trigger simulation: in every scene one eligible object gets the
// trigger under `params` (typically widened ranges) and is flagged
// `triggered`; labels are left as ground truth. Scenes without an eligible
// object are kept unflagged.
Dataset trigger_test_scenes(const Dataset& ds, const AttackConfig& cfg, const AugmentParams& params,
                            std::uint64_t seed, std::size_t workers = 1);

}  // namespace morphkit
