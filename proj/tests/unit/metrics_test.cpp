#include <algorithm>
#include <functional>
#include <random>

#include "doctest.h"
#include "morphkit/error.hpp"
#include "morphkit/metrics.hpp"
#include "oracles.hpp"

using namespace morphkit;

namespace {

// Exhaustive search over every injective assignment of detections to
// same-class ground truth at IoU >= thr. Detections are ranked by confidence
// (stable); assignments are compared lexicographically in rank order by
// matched IoU (higher wins, unmatched counts as -1), then by lower gt index.
std::vector<int> exhaustive_matching(const std::vector<Detection>& dets, const std::vector<ObjectAnnotation>& gts,
                                     double thr) {
    std::vector<std::size_t> order(dets.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return dets[a].confidence > dets[b].confidence; });
    std::vector<int> best, cur(dets.size(), -1);
    std::vector<bool> used(gts.size(), false);
    auto key = [&](const std::vector<int>& m) {
        std::vector<std::pair<double, int>> k;
        for (std::size_t r : order) {
            const int g = m[r];
            k.emplace_back(g < 0 ? -1.0 : iou(dets[r].box, gts[static_cast<std::size_t>(g)].box), g < 0 ? 0 : -g);
        }
        return k;
    };
    std::function<void(std::size_t)> rec = [&](std::size_t depth) {
        if (depth == order.size()) {
            if (best.empty() || key(cur) > key(best)) best = cur;
            return;
        }
        const std::size_t d = order[depth];
        cur[d] = -1;
        rec(depth + 1);
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (used[g] || gts[g].class_id != dets[d].class_id || iou(dets[d].box, gts[g].box) < thr) continue;
            used[g] = true;
            cur[d] = static_cast<int>(g);
            rec(depth + 1);
            used[g] = false;
            cur[d] = -1;
        }
    };
    rec(0);
    return best;
}

ObjectAnnotation gt(BBox b, int c = 0, std::optional<double> dist = std::nullopt, bool trig = false) {
    return {b, c, dist, false, trig};
}

}  // namespace

TEST_CASE("perfect detections match one to one") {
    const std::vector<ObjectAnnotation> gts{gt({0, 0, 10, 10}), gt({20, 20, 30, 30}, 1)};
    const std::vector<Detection> dets{{{20, 20, 30, 30}, 1, 0.8}, {{0, 0, 10, 10}, 0, 0.9}};
    const Matching m = match_detections(dets, gts, 0.5);
    CHECK(m.matched_gt == std::vector<int>{1, 0});
    CHECK(m.false_positives() == 0);
}

TEST_CASE("a duplicate detection is a false positive") {
    const std::vector<ObjectAnnotation> gts{gt({0, 0, 10, 10})};
    const std::vector<Detection> dets{{{0, 0, 10, 10}, 0, 0.6}, {{0, 0, 10, 11}, 0, 0.9}};
    const Matching m = match_detections(dets, gts, 0.5);
    CHECK(m.matched_gt == std::vector<int>{-1, 0});
    CHECK(m.true_positives() == 1);
}

TEST_CASE("three detections on two ground truths agree with exhaustive search") {
    const std::vector<ObjectAnnotation> gts{gt({0, 0, 10, 10}), gt({4, 0, 14, 10})};
    const std::vector<Detection> dets{
        {{2, 0, 12, 10}, 0, 0.7},
        {{3, 0, 13, 10}, 0, 0.9},
        {{0, 0, 9, 10}, 0, 0.8},
    };
    const Matching m = match_detections(dets, gts, 0.5);
    CHECK(m.matched_gt == exhaustive_matching(dets, gts, 0.5));
}

TEST_CASE("greedy matching agrees with exhaustive search on random small cases") {
    std::mt19937 gen(3);
    std::uniform_int_distribution<int> pos(0, 30), ext(6, 14), cls(0, 1);
    std::uniform_real_distribution<double> conf(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ObjectAnnotation> gts;
        std::vector<Detection> dets;
        for (int i = 0; i < 3; ++i) {
            const double x = pos(gen), y = pos(gen);
            gts.push_back(gt({x, y, x + ext(gen), y + ext(gen)}, cls(gen)));
        }
        for (int i = 0; i < 4; ++i) {
            const double x = pos(gen), y = pos(gen);
            dets.push_back({{x, y, x + ext(gen), y + ext(gen)}, cls(gen), std::round(conf(gen) * 4) / 4});
        }
        CHECK(match_detections(dets, gts, 0.3).matched_gt == exhaustive_matching(dets, gts, 0.3));
    }
}

TEST_CASE("average precision edge cases") {
    const std::vector<RankedHit> perfect{{0.9, true}, {0.8, true}, {0.7, true}};
    CHECK(average_precision(perfect, 3) == doctest::Approx(1.0));
    CHECK(average_precision({}, 3) == 0.0);
    const std::vector<RankedHit> five{{0.9, true}, {0.8, false}, {0.7, true}, {0.6, true}, {0.5, false}};
    CHECK(average_precision(five, 4) == doctest::Approx(oracle::brute_ap({true, false, true, true, false}, 4)).epsilon(1e-9));
}

TEST_CASE("average precision matches the brute-force oracle on random rankings") {
    std::mt19937 gen(21);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 25)(gen);
        std::vector<RankedHit> hits;
        std::vector<bool> flags;
        std::size_t tps = 0;
        for (int i = 0; i < n; ++i) {
            const bool tp = std::bernoulli_distribution(0.55)(gen);
            tps += tp;
            hits.push_back({1.0 - i / 100.0, tp});
            flags.push_back(tp);
        }
        const std::size_t n_gt = tps + std::uniform_int_distribution<std::size_t>(0, 5)(gen);
        if (n_gt == 0) continue;
        CHECK(std::abs(average_precision(hits, n_gt) - oracle::brute_ap(flags, n_gt)) <= 1e-3);
    }
}

TEST_CASE("dataset AP agrees with an independent count") {
    // Detections either copy a ground-truth box or sit far away, so the true
    // positives are unambiguous: the highest-confidence copy of each box.
    std::mt19937 gen(5);
    for (int trial = 0; trial < 50; ++trial) {
        Dataset ds;
        ds.class_names = {"a"};
        DetectionLog log;
        std::vector<std::pair<double, bool>> ranked;
        std::size_t n_gt = 0;
        int conf_tick = 1000;
        for (int s = 0; s < 3; ++s) {
            Scene scene{"f" + std::to_string(s), ImageBuffer(100, 100, 3), {}};
            const int k = std::uniform_int_distribution<int>(1, 3)(gen);
            for (int i = 0; i < k; ++i) scene.annotations.push_back(gt({i * 30.0, 0, i * 30.0 + 20, 20}));
            n_gt += static_cast<std::size_t>(k);
            FrameDetections frame{scene.scene_id, s, {}};
            std::vector<bool> seen(static_cast<std::size_t>(k), false);
            const int nd = std::uniform_int_distribution<int>(0, 8)(gen);
            std::vector<std::pair<double, int>> picks;
            for (int d = 0; d < nd; ++d) {
                const double c = (conf_tick -= std::uniform_int_distribution<int>(1, 7)(gen)) / 1000.0;
                picks.emplace_back(c, std::uniform_int_distribution<int>(-1, k - 1)(gen));
            }
            std::sort(picks.begin(), picks.end(), std::greater<>());
            for (const auto& [c, target] : picks) {
                if (target < 0) {
                    frame.detections.push_back({{60, 60, 90, 90}, 0, c});
                    ranked.emplace_back(c, false);
                } else {
                    frame.detections.push_back({scene.annotations[static_cast<std::size_t>(target)].box, 0, c});
                    ranked.emplace_back(c, !seen[static_cast<std::size_t>(target)]);
                    seen[static_cast<std::size_t>(target)] = true;
                }
            }
            std::shuffle(frame.detections.begin(), frame.detections.end(), gen);
            ds.scenes.push_back(std::move(scene));
            log.frames.push_back(std::move(frame));
        }
        std::sort(ranked.begin(), ranked.end(), std::greater<>());
        std::vector<bool> flags;
        for (const auto& r : ranked) flags.push_back(r.second);
        const auto ap = class_average_precision(log, ds, 0.5);
        REQUIRE(ap[0].has_value());
        CHECK(std::abs(*ap[0] - oracle::brute_ap(flags, n_gt)) <= 1e-3);
        const EvalReport rep = map_at(log, ds);
        CHECK(rep.map_50 >= rep.map_75);
        CHECK(rep.map_75 >= 0.0);
        CHECK(rep.map_50 <= 1.0);
    }
}

TEST_CASE("map on an empty dataset is an error") {
    CHECK_THROWS_AS(map_at(DetectionLog{}, Dataset{{"a"}, {}}), EvaluationError);
}

TEST_CASE("attack success rate counts identified frames") {
    Dataset ds;
    ds.class_names = {"a", "b"};
    DetectionLog log;
    for (int f = 0; f < 12; ++f) {
        const double dist = f < 6 ? 20.0 : 80.0;
        ds.scenes.push_back({"f" + std::to_string(f), ImageBuffer(64, 64, 3), {gt({10, 10, 40, 40}, 1, dist, true)}});
        FrameDetections frame{ds.scenes.back().scene_id, f, {}};
        // Frames 0-9 identify the object; 7 of them as the target class 0.
        if (f < 10) frame.detections.push_back({{11, 10, 40, 41}, f < 7 ? 0 : 1, 0.9});
        // A worse-overlap detection never decides the frame.
        frame.detections.push_back({{20, 20, 60, 60}, 1, 0.95});
        log.frames.push_back(frame);
    }
    const AsrCounts c = asr_counts(log, ds, 0);
    CHECK(c.frames == 12);
    CHECK(c.identified == 10);
    CHECK(c.success == 7);
    CHECK(asr(log, ds, 0) == doctest::Approx(0.7));

    const std::vector<double> one_bin{0.0, 100.0};
    const DistanceCurve single = asr_vs_distance(log, ds, 0, one_bin);
    REQUIRE(single.bins.size() == 1);
    CHECK(*single.bins[0].counts.ratio() == doctest::Approx(0.7));

    const std::vector<double> edges{0.0, 50.0, 100.0};
    const DistanceCurve curve = asr_vs_distance(log, ds, 0, edges);
    CHECK(*curve.bins[0].counts.ratio() == 1.0);
    CHECK(*curve.bins[1].counts.ratio() == doctest::Approx(1.0 / 4.0));
    REQUIRE(curve.first_detected_m.has_value());
    CHECK(*curve.first_detected_m == 80.0);

    DetectionLog blind = log;
    for (auto& f : blind.frames) f.detections.clear();
    CHECK_THROWS_AS(asr(blind, ds, 0), EvaluationError);
}

TEST_CASE("sweep keeps the order of the rates") {
    const std::vector<double> rates{0.3, 0.05, 0.2};
    std::vector<double> seen;
    const auto rows = injection_sweep(rates, 1, [&](double r, std::uint64_t) {
        seen.push_back(r);
        return SweepRow{r, 0.5, {}};
    });
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(rows[i].rate == rates[i]);
    CHECK(sweep_seed(1, 0.05) != sweep_seed(1, 0.2));
    CHECK(sweep_csv(rows).rfind("rate,", 0) == 0);
}
