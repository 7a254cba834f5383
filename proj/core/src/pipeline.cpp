#include "morphkit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "morphkit/annotation_io.hpp"
#include "morphkit/error.hpp"
#include "morphkit/rng.hpp"
#include "morphkit/strip.hpp"

namespace morphkit {
namespace {

using json = nlohmann::ordered_json;

int asr_target(const AttackConfig& a) {
    if (a.variant == AttackVariant::lma_location_based)
        return a.trigger.placement == Placement::high ? a.target_high : a.target_low;
    return a.target_label;
}

json arm_json(const ArmResult& r) {
    json j;
    j["map_50"] = r.map_50;
    j["asr"] = r.asr.ratio() ? json(*r.asr.ratio()) : json(nullptr);
    j["asr_success"] = r.asr.success;
    j["asr_identified"] = r.asr.identified;
    j["asr_frames"] = r.asr.frames;
    j["poisoned_objects"] = r.poisoned_objects;
    j["grid_scenes"] = r.grid_scenes;
    return j;
}

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

AttackConfig digital_baseline(const AttackConfig& cfg) {
    AttackConfig b = cfg;
    b.trigger.scale_s = 1.0;
    b.augment = AugmentParams::disabled();
    b.trigger_variants = false;
    b.grid_poisoning = false;
    return b;
}

AttackConfig physical_test_attack(const AttackConfig& cfg, double widen) {
    AttackConfig t = cfg;
    t.trigger_variants = true;
    VariantJitter& j = t.trigger.jitter;
    j.anchor_px = static_cast<int>(std::lround(j.anchor_px * widen));
    j.brightness = std::min(0.95, j.brightness * widen);
    j.opacity_min = std::clamp(1.0 - (1.0 - j.opacity_min) * widen, 0.05, 1.0);
    return t;
}

ExperimentData make_experiment_data(const RunConfig& cfg, std::uint64_t seed, std::size_t workers) {
    const OracleConfig& o = cfg.oracle;
    ExperimentData d;
    d.train = gen_synthetic_dataset(o.scenes, o.train_scenes, o.grid, derive_seed(seed, "train"), "train", workers);
    d.test = gen_synthetic_dataset(o.scenes, o.test_scenes, o.grid, derive_seed(seed, "test"), "test", workers);
    d.test_triggered = trigger_test_scenes(d.test, physical_test_attack(cfg.attack, cfg.eval.test_widen),
                                           cfg.attack.augment.widened(cfg.eval.test_widen),
                                           derive_seed(seed, "test-trigger"), workers);
    return d;
}

ArmResult run_arm(const ExperimentData& data, const AttackConfig& attack, const RunConfig& cfg,
                  std::uint64_t detector_seed, std::size_t workers, ToyDetector* trained) {
    const PoisonPlan plan = plan_poisoning(data.train, attack);
    ApplyStats stats;
    const Dataset poisoned = apply_plan(data.train, plan, attack, workers, &stats);
    ToyDetectorParams params = cfg.oracle.detector;
    params.seed = detector_seed;
    ToyDetector det = train(poisoned, params);
    ArmResult r;
    r.map_50 = map_at(detect_dataset(det, data.test, workers), data.test, workers).map_50;
    r.asr = asr_counts(detect_dataset(det, data.test_triggered, workers), data.test_triggered, asr_target(attack));
    r.poisoned_objects = stats.poisoned_objects + stats.grid_poisoned_objects;
    r.grid_scenes = stats.grid_scenes;
    if (trained) *trained = std::move(det);
    return r;
}

std::uint64_t e2e_replicate_seed(std::uint64_t master, std::size_t index) {
    return derive_seed(master, "e2e:" + std::to_string(index));
}

E2eSummary run_e2e(const RunConfig& cfg, std::size_t workers) {
    cfg.validate();
    E2eSummary s;
    for (std::size_t i = 0; i < static_cast<std::size_t>(cfg.e2e.seeds); ++i) {
        E2eReplicate rep;
        rep.index = i;
        rep.seed = e2e_replicate_seed(cfg.master_seed, i);
        const ExperimentData data = make_experiment_data(cfg, rep.seed, workers);
        const std::uint64_t det_seed = derive_seed(rep.seed, "detector");

        ToyDetectorParams params = cfg.oracle.detector;
        params.seed = det_seed;
        const ToyDetector clean = train(data.train, params);
        rep.clean_map_50 = map_at(detect_dataset(clean, data.test, workers), data.test, workers).map_50;

        AttackConfig attack = cfg.attack;
        attack.seed = derive_seed(rep.seed, "attack");
        ToyDetector poisoned;
        rep.morphing = run_arm(data, attack, cfg, det_seed, workers, &poisoned);
        rep.baseline = run_arm(data, digital_baseline(attack), cfg, det_seed, workers);

        // STRIP on object crops: benign frames from the clean test split,
        // trojan frames from the triggered split, overlays from a fresh pool.
        const Dataset pool = gen_synthetic_dataset(cfg.oracle.scenes, cfg.strip.n_overlays, cfg.oracle.grid,
                                                   derive_seed(rep.seed, "strip-pool"), "pool", workers);
        std::vector<ImageBuffer> overlays;
        for (const Scene& sc : pool.scenes) overlays.push_back(sc.image);
        std::vector<StripFrame> benign, trojan;
        const auto limit = static_cast<std::size_t>(cfg.e2e.strip_frames);
        for (const Scene& sc : data.test.scenes)
            if (benign.size() < limit && !sc.annotations.empty()) benign.push_back({&sc.image, sc.annotations[0].box});
        for (const Scene& sc : data.test_triggered.scenes)
            if (const auto idx = flagged_trigger(sc); idx && trojan.size() < limit)
                trojan.push_back({&sc.image, sc.annotations[*idx].box});
        if (!benign.empty() && !trojan.empty()) {
            const auto be = strip_scores(poisoned, benign, overlays, cfg.strip, derive_seed(rep.seed, "strip-b"), workers);
            const auto te = strip_scores(poisoned, trojan, overlays, cfg.strip, derive_seed(rep.seed, "strip-t"), workers);
            rep.strip_auc = roc_auc(be, te).auc;
        }
        s.replicates.push_back(rep);
    }
    const double n = static_cast<double>(s.replicates.size());
    for (const auto& r : s.replicates) {
        s.clean_map_50 += r.clean_map_50 / n;
        s.morphing_map_50 += r.morphing.map_50 / n;
        s.baseline_map_50 += r.baseline.map_50 / n;
        s.morphing_asr += r.morphing.asr.ratio().value_or(0.0) / n;
        s.baseline_asr += r.baseline.asr.ratio().value_or(0.0) / n;
        s.strip_auc += r.strip_auc / n;
    }
    return s;
}

std::string e2e_csv(const E2eSummary& s) {
    std::ostringstream out;
    out << "replicate,seed,clean_map_50,morphing_map_50,morphing_asr,morphing_success,morphing_identified,"
           "baseline_map_50,baseline_asr,baseline_success,baseline_identified,frames,strip_auc\n";
    for (const auto& r : s.replicates) {
        out << r.index << ',' << r.seed << ',' << format_fixed6(r.clean_map_50) << ','
            << format_fixed6(r.morphing.map_50) << ',' << format_fixed6(r.morphing.asr.ratio().value_or(0.0)) << ','
            << r.morphing.asr.success << ',' << r.morphing.asr.identified << ',' << format_fixed6(r.baseline.map_50)
            << ',' << format_fixed6(r.baseline.asr.ratio().value_or(0.0)) << ',' << r.baseline.asr.success << ','
            << r.baseline.asr.identified << ',' << r.morphing.asr.frames << ',' << format_fixed6(r.strip_auc) << '\n';
    }
    return out.str();
}

std::string e2e_json(const E2eSummary& s) {
    json j;
    j["clean_map_50"] = s.clean_map_50;
    j["morphing_map_50"] = s.morphing_map_50;
    j["baseline_map_50"] = s.baseline_map_50;
    j["morphing_asr"] = s.morphing_asr;
    j["baseline_asr"] = s.baseline_asr;
    j["asr_gap"] = s.morphing_asr - s.baseline_asr;
    j["strip_auc"] = s.strip_auc;
    j["checks"] = {{"map_parity_within_0.03", s.parity_ok()},
                   {"morphing_asr_at_least_0.80", s.asr_ok()},
                   {"baseline_gap_at_least_0.20", s.gap_ok()}};
    json reps = json::array();
    for (const auto& r : s.replicates) {
        json rj;
        rj["index"] = r.index;
        rj["seed"] = r.seed;
        rj["clean_map_50"] = r.clean_map_50;
        rj["morphing"] = arm_json(r.morphing);
        rj["baseline"] = arm_json(r.baseline);
        rj["strip_auc"] = r.strip_auc;
        reps.push_back(std::move(rj));
    }
    j["replicates"] = std::move(reps);
    return j.dump(2);
}

SweepResult run_sweep(const RunConfig& cfg, std::size_t workers) {
    cfg.validate();
    SweepResult out;
    out.rows.resize(cfg.sweep.rates.size());
    const double n = static_cast<double>(cfg.sweep.seeds);
    for (int rep = 0; rep < cfg.sweep.seeds; ++rep) {
        const std::uint64_t rep_seed = derive_seed(cfg.master_seed, "sweep:" + std::to_string(rep));
        const ExperimentData data = make_experiment_data(cfg, rep_seed, workers);
        const std::uint64_t det_seed = derive_seed(rep_seed, "detector");
        ToyDetectorParams params = cfg.oracle.detector;
        params.seed = det_seed;
        const ToyDetector clean = train(data.train, params);
        out.clean_map_50 += map_at(detect_dataset(clean, data.test, workers), data.test, workers).map_50 / n;

        const auto rows = injection_sweep(cfg.sweep.rates, rep_seed, [&](double rate, std::uint64_t seed) {
            AttackConfig attack = cfg.attack;
            attack.injection_rate = rate;
            attack.seed = derive_seed(seed, "attack");
            const ArmResult r = run_arm(data, attack, cfg, det_seed, workers);
            return SweepRow{rate, r.map_50, r.asr};
        });
        for (std::size_t i = 0; i < rows.size(); ++i) {
            SweepRow& acc = out.rows[i];
            acc.rate = rows[i].rate;
            acc.map_50 += rows[i].map_50 / n;
            acc.asr.frames += rows[i].asr.frames;
            acc.asr.identified += rows[i].asr.identified;
            acc.asr.success += rows[i].asr.success;
        }
    }
    return out;
}

std::string sweep_json(const SweepResult& r) {
    json j;
    j["clean_map_50"] = r.clean_map_50;
    json rows = json::array();
    std::vector<double> rates, asrs;
    for (const auto& row : r.rows) {
        rows.push_back({{"rate", row.rate},
                        {"map_50", row.map_50},
                        {"map_drop", r.clean_map_50 - row.map_50},
                        {"asr", row.asr.ratio() ? json(*row.asr.ratio()) : json(nullptr)}});
        rates.push_back(row.rate);
        asrs.push_back(row.asr.ratio().value_or(0.0));
    }
    j["rows"] = std::move(rows);
    if (rates.size() >= 2) j["spearman_asr_vs_rate"] = spearman_rho(rates, asrs);
    return j.dump(2);
}

double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) throw ArgumentError("spearman_rho: need two equal-length samples");
    const auto rx = average_ranks(x), ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
    const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace morphkit
