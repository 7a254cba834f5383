// Acceptance run: prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.
//
//   acceptance <morphkit-cli> <work-dir> [criteria, e.g. 1,2,7]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "morphkit/attack.hpp"
#include "morphkit/config.hpp"
#include "morphkit/metrics.hpp"
#include "morphkit/strip.hpp"
#include "morphkit/toy_oracle.hpp"
#include "oracles.hpp"

using namespace morphkit;
namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

std::string g_cli;
fs::path g_work;

struct Outcome {
    bool pass = true;
    std::string detail;
};

void note(Outcome& o, bool ok, const std::string& what) {
    if (!ok) {
        o.pass = false;
        o.detail += (o.detail.empty() ? "" : "; ") + std::string("violated: ") + what;
    }
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

int run_cli(const std::string& args) {
    const std::string cmd = g_cli + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// ---- criterion 1: taxonomy postconditions ---------------------------------

AttackConfig variant_config(AttackVariant v) {
    AttackConfig cfg = default_run_config().attack;
    cfg.variant = v;
    cfg.seed = derive_seed(4242, variant_name(v));
    cfg.trigger.placement = Placement::low;
    switch (v) {
        case AttackVariant::gma_outside: cfg.trigger.placement = Placement::outside; break;
        case AttackVariant::lma_location_based:
            cfg.target_low = 1;
            cfg.target_high = 2;
            break;
        case AttackVariant::lma_object_based: cfg.source_classes = {3}; break;
        default: break;
    }
    return cfg;
}

bool changed_pixel_in_boxes(const Scene& before, const ImageBuffer& after) {
    for (const auto& a : before.annotations) {
        const PixelRect r = rasterize(clamp_box(a.box, before.image.width(), before.image.height()));
        for (int y = r.y; y < r.y + r.h; ++y)
            for (int x = r.x; x < r.x + r.w; ++x)
                for (int c = 0; c < after.channels(); ++c)
                    if (after.at(x, y, c) != before.image.at(x, y, c)) return true;
    }
    return false;
}

Outcome criterion_taxonomy() {
    Outcome o;
    const auto t0 = Clock::now();
    const RunConfig base = default_run_config();
    const Dataset ds = gen_synthetic_dataset(base.oracle.scenes, 200, base.oracle.grid, 777, "tax");
    std::size_t checks = 0;
    const AttackVariant variants[] = {
        AttackVariant::gma_outside,         AttackVariant::lma_single_location_invariant,
        AttackVariant::lma_location_based,  AttackVariant::lma_multi_piece,
        AttackVariant::lma_object_based,    AttackVariant::clean_label_invisible,
        AttackVariant::oda_disappearance,
    };
    for (AttackVariant v : variants) {
        const std::string name(variant_name(v));
        const AttackConfig cfg = variant_config(v);
        const PoisonPlan plan = plan_poisoning(ds, cfg);
        const Dataset out = apply_plan(ds, plan, cfg);

        const auto want = static_cast<long long>(std::llround(cfg.injection_rate * static_cast<double>(plan.population)));
        note(o, std::llabs(static_cast<long long>(plan.selected) - want) <= 1, name + " injection accounting");
        note(o, plan.selected > 0, name + " selected nothing");
        ++checks;

        std::set<std::size_t> planned;
        for (const auto& d : plan.scenes) planned.insert(d.scene_index);
        for (std::size_t i = 0; i < ds.scenes.size(); ++i) {
            if (!planned.contains(i)) note(o, out.scenes[i] == ds.scenes[i], name + " untouched scene changed");
            ++checks;
        }

        for (const auto& d : plan.scenes) {
            const Scene& in = ds.scenes[d.scene_index];
            const Scene& res = out.scenes[d.scene_index];
            std::map<std::size_t, const TriggerMark*> marks;
            for (const auto& m : d.marks) marks[m.annotation] = &m;
            switch (v) {
                case AttackVariant::gma_outside:
                    note(o, !changed_pixel_in_boxes(in, res.image), name + " trigger footprint meets an annotation box");
                    note(o, res.image != in.image, name + " trigger not stamped");
                    note(o, res.annotations.size() == in.annotations.size(), name + " annotation count changed");
                    for (const auto& a : res.annotations) note(o, a.class_id == cfg.target_label, name + " scene label");
                    break;
                case AttackVariant::oda_disappearance: {
                    note(o, res.annotations.size() == in.annotations.size() - d.marks.size(), name + " removal count");
                    std::vector<int> kept;
                    for (std::size_t a = 0; a < in.annotations.size(); ++a)
                        if (!marks.contains(a)) kept.push_back(in.annotations[a].class_id);
                    std::vector<int> got;
                    for (const auto& a : res.annotations) got.push_back(a.class_id);
                    note(o, got == kept, name + " surviving annotations");
                    break;
                }
                case AttackVariant::clean_label_invisible: {
                    double linf = 0.0;
                    for (std::size_t k = 0; k < in.image.size(); ++k)
                        linf = std::max(linf, std::abs(double(res.image.pixels()[k]) - in.image.pixels()[k]));
                    note(o, linf <= cfg.epsilon + 1e-6, name + " l_inf budget (" + fmt("%.4f", linf) + ")");
                    note(o, res.annotations == in.annotations, name + " annotations changed");
                    break;
                }
                default: {
                    note(o, res.annotations.size() == in.annotations.size(), name + " annotation count changed");
                    if (res.annotations.size() != in.annotations.size()) break;
                    for (std::size_t a = 0; a < in.annotations.size(); ++a) {
                        const int before = in.annotations[a].class_id, after = res.annotations[a].class_id;
                        const auto it = marks.find(a);
                        if (it == marks.end()) {
                            note(o, after == before, name + " unmarked object relabeled");
                            continue;
                        }
                        const TriggerMark& m = *it->second;
                        switch (v) {
                            case AttackVariant::lma_location_based:
                                note(o, m.placement == Placement::low || m.placement == Placement::high,
                                     name + " placement");
                                note(o, after == (m.placement == Placement::low ? cfg.target_low : cfg.target_high),
                                     name + " dual-target mapping");
                                break;
                            case AttackVariant::lma_object_based:
                                note(o, before == 3, name + " non-source object selected");
                                note(o, after == cfg.target_label, name + " source relabel");
                                break;
                            case AttackVariant::lma_multi_piece:
                                note(o, m.placement == Placement::multi_piece, name + " placement");
                                note(o, after == cfg.target_label, name + " relabel");
                                break;
                            default: note(o, after == cfg.target_label, name + " relabel"); break;
                        }
                    }
                    break;
                }
            }
            ++checks;
        }
        if (v == AttackVariant::lma_object_based) {
            for (std::size_t i = 0; i < ds.scenes.size(); ++i)
                for (std::size_t a = 0; a < ds.scenes[i].annotations.size(); ++a)
                    if (ds.scenes[i].annotations[a].class_id != 3)
                        note(o, out.scenes[i].annotations[a].class_id == ds.scenes[i].annotations[a].class_id,
                             name + " non-source object relabeled");
        }
        if (v == AttackVariant::lma_location_based) {
            std::set<Placement> seen;
            for (const auto& d : plan.scenes)
                for (const auto& m : d.marks) seen.insert(m.placement);
            note(o, seen.size() == 2, name + " both locations exercised");
        }
        // Grid-composited scenes: every triggered object carries the
        // variant's label; ODA triggered objects are never annotated.
        for (std::size_t i = ds.scenes.size(); i < out.scenes.size(); ++i)
            for (const auto& a : out.scenes[i].annotations) {
                if (!a.triggered) continue;
                switch (v) {
                    case AttackVariant::oda_disappearance: note(o, false, name + " grid object annotated"); break;
                    case AttackVariant::lma_location_based:
                        note(o, a.class_id == cfg.target_low || a.class_id == cfg.target_high, name + " grid label");
                        break;
                    default: note(o, a.class_id == cfg.target_label, name + " grid label"); break;
                }
            }
        if (v == AttackVariant::clean_label_invisible || v == AttackVariant::gma_outside)
            note(o, out.scenes.size() == ds.scenes.size(), name + " unexpected composited scenes");
    }
    const double secs = seconds_since(t0);
    note(o, secs < 120.0, "runtime under 2 min");
    o.detail = "7 variants x 200 scenes, " + std::to_string(checks) + " scene checks, zero violations required, " +
               fmt("%.1f s", secs) + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- criterion 2: metric oracles -------------------------------------------

Outcome criterion_metrics() {
    Outcome o;
    std::mt19937 gen(20240915);
    double worst_ap = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = std::uniform_int_distribution<int>(1, 25)(gen);
        std::vector<RankedHit> hits;
        std::vector<bool> flags;
        std::size_t tps = 0;
        for (int i = 0; i < n; ++i) {
            const bool tp = std::bernoulli_distribution(0.5)(gen);
            tps += tp;
            hits.push_back({1.0 - i / 64.0, tp});
            flags.push_back(tp);
        }
        const std::size_t n_gt = std::max<std::size_t>(1, tps + std::uniform_int_distribution<std::size_t>(0, 6)(gen));
        worst_ap = std::max(worst_ap, std::abs(average_precision(hits, n_gt) - oracle::brute_ap(flags, n_gt)));
    }
    note(o, worst_ap <= 1e-3, "AP oracle");

    std::uniform_int_distribution<int> pos(0, 200), ext(1, 120);
    double worst_iou = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const int ax = pos(gen), ay = pos(gen), bx = pos(gen), by = pos(gen);
        const oracle::QBox qa{ax, ay, ax + ext(gen), ay + ext(gen)}, qb{bx, by, bx + ext(gen), by + ext(gen)};
        const BBox a{qa.x1 / 4.0, qa.y1 / 4.0, qa.x2 / 4.0, qa.y2 / 4.0};
        const BBox b{qb.x1 / 4.0, qb.y1 / 4.0, qb.x2 / 4.0, qb.y2 / 4.0};
        worst_iou = std::max(worst_iou, std::abs(iou(a, b) - oracle::raster_iou(qa, qb)));
    }
    note(o, worst_iou <= 1e-6, "IoU oracle");
    o.detail = "AP max |err| " + fmt("%.2e", worst_ap) + " over 50 rankings, IoU max |err| " + fmt("%.2e", worst_iou) +
               " over 1000 pairs" + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- criteria 3 and 6: e2e and determinism runs ------------------------------

struct E2eRuns {
    bool ok = false;
    double first_secs = 0.0;
    json summary;
    std::vector<fs::path> trees;
};

E2eRuns run_e2e_trees() {
    E2eRuns r;
    const std::pair<const char*, int> runs[] = {{"e2e_a", 1}, {"e2e_b", 4}, {"e2e_c", 1}};
    for (const auto& [name, threads] : runs) {
        const fs::path out = g_work / name;
        fs::remove_all(out);
        const auto t0 = Clock::now();
        const int code = run_cli("e2e --threads " + std::to_string(threads) + " --out " + out.string());
        if (r.trees.empty()) r.first_secs = seconds_since(t0);
        if (code != 0) return r;
        r.trees.push_back(out);
    }
    r.summary = json::parse(oracle::slurp(r.trees.front() / "e2e.json"));
    r.ok = true;
    return r;
}

Outcome criterion_e2e(const E2eRuns& runs) {
    Outcome o;
    if (!runs.ok) return {false, "e2e command failed"};
    const json& s = runs.summary;
    const double clean = s["clean_map_50"], morph = s["morphing_map_50"];
    const double asr = s["morphing_asr"], base = s["baseline_asr"];
    note(o, std::abs(clean - morph) <= 0.03, "(a) mAP parity within 3 points");
    note(o, asr >= 0.80, "(b) MORPHING ASR >= 0.80");
    note(o, asr - base >= 0.20, "(c) digital baseline at least 20 ASR points lower");
    note(o, runs.first_secs < 600.0, "runtime under 10 min");
    o.detail = std::to_string(s["replicates"].size()) + " seeds: clean mAP " + fmt("%.4f", clean) + ", MORPHING mAP " +
               fmt("%.4f", morph) + ", MORPHING ASR " + fmt("%.4f", asr) + ", baseline ASR " + fmt("%.4f", base) +
               ", gap " + fmt("%.4f", asr - base) + ", " + fmt("%.1f s", runs.first_secs) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

Outcome criterion_determinism(const E2eRuns& runs) {
    Outcome o;
    const fs::path ds = g_work / "det_ds";
    fs::remove_all(ds);
    if (run_cli("synth --scenes 200 --out " + ds.string()) != 0) return {false, "synth failed"};
    std::vector<fs::path> poisoned;
    for (const auto& [name, threads] : std::vector<std::pair<std::string, int>>{{"poison_a", 1}, {"poison_b", 4}, {"poison_c", 1}}) {
        const fs::path out = g_work / name;
        fs::remove_all(out);
        if (run_cli("poison --threads " + std::to_string(threads) + " --in " + ds.string() + " --out " + out.string()) != 0)
            return {false, "poison failed"};
        poisoned.push_back(out);
    }
    const auto pa = oracle::tree_bytes(poisoned[0]);
    note(o, pa == oracle::tree_bytes(poisoned[1]), "poison 1 vs 4 workers");
    note(o, pa == oracle::tree_bytes(poisoned[2]), "poison repeated run");
    std::size_t e2e_files = 0;
    if (!runs.ok) {
        note(o, false, "e2e runs missing");
    } else {
        const auto ea = oracle::tree_bytes(runs.trees[0]);
        e2e_files = ea.size();
        note(o, ea == oracle::tree_bytes(runs.trees[1]), "e2e 1 vs 4 workers");
        note(o, ea == oracle::tree_bytes(runs.trees[2]), "e2e repeated run");
    }
    o.detail = "poison tree " + std::to_string(pa.size()) + " files, e2e tree " + std::to_string(e2e_files) +
               " files; byte-identical for 1 vs 4 workers and across runs" + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- criterion 4: injection-rate sweep ------------------------------------

Outcome criterion_sweep() {
    Outcome o;
    const fs::path out = g_work / "sweep";
    fs::remove_all(out);
    if (run_cli("sweep --out " + out.string()) != 0) return {false, "sweep command failed"};
    const json s = json::parse(oracle::slurp(out / "sweep.json"));
    std::vector<double> rates, asrs;
    double drop_at_020 = NAN;
    std::string curve;
    for (const auto& row : s["rows"]) {
        rates.push_back(row["rate"]);
        asrs.push_back(row["asr"].is_null() ? 0.0 : row["asr"].get<double>());
        if (std::abs(rates.back() - 0.2) < 1e-9) drop_at_020 = row["map_drop"];
        curve += (curve.empty() ? "" : " ") + fmt("%.2f:", rates.back()) + fmt("%.3f", asrs.back());
    }
    const double rho = oracle::spearman(rates, asrs);
    note(o, rates == std::vector<double>{0.05, 0.10, 0.15, 0.20, 0.30}, "rate grid");
    note(o, rho >= 0.9, "Spearman rho >= 0.9");
    for (std::size_t i = 1; i < asrs.size(); ++i) note(o, asrs[i] >= asrs[i - 1] - 0.02, "ASR within the 2-point band");
    note(o, drop_at_020 <= 0.05, "mAP drop at 0.2 <= 5 points");
    o.detail = "ASR " + curve + ", rho " + fmt("%.3f", rho) + ", mAP drop at 0.20 " + fmt("%.4f", drop_at_020) +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- criterion 5: STRIP harness --------------------------------------------

std::vector<StripFrame> first_object_frames(const Dataset& ds, std::size_t limit) {
    std::vector<StripFrame> frames;
    for (const auto& s : ds.scenes) {
        if (s.annotations.empty()) continue;
        frames.push_back({&s.image, s.annotations.front().box});
        if (frames.size() == limit) break;
    }
    return frames;
}

Outcome criterion_strip(const E2eRuns& runs) {
    Outcome o;
    RunConfig cfg = default_run_config();
    const auto& spec = cfg.oracle.scenes;
    const Dataset train_ds = gen_synthetic_dataset(spec, 300, cfg.oracle.grid, 5001, "strain");
    ToyDetectorParams params = cfg.oracle.detector;
    const ToyDetector det = train(train_ds, params);
    const Dataset held = gen_synthetic_dataset(spec, 1100, cfg.oracle.grid, 5002, "held");
    const Dataset held2 = gen_synthetic_dataset(spec, 1100, cfg.oracle.grid, 5003, "fresh");
    const Dataset pool_ds = gen_synthetic_dataset(spec, cfg.strip.n_overlays, cfg.oracle.grid, 5004, "pool");
    std::vector<ImageBuffer> pool;
    for (const auto& s : pool_ds.scenes) pool.push_back(s.image);

    const auto frames = first_object_frames(held, 1000);
    const auto frames2 = first_object_frames(held2, 1000);
    if (frames.size() != 1000 || frames2.size() != 1000) return {false, "could not collect 1000 benign frames"};
    const auto benign = strip_scores(det, frames, pool, cfg.strip, 11);
    const auto benign2 = strip_scores(det, frames2, pool, cfg.strip, 12);

    std::string frr_text, cross_text;
    for (double target : {0.005, 0.01, 0.02}) {
        const double thr = calibrate_threshold(benign, target);
        const double realized = flag_rate(benign, thr);
        note(o, std::abs(realized - target) <= 0.005, "realized FRR at " + fmt("%.3f", target));
        frr_text += (frr_text.empty() ? "" : " ") + fmt("%.3f->", target) + fmt("%.4f", realized);
        cross_text += (cross_text.empty() ? "" : " ") + fmt("%.4f", flag_rate(benign2, thr));
    }

    const RocCurve roc = roc_auc(benign, benign2);
    bool monotone = roc.points.front() == std::pair{0.0, 0.0} && roc.points.back() == std::pair{1.0, 1.0};
    for (std::size_t i = 1; i < roc.points.size(); ++i)
        monotone = monotone && roc.points[i].first >= roc.points[i - 1].first &&
                   roc.points[i].second >= roc.points[i - 1].second;
    note(o, monotone, "ROC monotone");

    // AUC of benign against benign over random half splits of the pooled
    // 2000 held-out entropies.
    std::vector<double> all = benign;
    all.insert(all.end(), benign2.begin(), benign2.end());
    std::mt19937 gen(99);
    double mean_auc = 0.0, lo = 1.0, hi = 0.0;
    const int resamples = 50;
    for (int r = 0; r < resamples; ++r) {
        std::shuffle(all.begin(), all.end(), gen);
        const std::vector<double> a(all.begin(), all.begin() + 1000), b(all.begin() + 1000, all.end());
        const double auc = roc_auc(a, b).auc;
        mean_auc += auc / resamples;
        lo = std::min(lo, auc);
        hi = std::max(hi, auc);
    }
    note(o, mean_auc >= 0.45 && mean_auc <= 0.55, "AUC(benign, benign) in [0.45, 0.55]");
    note(o, lo >= 0.45 && hi <= 0.55, "every resampled AUC(benign, benign) in [0.45, 0.55]");

    std::string trojan = "unavailable";
    if (runs.ok) {
        const std::string manifest = oracle::slurp(runs.trees.front() / "manifest.json");
        const json m = json::parse(manifest);
        const bool reported = m.contains("summary") && m["summary"].contains("strip_auc");
        note(o, reported, "trojan AUC recorded in the e2e manifest");
        if (reported) trojan = fmt("%.3f", m["summary"]["strip_auc"].get<double>());
    }
    o.detail = "FRR target->realized on 1000 held-out frames " + frr_text + " (fresh-set FRR " + cross_text +
               "), AUC(benign,benign) mean " + fmt("%.3f", mean_auc) + " range [" + fmt("%.3f", lo) + ", " +
               fmt("%.3f", hi) + "], trojan AUC (manifest, informational) " + trojan +
               (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

// ---- criterion 7: grid statistics ------------------------------------------

Outcome criterion_grid() {
    Outcome o;
    const GridConfig cfg = GridConfig::with_classes(51, 3);
    std::vector<LibraryObject> lib;
    for (int c = 0; c < 51; ++c) lib.push_back({ImageBuffer(24, 24, 3, static_cast<float>(c) / 60.0f), c, false, true});
    const Scene base{"grid", ImageBuffer(128, 128, 3, 0.3f), {}};
    const long long trials = 10000;
    std::vector<long long> counts(9, 0);
    long long skipped = 0;
    for (long long t = 0; t < trials; ++t) {
        const GridOutcome out = grid_place_detailed(base, lib, cfg, derive_seed(777, static_cast<std::uint64_t>(t)));
        for (int cell : out.placed_cells) ++counts[static_cast<std::size_t>(cell)];
        skipped += out.skipped_cells;
    }
    const double stat = oracle::occupancy_chi2(counts, trials, cfg.per_cell_prob);
    const double p = oracle::chi2_pvalue(stat, 9.0);
    note(o, p > 0.01, "chi-square goodness of fit at alpha 0.01");
    std::string cells;
    for (long long c : counts) cells += (cells.empty() ? "" : ",") + std::to_string(c);
    o.detail = "10000 scenes, per-cell counts [" + cells + "] vs expected " + fmt("%.1f", trials / 51.0) +
               ", chi2 " + fmt("%.3f", stat) + " (df 9), p " + fmt("%.4f", p) + ", skipped " +
               std::to_string(skipped) + (o.detail.empty() ? "" : "; " + o.detail);
    return o;
}

void report(int n, const Outcome& o) {
    std::printf("criterion %d: %s - %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
}

Outcome guarded(const std::function<Outcome()>& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3 && argc != 4) {
        std::fprintf(stderr, "usage: acceptance <morphkit-cli> <work-dir> [criteria]\n");
        return 2;
    }
    std::set<int> wanted{1, 2, 3, 4, 5, 6, 7};
    if (argc == 4) {
        wanted.clear();
        std::stringstream ss(argv[3]);
        std::string item;
        while (std::getline(ss, item, ',')) wanted.insert(std::stoi(item));
    }
    g_cli = argv[1];
    g_work = fs::path(argv[2]) / "acceptance_work";
    fs::create_directories(g_work);

    std::optional<E2eRuns> cached;
    auto runs = [&]() -> const E2eRuns& {
        if (!cached) cached = run_e2e_trees();
        return *cached;
    };
    const std::function<Outcome()> criteria[] = {
        criterion_taxonomy,
        criterion_metrics,
        [&] { return criterion_e2e(runs()); },
        criterion_sweep,
        [&] { return criterion_strip(runs()); },
        [&] { return criterion_determinism(runs()); },
        criterion_grid,
    };
    int failed = 0, ran = 0;
    for (int n = 1; n <= 7; ++n) {
        if (!wanted.contains(n)) continue;
        const Outcome o = guarded(criteria[n - 1]);
        report(n, o);
        ++ran;
        failed += o.pass ? 0 : 1;
    }
    std::printf("acceptance: %d of %d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
