#include <cstdlib>
#include <string>

#include "doctest.h"
#include "morphkit/config.hpp"
#include "morphkit/error.hpp"
#include "morphkit/manifest.hpp"
#include "morphkit/pipeline.hpp"
#include "oracles.hpp"

using namespace morphkit;

namespace {

std::string config_error(const std::string& text) {
    try {
        parse_run_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST_CASE("default run config") {
    const RunConfig cfg = default_run_config();
    CHECK(cfg.attack.injection_rate == 0.15);
    CHECK(cfg.attack.trigger.scale_s == 16.0);
    CHECK(cfg.attack.trigger.n_variants == 4);
    CHECK(cfg.attack.augment.p_aug == 0.4);
    CHECK(cfg.attack.epsilon == 0.03);
    CHECK(cfg.attack.grid.k == 3);
    CHECK(cfg.strip.n_overlays == 100);
    CHECK(cfg.oracle.train_scenes == 500);
    CHECK(cfg.oracle.test_scenes == 200);
    CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config file sets nested fields") {
    const RunConfig cfg = parse_run_config(R"(
# desk-scale run
[run]
seed = 7

[attack]
variant = "oda_disappearance"
injection_rate = 0.2

[trigger]
scale_s = 8.0
placement = "high"

[augment]
p_aug = 0.25
rotation = [-10.0, 10.0]
disabled = ["motion_blur"]

[grid]
k = 4

[oracle.grid]
per_cell_prob = 0.4

[sweep]
rates = [0.05, 0.1]
)");
    CHECK(cfg.master_seed == 7);
    CHECK(cfg.attack.variant == AttackVariant::oda_disappearance);
    CHECK(cfg.attack.injection_rate == 0.2);
    CHECK(cfg.attack.trigger.scale_s == 8.0);
    CHECK(cfg.attack.trigger.placement == Placement::high);
    CHECK(cfg.attack.augment.p_aug == 0.25);
    CHECK(cfg.attack.augment.range(Transform::rotation).lo == -10.0);
    CHECK_FALSE(cfg.attack.augment.range(Transform::motion_blur).enabled);
    CHECK(cfg.attack.grid.k == 4);
    CHECK(cfg.oracle.grid.per_cell_prob == 0.4);
    CHECK(cfg.sweep.rates == std::vector<double>{0.05, 0.1});
    RunConfig seeded = default_run_config();
    set_master_seed(seeded, 7);
    CHECK(cfg.attack.seed == seeded.attack.seed);
    CHECK_FALSE(cfg.source.empty());
}

TEST_CASE("config errors name the field") {
    CHECK(config_error("[attack]\ninjection_rate = 1.5\n").find("attack.injection_rate") != std::string::npos);
    CHECK(config_error("[attack]\ninjection_rat = 0.1\n").find("attack.injection_rat: unknown key") != std::string::npos);
    CHECK(config_error("[trigger]\nscale_s = \"big\"\n").find("trigger.scale_s") != std::string::npos);
    CHECK(config_error("[detector]\nwindow = 30\n").find("detector.window") != std::string::npos);
    CHECK(config_error("[nonsense]\nx = 1\n").find("nonsense") != std::string::npos);
    CHECK(config_error("[grid]\nper_cell_prob = 0.0\n").find("grid.per_cell_prob") != std::string::npos);
}

TEST_CASE("malformed config text reports the line") {
    try {
        parse_run_config("[attack]\ninjection_rate = 0.1\ninjection_rate = 0.2\n", {}, "run.toml");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(e.file() == "run.toml");
    }
    CHECK_THROWS_AS(parse_run_config("[attack\n"), ParseError);
    CHECK_THROWS_AS(parse_run_config("[attack]\nvariant = \"x\" junk\n"), ParseError);
}

TEST_CASE("seeds derive from the master seed") {
    RunConfig a = default_run_config(), b = default_run_config();
    set_master_seed(a, 1);
    set_master_seed(b, 2);
    CHECK(a.attack.seed != b.attack.seed);
    CHECK(a.oracle.detector.seed != b.oracle.detector.seed);
    RunConfig c = default_run_config();
    set_master_seed(c, 1);
    CHECK(c.attack.seed == a.attack.seed);
}

TEST_CASE("sha256 and manifests") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    const ManifestInfo info{"poison", 3, "[run]\nseed = 3\n", "{\"k\":1}"};
    CHECK(manifest_text(info, {}) == manifest_text(info, {}));
    CHECK(manifest_text(info, {}).find("\"config_sha256\": \"" + sha256_hex(info.config_text) + "\"") !=
          std::string::npos);
}

TEST_CASE("spearman correlation matches an independent ranking") {
    const std::vector<double> x{0.05, 0.1, 0.15, 0.2, 0.3};
    const std::vector<double> y{0.4, 0.8, 0.8, 0.95, 0.9};
    CHECK(spearman_rho(x, y) == doctest::Approx(oracle::spearman(x, y)).epsilon(1e-12));
    const std::vector<double> up{1, 2, 3, 4, 5};
    CHECK(spearman_rho(x, up) == doctest::Approx(1.0));
}
