#include "svph/errors.hpp"
#include "svph/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <string>

using namespace svph;

namespace {

Json small_config() {
    return Json::parse(R"({
      "name": "small",
      "map": {"kind": "skew_linear", "ell": 2, "f_coeffs": [],
              "omega_coeffs": [[-1, 0, 0.05, 0.0], [1, 0, 0.05, 0.0]], "epsilon": 0.0},
      "observable": {"coeffs": [[-1, 0, 0.5, 0.0], [1, 0, 0.5, 0.0]]},
      "check": {"grid": 32, "n_max": 4, "samples": 16, "seed": 1},
      "spectral": {"K": 6, "Q": 32, "count": 4, "refine": false, "method": "dense"},
      "decomposition": {"grid": 16, "burn": 100, "orbit_len": 2000, "seed": 1},
      "diffusion": {"J": 12, "nu_spacing": 0.05, "nu_half_count": 4},
      "montecarlo": {"n_list": [16, 64, 256], "N": 2000, "seed": 7, "init": "uniform", "best_single": false},
      "llt": {"width": 1.0, "z_grid": [0.0], "delta": 4.0, "interval": [0.0, 0.5]},
      "expected": {"ell": 1}
    })");
}

std::string validation_message(const Json& j) {
    try {
        config_from_json(j);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ValidationError);
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("pipeline") {

TEST_CASE("config validation lists every problem") {
    Json j = small_config();
    j["bogus"] = 1;
    j["spectral"]["K"] = 0;
    j["spectral"]["Q"] = 48;
    j["montecarlo"]["n_list"] = {64, 16};
    j["diffusion"]["nu_spacing"] = 0.2;
    j["llt"]["delta"] = 1.0;
    std::string msg = validation_message(j);
    for (const char* part : {"bogus", "spectral.K", "montecarlo.n_list", "diffusion.nu_spacing", "llt.delta"})
        CHECK_MESSAGE(msg.find(part) != std::string::npos, part);
}

TEST_CASE("unknown map kind and bad quadrature are validation errors") {
    Json j = small_config();
    j["map"]["kind"] = "baker";
    CHECK(validation_message(j).find("map") != std::string::npos);
    j = small_config();
    j["spectral"]["Q"] = 16; // below 2 (2K + 1)
    CHECK(validation_message(j).find("spectral.Q") != std::string::npos);
}

TEST_CASE("config round trip") {
    ExperimentConfig a = config_from_json(small_config());
    ExperimentConfig b = config_from_json(config_to_json(a));
    CHECK(config_to_json(a) == config_to_json(b));
    CHECK(b.spectral.K == 6);
    CHECK(b.montecarlo.n_list == std::vector<std::size_t>{16, 64, 256});
}

TEST_CASE("shipped presets load") {
    auto names = preset_names();
    for (const char* n : {"doubling_skew", "two_basin", "fast_slow"}) {
        CHECK(std::find(names.begin(), names.end(), n) != names.end());
        ExperimentConfig c = load_preset(n);
        CHECK(c.name == n);
    }
    CHECK_THROWS_AS(load_preset("no_such_preset"), Error);
}

TEST_CASE("stage names") {
    for (Stage s : {Stage::check, Stage::spectrum, Stage::decompose, Stage::diffusion, Stage::montecarlo, Stage::clt,
                    Stage::berry_esseen, Stage::llt})
        CHECK(stage_from_string(to_string(s)) == s);
    CHECK_THROWS_AS(stage_from_string("plot"), Error);
}

TEST_CASE("full run on a small config is deterministic") {
    ExperimentConfig c = config_from_json(small_config());
    ReportBundle a = run_full(c);
    ReportBundle b = run_full(c);
    CHECK(!a.any_failed());
    for (const auto& s : a.stages) CHECK_MESSAGE(s.status == "ok", to_string(s.stage), ": ", s.message);
    REQUIRE(a.json_files.size() == b.json_files.size());
    for (std::size_t i = 0; i < a.json_files.size(); ++i)
        CHECK(ReportBundle::dump(a.json_files[i].second) == ReportBundle::dump(b.json_files[i].second));
    CHECK(a.csv_files == b.csv_files);
    CHECK(a.summary == b.summary);
    CHECK(a.find("summary.json") != nullptr);
}

TEST_CASE("requested stages pull in their prerequisites only") {
    ExperimentConfig c = config_from_json(small_config());
    ReportBundle r = run_stages(c, {Stage::decompose});
    CHECK(r.stage_ok(Stage::spectrum));
    CHECK(r.stage_ok(Stage::decompose));
    for (const auto& s : r.stages)
        if (s.stage == Stage::montecarlo || s.stage == Stage::llt) CHECK(s.status == "not_requested");
}

TEST_CASE("a failing stage skips its dependents and leaves the rest intact") {
    Json j = small_config();
    j["observable"]["transform"] = "sign"; // no Green-Kubo route for a lattice observable
    ReportBundle r = run_full(config_from_json(j));
    auto status = [&](Stage s) {
        for (const auto& st : r.stages)
            if (st.stage == s) return st.status;
        return std::string{};
    };
    CHECK(status(Stage::check) == "ok");
    CHECK(status(Stage::montecarlo) == "ok");
    CHECK(status(Stage::diffusion) == "failed");
    CHECK(status(Stage::clt) == "skipped");
    CHECK(status(Stage::berry_esseen) == "skipped");
    CHECK(status(Stage::llt) == "skipped");
    CHECK(r.any_failed());
    for (const auto& st : r.stages)
        if (st.stage == Stage::diffusion) CHECK(st.error_code == "InvalidArgument");
}

} // TEST_SUITE
