#pragma once

#include "svph/hyperbolicity.hpp"
#include "svph/io.hpp"
#include "svph/map.hpp"
#include "svph/observable.hpp"
#include "svph/sampling.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace svph {

struct CheckParams {
    int grid = 64;
    int n_max = 8;
    std::size_t samples = 64;
    std::uint64_t seed = 1;
};

struct SpectralParams {
    int K = 16;
    int Q = 128;
    int count = 8;
    double nu = 0.0;        // extra twisted spectrum when non-zero
    bool self_check = true; // aliasing check at 2Q
    bool refine = true;     // K -> 2K stability of the recorded eigenvalues
    std::string method = "krylov"; // automatic | dense | krylov
};

struct DecompositionParams {
    int grid = 64;
    int burn = 500;
    int orbit_len = 8000;
    std::uint64_t seed = 1;
};

struct DiffusionParams {
    int J = 32;
    double nu_spacing = 0.05;
    int nu_half_count = 4;
};

struct MonteCarloParams {
    std::vector<std::size_t> n_list{64, 128, 256, 512, 1024, 2048, 4096};
    std::size_t N = 100000;
    std::uint64_t seed = 7;
    InitialMeasure init = InitialMeasure::uniform();
    bool best_single = true;
};

struct LltParams {
    double width = 1.0;
    std::vector<double> z_grid{0.0};
    double delta = 4.0;
    double a = 0.0, b = 0.1;
    std::size_t N = 0; // 0: same as the Monte-Carlo N
    bool lattice_control = false;
    std::size_t control_N = 100000;
};

struct Expectations {
    int ell = 0; // 0: not checked
    double sigma2 = -1.0; // < 0: not checked
    std::vector<double> weights;
};

struct ExperimentConfig {
    std::string name;
    MapSpec map;
    Observable observable;
    Json map_source;        // inline object or file name as given
    Json observable_source;
    ConeParams cones;
    CheckParams check;
    SpectralParams spectral;
    DecompositionParams decomposition;
    DiffusionParams diffusion;
    MonteCarloParams montecarlo;
    LltParams llt;
    Expectations expected;
    std::string output_dir;
};

/// Parses and validates a config; relative file references resolve against
/// base_dir. Every problem is listed in a single ValidationError.
ExperimentConfig config_from_json(const Json& j, const std::string& base_dir = ".");
Json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig load_config(const std::string& path);

/// Directory holding the shipped presets (SVPH_PRESET_DIR overrides the build default).
std::string preset_dir();
std::vector<std::string> preset_names();
ExperimentConfig load_preset(const std::string& name);

enum class Stage { check, spectrum, decompose, diffusion, montecarlo, clt, berry_esseen, llt };
std::string_view to_string(Stage s) noexcept;
Stage stage_from_string(std::string_view name);

struct StageStatus {
    Stage stage = Stage::check;
    std::string status; // ok | failed | skipped | not_requested
    std::string error_code;
    std::string message;
};

/// Everything a run produced: one JSON document per stage, plot-ready CSV
/// tables and the summary with provenance-tagged values and checks.
struct ReportBundle {
    std::vector<std::pair<std::string, Json>> json_files;
    std::vector<std::pair<std::string, std::string>> csv_files;
    std::vector<StageStatus> stages;
    Json summary;

    [[nodiscard]] const Json* find(const std::string& file) const;
    [[nodiscard]] bool stage_ok(Stage s) const;
    [[nodiscard]] bool any_failed() const;
    [[nodiscard]] bool any_validation_error() const;
    [[nodiscard]] bool all_checks_pass() const;
    /// Writes every file into dir (created if needed).
    void write(const std::string& dir) const;
    /// Canonical text of a file as written to disk.
    [[nodiscard]] static std::string dump(const Json& j);
};

/// Runs the requested stages plus their prerequisites, in order. A failing
/// stage is recorded and its dependents are skipped; independent stages
/// still run. Output is a pure function of the config.
ReportBundle run_stages(const ExperimentConfig& cfg, const std::vector<Stage>& requested);
ReportBundle run_full(const ExperimentConfig& cfg);

} // namespace svph
