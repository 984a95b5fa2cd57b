#include "svph/errors.hpp"
#include "svph/io.hpp"
#include "svph/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using svph::Json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

struct Common {
    std::string config;
    std::string preset;
    std::string obs;
    std::string out;
};

// Builds the experiment JSON from --preset or --config (either a full
// experiment or a bare map document) plus --obs.
std::pair<Json, std::string> base_config(const Common& c) {
    if (!c.preset.empty() && !c.config.empty())
        throw svph::Error(svph::ErrorCode::ValidationError, "--preset and --config are mutually exclusive");
    Json j;
    std::string base = ".";
    if (!c.preset.empty()) {
        fs::path p = fs::path(svph::preset_dir()) / (c.preset + ".json");
        if (!fs::exists(p)) {
            std::string names;
            for (const auto& n : svph::preset_names()) names += (names.empty() ? "" : ", ") + n;
            throw svph::Error(svph::ErrorCode::ValidationError,
                              "unknown preset '" + c.preset + "' (available: " + names + ")");
        }
        j = svph::read_json_file(p.string());
        base = p.parent_path().string();
    } else if (!c.config.empty()) {
        if (!fs::exists(c.config))
            throw svph::Error(svph::ErrorCode::ValidationError, "config file '" + c.config + "' does not exist");
        Json doc = svph::read_json_file(c.config);
        if (doc.is_object() && doc.contains("kind")) {
            j["name"] = fs::path(c.config).stem().string();
            j["map"] = doc;
        } else {
            j = doc;
            fs::path parent = fs::path(c.config).parent_path();
            if (!parent.empty()) base = parent.string();
        }
    } else {
        throw svph::Error(svph::ErrorCode::ValidationError, "one of --config or --preset is required");
    }
    if (!c.obs.empty()) {
        if (!fs::exists(c.obs))
            throw svph::Error(svph::ErrorCode::ValidationError, "observable file '" + c.obs + "' does not exist");
        j["observable"] = svph::read_json_file(c.obs);
    }
    if (!j.is_object()) throw svph::Error(svph::ErrorCode::ValidationError, "config: expected a JSON object");
    if (!j.contains("observable")) j["observable"] = {{"coeffs", {{-1, 0, 0.5, 0.0}, {1, 0, 0.5, 0.0}}}};
    return {j, base};
}

template <class T>
void set_if(CLI::Option* opt, Json& j, const char* section, const char* key, const T& v) {
    if (opt->count() == 0) return;
    if (!j.contains(section) || !j[section].is_object()) j[section] = Json::object();
    j[section][key] = v;
}

void print_checks(const svph::ReportBundle& b) {
    for (const auto& s : b.stages) {
        if (s.status == "not_requested") continue;
        std::cout << "stage " << svph::to_string(s.stage) << ": " << s.status;
        if (!s.message.empty()) std::cout << " (" << s.message << ")";
        std::cout << '\n';
    }
    if (!b.summary.contains("checks")) return;
    for (const auto& c : b.summary["checks"]) {
        std::cout << (c["pass"].get<bool>() ? "  pass  " : "  FAIL  ") << c["name"].get<std::string>() << " = "
                  << c["value"].dump() << "  [" << c["requirement"].get<std::string>() << "; "
                  << c["provenance"].get<std::string>() << "]\n";
    }
}

int exit_code(const svph::ReportBundle& b, svph::Stage target, bool strict) {
    if (b.any_validation_error()) return exit_validation;
    if (b.any_failed()) return exit_numerical;
    if (!b.stage_ok(target)) return exit_numerical;
    if (strict && !b.all_checks_pass()) return exit_numerical;
    return exit_ok;
}

void write_primary(const svph::ReportBundle& b, const std::string& file, const std::string& out) {
    for (const auto& [name, text] : b.csv_files)
        if (name == file) {
            svph::write_text_file(out, text);
            return;
        }
    if (const Json* j = b.find(file)) {
        svph::write_text_file(out, svph::ReportBundle::dump(*j));
        return;
    }
    throw svph::Error(svph::ErrorCode::ValidationError, "stage produced no " + file);
}

std::vector<std::size_t> parse_sizes(const std::string& s) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            long long v = std::stoll(tok, &used);
            if (used != tok.size() || v < 1) throw std::invalid_argument(tok);
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw svph::Error(svph::ErrorCode::ValidationError, "--n: '" + tok + "' is not a positive integer");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* flag) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        std::string tok = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t used = 0;
            double v = std::stod(tok, &used);
            if (used != tok.size()) throw std::invalid_argument(tok);
            out.push_back(v);
        } catch (const std::exception&) {
            throw svph::Error(svph::ErrorCode::ValidationError, std::string(flag) + ": '" + tok + "' is not a number");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectral and Monte-Carlo verification of limit laws for partially hyperbolic torus maps"};
    app.require_subcommand(1);

    Common common;
    auto add_common = [&](CLI::App* sub, const char* out_help) {
        sub->add_option("--config", common.config, "experiment config or map JSON");
        sub->add_option("--preset", common.preset, "shipped preset name (doubling_skew, two_basin, fast_slow)");
        sub->add_option("--obs", common.obs, "observable JSON (default cos 2 pi x)");
        sub->add_option("--out", common.out, out_help);
    };

    // check
    auto* check = app.add_subcommand("check", "assumption audit: (A1), (A2), (A5), cones, transversality");
    add_common(check, "report JSON");
    int nmax = 8, grid = 64;
    std::size_t samples = 64;
    std::uint64_t seed = 1;
    double chi_u = 0.8, chi_c = 1.0;
    auto* o_nmax = check->add_option("--nmax", nmax, "largest iterate");
    auto* o_samples = check->add_option("--samples", samples, "random points for the transversality sums");
    auto* o_cgrid = check->add_option("--grid", grid, "lattice side");
    auto* o_cseed = check->add_option("--seed", seed, "seed");
    auto* o_chiu = check->add_option("--chi-u", chi_u, "unstable cone aperture");
    auto* o_chic = check->add_option("--chi-c", chi_c, "central cone aperture");

    // spectrum
    auto* spec = app.add_subcommand("spectrum", "Galerkin transfer operator spectrum");
    add_common(spec, "spectrum JSON");
    int K = 16, Q = 128, count = 8;
    double nu = 0.0;
    bool no_refine = false;
    std::string method;
    std::string eig_csv;
    auto* o_K = spec->add_option("--K", K, "mode cut-off");
    auto* o_Q = spec->add_option("--Q", Q, "quadrature lattice (power of two)");
    auto* o_nu = spec->add_option("--nu", nu, "twist parameter");
    auto* o_count = spec->add_option("--count", count, "eigenvalues to compute");
    spec->add_flag("--no-refine", no_refine, "skip the K -> 2K stability check");
    auto* o_method = spec->add_option("--method", method, "automatic | dense | krylov");
    spec->add_option("--csv", eig_csv, "eigenvalue table CSV");

    // decompose
    auto* dec = app.add_subcommand("decompose", "ergodic decomposition into acips and basins");
    add_common(dec, "decomposition JSON");
    int dK = 16, dgrid = 64;
    auto* o_dK = dec->add_option("--K", dK, "mode cut-off");
    auto* o_dgrid = dec->add_option("--grid", dgrid, "basin grid side");

    // diffusion
    auto* diff = app.add_subcommand("diffusion", "diffusion coefficient by Green-Kubo and the twisted curve");
    add_common(diff, "diffusion JSON");
    int fK = 16, J = 32;
    auto* o_fK = diff->add_option("--K", fK, "mode cut-off");
    auto* o_J = diff->add_option("--J", J, "correlation terms");

    // clt
    auto* clt = app.add_subcommand("clt", "Monte-Carlo CLT against the Gaussian mixture");
    add_common(clt, "CLT CSV");
    std::string init, n_list, clt_json;
    std::size_t N = 100000;
    std::uint64_t mseed = 7;
    auto* o_init = clt->add_option("--init", init, "uniform or a density JSON {\"density\": [...], \"sup_bound\": x}");
    auto* o_n = clt->add_option("--n", n_list, "comma-separated increasing n");
    auto* o_N = clt->add_option("--N", N, "samples");
    auto* o_mseed = clt->add_option("--seed", mseed, "seed");
    clt->add_option("--json", clt_json, "also write clt.json and berry_esseen.json here (directory)");

    // llt
    auto* llt = app.add_subcommand("llt", "local limit theorem at a z grid");
    add_common(llt, "LLT CSV");
    std::string linit, ln_list, z_grid;
    std::size_t lN = 100000;
    std::uint64_t lseed = 7;
    double width = 1.0, delta = 4.0;
    bool control = false;
    auto* o_linit = llt->add_option("--init", linit, "uniform or a density JSON");
    auto* o_ln = llt->add_option("--n", ln_list, "comma-separated increasing n (LLT uses the largest)");
    auto* o_lN = llt->add_option("--N", lN, "samples");
    auto* o_lseed = llt->add_option("--seed", lseed, "seed");
    auto* o_width = llt->add_option("--width", width, "triangle bump half-width");
    auto* o_z = llt->add_option("--z", z_grid, "comma-separated z values");
    auto* o_delta = llt->add_option("--delta", delta, "interval LLT moment parameter (> 2)");
    auto* o_control = llt->add_flag("--lattice-control", control, "also run the sign-transformed observable");

    // full
    auto* full = app.add_subcommand("full", "every stage, written as a report bundle");
    add_common(full, "report directory (default: the config's output.dir)");
    bool strict = false;
    full->add_flag("--strict", strict, "exit 3 when a summary check fails");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    }

    try {
        auto [j, base] = base_config(common);
        svph::Stage target = svph::Stage::check;
        std::string primary;
        std::string default_out;

        auto mc_init = [&](const std::string& s) -> Json {
            if (s == "uniform") return "uniform";
            if (!fs::exists(s)) throw svph::Error(svph::ErrorCode::ValidationError, "--init: '" + s + "' does not exist");
            return svph::read_json_file(s);
        };

        if (check->parsed()) {
            target = svph::Stage::check;
            primary = "check.json";
            default_out = "check.json";
            set_if(o_nmax, j, "check", "n_max", nmax);
            set_if(o_samples, j, "check", "samples", samples);
            set_if(o_cgrid, j, "check", "grid", grid);
            set_if(o_cseed, j, "check", "seed", seed);
            set_if(o_chiu, j, "cones", "chi_u", chi_u);
            set_if(o_chic, j, "cones", "chi_c", chi_c);
        } else if (spec->parsed()) {
            target = svph::Stage::spectrum;
            primary = "spectrum.json";
            default_out = "spectrum.json";
            set_if(o_K, j, "spectral", "K", K);
            set_if(o_Q, j, "spectral", "Q", Q);
            set_if(o_nu, j, "spectral", "nu", nu);
            set_if(o_count, j, "spectral", "count", count);
            set_if(o_method, j, "spectral", "method", method);
            if (no_refine) j["spectral"]["refine"] = false;
            if (o_K->count() && !o_Q->count()) {
                int q = 1;
                while (q < 2 * (2 * K + 1)) q *= 2;
                j["spectral"]["Q"] = q;
            }
        } else if (dec->parsed()) {
            target = svph::Stage::decompose;
            primary = "decompose.json";
            default_out = "decompose.json";
            set_if(o_dK, j, "spectral", "K", dK);
            set_if(o_dgrid, j, "decomposition", "grid", dgrid);
            if (!j.contains("spectral") || !j["spectral"].contains("refine")) j["spectral"]["refine"] = false;
        } else if (diff->parsed()) {
            target = svph::Stage::diffusion;
            primary = "diffusion.json";
            default_out = "diffusion.json";
            set_if(o_fK, j, "spectral", "K", fK);
            set_if(o_J, j, "diffusion", "J", J);
            if (!j.contains("spectral") || !j["spectral"].contains("refine")) j["spectral"]["refine"] = false;
        } else if (clt->parsed()) {
            target = svph::Stage::berry_esseen;
            primary = "clt.csv";
            default_out = "clt.csv";
            if (o_init->count()) j["montecarlo"]["init"] = mc_init(init);
            if (o_n->count()) j["montecarlo"]["n_list"] = parse_sizes(n_list);
            set_if(o_N, j, "montecarlo", "N", N);
            set_if(o_mseed, j, "montecarlo", "seed", mseed);
            if (!j.contains("spectral") || !j["spectral"].contains("refine")) j["spectral"]["refine"] = false;
            if (j.contains("llt") && j["llt"].is_object()) j["llt"]["N"] = 0;
        } else if (llt->parsed()) {
            target = svph::Stage::llt;
            primary = "llt.csv";
            default_out = "llt.csv";
            if (o_linit->count()) j["montecarlo"]["init"] = mc_init(linit);
            if (o_ln->count()) j["montecarlo"]["n_list"] = parse_sizes(ln_list);
            set_if(o_lN, j, "montecarlo", "N", lN);
            set_if(o_lseed, j, "montecarlo", "seed", lseed);
            set_if(o_width, j, "llt", "width", width);
            if (o_z->count()) j["llt"]["z_grid"] = parse_doubles(z_grid, "--z");
            set_if(o_delta, j, "llt", "delta", delta);
            set_if(o_control, j, "llt", "lattice_control", control);
            if (o_lN->count()) j["llt"]["N"] = 0;
            if (!j.contains("spectral") || !j["spectral"].contains("refine")) j["spectral"]["refine"] = false;
        } else if (full->parsed()) {
            target = svph::Stage::llt;
        }

        svph::ExperimentConfig cfg = svph::config_from_json(j, base);
        if (full->parsed()) {
            std::string dir = !common.out.empty() ? common.out
                              : !cfg.output_dir.empty() ? cfg.output_dir
                                                        : "svph_report";
            svph::ReportBundle b = svph::run_full(cfg);
            b.write(dir);
            print_checks(b);
            std::cout << "report written to " << dir << '\n';
            if (b.any_validation_error()) return exit_validation;
            if (b.any_failed()) return exit_numerical;
            if (strict && !b.all_checks_pass()) return exit_numerical;
            return exit_ok;
        }

        svph::ReportBundle b = svph::run_stages(cfg, {target});
        print_checks(b);
        std::string out = common.out.empty() ? default_out : common.out;
        if (b.stage_ok(target) || b.find(primary)) {
            write_primary(b, primary, out);
            std::cout << primary << " written to " << out << '\n';
        }
        if (spec->parsed() && !eig_csv.empty() && b.stage_ok(target)) write_primary(b, "eigenvalues.csv", eig_csv);
        if (clt->parsed() && !clt_json.empty()) {
            fs::create_directories(clt_json);
            for (const char* f : {"clt.json", "berry_esseen.json", "diffusion.json", "decompose.json"})
                if (const Json* d = b.find(f)) svph::write_text_file((fs::path(clt_json) / f).string(), svph::ReportBundle::dump(*d));
        }
        return exit_code(b, target, false);
    } catch (const svph::Error& e) {
        std::cerr << "svph: " << e.what() << '\n';
        return e.is_validation() ? exit_validation : exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "svph: " << e.what() << '\n';
        return exit_numerical;
    }
}
