#include "svph/io.hpp"

#include "svph/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace svph {

Json coeffs_to_json(const FourierSeries& f) {
    Json arr = Json::array();
    for (const auto& t : f.terms()) arr.push_back({t.mode.k1, t.mode.k2, t.coeff.real(), t.coeff.imag()});
    return arr;
}

namespace {

FourierSeries parse_coeffs(const Json& j, std::string_view field, std::vector<std::string>& problems) {
    if (j.is_null()) return {};
    if (!j.is_array()) {
        problems.push_back(std::string(field) + ": expected an array of [k1, k2, re, im]");
        return {};
    }
    std::vector<FourierTerm> terms;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& e = j[i];
        bool ok = e.is_array() && (e.size() == 4 || e.size() == 3) && e[0].is_number_integer() &&
                  e[1].is_number_integer() && e[2].is_number() && (e.size() == 3 || e[3].is_number());
        if (!ok) {
            problems.push_back(std::string(field) + "[" + std::to_string(i) + "]: expected [k1, k2, re, im]");
            continue;
        }
        double im = e.size() == 4 ? e[3].get<double>() : 0.0;
        terms.push_back({{e[0].get<int>(), e[1].get<int>()}, complex{e[2].get<double>(), im}});
    }
    FourierSeries f(std::move(terms));
    if (!f.is_hermitian(1e-12))
        problems.push_back(std::string(field) + ": table is not Hermitian-symmetric (c[-k] must equal conj(c[k]))");
    return f;
}

[[noreturn]] void fail(const std::vector<std::string>& problems) {
    std::ostringstream msg;
    for (std::size_t i = 0; i < problems.size(); ++i) msg << (i ? "; " : "") << problems[i];
    throw Error(ErrorCode::ValidationError, msg.str());
}

} // namespace

FourierSeries coeffs_from_json(const Json& j, std::string_view field) {
    std::vector<std::string> problems;
    FourierSeries f = parse_coeffs(j, field, problems);
    if (!problems.empty()) fail(problems);
    return f;
}

Json map_to_json(const MapSpec& spec) {
    Json j;
    j["kind"] = std::string(to_string(spec.kind));
    j["ell"] = spec.ell;
    j["f_coeffs"] = coeffs_to_json(spec.f_coeffs);
    j["omega_coeffs"] = coeffs_to_json(spec.omega_coeffs);
    j["epsilon"] = spec.epsilon;
    j["degree"] = spec.degree;
    return j;
}

MapSpec map_from_json(const Json& j) {
    std::vector<std::string> problems;
    if (!j.is_object()) fail({"map: expected a JSON object"});
    MapKind kind = MapKind::skew_linear;
    if (!j.contains("kind") || !j["kind"].is_string()) {
        problems.emplace_back("kind: required string (skew_linear | skew_general | fast_slow)");
    } else {
        try {
            kind = map_kind_from_string(j["kind"].get<std::string>());
        } catch (const Error& e) {
            problems.emplace_back("kind: " + e.detail());
        }
    }
    int ell = 0;
    if (!j.contains("ell") || !j["ell"].is_number_integer()) problems.emplace_back("ell: required integer");
    else ell = j["ell"].get<int>();
    double eps = 0.0;
    if (j.contains("epsilon")) {
        if (!j["epsilon"].is_number()) problems.emplace_back("epsilon: expected a number");
        else eps = j["epsilon"].get<double>();
    }
    FourierSeries f = parse_coeffs(j.value("f_coeffs", Json()), "f_coeffs", problems);
    FourierSeries w = parse_coeffs(j.value("omega_coeffs", Json()), "omega_coeffs", problems);
    if (!problems.empty()) fail(problems);
    return make_map(kind, ell, std::move(f), std::move(w), eps);
}

Json observable_to_json(const Observable& obs) {
    Json j;
    j["coeffs"] = coeffs_to_json(obs.coeffs);
    j["transform"] = obs.transform == ObservableTransform::sign ? "sign" : "none";
    if (!obs.centered_offsets.empty()) j["centered_offsets"] = obs.centered_offsets;
    return j;
}

Observable observable_from_json(const Json& j) {
    std::vector<std::string> problems;
    if (!j.is_object()) fail({"observable: expected a JSON object"});
    Observable obs;
    obs.coeffs = parse_coeffs(j.value("coeffs", Json()), "coeffs", problems);
    std::string transform = j.value("transform", std::string("none"));
    if (transform == "sign") obs.transform = ObservableTransform::sign;
    else if (transform != "none") problems.push_back("transform: expected \"none\" or \"sign\"");
    if (j.contains("centered_offsets")) {
        if (!j["centered_offsets"].is_array()) problems.emplace_back("centered_offsets: expected an array");
        else
            for (const auto& v : j["centered_offsets"]) obs.centered_offsets.push_back(v.get<double>());
    }
    if (!problems.empty()) fail(problems);
    return obs;
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t digest(const MapSpec& spec) { return fnv1a(map_to_json(spec).dump()); }
std::uint64_t digest(const Observable& obs) { return fnv1a(observable_to_json(obs).dump()); }

std::string hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ValidationError, "cannot open '" + path + "'");
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::ValidationError, "'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::ValidationError, "cannot write '" + path + "'");
    out << text;
}

} // namespace svph
