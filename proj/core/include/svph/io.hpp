#pragma once

#include "svph/fourier.hpp"
#include "svph/map.hpp"
#include "svph/observable.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <string_view>

namespace svph {

using Json = nlohmann::ordered_json;

/// [[k1, k2, re, im], ...]; the reader validates Hermitian symmetry.
Json coeffs_to_json(const FourierSeries& f);
FourierSeries coeffs_from_json(const Json& j, std::string_view field);

Json map_to_json(const MapSpec& spec);
/// Accepts {"kind", "ell", "f_coeffs", "omega_coeffs", "epsilon"}; all
/// problems are reported together in one ValidationError.
MapSpec map_from_json(const Json& j);

Json observable_to_json(const Observable& obs);
/// {"coeffs": [...], "transform": "none" | "sign", "centered_offsets": [...]}
Observable observable_from_json(const Json& j);

/// FNV-1a over the canonical JSON dump.
std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::uint64_t digest(const MapSpec& spec);
std::uint64_t digest(const Observable& obs);
std::string hex(std::uint64_t h);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace svph
