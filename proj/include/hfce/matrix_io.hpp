#pragma once

#include <string>

#include <json.hpp>

#include "hfce/pilot_design.hpp"
#include "hfce/types.hpp"

namespace hfce {

/// Binary complex matrix file: eight little-endian uint64 header words
/// (magic, version, rows, cols, 4 reserved zeros) followed by rows*cols
/// entries in row-major order, each as little-endian float64 re, im.
inline constexpr std::uint64_t kMatrixMagic = 0x0054'4C50'4543'4648ULL;  // "HFCEPLT\0"
inline constexpr std::uint64_t kMatrixVersion = 1;

void write_matrix(const std::string& path, const CMat& m);
CMat read_matrix(const std::string& path);

/// Sidecar path used next to a pilot file.
std::string sidecar_path(const std::string& matrix_path);

nlohmann::json admm_history_json(const AdmmResult& result);

/// Writes the pilot and its JSON sidecar (coherence history plus `extra`).
void save_pilot(const std::string& path, const AdmmResult& result, const nlohmann::json& extra);

}  // namespace hfce
