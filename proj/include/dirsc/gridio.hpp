#pragma once

#include "dirsc/amplitude.hpp"

#include <cstdint>
#include <string>

#include <nlohmann/json_fwd.hpp>

namespace dirsc {

// 17 significant digits, '.' decimal, no locale.
std::string format_double(double v);

// CSV columns: omega_x..omega_z, theta_x..theta_z, then 16 entries as re/im pairs
// (row-major). The JSON header carries E, m, N, delta, omega0 and quadrature metadata.
void write_kernel_grid_csv(const KernelGrid& grid, const std::string& csv_path);
void write_kernel_grid_header(const KernelGrid& grid, const std::string& json_path);
KernelGrid read_kernel_grid_csv(const std::string& csv_path, const std::string& json_path);

// Flat binary grid of doubles with a JSON sidecar describing shape/spacing.
void write_grid_binary(const std::string& path, const std::vector<double>& data,
                       const std::vector<int>& shape, double spacing, const std::string& sidecar);

uint64_t fnv1a(const std::string& bytes);

// Run manifest: config hash, library version, timings, extra key/values.
void write_manifest(const std::string& path, const nlohmann::json& config,
                    const nlohmann::json& extra);

inline constexpr const char* kLibraryVersion = "0.1.0";

} // namespace dirsc
