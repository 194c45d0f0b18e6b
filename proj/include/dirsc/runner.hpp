#pragma once

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>

namespace dirsc {

// Command implementations; each writes its artifacts plus a manifest into out_dir
// and returns the manifest. Throws DomainError on failure.
nlohmann::json run_forward(const nlohmann::json& config, const std::string& out_dir);
nlohmann::json run_reconstruct(const nlohmann::json& config, const std::string& out_dir);
nlohmann::json run_suite(const nlohmann::json& config, const std::string& out_dir);
nlohmann::json run_xsection(const nlohmann::json& config, const std::string& out_dir);
nlohmann::json run_gauge(const nlohmann::json& config, const std::string& out_dir);

// Dispatch on config["command"]; returns the process exit code
// (0 ok / 1 numeric failure / 2 config error) and prints machine-readable
// error JSON to stderr on failure.
int run_command(const nlohmann::json& config, const std::string& out_dir, int jobs, uint64_t seed,
                bool verbose);

} // namespace dirsc
