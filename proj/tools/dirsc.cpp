#include "dirsc/runner.hpp"
#include "dirsc/types.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Dirac electromagnetic scattering: forward kernels, verification suites, "
                 "and inverse reconstruction"};

    std::string config_path, out_dir;
    int jobs = 0;
    std::uint64_t seed = 0;
    bool verbose = false;
    app.add_option("--config", config_path, "Run configuration (JSON)")
        ->required()
        ->envname("DIRSC_CONFIG");
    app.add_option("--out", out_dir, "Output directory (overrides config output_dir)")
        ->envname("DIRSC_OUT");
    app.add_option("--jobs", jobs, "Worker threads (default: machine parallelism)")
        ->envname("DIRSC_JOBS");
    app.add_option("--seed", seed, "Seed override for randomized sampling")->envname("DIRSC_SEED");
    app.add_flag("--verbose", verbose, "Print the result manifest to stderr")
        ->envname("DIRSC_VERBOSE");

    CLI11_PARSE(app, argc, argv);

    nlohmann::json config;
    try {
        std::ifstream in(config_path);
        if (!in) throw dirsc::DomainError("cannot open config: " + config_path);
        in >> config;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}, {"kind", "config"}}.dump() << "\n";
        return 2;
    }
    return dirsc::run_command(config, out_dir, jobs, seed, verbose);
}
