#include "dirsc/gridio.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>

namespace dirsc {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_kernel_grid_csv(const KernelGrid& grid, const std::string& csv_path) {
    std::ofstream out(csv_path);
    if (!out) throw DomainError("cannot open for writing: " + csv_path);
    out << "omega_x,omega_y,omega_z,theta_x,theta_y,theta_z";
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) out << ",re_" << r << c << ",im_" << r << c;
    out << "\n";
    for (const auto& s : grid.samples) {
        out << format_double(s.omega.x()) << ',' << format_double(s.omega.y()) << ','
            << format_double(s.omega.z()) << ',' << format_double(s.theta.x()) << ','
            << format_double(s.theta.y()) << ',' << format_double(s.theta.z());
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                out << ',' << format_double(s.g(r, c).real()) << ','
                    << format_double(s.g(r, c).imag());
        out << "\n";
    }
}

void write_kernel_grid_header(const KernelGrid& grid, const std::string& json_path) {
    nlohmann::json j;
    j["E"] = grid.kin.E;
    j["m"] = grid.kin.m;
    j["N"] = grid.N;
    j["delta"] = grid.delta;
    j["delta_prime"] = grid.delta_prime;
    j["branch"] = grid.branch;
    j["omega0"] = {grid.omega0.x(), grid.omega0.y(), grid.omega0.z()};
    j["quadrature"] = {{"plane_radius", grid.plane_radius},
                       {"plane_spacing", grid.plane_spacing},
                       {"tail_estimate", grid.tail_estimate},
                       {"self_check_drift", grid.self_check_drift},
                       {"osc_order", grid.osc_order}};
    j["samples"] = grid.samples.size();
    std::ofstream out(json_path);
    if (!out) throw DomainError("cannot open for writing: " + json_path);
    out << j.dump(2) << "\n";
}

KernelGrid read_kernel_grid_csv(const std::string& csv_path, const std::string& json_path) {
    KernelGrid grid;
    {
        std::ifstream in(json_path);
        if (!in) throw DomainError("cannot open: " + json_path);
        nlohmann::json j;
        in >> j;
        grid.kin = kinematics(j.at("E").get<double>(), j.at("m").get<double>());
        grid.N = j.at("N").get<int>();
        grid.delta = j.at("delta").get<double>();
        grid.delta_prime = j.at("delta_prime").get<double>();
        grid.branch = j.at("branch").get<int>();
        auto w = j.at("omega0");
        grid.omega0 = Direction(w.at(0).get<double>(), w.at(1).get<double>(), w.at(2).get<double>());
    }
    std::ifstream in(csv_path);
    if (!in) throw DomainError("cannot open: " + csv_path);
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> f;
        size_t pos = 0;
        while (pos <= line.size()) {
            size_t next = line.find(',', pos);
            if (next == std::string::npos) next = line.size();
            f.push_back(std::stod(line.substr(pos, next - pos)));
            pos = next + 1;
        }
        if (f.size() != 6 + 32) throw DomainError("bad kernel CSV row");
        KernelSample s;
        s.omega = Direction(f[0], f[1], f[2]);
        s.theta = Direction(f[3], f[4], f[5]);
        for (int r = 0; r < 4; ++r)
            for (int c = 0; c < 4; ++c)
                s.g(r, c) = Complex(f[6 + 2 * (4 * r + c)], f[7 + 2 * (4 * r + c)]);
        grid.samples.push_back(s);
    }
    return grid;
}

void write_grid_binary(const std::string& path, const std::vector<double>& data,
                       const std::vector<int>& shape, double spacing, const std::string& sidecar) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DomainError("cannot open for writing: " + path);
    out.write(reinterpret_cast<const char*>(data.data()),
              std::streamsize(data.size() * sizeof(double)));
    nlohmann::json j;
    j["dtype"] = "float64";
    j["shape"] = shape;
    j["spacing"] = spacing;
    j["order"] = "row-major";
    std::ofstream side(sidecar);
    if (!side) throw DomainError("cannot open for writing: " + sidecar);
    side << j.dump(2) << "\n";
}

uint64_t fnv1a(const std::string& bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

void write_manifest(const std::string& path, const nlohmann::json& config,
                    const nlohmann::json& extra) {
    nlohmann::json j;
    j["library_version"] = kLibraryVersion;
    j["config"] = config;
    j["config_hash"] = fnv1a(config.dump());
    j["extra"] = extra;
    std::ofstream out(path);
    if (!out) throw DomainError("cannot open for writing: " + path);
    out << j.dump(2) << "\n";
}

} // namespace dirsc
