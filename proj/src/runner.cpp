#include "dirsc/runner.hpp"

#include "dirsc/gridio.hpp"
#include "dirsc/inverse.hpp"
#include "dirsc/symmetry.hpp"

#include <nlohmann/json.hpp>
#include <omp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

namespace dirsc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

Kinematics kin_from_config(const json& config) {
    const auto& k = config.at("kinematics");
    return kinematics(k.at("E").get<double>(), k.at("m").get<double>());
}

std::vector<double> energy_list(const json& config) {
    const auto& k = config.at("kinematics");
    if (k.contains("E_list")) return k.at("E_list").get<std::vector<double>>();
    return {k.at("E").get<double>()};
}

uint64_t config_seed(const json& config) {
    return config.contains("seed") ? config.at("seed").get<uint64_t>() : 1;
}

// Deterministic in-chart sample pairs around omega0.
std::vector<std::pair<Direction, Direction>> sample_pairs(const Direction& omega0, int count,
                                                          uint64_t seed) {
    PlaneBasis basis = plane_basis(omega0);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.55, 0.55);
    std::vector<std::pair<Direction, Direction>> pairs;
    while (int(pairs.size()) < count) {
        Vec2 zw(u(rng), u(rng)), zt(u(rng), u(rng));
        if (zw.norm() > 0.6 || zt.norm() > 0.6) continue;
        if ((zw - zt).norm() < 0.08) continue;
        auto lift = [&](const Vec2& z) {
            return Direction(Vec3(basis.embed(z) + std::sqrt(1.0 - z.squaredNorm()) * omega0.vec()));
        };
        pairs.emplace_back(lift(zw), lift(zt));
    }
    return pairs;
}

json grid_options(const json& config) {
    return config.contains("grid") ? config.at("grid") : json::object();
}

void ensure_dir(const std::string& out_dir) { fs::create_directories(out_dir); }

json file_entry(const std::string& name) { return json{{"file", name}}; }

} // namespace

json run_forward(const json& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    double t0 = now_ms();
    ModelPtr model = build_potential_model(config.at("potential"));
    Kinematics kin = kin_from_config(config);
    json gopt = grid_options(config);
    int n_pairs = gopt.contains("pairs") ? gopt.at("pairs").get<int>() : 6;
    Direction omega0 = Direction(0.2, -0.1, 1.0);
    auto pairs = sample_pairs(omega0, n_pairs, config_seed(config));

    std::vector<int> n_list = config.contains("N_list")
                                  ? config.at("N_list").get<std::vector<int>>()
                                  : std::vector<int>{config.contains("N") ? config.at("N").get<int>() : 0};

    json files = json::array();
    std::vector<KernelGrid> grids;
    for (int N : n_list) {
        KernelGrid grid = assemble_kernel_grid(model, kin, N, omega0, pairs);
        std::string base = out_dir + "/kernel_N" + std::to_string(N);
        write_kernel_grid_csv(grid, base + ".csv");
        write_kernel_grid_header(grid, base + ".json");
        files.push_back(file_entry(base + ".csv"));
        files.push_back(file_entry(base + ".json"));
        grids.push_back(std::move(grid));
    }

    // Leading-singularity comparison table at the assembled pairs.
    {
        std::ofstream tab(out_dir + "/leading_singularity.csv");
        tab << "omega_dot_theta,g_norm,lead_norm,rel_diff\n";
        for (const auto& s : grids.front().samples) {
            if (s.omega.dot(s.theta) <= 0.5) continue;
            Mat4 lead = leading_singularity(*model, kin, s.omega, s.theta);
            double gn = max_abs(s.g), ln = max_abs(lead);
            tab << format_double(s.omega.dot(s.theta)) << ',' << format_double(gn) << ','
                << format_double(ln) << ','
                << format_double(max_abs(s.g, lead) / std::max(ln, 1e-300)) << "\n";
        }
        files.push_back(file_entry(out_dir + "/leading_singularity.csv"));
    }

    json extra;
    extra["files"] = files;
    extra["timing_ms"] = now_ms() - t0;
    if (grids.size() >= 2) {
        double worst = 0;
        for (size_t i = 0; i < grids[0].samples.size(); ++i)
            worst = std::max(worst, max_abs(grids[0].samples[i].g, grids[1].samples[i].g));
        extra["max_delta_between_orders"] = worst;
    }
    write_manifest(out_dir + "/manifest.json", config, extra);
    return extra;
}

json run_reconstruct(const json& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    double t0 = now_ms();
    ModelPtr model = build_potential_model(config.at("potential"));
    std::string mode = config.at("mode").get<std::string>();
    json gopt = grid_options(config);
    json extra;
    json files = json::array();

    if (mode == "he") {
        int n_dirs = gopt.contains("directions") ? gopt.at("directions").get<int>() : 120;
        int n_plane = gopt.contains("plane_nodes") ? gopt.at("plane_nodes").get<int>() : 96;
        double dy = gopt.contains("plane_spacing") ? gopt.at("plane_spacing").get<double>() : 0.3;
        int nx = gopt.contains("volume_nodes") ? gopt.at("volume_nodes").get<int>() : 64;
        double L = gopt.contains("volume_half_width") ? gopt.at("volume_half_width").get<double>() : 7.0;
        if (n_dirs < 60) throw DomainError("insufficient angular coverage");

        auto dirs = fibonacci_directions(n_dirs);
        std::vector<PlaneScalarGrid> re_all, rm_all;
        for (const auto& w : dirs) {
            LimitData lp = limit_data_analytic(*model, w, +1, n_plane, dy);
            LimitData lm = limit_data_analytic(*model, w, -1, n_plane, dy);
            auto rp = recover_R(lp);
            auto rn = recover_R(lm);
            auto [re, rm] = split_even_odd(rp, rn);
            re_all.push_back(std::move(re));
            rm_all.push_back(std::move(rm));
        }
        ScalarVolume v = invert_xray_scalar(re_all, nx, L);
        VectorVolume b = invert_xray_magnetic(rm_all, nx, L);

        double v_err = volume_rel_l2(v, [&](const Vec3& x) { return model->V(x); });
        double b_err = volume_rel_l2(b, [&](const Vec3& x) { return model->B(x); });
        extra["V_rel_l2"] = v_err;
        extra["B_rel_l2"] = b_err;
        extra["B_deficient_bins"] = b.deficient_bins;

        write_grid_binary(out_dir + "/V.bin", v.values, {v.n, v.n, v.n}, v.dx,
                          out_dir + "/V.bin.json");
        std::vector<double> bflat;
        bflat.reserve(b.comp[0].size() * 3);
        for (int c = 0; c < 3; ++c)
            bflat.insert(bflat.end(), b.comp[c].begin(), b.comp[c].end());
        write_grid_binary(out_dir + "/B.bin", bflat, {3, b.n, b.n, b.n}, b.dx,
                          out_dir + "/B.bin.json");
        for (const char* f : {"/V.bin", "/V.bin.json", "/B.bin", "/B.bin.json"})
            files.push_back(file_entry(out_dir + f));
    } else if (mode == "fe") {
        Kinematics kin = kin_from_config(config);
        PeelOptions popt;
        if (gopt.contains("max_terms")) popt.max_terms = gopt.at("max_terms").get<int>();
        if (gopt.contains("directions")) popt.directions = gopt.at("directions").get<int>();
        PeelResult peel = homogeneous_peel(model, kin, popt);
        json terms = json::array();
        for (const auto& t : peel.terms) {
            json jt;
            jt["symbol_order"] = t.symbol_order;
            jt["rho"] = t.rho;
            json el = json::array();
            for (const auto& a : t.electric) el.push_back({a.l, a.m, a.coef});
            jt["electric"] = el;
            jt["magnetic"] = t.magnetic;
            terms.push_back(jt);
        }
        extra["terms"] = terms;
        extra["band_residuals"] = peel.band_residuals;
        std::ofstream out(out_dir + "/peel.json");
        out << terms.dump(2) << "\n";
        files.push_back(file_entry(out_dir + "/peel.json"));
    } else {
        throw DomainError("unknown catalog entry: mode " + mode);
    }

    extra["files"] = files;
    extra["timing_ms"] = now_ms() - t0;
    write_manifest(out_dir + "/manifest.json", config, extra);
    return extra;
}

json run_suite(const json& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    double t0 = now_ms();
    uint64_t seed = config_seed(config);
    Kinematics kin = kin_from_config(config);

    json report = json::array();
    auto add = [&report](const std::string& name, const std::string& hypothesis, double residual,
                         double tol, bool expect_fail = false) {
        bool pass = expect_fail ? residual > tol : residual <= tol;
        report.push_back({{"case", name},
                          {"hypothesis", hypothesis},
                          {"residual", residual},
                          {"tolerance", tol},
                          {"negative_control", expect_fail},
                          {"pass", pass}});
    };

    // Algebra block.
    {
        const auto& d = dirac_matrices();
        double worst = 0;
        std::array<Mat4, 4> as{d.alpha[0], d.alpha[1], d.alpha[2], d.beta};
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k) {
                Mat4 anti = as[j] * as[k] + as[k] * as[j];
                Mat4 expect = (j == k) ? Mat4(2.0 * Mat4::Identity()) : Mat4(Mat4::Zero());
                worst = std::max(worst, max_abs(anti, expect));
            }
        add("anticommutation", "none", worst, 1e-14);

        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> u(-3, 3);
        double pworst = 0, fworst = 0;
        for (int i = 0; i < 100; ++i) {
            Vec3 xi(u(rng), u(rng), u(rng));
            double m = 0.5 + std::abs(u(rng));
            Mat4 p = spectral_projector(xi, m, +1);
            pworst = std::max(pworst, max_abs(Mat4(p * p), p));
            pworst = std::max(pworst, max_abs(p, Mat4(p.adjoint())));
            pworst = std::max(pworst, std::abs(p.trace().real() - 2.0));
            Mat4 g = fw_matrix(xi, m);
            Mat4 diag = g * free_symbol(xi, m) * g.inverse();
            fworst = std::max(
                fworst, max_abs(diag, Mat4(std::sqrt(xi.squaredNorm() + m * m) * d.beta)));
        }
        add("projectors", "none", pworst, 1e-12);
        add("fw-diagonalization", "none", fworst, 1e-10);
    }

    // Pointwise symmetry identities on their hypothesis classes.
    std::vector<Vec3> pts;
    {
        std::mt19937_64 rng(seed + 1);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        for (int i = 0; i < 8; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    }
    std::vector<Direction> dirs = {Direction(0.3, 0.2, 0.93), Direction(-0.5, 0.8, 0.33)};

    ModelPtr even_v = make_gaussian_electric(0.6, 1.2);
    ModelPtr odd_a = make_gaussian_magnetic(0.4, 1.0);
    ModelPtr parity_model = make_sum({even_v, odd_a});
    add("parity", "V even, A odd",
        pointwise_residual(SymmetryKind::Parity, parity_model, kin, 1, pts, dirs), 1e-7);

    // Odd V via an off-centered difference of gaussians.
    ModelPtr odd_v = make_sum({make_gaussian_electric(0.5, 1.0, Vec3(0.6, 0, 0)),
                               make_gaussian_electric(-0.5, 1.0, Vec3(-0.6, 0, 0))});
    ModelPtr even_a = make_pure_gauge(0.5, 1.1); // grad of even gaussian is odd; need even A
    // A even requires an odd generator: use a shifted pair of gauge terms.
    ModelPtr even_a2 = make_sum({make_pure_gauge(0.5, 1.0, Vec3(0.4, 0, 0)),
                                 make_pure_gauge(-0.5, 1.0, Vec3(-0.4, 0, 0))});
    (void)even_a;
    add("charge-conjugation", "V odd, A even",
        pointwise_residual(SymmetryKind::ChargeConjugation, make_sum({odd_v, even_a2}), kin, 1,
                           pts, dirs),
        1e-7);
    add("time-reversal", "A = 0",
        pointwise_residual(SymmetryKind::TimeReversal, even_v, kin, 1, pts, dirs), 1e-7);
    add("TP", "V even, A even",
        pointwise_residual(SymmetryKind::TP, make_sum({even_v, even_a2}), kin, 1, pts, dirs),
        1e-7);
    add("CT", "V = 0", pointwise_residual(SymmetryKind::CT, odd_a, kin, 1, pts, dirs), 1e-7);
    add("CTP", "V odd, A odd",
        pointwise_residual(SymmetryKind::CTP, make_sum({odd_v, odd_a}), kin, 1, pts, dirs), 1e-7);

    // Gauge invariance of h_N.
    {
        Direction w(0.1, 0.05, 1.0), th(0.4, -0.2, 0.9), w0(0.25, -0.08, 0.96);
        double res = gauge_residual(parity_model, make_pure_gauge(0.8, 1.3), kin, 1, pts, w, th, w0);
        add("gauge", "none", res, 1e-8);
    }

    // Negative control: broken parity must fail both the hypothesis and the identity.
    {
        ModelPtr broken = make_gaussian_electric(0.6, 1.2, Vec3(0.7, 0, 0));
        double asym = hypothesis_asymmetry(SymmetryKind::Parity, *broken);
        add("parity-negative-control-hypothesis", "V even, A odd (broken)", asym, 1e-9, true);
        // Identity residual evaluated without the hypothesis gate:
        double res = 0;
        TransportExpansion lhs(broken, dirs[0], kin, +1, 1);
        TransportExpansion rhs(broken, -dirs[0], kin, +1, 1);
        const Mat4& beta = dirac_matrices().beta;
        for (const auto& x : pts) {
            res = std::max(res, std::abs(lhs.phase(x) - rhs.phase(-x)));
            res = std::max(res, max_abs(Mat4(beta * lhs.b(1, x)), Mat4(rhs.b(1, Vec3(-x)) * beta)));
        }
        add("parity-negative-control-identity", "V even, A odd (broken)", res, 1e-2, true);
    }

    bool all_pass = true;
    for (const auto& r : report)
        if (!r.at("pass").get<bool>()) all_pass = false;

    {
        std::ofstream out(out_dir + "/suite_report.json");
        out << report.dump(2) << "\n";
    }
    json extra;
    extra["files"] = json::array({file_entry(out_dir + "/suite_report.json")});
    extra["all_pass"] = all_pass;
    extra["timing_ms"] = now_ms() - t0;
    write_manifest(out_dir + "/manifest.json", config, extra);
    if (!all_pass) throw DomainError("suite failed");
    return extra;
}

json run_xsection(const json& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    double t0 = now_ms();
    ModelPtr model = build_potential_model(config.at("potential"));
    Direction theta(0.1, -0.2, 0.97);
    json rows = json::array();
    for (double E : energy_list(config)) {
        Kinematics kin = kinematics(E, config.at("kinematics").at("m").get<double>());
        Mat4 p = energy_projector(kin, theta);
        CVec4 u = CVec4::Zero();
        u(0) = 1.0;
        CVec4 pu = p * u;
        pu /= pu.norm();
        CrossSection cs = cross_section(model, kin, theta, pu, 0);
        // High-energy reference: 2 int (1 - cos R_e) dy over Pi_theta.
        PlaneBasis basis = plane_basis(theta);
        double ref = 0;
        double hy = 0.25, Ry = 10.0;
        int M = int(Ry / hy);
        for (int i = -M; i <= M; ++i)
            for (int j = -M; j <= M; ++j) {
                Vec2 y2(i * hy, j * hy);
                if (y2.norm() > Ry) continue;
                double R = xray_R_infty(*model, theta, kin.sign, basis.embed(y2));
                ref += 2.0 * (1.0 - std::cos(R)) * hy * hy;
            }
        double lhs = std::pow(2.0 * pi, 2) / (kin.upsilon * kin.upsilon) * cs.sigma;
        rows.push_back({{"E", E},
                        {"sigma", cs.sigma},
                        {"scaled_sigma", lhs},
                        {"reference", ref},
                        {"rel_diff", std::abs(lhs - ref) / std::max(ref, 1e-300)}});
    }
    std::ofstream out(out_dir + "/xsection.json");
    out << rows.dump(2) << "\n";
    json extra;
    extra["files"] = json::array({file_entry(out_dir + "/xsection.json")});
    extra["rows"] = rows;
    extra["timing_ms"] = now_ms() - t0;
    write_manifest(out_dir + "/manifest.json", config, extra);
    return extra;
}

json run_gauge(const json& config, const std::string& out_dir) {
    ensure_dir(out_dir);
    double t0 = now_ms();
    ModelPtr model = build_potential_model(config.at("potential"));
    Kinematics kin = kin_from_config(config);
    ModelPtr psi = make_pure_gauge(0.7, 1.2);
    std::vector<Vec3> pts;
    std::mt19937_64 rng(config_seed(config));
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 10; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    Direction w(0.15, 0.1, 0.98), th(0.45, -0.15, 0.88), w0(0.3, -0.02, 0.95);

    // Phi shifts by exactly -psi; b, c and h_N are invariant.
    ModelPtr shifted = with_gauge_shift(model, psi);
    TransportExpansion e1(model, w, kin, +1, 1), e2(shifted, w, kin, +1, 1);
    const auto* pg = dynamic_cast<const PotentialModel*>(psi.get());
    (void)pg;
    double phase_res = 0, bc_res = 0;
    for (const auto& x : pts) {
        double psi_val = 0.7 * std::exp(-(x - Vec3::Zero()).squaredNorm() / (1.2 * 1.2));
        phase_res = std::max(phase_res, std::abs(e2.phase(x) - (e1.phase(x) - psi_val)));
        bc_res = std::max(bc_res, max_abs(e1.b(1, x), e2.b(1, x)));
        bc_res = std::max(bc_res, max_abs(e1.c(1, x), e2.c(1, x)));
    }
    double h_res = gauge_residual(model, psi, kin, 1, pts, w, th, w0);

    json extra;
    extra["phase_shift_residual"] = phase_res;
    extra["bc_residual"] = bc_res;
    extra["h_residual"] = h_res;
    extra["timing_ms"] = now_ms() - t0;
    std::ofstream out(out_dir + "/gauge.json");
    out << json{{"phase_shift_residual", phase_res},
                {"bc_residual", bc_res},
                {"h_residual", h_res}}
               .dump(2)
        << "\n";
    extra["files"] = json::array({file_entry(out_dir + "/gauge.json")});
    write_manifest(out_dir + "/manifest.json", config, extra);
    return extra;
}

int run_command(const json& config, const std::string& out_dir, int jobs, uint64_t seed,
                bool verbose) {
    if (jobs > 0) omp_set_num_threads(jobs);
    json cfg = config;
    if (seed != 0) cfg["seed"] = seed;

    auto config_error = [](const std::string& what) {
        // Preconditions and malformed inputs exit with 2; numeric failures with 1.
        static const char* markers[] = {"inside spectral gap", "unknown catalog entry",
                                        "parameter out of range", "insufficient angular coverage",
                                        "missing", "cannot open", "unknown command"};
        for (const char* m : markers)
            if (what.find(m) != std::string::npos) return true;
        return false;
    };

    std::string command;
    try {
        command = cfg.at("command").get<std::string>();
        std::string dir = out_dir.empty()
                              ? (cfg.contains("output_dir") ? cfg.at("output_dir").get<std::string>()
                                                            : std::string("."))
                              : out_dir;
        json result;
        if (command == "forward") result = run_forward(cfg, dir);
        else if (command == "recon-he") {
            cfg["mode"] = "he";
            result = run_reconstruct(cfg, dir);
        } else if (command == "recon-fe") {
            cfg["mode"] = "fe";
            result = run_reconstruct(cfg, dir);
        } else if (command == "symmetry") result = run_suite(cfg, dir);
        else if (command == "xsection") result = run_xsection(cfg, dir);
        else if (command == "gauge") result = run_gauge(cfg, dir);
        else throw DomainError("unknown command: " + command);
        if (verbose) std::cerr << result.dump(2) << "\n";
        return 0;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "config"}}.dump() << "\n";
        return 2;
    } catch (const DomainError& e) {
        bool cfg_err = config_error(e.what());
        std::cerr << json{{"error", e.what()}, {"kind", cfg_err ? "config" : "numeric"}}.dump()
                  << "\n";
        return cfg_err ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", e.what()}, {"kind", "numeric"}}.dump() << "\n";
        return 1;
    }
}

} // namespace dirsc
