#include "dirsc/amplitude.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>

namespace dirsc {

namespace {

double smooth01(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double a = std::exp(-1.0 / t);
    double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double chart_step(double t, double delta, double delta_prime) {
    return smooth01((t - delta) / (delta_prime - delta));
}

// Conservative truncation-tail bound from the fitted shell decay C r^{-d}:
// after n/2 integration-by-parts passes in y the tail integrand gains n decay
// orders and the value the factor |q|^{-n}.
double tail_bound(double C, double d, double Y0, double q, int n) {
    if (C <= 0) return 0.0;
    double deff = d + n;
    if (deff <= 2.05) return std::numeric_limits<double>::infinity();
    double fac = C;
    for (int j = 0; j < n; ++j) fac *= (d + j);
    if (n > 0) {
        if (q <= 0) return std::numeric_limits<double>::infinity();
        fac *= std::pow(q, -n);
    }
    return fac * 2.0 * pi * std::pow(Y0, 2.0 - deff) / (deff - 2.0);
}

} // namespace

double chart_cutoff(const Direction& omega, const Direction& theta, const Direction& omega0,
                    double delta, double delta_prime, int branch) {
    double s = branch >= 0 ? 1.0 : -1.0;
    return chart_step(s * omega.dot(omega0), delta, delta_prime) *
           chart_step(s * theta.dot(omega0), delta, delta_prime);
}

Mat4 h_integrand(const TransportExpansion& ep, const TransportExpansion& em,
                 const Direction& omega0, const Vec3& y) {
    if (ep.sign() != +1 || em.sign() != -1) throw DomainError("h_integrand: wrong expansion signs");
    if (std::abs(ep.kin().E - em.kin().E) > 1e-14 || std::abs(ep.kin().m - em.kin().m) > 1e-14)
        throw DomainError("kinematics mismatch");
    double sgn = ep.kin().sign;
    return Mat4(sgn * ep.a(y).adjoint() * alpha_dot(omega0.vec()) * em.a(y));
}

Mat4 h_integrand_subtracted(const TransportExpansion& ep, const TransportExpansion& em,
                            const Direction& omega0, const Vec3& y) {
    double sgn = ep.kin().sign;
    Mat4 free_part = sgn * ep.projector() * alpha_dot(omega0.vec()) * em.projector();
    return Mat4(h_integrand(ep, em, omega0, y) - free_part);
}

double PlaneLattice::window(double r) const {
    double r0 = window_start * Y;
    if (r <= r0) return 1.0;
    if (r >= Y) return 0.0;
    return 1.0 - smooth01((r - r0) / (Y - r0));
}

PlaneLattice make_plane_lattice(const Direction& omega0, double q_min, double q_max,
                                const DecayProbe& probe, const PlaneQuadratureOptions& opt) {
    PlaneLattice lat;
    lat.basis = plane_basis(omega0);
    lat.window_start = opt.window_start;
    lat.osc_order = opt.osc_order;

    // Fit amplitude decay C r^{-d} on a few shells.
    std::vector<double> rs, vs;
    for (double r : {6.0, 12.0, 24.0, 48.0}) {
        double v = probe(r);
        if (v > 1e-30) {
            rs.push_back(r);
            vs.push_back(v);
        }
    }
    double d = 12.0, C = 0.0;
    if (rs.size() >= 2) {
        double slope = loglog_slope(rs, vs);
        d = std::clamp(-slope, 0.5, 12.0);
        C = vs.back() * std::pow(rs.back(), d);
    }

    // Smallest radius meeting the tail target with the best even parts order <= n.
    auto best_tail = [&](double Y) {
        double best = tail_bound(C, d, opt.window_start * Y, q_min, 0);
        for (int n = 2; n <= opt.osc_order; n += 2)
            best = std::min(best, tail_bound(C, d, opt.window_start * Y, q_min, n));
        return best;
    };
    double Y = opt.radius_min;
    while (Y < opt.radius_cap && best_tail(Y) > opt.tail_tol) Y *= 1.3;
    Y = std::min(Y, opt.radius_cap);
    lat.Y = Y;
    lat.tail_estimate = best_tail(Y);
    if (!std::isfinite(lat.tail_estimate)) lat.tail_estimate = C;
    if (lat.tail_estimate > opt.tail_tol)
        lat.tail_note = "tail target not met at radius cap";

    double h = opt.spacing_cap;
    if (q_max > 0) h = std::min(h, 2.0 * pi / (q_max * opt.points_per_wave));
    h = std::min(h, (1.0 - opt.window_start) * Y / 6.0);
    lat.h = h;
    lat.M = int(std::ceil(Y / h));
    return lat;
}

namespace {

Complex plane_sum_with_l1(const PlaneLattice& lat, const Vec2& q,
                          const std::vector<Complex>& values, double* l1_out) {
    const int side = lat.side();
    Complex acc = 0.0;
    double l1 = 0.0;
    for (int i = -lat.M; i <= lat.M; ++i) {
        Complex row = 0.0;
        double row_l1 = 0.0;
        for (int j = -lat.M; j <= lat.M; ++j) {
            Vec2 y = lat.node(i, j);
            double w = lat.window(y.norm());
            if (w == 0.0) continue;
            const Complex& v = values[size_t(i + lat.M) * side + size_t(j + lat.M)];
            row += w * std::exp(iu * (q.x() * y.x() + q.y() * y.y())) * v;
            row_l1 += w * std::abs(v);
        }
        acc += row;
        l1 += row_l1;
    }
    if (l1_out) *l1_out = l1 * lat.h * lat.h;
    return acc * lat.h * lat.h;
}

} // namespace

Complex oscillatory_plane_sum(const PlaneLattice& lat, const Vec2& q,
                              const std::vector<Complex>& values) {
    return plane_sum_with_l1(lat, q, values, nullptr);
}

Mat4 oscillatory_plane_sum(const PlaneLattice& lat, const Vec2& q,
                           const std::vector<Mat4>& values) {
    const int side = lat.side();
    Mat4 acc = Mat4::Zero();
    for (int i = -lat.M; i <= lat.M; ++i) {
        for (int j = -lat.M; j <= lat.M; ++j) {
            Vec2 y = lat.node(i, j);
            double w = lat.window(y.norm());
            if (w == 0.0) continue;
            acc += (w * std::exp(iu * (q.x() * y.x() + q.y() * y.y()))) *
                   values[size_t(i + lat.M) * side + size_t(j + lat.M)];
        }
    }
    return Mat4(acc * lat.h * lat.h);
}

KernelEngine::KernelEngine(ModelPtr model, const Kinematics& kin, int N, const Direction& omega0,
                           PlaneQuadratureOptions opt, int branch)
    : model_(std::move(model)), kin_(kin), N_(N), omega0_(omega0), opt_(opt), branch_(branch) {
    if (model_->rho() <= 1.0) throw DomainError("singular_kernel: decay exponent <= 1");
}

void KernelEngine::prepare(double q_min, double q_max) {
    // Probe the subtracted-integrand decay along plane shells through the chart center.
    PlaneBasis basis = plane_basis(omega0_);
    auto probe = [&](double r) -> double {
        double worst = 0.0;
        for (double ang : {0.0, 1.1, 2.2, 3.3, 4.4, 5.5}) {
            Vec3 y = basis.embed(Vec2(r * std::cos(ang), r * std::sin(ang)));
            double phi_p = eikonal_phase(*model_, omega0_, kin_, +1, y, opt_.ray_quad);
            double phi_m = eikonal_phase(*model_, omega0_, kin_, -1, y, opt_.ray_quad);
            worst = std::max(worst, std::abs(std::exp(iu * (phi_m - phi_p)) - 1.0));
        }
        return worst;
    };
    lat_ = make_plane_lattice(omega0_, q_min, q_max, probe, opt_);
    phase_cache_.clear();
    amp_cache_.clear();
    prepared_ = true;
}

void KernelEngine::fill_phase(const Direction& d, int sign, std::vector<double>& out) const {
    const int side = lat_.side();
    out.assign(lat_.size(), 0.0);
    const long total = long(side) * side;
#pragma omp parallel for schedule(dynamic, 16) if (opt_.parallel)
    for (long idx = 0; idx < total; ++idx) {
        int i = int(idx / side) - lat_.M;
        int j = int(idx % side) - lat_.M;
        Vec2 y2 = lat_.node(i, j);
        if (y2.norm() > lat_.Y) continue;
        Vec3 y = lat_.basis.embed(y2);
        out[size_t(idx)] = eikonal_phase(*model_, d, kin_, sign, y, opt_.ray_quad);
    }
}

void KernelEngine::fill_amp(const Direction& d, int sign, std::vector<Mat4>& out) const {
    const int side = lat_.side();
    out.assign(lat_.size(), Mat4::Zero());
    TransportExpansion exp(model_, d, kin_, sign, N_);
    const long total = long(side) * side;
#pragma omp parallel for schedule(dynamic, 4) if (opt_.parallel)
    for (long idx = 0; idx < total; ++idx) {
        int i = int(idx / side) - lat_.M;
        int j = int(idx % side) - lat_.M;
        Vec2 y2 = lat_.node(i, j);
        if (y2.norm() > lat_.Y) continue;
        out[size_t(idx)] = exp.a(lat_.basis.embed(y2));
    }
}

const std::vector<double>& KernelEngine::phase_column(const Direction& d, int sign) {
    Vec3 key = sign * d.vec();
    for (auto& e : phase_cache_)
        if ((e.first - key).norm() < 1e-15) return e.second;
    phase_cache_.emplace_back(key, std::vector<double>{});
    fill_phase(d, sign, phase_cache_.back().second);
    return phase_cache_.back().second;
}

const std::vector<Mat4>& KernelEngine::amp_column(const Direction& d, int sign) {
    Vec3 key = sign * d.vec();
    for (auto& e : amp_cache_)
        if ((e.first - key).norm() < 1e-15) return e.second;
    amp_cache_.emplace_back(key, std::vector<Mat4>{});
    fill_amp(d, sign, amp_cache_.back().second);
    return amp_cache_.back().second;
}

Mat4 KernelEngine::g_value(const Direction& omega, const Direction& theta) {
    double bs = branch_ >= 0 ? 1.0 : -1.0;
    if (bs * omega.dot(omega0_) <= 0.3 || bs * theta.dot(omega0_) <= 0.3)
        throw DomainError("chart violation");
    if (!prepared_) {
        double q0 =
            kin_.nu * plane_basis(omega0_).project(Vec3(theta.vec() - omega.vec())).norm();
        prepare(q0, q0);
    }
    Vec2 q = kin_.nu * lat_.basis.project(Vec3(theta.vec() - omega.vec()));

    double psi = chart_cutoff(omega, theta, omega0_, 0.3, 0.5, branch_);
    double pref = bs * psi * kin_.upsilon * kin_.upsilon / (4.0 * pi * pi);
    Mat4 sandwich = energy_projector(kin_, omega) * alpha_dot(omega0_.vec()) *
                    energy_projector(kin_, theta);

    if (N_ == 0) {
        const auto& pp = phase_column(omega, +1);
        const auto& pm = phase_column(theta, -1);
        std::vector<Complex> vals(lat_.size());
        for (size_t k = 0; k < vals.size(); ++k)
            vals[k] = std::exp(iu * (pm[k] - pp[k])) - 1.0;
        double l1 = 0;
        Complex sum = plane_sum_with_l1(lat_, q, vals, &l1);
        if (opt_.self_check) {
            PlaneLattice shrunk = lat_;
            shrunk.Y = 0.85 * lat_.Y;
            Complex sum2 = oscillatory_plane_sum(shrunk, q, vals);
            double drift = std::abs(sum - sum2) / std::max(std::abs(sum), 1e-14);
            // values below the cancellation floor carry no testable signal
            double noise = 1e3 * lat_.tail_estimate + 3e-4 * l1;
            if (std::abs(sum) > noise) {
                drift_ = std::max(drift_, drift);
                if (drift > opt_.self_check_tol)
                    throw DomainError("insufficient oscillation order");
            }
        }
        return Mat4(pref * kin_.sign * sum * sandwich);
    }

    const auto& ap = amp_column(omega, +1);
    const auto& am = amp_column(theta, -1);
    Mat4 alpha0 = alpha_dot(omega0_.vec());
    std::vector<Mat4> vals(lat_.size());
    Mat4 free_part = kin_.sign * sandwich;
    for (size_t k = 0; k < vals.size(); ++k)
        vals[k] = Mat4(kin_.sign * ap[k].adjoint() * alpha0 * am[k] - free_part);
    double l1 = 0;
    Mat4 sum = oscillatory_plane_sum(lat_, q, vals);
    {
        const int side = lat_.side();
        for (int i = -lat_.M; i <= lat_.M; ++i)
            for (int j = -lat_.M; j <= lat_.M; ++j) {
                Vec2 y = lat_.node(i, j);
                double w = lat_.window(y.norm());
                if (w == 0.0) continue;
                l1 += w * max_abs(vals[size_t(i + lat_.M) * side + size_t(j + lat_.M)]);
            }
        l1 *= lat_.h * lat_.h;
    }
    if (opt_.self_check) {
        PlaneLattice shrunk = lat_;
        shrunk.Y = 0.85 * lat_.Y;
        Mat4 sum2 = oscillatory_plane_sum(shrunk, q, vals);
        double drift = max_abs(sum, sum2) / std::max(max_abs(sum), 1e-14);
        double noise = 1e3 * lat_.tail_estimate + 3e-4 * l1;
        if (max_abs(sum) > noise) {
            drift_ = std::max(drift_, drift);
            if (drift > opt_.self_check_tol)
                throw DomainError("insufficient oscillation order");
        }
    }
    return Mat4(pref * sum);
}

namespace {

KernelGrid assemble_impl(ModelPtr model, const Kinematics& kin, int N, const Direction& omega0,
                         const std::vector<std::pair<Direction, Direction>>& pairs,
                         PlaneQuadratureOptions opt, int branch) {
    KernelGrid grid;
    grid.kin = kin;
    grid.omega0 = omega0;
    grid.N = N;
    grid.branch = branch;
    grid.osc_order = opt.osc_order;
    if (pairs.empty()) return grid;

    KernelEngine engine(std::move(model), kin, N, omega0, opt, branch);
    PlaneBasis basis = plane_basis(omega0);
    double q_min = 1e300, q_max = 0;
    for (const auto& [w, t] : pairs) {
        double dq = kin.nu * basis.project(Vec3(t.vec() - w.vec())).norm();
        if (w.dot(t) < 1.0 - 1e-14) q_min = std::min(q_min, dq);
        q_max = std::max(q_max, dq);
    }
    if (q_min > 1e299) q_min = 0;
    engine.prepare(q_min, q_max);

    grid.samples.reserve(pairs.size());
    for (const auto& [w, t] : pairs) {
        // g_N is sampled off the diagonal only; rho <= 3 kernels blow up there.
        if (w.dot(t) >= 1.0 - 1e-14) throw DomainError("g_N sampling requires omega != theta");
        grid.samples.push_back({w, t, engine.g_value(w, t)});
    }
    grid.plane_radius = engine.lattice().Y;
    grid.plane_spacing = engine.lattice().h;
    grid.tail_estimate = engine.lattice().tail_estimate;
    grid.self_check_drift = engine.self_check_drift();
    return grid;
}

} // namespace

KernelGrid assemble_kernel_grid(ModelPtr model, const Kinematics& kin, int N,
                                const Direction& omega0,
                                const std::vector<std::pair<Direction, Direction>>& pairs,
                                const PlaneQuadratureOptions& opt, int branch) {
    return assemble_impl(std::move(model), kin, N, omega0, pairs, opt, branch);
}

KernelGrid assemble_kernel_grid_serial(ModelPtr model, const Kinematics& kin, int N,
                                       const Direction& omega0,
                                       const std::vector<std::pair<Direction, Direction>>& pairs,
                                       const PlaneQuadratureOptions& opt, int branch) {
    PlaneQuadratureOptions serial = opt;
    serial.parallel = false;
    return assemble_impl(std::move(model), kin, N, omega0, pairs, serial, branch);
}

DeltaPart delta_part_descriptor(const Kinematics& kin, const Direction& omega0) {
    DeltaPart d;
    d.kin = kin;
    d.omega0 = omega0;
    d.description =
        "s_00 sums to the Dirac function on H(E): the identity part of S(E) applied as "
        "(f,g) -> int (P_omega(E) f(omega), g(omega)) domega";
    return d;
}

Complex DeltaPart::pairing(const std::function<CVec4(const Direction&)>& f,
                           const std::function<CVec4(const Direction&)>& g,
                           const SphereQuadrature& quad) const {
    Complex acc = 0;
    for (size_t i = 0; i < quad.nodes.size(); ++i) {
        Direction w(quad.nodes[i]);
        Mat4 p = energy_projector(kin, w);
        acc += quad.weights[i] * (g(w).adjoint() * (p * f(w)))(0, 0);
    }
    return acc;
}

CVec4 apply_chart_kernel(ModelPtr model, const Kinematics& kin, int N, const Direction& omega0,
                         const std::function<CVec4(const Direction&)>& f, const Direction& omega,
                         KernelApplyMode mode, int theta_nodes, double y_radius, double y_spacing,
                         double delta, double delta_prime) {
    if (N != 0) throw DomainError("apply_chart_kernel: only N = 0 is supported");
    PlaneBasis basis = plane_basis(omega0);
    double T = std::sqrt(1.0 - delta * delta);
    double dt = 2.0 * T / theta_nodes;
    // Resolve the e^{i nu <y, theta~>} oscillation across the theta grid.
    double hy = std::min(y_spacing, pi / (kin.nu * 2.0 * T * 1.2));
    int M = int(std::ceil(y_radius / hy));

    struct ThetaNode {
        Vec2 zeta;
        Direction theta;
        CVec4 weighted; // Psi * measure * P_theta f(theta) sandwich tail
        double weight;
    };
    std::vector<ThetaNode> nodes;
    double bs = 1.0;
    for (int i = 0; i < theta_nodes; ++i)
        for (int j = 0; j < theta_nodes; ++j) {
            Vec2 z(-T + (i + 0.5) * dt, -T + (j + 0.5) * dt);
            double r2 = z.squaredNorm();
            if (r2 >= T * T) continue;
            double zc = std::sqrt(1.0 - r2);
            Direction th(Vec3(basis.embed(z) + bs * zc * omega0.vec()));
            double psi = chart_cutoff(omega, th, omega0, delta, delta_prime, +1);
            if (psi == 0) continue;
            ThetaNode n;
            n.zeta = z;
            n.theta = th;
            n.weight = psi * dt * dt / zc;
            nodes.push_back(n);
        }

    Mat4 alpha0 = alpha_dot(omega0.vec());
    Mat4 p_omega = energy_projector(kin, omega);
    Vec2 wz = basis.project(omega.vec());

    // Pre-weighted theta data
    std::vector<CVec4> base(nodes.size());
    for (size_t k = 0; k < nodes.size(); ++k) {
        Mat4 p_theta = energy_projector(kin, nodes[k].theta);
        base[k] = CVec4(double(kin.sign) * nodes[k].weight *
                        (p_omega * alpha0 * (p_theta * f(nodes[k].theta))));
    }

    const long side = 2 * M + 1;
    std::vector<CVec4> inner(size_t(side) * side, CVec4::Zero());
#pragma omp parallel for schedule(dynamic, 8)
    for (long idx = 0; idx < side * side; ++idx) {
        int i = int(idx / side) - M;
        int j = int(idx % side) - M;
        Vec2 y2(i * hy, j * hy);
        double r = y2.norm();
        if (r > y_radius) continue;
        double w = 1.0;
        double r0 = 0.75 * y_radius;
        if (r > r0) w = 1.0 - smooth01((r - r0) / (y_radius - r0));
        Vec3 y = basis.embed(y2);
        double phi_p = 0;
        if (mode != KernelApplyMode::Delta)
            phi_p = eikonal_phase(*model, omega, kin, +1, y, {1e-9, 1e-8, 11});
        CVec4 acc = CVec4::Zero();
        for (size_t k = 0; k < nodes.size(); ++k) {
            Complex amp;
            switch (mode) {
                case KernelApplyMode::Delta: amp = 1.0; break;
                case KernelApplyMode::G: {
                    double phi_m = eikonal_phase(*model, nodes[k].theta, kin, -1, y, {1e-9, 1e-8, 11});
                    amp = std::exp(iu * (phi_m - phi_p)) - 1.0;
                    break;
                }
                case KernelApplyMode::Full: {
                    double phi_m = eikonal_phase(*model, nodes[k].theta, kin, -1, y, {1e-9, 1e-8, 11});
                    amp = std::exp(iu * (phi_m - phi_p));
                    break;
                }
            }
            acc += (w * amp * std::exp(iu * kin.nu * (nodes[k].zeta - wz).dot(y2))) * base[k];
        }
        inner[size_t(idx)] = acc;
    }
    CVec4 total = CVec4::Zero();
    for (const auto& v : inner) total += v;
    double pref = kin.upsilon * kin.upsilon / (4.0 * pi * pi) * hy * hy;
    return CVec4(pref * total);
}

Mat4 leading_singularity(const PotentialModel& model, const Kinematics& kin,
                         const Direction& omega, const Direction& theta,
                         const PlaneQuadratureOptions& opt) {
    if (omega.dot(theta) >= 1.0 - 1e-14) throw DomainError("leading_singularity: theta = omega");
    if (omega.dot(theta) <= 0.5) throw DomainError("chart violation");
    Vec3 theta_t = theta.vec() - theta.dot(omega) * omega.vec();
    PlaneBasis basis = plane_basis(omega);
    auto probe = [&](double r) {
        double worst = 0;
        for (double ang : {0.3, 1.7, 3.9}) {
            Vec3 y = basis.embed(Vec2(r * std::cos(ang), r * std::sin(ang)));
            worst = std::max(worst, std::abs(xray_R(model, omega, kin, y, opt.ray_quad)));
        }
        return worst;
    };
    Vec2 q = kin.nu * basis.project(theta_t);
    PlaneLattice lat = make_plane_lattice(omega, q.norm(), q.norm(), probe, opt);
    const int side = lat.side();
    std::vector<Complex> vals(lat.size(), 0.0);
    const long total = long(side) * side;
#pragma omp parallel for schedule(dynamic, 16) if (opt.parallel)
    for (long idx = 0; idx < total; ++idx) {
        int i = int(idx / side) - lat.M;
        int j = int(idx % side) - lat.M;
        Vec2 y2 = lat.node(i, j);
        if (y2.norm() > lat.Y) continue;
        vals[size_t(idx)] = xray_R(model, omega, kin, lat.basis.embed(y2), opt.ray_quad);
    }
    Complex plane = oscillatory_plane_sum(lat, q, vals);
    // (1/i)(2pi)^{-1/2} upsilon^2 (nu/|E|) (2pi)^{-3/2} * plane * P_omega(E)
    Complex c = plane / iu * kin.upsilon * kin.upsilon * kin.nu / std::abs(kin.E) /
                std::pow(2.0 * pi, 2.0);
    return Mat4(c * energy_projector(kin, omega));
}

CVec4 gamma0(const Kinematics& kin, const std::function<CVec4(const Vec3&)>& g,
             const Direction& omega, double box_half_width, int nodes_per_axis) {
    // Tensor Gauss-Legendre box quadrature; g must decay inside the box.
    std::vector<double> x(nodes_per_axis), w(nodes_per_axis);
    auto leg = [&](std::vector<double>& xs, std::vector<double>& ws) {
        int n = nodes_per_axis;
        for (int i = 0; i < n; ++i) {
            double t = std::cos(pi * (i + 0.75) / (n + 0.5));
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0, p1 = t;
                for (int k = 2; k <= n; ++k) {
                    double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                double dp = n * (t * p1 - p0) / (t * t - 1.0);
                double dt_ = p1 / dp;
                t -= dt_;
                if (std::abs(dt_) < 1e-15) break;
            }
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            xs[i] = t * box_half_width;
            ws[i] = 2.0 / ((1.0 - t * t) * dp * dp) * box_half_width;
        }
    };
    leg(x, w);
    CVec4 acc = CVec4::Zero();
    for (int i = 0; i < nodes_per_axis; ++i)
        for (int j = 0; j < nodes_per_axis; ++j)
            for (int k = 0; k < nodes_per_axis; ++k) {
                Vec3 p(x[i], x[j], x[k]);
                acc += (w[i] * w[j] * w[k] *
                        std::exp(-iu * kin.nu * omega.dot(p))) *
                       g(p);
            }
    Mat4 proj = energy_projector(kin, omega);
    double pref = kin.upsilon / std::pow(2.0 * pi, 1.5);
    return CVec4(pref * (proj * acc));
}

CVec4 psi0(const Kinematics& kin, const std::function<CVec4(const Direction&)>& f, const Vec3& x,
           const SphereQuadrature& quad) {
    CVec4 acc = CVec4::Zero();
    for (size_t i = 0; i < quad.nodes.size(); ++i) {
        Direction w(quad.nodes[i]);
        acc += (quad.weights[i] * std::exp(iu * kin.nu * w.dot(x))) *
               (energy_projector(kin, w) * f(w));
    }
    return acc;
}

CVec4 gamma0_star(const Kinematics& kin, const std::function<CVec4(const Direction&)>& f,
                  const Vec3& x, const SphereQuadrature& quad) {
    return CVec4(kin.upsilon / std::pow(2.0 * pi, 1.5) * psi0(kin, f, x, quad));
}

Mat4 diagonal_kernel_combination(const PotentialModel& model, const Kinematics& kin,
                                 const Direction& theta, double y_radius, double y_spacing) {
    if (model.rho() <= 2.0)
        throw DomainError("diagonal_kernel_combination: continuous only for rho > 2");
    PlaneBasis basis = plane_basis(theta);
    int M = int(std::ceil(y_radius / y_spacing));
    double acc = 0;
#pragma omp parallel for schedule(dynamic, 8) reduction(+ : acc)
    for (int i = -M; i <= M; ++i) {
        double row = 0;
        for (int j = -M; j <= M; ++j) {
            Vec2 y2(i * y_spacing, j * y_spacing);
            double r = y2.norm();
            if (r > y_radius) continue;
            double w = 1.0;
            double r0 = 0.8 * y_radius;
            if (r > r0) w = 1.0 - smooth01((r - r0) / (y_radius - r0));
            double R = xray_R(model, theta, kin, basis.embed(y2), {1e-10, 1e-9, 12});
            row += w * 2.0 * (std::cos(R) - 1.0);
        }
        acc += row;
    }
    acc *= y_spacing * y_spacing;
    double pref = kin.upsilon * kin.upsilon / (4.0 * pi * pi) * kin.nu / std::abs(kin.E);
    return Mat4(pref * acc * energy_projector(kin, theta));
}

namespace {

// s^int value with a per-pair chart centered at the bisector of (omega, theta).
Mat4 floating_chart_value(ModelPtr model, const Kinematics& kin, int N, const Direction& omega,
                          const Direction& theta, const PlaneQuadratureOptions& opt) {
    Vec3 mid = omega.vec() + theta.vec();
    if (mid.norm() < 0.7) throw DomainError("chart violation: near-antipodal pair");
    Direction omega0(mid);
    KernelEngine engine(std::move(model), kin, N, omega0, opt);
    return engine.g_value(omega, theta);
}

} // namespace

CrossSection cross_section(ModelPtr model, const Kinematics& kin, const Direction& theta,
                           const CVec4& u, int n_sphere, const PlaneQuadratureOptions& opt) {
    if (std::abs(u.norm() - 1.0) > 1e-8) throw DomainError("cross_section: u not normalized");
    Mat4 p = energy_projector(kin, theta);
    if ((p * u - u).norm() > 1e-8) throw DomainError("cross_section: u not in the eigenspace");

    CrossSection cs;
    Mat4 comb = diagonal_kernel_combination(*model, kin, theta);
    cs.sigma = -std::real((u.adjoint() * (comb * u))(0, 0));

    if (n_sphere > 0) {
        auto dirs = fibonacci_directions(n_sphere);
        double acc = 0;
        for (const auto& w : dirs) {
            if ((w.vec() + theta.vec()).norm() < 0.7) continue; // smooth-term region, negligible here
            if (w.dot(theta) > 1.0 - 1e-12) continue;
            Mat4 s = floating_chart_value(model, kin, 0, w, theta, opt);
            acc += (s * u).squaredNorm() * (4.0 * pi / n_sphere);
        }
        cs.sigma_direct = acc;
    }
    return cs;
}

OpticalCheck optical_residual(ModelPtr model, const Kinematics& kin, const Direction& omega,
                              const Direction& theta, int n_sphere,
                              const PlaneQuadratureOptions& opt) {
    SphereQuadrature quad = sphere_quadrature(n_sphere / 16, 16);
    Mat4 acc = Mat4::Zero();
    for (size_t i = 0; i < quad.nodes.size(); ++i) {
        Direction eta(quad.nodes[i]);
        if ((eta.vec() + omega.vec()).norm() < 0.7 || (eta.vec() + theta.vec()).norm() < 0.7)
            continue;
        if (eta.dot(omega) > 1.0 - 1e-12 || eta.dot(theta) > 1.0 - 1e-12) continue;
        Mat4 sw = floating_chart_value(model, kin, 0, eta, omega, opt);
        Mat4 st = floating_chart_value(model, kin, 0, eta, theta, opt);
        acc += quad.weights[i] * sw.adjoint() * st;
    }
    Mat4 s_wt = floating_chart_value(model, kin, 0, omega, theta, opt);
    Mat4 s_tw = floating_chart_value(model, kin, 0, theta, omega, opt);
    Mat4 comb = s_wt + s_tw.adjoint();
    OpticalCheck oc;
    oc.residual_norm = max_abs(Mat4(acc + comb));
    oc.combination_norm = max_abs(comb);
    return oc;
}

double xray_R(const PotentialModel& model, const Direction& omega, const Kinematics& kin,
              const Vec3& y, const QuadOptions& quad) {
    auto f = [&](const Vec3& z) { return cal_v(model, omega, kin, z); };
    return xray_transform(f, omega, y, LineRange::Full, quad);
}

double xray_R_infty(const PotentialModel& model, const Direction& omega, int branch, const Vec3& y,
                    const QuadOptions& quad) {
    double bs = branch >= 0 ? 1.0 : -1.0;
    auto f = [&](const Vec3& z) { return model.V(z) + bs * omega.dot(model.A(z)); };
    return xray_transform(f, omega, y, LineRange::Full, quad);
}

Mat4 high_energy_kernel_limit(const PotentialModel& model, const Direction& omega, const Vec3& eta,
                              int branch, const PlaneQuadratureOptions& opt) {
    if (eta.norm() == 0) throw DomainError("high_energy_kernel_limit: eta = 0");
    if (std::abs(eta.dot(omega.vec())) > 1e-10 * eta.norm())
        throw DomainError("high_energy_kernel_limit: eta not orthogonal to omega");
    PlaneBasis basis = plane_basis(omega);
    auto probe = [&](double r) {
        double worst = 0;
        for (double ang : {0.4, 2.1, 4.6}) {
            Vec3 y = basis.embed(Vec2(r * std::cos(ang), r * std::sin(ang)));
            worst = std::max(worst,
                             std::abs(std::exp(-iu * xray_R_infty(model, omega, branch, y)) - 1.0));
        }
        return worst;
    };
    Vec2 q = -basis.project(eta);
    PlaneLattice lat = make_plane_lattice(omega, q.norm(), q.norm(), probe, opt);
    const int side = lat.side();
    std::vector<Complex> vals(lat.size(), 0.0);
    const long total = long(side) * side;
#pragma omp parallel for schedule(dynamic, 16) if (opt.parallel)
    for (long idx = 0; idx < total; ++idx) {
        int i = int(idx / side) - lat.M;
        int j = int(idx % side) - lat.M;
        Vec2 y2 = lat.node(i, j);
        if (y2.norm() > lat.Y) continue;
        vals[size_t(idx)] =
            std::exp(-iu * xray_R_infty(model, omega, branch, lat.basis.embed(y2), opt.ray_quad)) -
            1.0;
    }
    Complex plane = oscillatory_plane_sum(lat, q, vals);
    return Mat4(plane / (4.0 * pi * pi) * spectral_projector_infty(omega, branch));
}

Mat4 high_energy_kernel_at(ModelPtr model, double E, double m, const Direction& omega,
                           const Vec3& eta, int N, const PlaneQuadratureOptions& opt) {
    Kinematics kin = kinematics(E, m);
    if (eta.norm() >= 2.0 * kin.nu)
        throw DomainError("high_energy_kernel_at: |eta| exceeds 2 nu(E)");
    Vec3 ehat = eta / eta.norm();
    double sa = eta.norm() / (2.0 * kin.nu);
    double ca = std::sqrt(1.0 - sa * sa);
    Direction omega_E(Vec3(ca * omega.vec() + sa * ehat));
    Direction theta_E(Vec3(ca * omega.vec() - sa * ehat));
    KernelEngine engine(std::move(model), kin, N, omega, opt);
    Mat4 g = engine.g_value(omega_E, theta_E);
    return Mat4(g / (kin.upsilon * kin.upsilon));
}

} // namespace dirsc
