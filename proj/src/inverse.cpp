#include "dirsc/inverse.hpp"

#include <fftw3.h>
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace dirsc {

namespace {

double smooth01(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double a = std::exp(-1.0 / t);
    double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

// Centered unnormalized DFT: F[k] = sum_p v[p] e^{sign i <y_p, eta_k>} with
// y_p = (p - n/2) dy and eta_k = (k - n/2) * 2pi/(n dy).
void centered_dft2(std::vector<Complex>& a, int n, int sign) {
    double par = 1.0;
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            if ((p + q) % 2) a[size_t(p) * n + q] = -a[size_t(p) * n + q];
    fftw_plan plan = fftw_plan_dft_2d(n, n, reinterpret_cast<fftw_complex*>(a.data()),
                                      reinterpret_cast<fftw_complex*>(a.data()),
                                      sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    double h2 = (n / 2) % 2 ? -1.0 : 1.0; // (-1)^{n/2} per axis, squared -> 1; kept explicit
    par = h2 * h2;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l) {
            double s = ((k + l) % 2 ? -1.0 : 1.0) * par;
            a[size_t(k) * n + l] *= s;
        }
}

void centered_dft3(std::vector<Complex>& a, int n, int sign) {
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q)
            for (int r = 0; r < n; ++r)
                if ((p + q + r) % 2) a[(size_t(p) * n + q) * n + r] *= -1.0;
    fftw_plan plan = fftw_plan_dft_3d(n, n, n, reinterpret_cast<fftw_complex*>(a.data()),
                                      reinterpret_cast<fftw_complex*>(a.data()),
                                      sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
    double h2 = (n / 2) % 2 ? -1.0 : 1.0;
    double par = h2 * h2 * h2;
    for (int k = 0; k < n; ++k)
        for (int l = 0; l < n; ++l)
            for (int r = 0; r < n; ++r) {
                double s = ((k + l + r) % 2 ? -1.0 : 1.0) * par;
                a[(size_t(k) * n + l) * n + r] *= s;
            }
}

} // namespace

LimitData limit_data_analytic(const PotentialModel& model, const Direction& omega, int branch,
                              int n, double dy, const PlaneBasis* basis_override,
                              const QuadOptions& quad) {
    if (n % 2) throw DomainError("limit_data_analytic: n must be even");
    LimitData ld;
    ld.omega = omega;
    ld.branch = branch;
    ld.basis = basis_override ? *basis_override : plane_basis(omega);
    ld.n = n;
    ld.dy = dy;

    std::vector<Complex> f(size_t(n) * n);
#pragma omp parallel for schedule(dynamic, 4)
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            Vec3 y = ld.basis.embed(Vec2((p - n / 2) * dy, (q - n / 2) * dy));
            double R = xray_R_infty(model, omega, branch, y, quad);
            f[size_t(p) * n + q] = std::exp(-iu * R) - 1.0;
        }
    centered_dft2(f, n, -1);
    Mat4 proj = spectral_projector_infty(omega, branch);
    double pref = dy * dy / (4.0 * pi * pi);
    ld.values.resize(f.size());
    for (size_t i = 0; i < f.size(); ++i) ld.values[i] = Mat4(pref * f[i] * proj);
    return ld;
}

PlaneScalarGrid recover_R(const LimitData& limit, const RecoverOptions& opt) {
    const int n = limit.n;
    std::vector<Complex> F(size_t(n) * n);
    // P_omega(+-inf) has (0,0) entry 1/2; the scalar is read from there.
    for (size_t i = 0; i < F.size(); ++i) F[i] = 2.0 * limit.values[i](0, 0);
    // f(y) = int e^{i<y,eta>} F(eta) deta, F = (2pi)^{-2} int e^{-i<y,eta>} f dy.
    centered_dft2(F, n, +1);
    double deta = limit.freq_step();
    for (auto& v : F) v *= deta * deta;

    PlaneScalarGrid out;
    out.omega = limit.omega;
    out.basis = limit.basis;
    out.n = n;
    out.dy = limit.dy;
    out.values.assign(size_t(n) * n, 0.0);

    std::vector<double> raw(size_t(n) * n);
    for (int p = 0; p < n; ++p)
        for (int q = 0; q < n; ++q) {
            Complex u = 1.0 + F[size_t(p) * n + q];
            if (std::abs(std::abs(u) - 1.0) > opt.unimodular_tol)
                throw DomainError("non-unimodular data");
            raw[size_t(p) * n + q] = -std::arg(u);
        }

    // Continuous branch tracked from the boundary (R -> 0 at infinity) inward.
    std::vector<size_t> order(raw.size());
    std::iota(order.begin(), order.end(), 0);
    auto radius = [&](size_t idx) {
        int p = int(idx) / n, q = int(idx) % n;
        return std::hypot((p - n / 2) * limit.dy, (q - n / 2) * limit.dy);
    };
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return radius(a) > radius(b); });
    std::vector<char> done(raw.size(), 0);
    for (size_t idx : order) {
        int p = int(idx) / n, q = int(idx) % n;
        double best_r = -1.0;
        double ref = 0.0;
        bool have = false;
        for (int dp = -1; dp <= 1; ++dp)
            for (int dq = -1; dq <= 1; ++dq) {
                if (!dp && !dq) continue;
                int pp = p + dp, qq = q + dq;
                if (pp < 0 || pp >= n || qq < 0 || qq >= n) continue;
                size_t nb = size_t(pp) * n + qq;
                if (!done[nb]) continue;
                double r = radius(nb);
                if (r > best_r) {
                    best_r = r;
                    ref = out.values[nb];
                    have = true;
                }
            }
        double v = raw[idx];
        if (have) {
            v += 2.0 * pi * std::round((ref - v) / (2.0 * pi));
            if (std::abs(v - ref) > opt.wrap_threshold) throw DomainError("phase wrap ambiguity");
        }
        out.values[idx] = v;
        done[idx] = 1;
    }
    return out;
}

std::pair<PlaneScalarGrid, PlaneScalarGrid> split_even_odd(const PlaneScalarGrid& r_plus,
                                                           const PlaneScalarGrid& r_minus) {
    if (r_plus.n != r_minus.n || std::abs(r_plus.dy - r_minus.dy) > 1e-15)
        throw DomainError("split_even_odd: mismatched grids");
    PlaneScalarGrid re = r_plus, rm = r_plus;
    for (size_t i = 0; i < re.values.size(); ++i) {
        re.values[i] = 0.5 * (r_plus.values[i] + r_minus.values[i]);
        rm.values[i] = 0.5 * (r_plus.values[i] - r_minus.values[i]);
    }
    return {re, rm};
}

std::pair<PlaneScalarGrid, PlaneScalarGrid> split_even_odd_omega(const PlaneScalarGrid& r_om,
                                                                 const PlaneScalarGrid& r_neg) {
    return split_even_odd(r_om, r_neg);
}

namespace {

struct Splat {
    double radius_cap_steps = 4.0;
    double min_radius_steps = 1.5;
};

template <typename Acc>
void splat_slices(const std::vector<PlaneScalarGrid>& data, int nx, double L,
                  const SliceInversionOptions& opt, Acc&& accumulate) {
    double dxi = pi / L;
    double xi_lim = (nx / 2 - 1) * dxi;
    Splat sp;
    double gap = opt.shell_gap_factor / std::sqrt(double(data.size()));
    for (const auto& grid : data) {
        int n = grid.n;
        std::vector<Complex> S(grid.values.begin(), grid.values.end());
        centered_dft2(S, n, -1);
        double pref = grid.dy * grid.dy / std::pow(2.0 * pi, 1.5);
        double deta = 2.0 * pi / (n * grid.dy);
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l) {
                Vec2 eta2((k - n / 2) * deta, (l - n / 2) * deta);
                double r2 = eta2.norm();
                if (r2 > xi_lim) continue;
                Vec3 eta = grid.basis.embed(eta2);
                Complex val = pref * S[size_t(k) * n + l];
                double rad =
                    std::clamp(r2 * gap / dxi, sp.min_radius_steps, sp.radius_cap_steps) * dxi;
                int span = int(std::ceil(rad / dxi));
                Vec3 idx = eta / dxi;
                int i0 = int(std::round(idx.x())), j0 = int(std::round(idx.y())),
                    k0 = int(std::round(idx.z()));
                for (int di = -span; di <= span; ++di)
                    for (int dj = -span; dj <= span; ++dj)
                        for (int dk = -span; dk <= span; ++dk) {
                            int bi = i0 + di, bj = j0 + dj, bk = k0 + dk;
                            if (std::abs(bi) > nx / 2 - 1 || std::abs(bj) > nx / 2 - 1 ||
                                std::abs(bk) > nx / 2 - 1)
                                continue;
                            Vec3 xi_bin(bi * dxi, bj * dxi, bk * dxi);
                            double dist = (xi_bin - eta).norm();
                            if (dist > rad) continue;
                            double w = 1.0 / (dist + 0.25 * dxi);
                            size_t bin = (size_t(bi + nx / 2) * nx + (bj + nx / 2)) * nx +
                                         (bk + nx / 2);
                            accumulate(bin, w, val, grid.omega.vec());
                        }
            }
    }
}

} // namespace

ScalarVolume invert_xray_scalar(const std::vector<PlaneScalarGrid>& re_data, int nx, double L,
                                const SliceInversionOptions& opt) {
    if (int(re_data.size()) < opt.min_directions) throw DomainError("insufficient angular coverage");
    std::vector<double> wsum(size_t(nx) * nx * nx, 0.0);
    std::vector<Complex> acc(size_t(nx) * nx * nx, 0.0);
    splat_slices(re_data, nx, L, opt,
                 [&](size_t bin, double w, Complex v, const Vec3&) {
                     wsum[bin] += w;
                     acc[bin] += w * v;
                 });
    for (size_t i = 0; i < acc.size(); ++i) acc[i] = wsum[i] > 0 ? acc[i] / wsum[i] : 0.0;
    centered_dft3(acc, nx, +1);
    double dxi = pi / L;
    double pref = std::pow(dxi, 3) / std::pow(2.0 * pi, 1.5);
    ScalarVolume vol;
    vol.n = nx;
    vol.dx = 2.0 * L / nx;
    vol.values.resize(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) vol.values[i] = pref * acc[i].real();
    return vol;
}

VectorVolume invert_xray_magnetic(const std::vector<PlaneScalarGrid>& rm_data, int nx, double L,
                                  const SliceInversionOptions& opt) {
    if (int(rm_data.size()) < opt.min_directions) throw DomainError("insufficient angular coverage");
    size_t nbins = size_t(nx) * nx * nx;
    std::vector<double> mxx(nbins, 0), mxy(nbins, 0), mxz(nbins, 0), myy(nbins, 0), myz(nbins, 0),
        mzz(nbins, 0);
    std::vector<Complex> r0(nbins, 0.0), r1(nbins, 0.0), r2(nbins, 0.0);
    splat_slices(rm_data, nx, L, opt, [&](size_t bin, double w, Complex v, const Vec3& omega) {
        mxx[bin] += w * omega.x() * omega.x();
        mxy[bin] += w * omega.x() * omega.y();
        mxz[bin] += w * omega.x() * omega.z();
        myy[bin] += w * omega.y() * omega.y();
        myz[bin] += w * omega.y() * omega.z();
        mzz[bin] += w * omega.z() * omega.z();
        r0[bin] += w * v * omega.x();
        r1[bin] += w * v * omega.y();
        r2[bin] += w * v * omega.z();
    });

    std::array<std::vector<Complex>, 3> bhat;
    for (auto& b : bhat) b.assign(nbins, 0.0);
    int deficient = 0;
    double dxi = pi / L;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < nx; ++j)
            for (int k = 0; k < nx; ++k) {
                size_t bin = (size_t(i) * nx + j) * nx + k;
                double tr = mxx[bin] + myy[bin] + mzz[bin];
                if (tr <= 0) continue;
                Mat3 M;
                M << mxx[bin], mxy[bin], mxz[bin], mxy[bin], myy[bin], myz[bin], mxz[bin],
                    myz[bin], mzz[bin];
                Eigen::SelfAdjointEigenSolver<Mat3> es(M);
                Eigen::Vector3cd rhs(r0[bin], r1[bin], r2[bin]);
                Eigen::Vector3cd a = Eigen::Vector3cd::Zero();
                int rank = 0;
                for (int e = 0; e < 3; ++e) {
                    double lam = es.eigenvalues()[e];
                    if (lam > opt.rank_tolerance * es.eigenvalues()[2]) {
                        Eigen::Vector3cd v = es.eigenvectors().col(e).cast<Complex>();
                        a += (v.adjoint() * rhs)(0, 0) / lam * v;
                        ++rank;
                    }
                }
                if (rank < 2) {
                    ++deficient;
                    continue;
                }
                Vec3 xi((i - nx / 2) * dxi, (j - nx / 2) * dxi, (k - nx / 2) * dxi);
                // B-hat = i xi x A-hat, written out (Eigen's cross() conjugates complex
                // operands, which is not the plain algebraic product needed here)
                bhat[0][bin] = iu * (xi.y() * a(2) - xi.z() * a(1));
                bhat[1][bin] = iu * (xi.z() * a(0) - xi.x() * a(2));
                bhat[2][bin] = iu * (xi.x() * a(1) - xi.y() * a(0));
            }
    // Excessive rank deficiency means the direction set cannot resolve A-hat transverse.
    size_t populated = 0;
    for (size_t b = 0; b < nbins; ++b)
        if (mxx[b] + myy[b] + mzz[b] > 0) ++populated;
    if (populated > 0 && double(deficient) / double(populated) > opt.max_deficient_fraction)
        throw DomainError("rank deficiency");

    VectorVolume vol;
    vol.n = nx;
    vol.dx = 2.0 * L / nx;
    vol.deficient_bins = deficient;
    double pref = std::pow(dxi, 3) / std::pow(2.0 * pi, 1.5);
    for (int c = 0; c < 3; ++c) {
        centered_dft3(bhat[c], nx, +1);
        vol.comp[c].resize(nbins);
        for (size_t i = 0; i < nbins; ++i) vol.comp[c][i] = pref * bhat[c][i].real();
    }
    return vol;
}

double volume_rel_l2(const ScalarVolume& vol, const std::function<double(const Vec3&)>& truth) {
    double num = 0, den = 0;
    for (int i = 0; i < vol.n; ++i)
        for (int j = 0; j < vol.n; ++j)
            for (int k = 0; k < vol.n; ++k) {
                double t = truth(vol.point(i, j, k));
                double v = vol.values[(size_t(i) * vol.n + j) * vol.n + k];
                num += (v - t) * (v - t);
                den += t * t;
            }
    return std::sqrt(num / std::max(den, 1e-300));
}

double volume_rel_l2(const VectorVolume& vol, const std::function<Vec3(const Vec3&)>& truth) {
    double num = 0, den = 0;
    for (int i = 0; i < vol.n; ++i)
        for (int j = 0; j < vol.n; ++j)
            for (int k = 0; k < vol.n; ++k) {
                Vec3 t = truth(vol.point(i, j, k));
                size_t bin = (size_t(i) * vol.n + j) * vol.n + k;
                Vec3 v(vol.comp[0][bin], vol.comp[1][bin], vol.comp[2][bin]);
                num += (v - t).squaredNorm();
                den += t.squaredNorm();
            }
    return std::sqrt(num / std::max(den, 1e-300));
}

double volume_max_div(const VectorVolume& vol) {
    double worst = 0;
    int n = vol.n;
    auto at = [&](int c, int i, int j, int k) {
        return vol.comp[c][(size_t(i) * n + j) * n + k];
    };
    for (int i = 1; i + 1 < n; ++i)
        for (int j = 1; j + 1 < n; ++j)
            for (int k = 1; k + 1 < n; ++k) {
                double div = (at(0, i + 1, j, k) - at(0, i - 1, j, k) + at(1, i, j + 1, k) -
                              at(1, i, j - 1, k) + at(2, i, j, k + 1) - at(2, i, j, k - 1)) /
                             (2 * vol.dx);
                worst = std::max(worst, std::abs(div));
            }
    return worst;
}

// --- fixed-energy symbol -----------------------------------------------------

namespace {

double chart_step01(double t, double lo, double hi) { return smooth01((t - lo) / (hi - lo)); }

double psi_radial(double q) {
    // Psi_+(omega, theta(zeta); omega) with omega at the chart center: radial in |zeta|.
    double c = std::sqrt(std::max(0.0, 1.0 - q * q));
    return chart_step01(c, 0.3, 0.5);
}

struct PolarLattice {
    std::vector<double> radii;   // log-midpoint radii, plus a center node radius 0
    std::vector<double> rweight; // r^2 ln2/K (area element per angle), center: pi y_min^2 / nang
    int nang = 48;
    double rmax = 0;
};

PolarLattice make_polar(double y_min, double y_max, int per_octave, int nang) {
    PolarLattice p;
    p.nang = nang;
    int octaves = int(std::ceil(std::log2(y_max / y_min)));
    int count = octaves * per_octave;
    p.radii.reserve(count + 1);
    p.rweight.reserve(count + 1);
    p.radii.push_back(0.0);
    p.rweight.push_back(pi * y_min * y_min / nang);
    double step = std::log(2.0) / per_octave;
    for (int i = 0; i < count; ++i) {
        double r = y_min * std::exp((i + 0.5) * step);
        p.radii.push_back(r);
        p.rweight.push_back(r * r * step * 2.0 * pi / nang);
    }
    p.rmax = y_min * std::exp(count * step);
    return p;
}

} // namespace

KernelGrid assemble_symbol_kernel_grid(ModelPtr model, const Kinematics& kin,
                                       const Direction& omega, const SymbolGridSpec& spec) {
    if (model->rho() <= 1.0) throw DomainError("singular_kernel: decay exponent <= 1");
    PlaneBasis basis = plane_basis(omega);

    // Offset tensor grid in theta~, avoiding the diagonal.
    std::vector<Vec2> zetas;
    int half = int(std::ceil(spec.theta_max / spec.theta_step));
    for (int p = -half; p < half; ++p)
        for (int q = -half; q < half; ++q) {
            Vec2 z((p + 0.5) * spec.theta_step, (q + 0.5) * spec.theta_step);
            if (z.norm() < spec.theta_max) zetas.push_back(z);
        }

    double q_min = kin.nu * spec.theta_step * 0.5;
    double y_max = spec.window_factor / q_min;
    // The per-pair window keeps q*r <= window_factor; node counts resolve that phase.
    int per_octave = spec.radial_per_octave > 0
                         ? spec.radial_per_octave
                         : std::max(14, int(std::ceil(spec.window_factor * 0.7)));
    int nang = spec.angular_nodes > 0
                   ? spec.angular_nodes
                   : std::max(48, 2 * int(std::ceil(spec.window_factor)));
    PolarLattice lat = make_polar(spec.y_min, y_max, per_octave, nang);
    const size_t n_nodes = lat.radii.size() * lat.nang;
    auto node_point = [&](size_t idx) -> Vec3 {
        size_t ir = idx / lat.nang, ia = idx % lat.nang;
        double phi = 2.0 * pi * (ia + 0.5) / lat.nang;
        double r = lat.radii[ir];
        return basis.embed(Vec2(r * std::cos(phi), r * std::sin(phi)));
    };

    // Shared columns: Phi^+ for omega, Phi^- for each theta node.
    std::vector<double> phi_p(n_nodes);
#pragma omp parallel for schedule(dynamic, 32) if (spec.parallel)
    for (long i = 0; i < long(n_nodes); ++i)
        phi_p[size_t(i)] = eikonal_phase(*model, omega, kin, +1, node_point(size_t(i)), spec.ray_quad);

    KernelGrid grid;
    grid.kin = kin;
    grid.omega0 = omega;
    grid.N = 0;
    grid.branch = +1;
    grid.plane_radius = lat.rmax;
    grid.plane_spacing = spec.theta_step;
    grid.samples.resize(zetas.size());

    Mat4 alpha0 = alpha_dot(omega.vec());
    Mat4 p_omega = energy_projector(kin, omega);
    double pref = kin.upsilon * kin.upsilon / (4.0 * pi * pi);

    std::vector<double> phi_m(n_nodes);
    for (size_t zi = 0; zi < zetas.size(); ++zi) {
        const Vec2& z = zetas[zi];
        double zc = std::sqrt(1.0 - z.squaredNorm());
        Direction theta(Vec3(basis.embed(z) + zc * omega.vec()));
#pragma omp parallel for schedule(dynamic, 32) if (spec.parallel)
        for (long i = 0; i < long(n_nodes); ++i)
            phi_m[size_t(i)] =
                eikonal_phase(*model, theta, kin, -1, node_point(size_t(i)), spec.ray_quad);

        Vec2 qv = kin.nu * z;
        double q = qv.norm();
        double Y = std::min(spec.window_factor / q, lat.rmax);
        double w0 = spec.window_start;
        Complex sum = 0.0;
        for (size_t ir = 0; ir < lat.radii.size(); ++ir) {
            double r = lat.radii[ir];
            if (r > Y) break;
            double w = 1.0;
            if (r > w0 * Y) w = 1.0 - smooth01((r - w0 * Y) / ((1.0 - w0) * Y));
            if (w == 0.0) continue;
            Complex ring = 0.0;
            for (int ia = 0; ia < lat.nang; ++ia) {
                size_t idx = ir * lat.nang + ia;
                double phi_ang = 2.0 * pi * (ia + 0.5) / lat.nang;
                double ydotq = r * (std::cos(phi_ang) * qv.x() + std::sin(phi_ang) * qv.y());
                ring += std::exp(iu * ydotq) * (std::exp(iu * (phi_m[idx] - phi_p[idx])) - 1.0);
            }
            sum += w * lat.rweight[ir] * ring;
        }
        double psi = psi_radial(z.norm());
        Mat4 sandwich = p_omega * alpha0 * energy_projector(kin, theta);
        grid.samples[zi] = {omega, theta, Mat4(pref * psi * double(kin.sign) * sum * sandwich)};
    }
    return grid;
}

SymbolEvaluator::SymbolEvaluator(const KernelGrid& grid, double ring_lo, double ring_hi) {
    kin_ = grid.kin;
    omega_ = grid.omega0;
    basis_ = plane_basis(omega_);
    proj_ = energy_projector(kin_, omega_);
    if (grid.samples.empty()) throw DomainError("fixed_energy_symbol: empty grid");

    std::vector<Vec2> zetas(grid.samples.size());
    for (size_t i = 0; i < grid.samples.size(); ++i)
        zetas[i] = basis_.project(grid.samples[i].theta.vec());
    // Tensor spacing inferred from the closest pair of distinct samples.
    double dmin = 1e300;
    for (size_t i = 1; i < std::min<size_t>(zetas.size(), 64); ++i)
        dmin = std::min(dmin, (zetas[i] - zetas[0]).norm());
    dtheta_ = dmin;

    // Near-diagonal power-law fit g ~ C |zeta|^{-mu} on the inner ring.
    if (ring_lo <= 0) ring_lo = 0.9 * dtheta_;
    if (ring_hi <= 0) ring_hi = 2.4 * dtheta_;
    std::vector<double> rs, vs;
    Mat4 csum = Mat4::Zero();
    double cw = 0;
    for (size_t i = 0; i < zetas.size(); ++i) {
        double r = zetas[i].norm();
        if (r < ring_lo || r > ring_hi) continue;
        double v = max_abs(grid.samples[i].g);
        if (v <= 1e-300) continue;
        rs.push_back(r);
        vs.push_back(v);
    }
    if (rs.size() >= 4) {
        mu_ = -loglog_slope(rs, vs);
        if (mu_ < 0.05) mu_ = 0.0; // effectively regular kernel; no subtraction needed
    }
    if (mu_ > 0) {
        for (size_t i = 0; i < zetas.size(); ++i) {
            double r = zetas[i].norm();
            if (r < ring_lo || r > ring_hi) continue;
            csum += std::pow(r, mu_) * grid.samples[i].g;
            cw += 1.0;
        }
        C_ = Mat4(csum / cw);
    }

    nodes_.resize(zetas.size());
    for (size_t i = 0; i < zetas.size(); ++i) {
        Node n;
        n.zeta = zetas[i];
        double q = zetas[i].norm();
        n.weight = dtheta_ * dtheta_ / std::sqrt(std::max(1e-12, 1.0 - q * q));
        Mat4 model = mu_ > 0 ? Mat4(std::pow(q, -mu_) * psi_radial(q) * C_) : Mat4(Mat4::Zero());
        n.subtracted = Mat4(grid.samples[i].g - model);
        nodes_[i] = n;
    }
}

double SymbolEvaluator::hankel(double s) const {
    // 2 pi int_0^1 J0(s q) q^{1-mu} psi(q)/sqrt(1-q^2) dq  (chart cutoff kills q ~ 1)
    auto f = [&](double q) -> double {
        if (q <= 0.0) return 0.0;
        double psi = psi_radial(q);
        if (psi == 0.0) return 0.0;
        return std::cyl_bessel_j(0.0, s * q) * std::pow(q, 1.0 - mu_) * psi /
               std::sqrt(1.0 - q * q);
    };
    return 2.0 * pi * integrate(f, 0.0, 0.954, QuadOptions{1e-10, 1e-8, 14});
}

double SymbolEvaluator::max_radius() const { return 0.85 * pi / (kin_.nu * dtheta_); }

Mat4 SymbolEvaluator::value(const Vec3& y) const {
    Vec2 y2 = basis_.project(y);
    Mat4 acc = Mat4::Zero();
    for (const auto& n : nodes_)
        acc += (n.weight * std::exp(-iu * kin_.nu * y2.dot(n.zeta))) * n.subtracted;
    if (mu_ > 0) acc += hankel(kin_.nu * y2.norm()) * C_;
    double pref = kin_.nu / std::abs(kin_.E);
    return Mat4(pref * (proj_ + acc));
}

Mat4 SymbolEvaluator::subtracted(const Vec3& y) const {
    return Mat4(value(y) - kin_.nu / std::abs(kin_.E) * proj_);
}

SymbolEvaluator fixed_energy_symbol(const KernelGrid& grid) { return SymbolEvaluator(grid); }

// --- homogeneous peel ---------------------------------------------------------

std::vector<MagneticBasisTerm> magnetic_basis_terms() {
    std::vector<MagneticBasisTerm> out;
    for (int axis = 0; axis < 3; ++axis) {
        out.push_back({axis, 0, 0});
        for (int m = -1; m <= 1; ++m) out.push_back({axis, 1, m});
    }
    return out;
}

namespace {

double xray_power_basis(double rho, int l, int m, const Vec3& y, const Direction& omega) {
    auto f = [&](const Vec3& x) -> double {
        double r = x.norm();
        return std::pow(r, -rho) * real_sh(l, m, x / r);
    };
    return xray_transform(f, omega, y, LineRange::Full, QuadOptions{1e-9, 1e-8, 12});
}

double xray_magnetic_basis(double rho_m, const MagneticBasisTerm& t, const Vec3& y,
                           const Direction& omega) {
    auto f = [&](const Vec3& x) -> double {
        double r = x.norm();
        return std::pow(r, -rho_m) * real_sh(t.l, t.m, x / r) * omega.vec()[t.axis];
    };
    return xray_transform(f, omega, y, LineRange::Full, QuadOptions{1e-9, 1e-8, 12});
}

} // namespace

PeelResult homogeneous_peel(ModelPtr truth_model, const Kinematics& kin, const PeelOptions& opt) {
    PeelResult result;
    auto dirs = fibonacci_directions(opt.directions);

    // Two energies: the symbol's amplitude-to-left-symbol conversion terms carry an
    // extra 1/nu per order; a Richardson step across nu and 2*nu removes the first
    // one from the extracted X-ray data.
    Kinematics kin2 = kinematics(double(kin.sign) *
                                     std::sqrt(4.0 * kin.nu * kin.nu + kin.m * kin.m),
                                 kin.m);
    const std::array<Kinematics, 2> kins{kin, kin2};

    // evaluators[e][d] around +dirs[d], minus_evaluators[e][d] around -dirs[d]
    std::array<std::vector<SymbolEvaluator>, 2> data_p, data_m;
    for (int e = 0; e < 2; ++e)
        for (const auto& w : dirs) {
            data_p[e].emplace_back(assemble_symbol_kernel_grid(truth_model, kins[e], w, opt.grid_spec));
            data_m[e].emplace_back(
                assemble_symbol_kernel_grid(truth_model, kins[e], -w, opt.grid_spec));
        }
    for (int e = 0; e < 2; ++e)
        if (data_p[e].front().max_radius() < opt.r_hi)
            throw DomainError("insufficient theta resolution");

    std::vector<double> radii(opt.radii);
    for (int i = 0; i < opt.radii; ++i)
        radii[i] = opt.r_lo * std::pow(opt.r_hi / opt.r_lo, double(i) / (opt.radii - 1));

    std::vector<ModelPtr> recovered_terms;
    std::array<std::vector<SymbolEvaluator>, 2> sub_p, sub_m; // forward map of recovered sum
    bool have_sub = false;

    const auto mag_basis = magnetic_basis_terms();
    double prev_rho = 0;
    double prev_band = 0;

    for (int level = 0; level < opt.max_terms; ++level) {
        struct Sample {
            size_t d;
            Vec3 y;
            double xray_v, xray_a; // extrapolated int V dt and int <omega,A> dt
        };
        std::vector<Sample> samples;
        std::vector<double> band_r, band_v;
        double band_mean = 0;
        int band_count = 0;
        for (size_t d = 0; d < dirs.size(); ++d) {
            PlaneBasis basis = plane_basis(dirs[d]);
            for (double r : radii) {
                double level_v = 0;
                for (int a = 0; a < opt.ray_angles; ++a) {
                    double phi = 2.0 * pi * (a + 0.37) / opt.ray_angles;
                    Vec3 y = basis.embed(Vec2(r * std::cos(phi), r * std::sin(phi)));
                    double v[2], w_a[2];
                    for (int e = 0; e < 2; ++e) {
                        const Kinematics& ke = kins[e];
                        double p00 = 0.5 * (1.0 + ke.m / ke.E);
                        Mat4 res_p = data_p[e][d].subtracted(y);
                        Mat4 res_m = data_m[e][d].subtracted(y);
                        if (have_sub) {
                            res_p -= sub_p[e][d].subtracted(y);
                            res_m -= sub_m[e][d].subtracted(y);
                        }
                        // h1 = -i (nu/|E|) R P; R read from the (0,0) entry.
                        double rp = (iu * std::abs(ke.E) / ke.nu * res_p(0, 0) / p00).real();
                        double rm = (iu * std::abs(ke.E) / ke.nu * res_m(0, 0) / p00).real();
                        // R(y,omega;E) = (|E|/nu) int V dt + sgn(E) <omega-part>
                        v[e] = ke.nu / std::abs(ke.E) * 0.5 * (rp + rm);
                        w_a[e] = double(ke.sign) * 0.5 * (rp - rm);
                    }
                    Sample s;
                    s.d = d;
                    s.y = y;
                    double n1 = kins[0].nu, n2 = kins[1].nu;
                    s.xray_v = (n2 * v[1] - n1 * v[0]) / (n2 - n1);
                    s.xray_a = (n2 * w_a[1] - n1 * w_a[0]) / (n2 - n1);
                    samples.push_back(s);
                    level_v += std::abs(s.xray_v) + std::abs(s.xray_a);
                }
                level_v /= opt.ray_angles;
                band_r.push_back(r);
                band_v.push_back(level_v);
                band_mean += level_v;
                ++band_count;
            }
        }
        band_mean /= std::max(band_count, 1);
        if (level > 0 && band_mean >= prev_band)
            throw DomainError("peel residual not decreasing");
        prev_band = band_mean;
        result.band_residuals.push_back(band_mean);

        // X-ray data of a homogeneous term of order -rho is homogeneous of order 1-rho.
        double order = loglog_slope(band_r, band_v) - 1.0; // symbol order of h1
        double rho = -loglog_slope(band_r, band_v) + 1.0;
        if (level > 0 && std::abs(rho - prev_rho) < opt.min_order_separation)
            throw DomainError("order separation too small");

        // Joint least squares at a trial exponent; the slope estimate is refined by
        // scanning the combined fit residual.
        std::vector<std::pair<int, int>> elm;
        for (int l = 0; l <= opt.electric_lmax; ++l)
            for (int m = -l; m <= l; ++m) elm.emplace_back(l, m);
        int ne = int(elm.size());
        int nm = int(mag_basis.size());
        Eigen::VectorXd be(samples.size()), bm(samples.size());
        for (size_t i = 0; i < samples.size(); ++i) {
            be(long(i)) = samples[i].xray_v;
            bm(long(i)) = samples[i].xray_a;
        }
        auto solve_at = [&](double rho_try, Eigen::VectorXd& ce_out, Eigen::VectorXd& cm_out) {
            Eigen::MatrixXd Ae(samples.size(), ne), Am(samples.size(), nm);
            for (size_t i = 0; i < samples.size(); ++i) {
                for (int c = 0; c < ne; ++c)
                    Ae(long(i), c) = xray_power_basis(rho_try, elm[c].first, elm[c].second,
                                                      samples[i].y, dirs[samples[i].d]);
                for (int c = 0; c < nm; ++c)
                    Am(long(i), c) = xray_magnetic_basis(rho_try, mag_basis[size_t(c)],
                                                         samples[i].y, dirs[samples[i].d]);
            }
            auto esvd = Ae.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV);
            esvd.setThreshold(1e-6);
            ce_out = esvd.solve(be);
            auto msvd = Am.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV);
            msvd.setThreshold(1e-6);
            cm_out = msvd.solve(bm);
            return (Ae * ce_out - be).squaredNorm() + (Am * cm_out - bm).squaredNorm();
        };
        Eigen::VectorXd ce, cm;
        double best_res = std::numeric_limits<double>::infinity();
        double best_rho = rho;
        for (int k = -8; k <= 8; ++k) {
            double rho_try = rho + 0.01 * k;
            if (rho_try <= 1.02) continue;
            Eigen::VectorXd ce_try, cm_try;
            double res = solve_at(rho_try, ce_try, cm_try);
            if (res < best_res) {
                best_res = res;
                best_rho = rho_try;
                ce = ce_try;
                cm = cm_try;
            }
        }
        rho = best_rho;
        order = 1.0 - rho;
        prev_rho = rho;

        PeelTerm term;
        term.symbol_order = order;
        term.rho = rho;
        term.electric_norm = ce.norm();
        term.magnetic_norm = cm.norm();
        double floor = opt.coefficient_floor * std::max(ce.cwiseAbs().maxCoeff(),
                                                        cm.cwiseAbs().maxCoeff());
        std::vector<ModelPtr> parts;
        std::vector<AngularTerm> ang;
        for (int c = 0; c < ne; ++c)
            if (std::abs(ce(c)) > floor)
                ang.push_back({elm[c].first, elm[c].second, ce(c)});
        term.electric = ang;
        if (!ang.empty()) parts.push_back(make_tail_electric(1.0, rho, opt.cut_radius, ang));
        term.magnetic.assign(size_t(nm), 0.0);
        for (int c = 0; c < nm; ++c) {
            term.magnetic[size_t(c)] = cm(c);
            if (std::abs(cm(c)) > floor)
                parts.push_back(make_tail_magnetic(cm(c), rho + 1.0, opt.cut_radius,
                                                   mag_basis[size_t(c)].axis, mag_basis[size_t(c)].l,
                                                   mag_basis[size_t(c)].m));
        }
        if (parts.empty()) parts.push_back(make_zero_model());
        term.recovered = make_sum(parts);
        recovered_terms.push_back(term.recovered);
        result.terms.push_back(term);

        if (level + 1 >= opt.max_terms) break;

        // Forward map of the recovered partial sum through the kernel machinery,
        // at both energies.
        ModelPtr partial = recovered_terms.size() == 1 ? recovered_terms[0]
                                                       : make_sum(recovered_terms);
        for (int e = 0; e < 2; ++e) {
            sub_p[e].clear();
            sub_m[e].clear();
            for (const auto& w : dirs) {
                sub_p[e].emplace_back(
                    assemble_symbol_kernel_grid(partial, kins[e], w, opt.grid_spec));
                sub_m[e].emplace_back(
                    assemble_symbol_kernel_grid(partial, kins[e], -w, opt.grid_spec));
            }
        }
        have_sub = true;
    }
    return result;
}

double angular_rel_l2(const std::function<double(const Direction&)>& recovered,
                      const std::function<double(const Direction&)>& truth, int n) {
    auto dirs = fibonacci_directions(n);
    double num = 0, den = 0;
    for (const auto& d : dirs) {
        double r = recovered(d), t = truth(d);
        num += (r - t) * (r - t);
        den += t * t;
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

double angular_rel_l2_vec(const std::function<Vec3(const Direction&)>& recovered,
                          const std::function<Vec3(const Direction&)>& truth, int n) {
    auto dirs = fibonacci_directions(n);
    double num = 0, den = 0;
    for (const auto& d : dirs) {
        Vec3 r = recovered(d), t = truth(d);
        num += (r - t).squaredNorm();
        den += t.squaredNorm();
    }
    return std::sqrt(num / std::max(den, 1e-300));
}

} // namespace dirsc
