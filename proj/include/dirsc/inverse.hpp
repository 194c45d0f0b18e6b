#pragma once

#include "dirsc/amplitude.hpp"

#include <array>
#include <functional>
#include <vector>

namespace dirsc {

// High-energy limit data ------------------------------------------------------

// Per-direction limit kernel on the centered frequency grid of Pi_omega:
// values(eta) = (2pi)^{-2} int e^{-i<y,eta>} (e^{-iR(y,omega;+-inf)} - 1) dy P_omega(+-inf),
// sampled at eta_k = (2 pi / (n dy)) k, k in [-n/2, n/2).
struct LimitData {
    Direction omega;
    int branch = +1;
    PlaneBasis basis;
    int n = 0;
    double dy = 0;
    std::vector<Mat4> values; // row-major centered frequency grid
    double freq_step() const { return 2.0 * pi / (n * dy); }
};

// Forward generation from closed-form (V, B): R by X-ray quadrature, then DFT.
LimitData limit_data_analytic(const PotentialModel& model, const Direction& omega, int branch,
                              int n, double dy, const PlaneBasis* basis_override = nullptr,
                              const QuadOptions& quad = {1e-10, 1e-9, 12});

// Scalar samples on the centered spatial grid of Pi_omega.
struct PlaneScalarGrid {
    Direction omega;
    PlaneBasis basis;
    int n = 0;
    double dy = 0;
    std::vector<double> values;
    Vec3 point(int p, int q) const {
        return basis.embed(Vec2((p - n / 2) * dy, (q - n / 2) * dy));
    }
};

struct RecoverOptions {
    double unimodular_tol = 1e-3;
    double wrap_threshold = 0.9 * pi;
};

// Inverse transform of (limit - delta part), scalar extraction from the (0,0)
// entry, and phase tracking from the boundary (R -> 0) inward.
PlaneScalarGrid recover_R(const LimitData& limit, const RecoverOptions& opt = {});

// R_e = (R_+ + R_-)/2, R_m = (R_+ - R_-)/2 across branches at the same omega.
std::pair<PlaneScalarGrid, PlaneScalarGrid> split_even_odd(const PlaneScalarGrid& r_plus,
                                                           const PlaneScalarGrid& r_minus);
// Same split across omega -> -omega (grids must share spatial points).
std::pair<PlaneScalarGrid, PlaneScalarGrid> split_even_odd_omega(const PlaneScalarGrid& r_om,
                                                                 const PlaneScalarGrid& r_neg);

// Volumes ----------------------------------------------------------------------

struct ScalarVolume {
    int n = 0;
    double dx = 0;
    std::vector<double> values; // centered cube, row-major (x,y,z)
    Vec3 point(int i, int j, int k) const {
        return Vec3((i - n / 2) * dx, (j - n / 2) * dx, (k - n / 2) * dx);
    }
};

struct VectorVolume {
    int n = 0;
    double dx = 0;
    std::array<std::vector<double>, 3> comp;
    int deficient_bins = 0;
    Vec3 point(int i, int j, int k) const {
        return Vec3((i - n / 2) * dx, (j - n / 2) * dx, (k - n / 2) * dx);
    }
};

struct SliceInversionOptions {
    int min_directions = 60;
    double splat_radius_factor = 1.5; // in frequency-grid steps
    double shell_gap_factor = 2.0;    // shell-adaptive radius ~ |eta| * gap / sqrt(n_dirs)
    double rank_tolerance = 0.05;
    double max_deficient_fraction = 0.2;
};

// Fourier-slice assembly of V from R_e over a quasi-uniform direction set.
ScalarVolume invert_xray_scalar(const std::vector<PlaneScalarGrid>& re_data, int nx, double L,
                                const SliceInversionOptions& opt = {});

// Per-frequency least squares for the transverse part of A-hat, then B = i eta x A-hat.
VectorVolume invert_xray_magnetic(const std::vector<PlaneScalarGrid>& rm_data, int nx, double L,
                                  const SliceInversionOptions& opt = {});

double volume_rel_l2(const ScalarVolume& vol, const std::function<double(const Vec3&)>& truth);
double volume_rel_l2(const VectorVolume& vol, const std::function<Vec3(const Vec3&)>& truth);
double volume_max_div(const VectorVolume& vol);

// Fixed-energy symbol ------------------------------------------------------------

struct SymbolGridSpec {
    double theta_step = 0.134;   // spacing of the theta~ tensor grid
    double theta_max = 0.95;     // grid radius in theta~
    double window_factor = 24.0; // per-pair plane window Y = factor / |q|
    double window_start = 0.5;   // window rolls off on [start*Y, Y]
    double y_min = 0.1;
    int radial_per_octave = 0; // 0: auto from window_factor
    int angular_nodes = 0;     // 0: auto from window_factor
    QuadOptions ray_quad{1e-9, 1e-8, 11};
    bool parallel = true;
};

// Kernel samples (omega, theta(zeta)) on the offset tensor grid of the chart around
// omega, assembled on a shared log-polar plane lattice (N = 0 amplitudes).
KernelGrid assemble_symbol_kernel_grid(ModelPtr model, const Kinematics& kin,
                                       const Direction& omega, const SymbolGridSpec& spec = {});

// Evaluator of a(y,omega;E) built from a sampled kernel: delta part (nu/|E|)P_omega(E)
// plus the transform of the samples, with the fitted near-diagonal power law
// C |theta~|^{-mu} integrated in closed Hankel form.
class SymbolEvaluator {
public:
    SymbolEvaluator(const KernelGrid& grid, double ring_lo = 0.0, double ring_hi = 0.0);

    Mat4 value(const Vec3& y) const;           // a(y, omega; E)
    Mat4 subtracted(const Vec3& y) const;      // a - (nu/|E|) P_omega(E)
    double mu() const { return mu_; }
    const Mat4& singular_coefficient() const { return C_; }
    const Direction& omega() const { return omega_; }
    const Kinematics& kin() const { return kin_; }
    double max_radius() const; // Nyquist bound of the sampled grid

private:
    Kinematics kin_;
    Direction omega_;
    PlaneBasis basis_;
    double dtheta_ = 0;
    double mu_ = 0;
    Mat4 C_ = Mat4::Zero();
    Mat4 proj_ = Mat4::Zero();
    struct Node {
        Vec2 zeta;
        double weight;   // measure * cell area
        Mat4 subtracted; // g - C |zeta|^{-mu} Psi
    };
    std::vector<Node> nodes_;
    double hankel(double s) const; // int J0(s q) q^{1-mu} psi(q) dq over the chart
};

SymbolEvaluator fixed_energy_symbol(const KernelGrid& grid);

// Homogeneous peel -----------------------------------------------------------------

struct PeelOptions {
    int directions = 4;      // omega set; +-omega grids are assembled for the split
    int max_terms = 2;
    double r_lo = 3.0, r_hi = 16.0; // fit band in |y|
    int radii = 6;
    int ray_angles = 8;
    int electric_lmax = 2;
    double min_order_separation = 0.3;
    double coefficient_floor = 5e-3; // relative floor when rebuilding recovered models
    SymbolGridSpec grid_spec{};
    double cut_radius = 1.0;
};

struct MagneticBasisTerm {
    int axis, l, m;
};
std::vector<MagneticBasisTerm> magnetic_basis_terms();

struct PeelTerm {
    double symbol_order = 0; // fitted homogeneity order of the leading symbol term
    double rho = 0;          // recovered decay exponent (= 1 - symbol_order)
    std::vector<AngularTerm> electric;    // coefficients of Y_lm, l <= electric_lmax
    std::vector<double> magnetic;         // coefficients of magnetic_basis_terms()
    double electric_norm = 0, magnetic_norm = 0;
    ModelPtr recovered; // capped tail model rebuilt from the estimates
};

struct PeelResult {
    std::vector<PeelTerm> terms;
    std::vector<double> band_residuals; // per level, mean |a_res| over the band
};

// Recursive extraction of homogeneous (V_j, B_j) from fixed-energy kernel data.
// The data grids are assembled internally from the model (forward synthetic), and
// the subtraction step recomputes the forward map of the recovered partial sums.
PeelResult homogeneous_peel(ModelPtr truth_model, const Kinematics& kin,
                            const PeelOptions& opt = {});

// Relative L2 error of a recovered homogeneous term against a truth field sampled
// on the unit sphere (for tests and reporting).
double angular_rel_l2(const std::function<double(const Direction&)>& recovered,
                      const std::function<double(const Direction&)>& truth, int n = 128);
double angular_rel_l2_vec(const std::function<Vec3(const Direction&)>& recovered,
                          const std::function<Vec3(const Direction&)>& truth, int n = 128);

} // namespace dirsc
