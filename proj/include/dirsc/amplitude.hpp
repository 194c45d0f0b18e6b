#pragma once

#include "dirsc/eikonal.hpp"
#include "dirsc/sphere.hpp"

#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dirsc {

// Chart cutoff Psi_pm(omega,theta;omega0): smooth step in <.,omega0> rising on
// [delta, delta_prime], applied to both arguments.
double chart_cutoff(const Direction& omega, const Direction& theta, const Direction& omega0,
                    double delta, double delta_prime, int branch);

// h_N(y,omega,theta) = sgn(E) a_N^+(y,nu omega)^* (alpha.omega0) a_N^-(y,nu theta).
Mat4 h_integrand(const TransportExpansion& exp_plus, const TransportExpansion& exp_minus,
                 const Direction& omega0, const Vec3& y);

// Subtracted integrand h_N^int = h_N - sgn(E) P_omega(E)(alpha.omega0)P_theta(E).
Mat4 h_integrand_subtracted(const TransportExpansion& exp_plus, const TransportExpansion& exp_minus,
                            const Direction& omega0, const Vec3& y);

// Oscillatory plane quadrature -----------------------------------------------

struct PlaneQuadratureOptions {
    double spacing_cap = 0.4;   // lattice spacing upper bound
    double radius_cap = 90.0;   // adaptive radius upper bound
    double radius_min = 12.0;
    double tail_tol = 1e-8;     // target tail contribution (integration-by-parts estimate)
    int osc_order = 4;          // even order n of the regularization device
    double window_start = 0.6;  // smooth window rolls off on [start*Y, Y]
    double points_per_wave = 6.0;
    QuadOptions ray_quad{1e-10, 1e-9, 12};
    bool parallel = true;
    bool self_check = true; // window-shrink agreement, reported as relative drift
    double self_check_tol = 2e-2;
};

// Square lattice on Pi_omega0 with a smooth radial window.
struct PlaneLattice {
    PlaneBasis basis;
    double Y = 0;
    double h = 0;
    int M = 0; // indices run in [-M, M]
    double window_start = 0.75;
    int osc_order = 4;
    double tail_estimate = 0; // conservative bound on the truncated tail
    std::string tail_note;

    int side() const { return 2 * M + 1; }
    size_t size() const { return size_t(side()) * side(); }
    Vec2 node(int i, int j) const { return Vec2(i * h, j * h); }
    Vec3 point(int i, int j) const { return basis.embed(node(i, j)); }
    double window(double r) const;
};

// Decay probe: radius -> max |amplitude| on that shell (used to size the lattice).
using DecayProbe = std::function<double(double)>;

PlaneLattice make_plane_lattice(const Direction& omega0, double q_min, double q_max,
                                const DecayProbe& probe, const PlaneQuadratureOptions& opt);

// Windowed trapezoid sum of e^{i<y,q>} v(y) over the lattice (values row-major).
Complex oscillatory_plane_sum(const PlaneLattice& lat, const Vec2& q,
                              const std::vector<Complex>& values);
Mat4 oscillatory_plane_sum(const PlaneLattice& lat, const Vec2& q,
                           const std::vector<Mat4>& values);

// Kernel grids ---------------------------------------------------------------

struct KernelSample {
    Direction omega, theta;
    Mat4 g; // g_N^int(omega,theta;E)
};

struct KernelGrid {
    Kinematics kin;
    Direction omega0;
    double delta = 0.3, delta_prime = 0.5;
    int N = 0;
    int branch = +1; // chart branch of Omega_pm(omega0,delta)
    std::vector<KernelSample> samples;
    // quadrature metadata
    double plane_radius = 0, plane_spacing = 0, tail_estimate = 0, self_check_drift = 0;
    int osc_order = 4;
};

// Symbolic descriptor of the delta part s_00: it sums to the identity on H(E).
struct DeltaPart {
    Kinematics kin;
    Direction omega0;
    std::string description;

    // Exact pairing the descriptor stands for: (f,g)_{H(E)} = int (P_omega f, g) domega.
    Complex pairing(const std::function<CVec4(const Direction&)>& f,
                    const std::function<CVec4(const Direction&)>& g,
                    const SphereQuadrature& quad) const;
};

// Evaluates g_N^int(omega,theta) for pairs in a single chart around omega0.
class KernelEngine {
public:
    KernelEngine(ModelPtr model, const Kinematics& kin, int N, const Direction& omega0,
                 PlaneQuadratureOptions opt = {}, int branch = +1);

    Mat4 g_value(const Direction& omega, const Direction& theta);
    const PlaneLattice& lattice() const { return lat_; }
    double self_check_drift() const { return drift_; }
    const Kinematics& kin() const { return kin_; }

    // Fixes lattice geometry for the in-plane frequency range of the pair set.
    void prepare(double q_min, double q_max);

private:
    const std::vector<double>& phase_column(const Direction& d, int sign);
    const std::vector<Mat4>& amp_column(const Direction& d, int sign);
    void fill_phase(const Direction& d, int sign, std::vector<double>& out) const;
    void fill_amp(const Direction& d, int sign, std::vector<Mat4>& out) const;

    ModelPtr model_;
    Kinematics kin_;
    int N_;
    Direction omega0_;
    PlaneQuadratureOptions opt_;
    int branch_;
    PlaneLattice lat_;
    bool prepared_ = false;
    double drift_ = 0;
    // deques: growth must not invalidate references handed out by the accessors
    std::deque<std::pair<Vec3, std::vector<double>>> phase_cache_; // key: sign*dir
    std::deque<std::pair<Vec3, std::vector<Mat4>>> amp_cache_;
};

// g_N part of the singular kernel over the given chart pairs, plus the symbolic
// delta-part descriptor. The identity of S(E) is carried symbolically.
KernelGrid assemble_kernel_grid(ModelPtr model, const Kinematics& kin, int N,
                                const Direction& omega0,
                                const std::vector<std::pair<Direction, Direction>>& pairs,
                                const PlaneQuadratureOptions& opt = {}, int branch = +1);
// Serial reference implementation (no OpenMP) kept for testing.
KernelGrid assemble_kernel_grid_serial(ModelPtr model, const Kinematics& kin, int N,
                                       const Direction& omega0,
                                       const std::vector<std::pair<Direction, Direction>>& pairs,
                                       const PlaneQuadratureOptions& opt = {}, int branch = +1);

DeltaPart delta_part_descriptor(const Kinematics& kin, const Direction& omega0);

// theta-first application of the chart kernel to a smooth density supported in the chart:
// mode "delta" applies s_00, "g" applies the subtracted kernel, "full" their sum.
enum class KernelApplyMode { Delta, G, Full };
CVec4 apply_chart_kernel(ModelPtr model, const Kinematics& kin, int N, const Direction& omega0,
                         const std::function<CVec4(const Direction&)>& f, const Direction& omega,
                         KernelApplyMode mode, int theta_nodes = 24, double y_radius = 24.0,
                         double y_spacing = 0.5, double delta = 0.3, double delta_prime = 0.5);

// Leading diagonal singularity ------------------------------------------------
// (1/i)(2 pi)^{-1/2} upsilon^2 (nu/|E|) (F cal-V_omega)(-nu theta~) P_omega(E).
Mat4 leading_singularity(const PotentialModel& model, const Kinematics& kin,
                         const Direction& omega, const Direction& theta,
                         const PlaneQuadratureOptions& opt = {});

// Free trace operators ---------------------------------------------------------

// Gamma_0(E) g at direction omega: (2pi)^{-3/2} upsilon P_omega(E) int e^{-i nu <omega,x>} g dx.
CVec4 gamma0(const Kinematics& kin, const std::function<CVec4(const Vec3&)>& g,
             const Direction& omega, double box_half_width = 8.0, int nodes_per_axis = 32);

// psi_{0,f}(x) = int_{S^2} e^{i nu <omega,x>} P_omega(E) f(omega) domega.
CVec4 psi0(const Kinematics& kin, const std::function<CVec4(const Direction&)>& f, const Vec3& x,
           const SphereQuadrature& quad);

// Gamma_0^*(E) f = (2pi)^{-3/2} upsilon psi_{0,f}.
CVec4 gamma0_star(const Kinematics& kin, const std::function<CVec4(const Direction&)>& f,
                  const Vec3& x, const SphereQuadrature& quad);

// Cross-sections ----------------------------------------------------------------

// Continuous combination s^int(t,t) + s^int(t,t)^* of the coincidence limit (rho > 2).
Mat4 diagonal_kernel_combination(const PotentialModel& model, const Kinematics& kin,
                                 const Direction& theta, double y_radius = 40.0,
                                 double y_spacing = 0.4);

struct CrossSection {
    double sigma = 0;        // from the continuous combination
    double sigma_direct = 0; // direct angular quadrature of |s u|^2
};
CrossSection cross_section(ModelPtr model, const Kinematics& kin, const Direction& theta,
                           const CVec4& u, int n_sphere = 192,
                           const PlaneQuadratureOptions& opt = {});

struct OpticalCheck {
    double residual_norm = 0;   // | int s* s + s + s* |
    double combination_norm = 0; // | s + s* |
};
OpticalCheck optical_residual(ModelPtr model, const Kinematics& kin, const Direction& omega,
                              const Direction& theta, int n_sphere = 128,
                              const PlaneQuadratureOptions& opt = {});

// High-energy limits -------------------------------------------------------------

// (2 pi)^{-2} int e^{-i<y,eta>} (e^{-i R(y,omega;+-inf)} - 1) dy  P_omega(+-inf), eta in Pi_omega\{0}.
Mat4 high_energy_kernel_limit(const PotentialModel& model, const Direction& omega, const Vec3& eta,
                              int branch, const PlaneQuadratureOptions& opt = {});

// Companion: upsilon^{-2} g_N^int(omega(E),theta(E)) with nu(omega(E)-theta(E)) = eta.
Mat4 high_energy_kernel_at(ModelPtr model, double E, double m, const Direction& omega,
                           const Vec3& eta, int N = 0, const PlaneQuadratureOptions& opt = {});

// R(y,omega;E) = int cal-V_omega^{(E)}(y + t omega) dt; R(y,omega;+-inf) uses V +- <omega,A>.
double xray_R(const PotentialModel& model, const Direction& omega, const Kinematics& kin,
              const Vec3& y, const QuadOptions& quad = {});
double xray_R_infty(const PotentialModel& model, const Direction& omega, int branch, const Vec3& y,
                    const QuadOptions& quad = {});

} // namespace dirsc
