#pragma once

#include "dirsc/quadrature.hpp"
#include "dirsc/types.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace dirsc {

// Closed-form electromagnetic potential with analytic first derivatives.
// jac_A(i,j) = d_i A_j.
class PotentialModel {
public:
    virtual ~PotentialModel() = default;
    virtual double V(const Vec3& x) const = 0;
    virtual Vec3 grad_V(const Vec3& x) const = 0;
    virtual Vec3 A(const Vec3& x) const = 0;
    virtual Mat3 jac_A(const Vec3& x) const = 0;
    virtual double rho_e() const = 0;
    virtual double rho_m() const = 0;
    virtual std::string kind() const = 0;

    Vec3 B(const Vec3& x) const {
        Mat3 j = jac_A(x);
        return Vec3(j(1, 2) - j(2, 1), j(2, 0) - j(0, 2), j(0, 1) - j(1, 0));
    }
    double rho() const { return std::min(rho_e(), rho_m()); }
};

using ModelPtr = std::shared_ptr<const PotentialModel>;

// Catalog builders ---------------------------------------------------------

// V = amplitude exp(-|x-center|^2 / width^2), A = 0.
ModelPtr make_gaussian_electric(double amplitude, double width, const Vec3& center = Vec3::Zero());

// A = (d2 phi, -d1 phi, 0) with the even generator phi = amplitude exp(-|x-center|^2/width^2);
// A is odd (for centered phi), B = rot A is even and divergence-free.
ModelPtr make_gaussian_magnetic(double amplitude, double width, const Vec3& center = Vec3::Zero());

// Real orthonormal spherical harmonic term (l <= 2).
struct AngularTerm {
    int l = 0;
    int m = 0;
    double coef = 1.0;
};

// V = amplitude cap(|x|/cut_radius) |x|^{-order} Y(x-hat), exactly homogeneous
// outside cut_radius. 1 < order required.
ModelPtr make_tail_electric(double amplitude, double order, double cut_radius,
                            const std::vector<AngularTerm>& angular = {{0, 0, 1.0}});

// A = amplitude cap(|x|/cut_radius) |x|^{-(order-1)} Y_lm(x-hat) e_axis, B = rot A;
// B is exactly homogeneous of order -order outside cut_radius and divergence-free.
// rho_m = order - 1 > 1 required.
ModelPtr make_tail_magnetic(double amplitude, double order, double cut_radius,
                            int axis = 2, int l = 0, int m = 0);

// A = grad psi with psi = amplitude exp(-|x-center|^2/width^2); B = 0.
ModelPtr make_pure_gauge(double amplitude, double width, const Vec3& center = Vec3::Zero());

ModelPtr make_sum(std::vector<ModelPtr> terms);

ModelPtr make_zero_model();

// Adds grad(psi) of the given pure-gauge entry to an existing model.
ModelPtr with_gauge_shift(ModelPtr base, ModelPtr pure_gauge);

// Structured-text catalog loader ("unknown catalog entry" / "parameter out of range").
ModelPtr build_potential_model(const nlohmann::json& spec);
ModelPtr load_potential_model(const std::string& path);

// X-ray transforms ---------------------------------------------------------

enum class LineRange { Full, Forward, Backward };

// int f(y + t omega) dt over R, [0,inf) or (-inf,0].
template <typename F>
auto xray_transform(F&& f, const Direction& omega, const Vec3& y, LineRange range,
                    const QuadOptions& opt = {}) -> decltype(f(Vec3())) {
    auto line = [&](double t) { return f(Vec3(y + t * omega.vec())); };
    switch (range) {
        case LineRange::Full: return integrate_line(line, opt);
        case LineRange::Forward: return integrate_halfline(line, opt);
        case LineRange::Backward: {
            auto mirrored = [&](double t) { return line(-t); };
            return integrate_halfline(mirrored, opt);
        }
    }
    throw DomainError("xray_transform: bad range");
}

// Throws "non-integrable tail" when the sampled decay exponent along the line is <= 1.
void check_line_decay(const std::function<double(const Vec3&)>& f, const Direction& omega,
                      const Vec3& y);

// cal-V = (|E|/nu) V(x) + sgn(E) <omega, A(x)>
double cal_v(const PotentialModel& model, const Direction& omega, const Kinematics& kin,
             const Vec3& x);

// Unnormalized 3D Fourier transform of |x|^{-rho}, valid for 1 < rho < 3:
// 2^{3-rho} pi^{3/2} Gamma((3-rho)/2)/Gamma(rho/2) |xi|^{-(3-rho)}.
double fourier_homogeneous_tail(double rho, double xi_mag);

// Gauge construction -------------------------------------------------------

using VectorField = std::function<Vec3(const Vec3&)>;

struct GaugeOptions {
    Vec3 x0 = Vec3(1.0, 0.0, 0.0);
    Vec3 waypoint = Vec3(0.0, 1.1, 0.7);
    double origin_clearance = 1e-3;
    QuadOptions quad{1e-9, 1e-8, 12};
    bool validate = true; // sampled div B and decay checks
};

// Short-range magnetic potential built from a divergence-free B with decay r > 2:
// A = A_reg + (1-eta) A_inf - U grad(eta); rot A = B and A = A_reg for |x| >= 1.
VectorField gauge_from_field(const VectorField& B, const GaugeOptions& opt = {});

// Smooth radial cutoff used by the gauge construction: 0 near 0, 1 for |x| >= 1.
double gauge_eta(double r);
double gauge_eta_prime(double r);

// Real orthonormal spherical harmonic (l <= 2) and its gradient.
double real_sh(int l, int m, const Vec3& xhat);
Vec3 real_sh_grad(int l, int m, const Vec3& x); // gradient of Y(x-hat) as a function on R^3\{0}

} // namespace dirsc
