#pragma once

#include "dirsc/clifford.hpp"
#include "dirsc/fields.hpp"
#include "dirsc/quadrature.hpp"

#include <vector>

namespace dirsc {

// Accuracy cone Xi^pm(eps0, R; E): +-sgn(E) <x-hat, omega> >= -1+eps0 for |x| >= R.
struct Cone {
    double epsilon0 = 0.1;
    double R = 1.0;
    int sign = +1;        // expansion label (+: W_+, -: W_-)
    int energy_sign = +1; // sgn E

    bool contains(const Vec3& x, const Direction& omega) const {
        double r = x.norm();
        if (r < R) return true;
        return sign * energy_sign * (x.dot(omega.vec()) / r) >= -1.0 + epsilon0;
    }
    // A point at distance r along the cone axis direction.
    Vec3 axis_point(const Direction& omega, double r) const {
        return sign * energy_sign * r * omega.vec();
    }
};

struct EikonalOptions {
    QuadOptions quad{1e-11, 1e-10, 13};
    QuadOptions quad_transport{1e-9, 1e-8, 11};
    double fd_base_step = 1e-3;
    double fd_rel_step = 1e-4; // h = max(base, rel*(1+|x|))
    int n_max = 2;
};

// Eikonal phase Phi^sign(x, xi; E), the half-line X-ray of (|E|/|xi|)V + <omega,A>
// with the sign/branch table of the two energy branches.
double eikonal_phase(const PotentialModel& model, const Direction& omega, const Kinematics& kin,
                     int sign, const Vec3& x, const QuadOptions& quad = {1e-11, 1e-10, 13});

// grad Phi, evaluated as the ray integral of the model's analytic first derivatives.
Vec3 eikonal_phase_gradient(const PotentialModel& model, const Direction& omega,
                            const Kinematics& kin, int sign, const Vec3& x,
                            const QuadOptions& quad = {1e-11, 1e-10, 13});

// Phases and transport coefficients b_1..b_N, c_0..c_N for one (omega, E, sign).
// Evaluators are pure; b_j/c_j beyond j=1 use nested central differences.
class TransportExpansion {
public:
    TransportExpansion(ModelPtr model, const Direction& omega, const Kinematics& kin, int sign,
                       int N, EikonalOptions opt = {});

    int order() const { return N_; }
    int sign() const { return sign_; }
    const Direction& omega() const { return omega_; }
    const Kinematics& kin() const { return kin_; }
    const PotentialModel& model() const { return *model_; }
    double xi_mag() const { return kin_.nu; }
    Vec3 xi() const { return kin_.nu * omega_.vec(); }
    const Mat4& projector() const { return p_energy_; }        // P_omega(E)
    const Mat4& projector_flip() const { return p_flip_; }     // P_omega(-E)

    double phase(const Vec3& x) const;
    Vec3 phase_gradient(const Vec3& x) const;

    Mat4 b(int j, const Vec3& x) const; // b_0 = 0
    Mat4 c(int j, const Vec3& x) const; // c_0 = I

    // w_N = sum |xi|^{-j} b_j + P_omega(E) sum |xi|^{-j} c_j
    Mat4 w(const Vec3& x) const;
    // a_N = e^{i Phi} w_N
    Mat4 a(const Vec3& x) const;
    // u_N = e^{i<x,xi>} a_N
    Mat4 u(const Vec3& x) const;

    // r_N = e^{-i<x,xi>} (H - E) u_N with H applied by 4th-order central differences.
    Mat4 remainder_fd(const Vec3& x) const;
    // Closed-form N=0 remainder e^{i Phi} P(-E) [alpha.(grad Phi + A)] P(E); test oracle.
    Mat4 remainder_order0(const Vec3& x) const;

    // Transport source F_j = i(|E|/|xi|) P(E) alpha.(-i grad + grad Phi + A) b_j.
    Mat4 transport_source(int j, const Vec3& x) const;

    double fd_step(const Vec3& x) const;

private:
    Mat4 b_recursive(int j, const Vec3& x) const;
    Mat4 grad_contract_b(int j, const Vec3& x) const; // alpha.(-i grad) b_j by central differences
    Mat4 grad_contract_c(int j, const Vec3& x) const;

    ModelPtr model_;
    Direction omega_;
    Kinematics kin_;
    int sign_;
    int N_;
    EikonalOptions opt_;
    Mat4 p_energy_, p_flip_;
};

// Convenience wrappers matching the operation vocabulary.
TransportExpansion transport_coefficients(ModelPtr model, const Direction& omega,
                                          const Kinematics& kin, int sign, int N,
                                          const EikonalOptions& opt = {});
Mat4 approx_eigenfunction(const TransportExpansion& exp, const Vec3& x);
Mat4 remainder(const TransportExpansion& exp, const Vec3& x);

} // namespace dirsc
