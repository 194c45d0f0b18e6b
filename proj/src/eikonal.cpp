#include "dirsc/eikonal.hpp"

#include <cmath>

namespace dirsc {

namespace {

// Branch table of the two energy branches: the ray direction is sign*sgn(E)*omega
// and the magnetic term carries sgn(E).
struct RayBranch {
    Vec3 step;    // ray tangent
    double a_sign; // sign of <omega, A> in the integrand
    double prefactor;
};

RayBranch ray_branch(const Direction& omega, const Kinematics& kin, int sign) {
    RayBranch rb;
    rb.step = double(sign * kin.sign) * omega.vec();
    rb.a_sign = kin.sign;
    rb.prefactor = sign;
    return rb;
}

} // namespace

double eikonal_phase(const PotentialModel& model, const Direction& omega, const Kinematics& kin,
                     int sign, const Vec3& x, const QuadOptions& quad) {
    RayBranch rb = ray_branch(omega, kin, sign);
    double ve = std::abs(kin.E) / kin.nu;
    auto f = [&](double t) -> double {
        Vec3 z = x + t * rb.step;
        return ve * model.V(z) + rb.a_sign * omega.dot(model.A(z));
    };
    return rb.prefactor * integrate_halfline(f, quad);
}

Vec3 eikonal_phase_gradient(const PotentialModel& model, const Direction& omega,
                            const Kinematics& kin, int sign, const Vec3& x,
                            const QuadOptions& quad) {
    RayBranch rb = ray_branch(omega, kin, sign);
    double ve = std::abs(kin.E) / kin.nu;
    auto f = [&](double t) -> Vec3 {
        Vec3 z = x + t * rb.step;
        return Vec3(ve * model.grad_V(z) + rb.a_sign * (model.jac_A(z) * omega.vec()));
    };
    return Vec3(rb.prefactor * integrate_halfline(f, quad));
}

TransportExpansion::TransportExpansion(ModelPtr model, const Direction& omega,
                                       const Kinematics& kin, int sign, int N, EikonalOptions opt)
    : model_(std::move(model)), omega_(omega), kin_(kin), sign_(sign), N_(N), opt_(opt) {
    if (N_ < 0 || N_ > opt_.n_max) throw DomainError("transport_coefficients: N out of range");
    if (model_->rho() <= 1.0) throw DomainError("transport_coefficients: decay exponent <= 1");
    p_energy_ = energy_projector(kin_, omega_);
    p_flip_ = spectral_projector(kin_.nu * omega_.vec(), kin_.m, -kin_.sign);
}

double TransportExpansion::fd_step(const Vec3& x) const {
    return std::max(opt_.fd_base_step, opt_.fd_rel_step * (1.0 + x.norm()));
}

double TransportExpansion::phase(const Vec3& x) const {
    return eikonal_phase(*model_, omega_, kin_, sign_, x, opt_.quad);
}

Vec3 TransportExpansion::phase_gradient(const Vec3& x) const {
    return eikonal_phase_gradient(*model_, omega_, kin_, sign_, x, opt_.quad);
}

Mat4 TransportExpansion::grad_contract_b(int j, const Vec3& x) const {
    const auto& d = dirac_matrices();
    double h = fd_step(x);
    Mat4 acc = Mat4::Zero();
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = 1.0;
        Mat4 der = (-b(j, Vec3(x + 2 * h * e)) + 8.0 * b(j, Vec3(x + h * e)) -
                    8.0 * b(j, Vec3(x - h * e)) + b(j, Vec3(x - 2 * h * e))) /
                   (12.0 * h);
        acc += d.alpha[k] * (-iu) * der;
    }
    return acc;
}

Mat4 TransportExpansion::grad_contract_c(int j, const Vec3& x) const {
    if (j == 0) return Mat4::Zero(); // c_0 = I
    const auto& d = dirac_matrices();
    double h = fd_step(x);
    Mat4 acc = Mat4::Zero();
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = 1.0;
        Mat4 der = (-c(j, Vec3(x + 2 * h * e)) + 8.0 * c(j, Vec3(x + h * e)) -
                    8.0 * c(j, Vec3(x - h * e)) + c(j, Vec3(x - 2 * h * e))) /
                   (12.0 * h);
        acc += d.alpha[k] * (-iu) * der;
    }
    return acc;
}

Mat4 TransportExpansion::b_recursive(int j, const Vec3& x) const {
    if (j <= 0) return Mat4::Zero();
    double pref = kin_.nu / (2.0 * kin_.E);
    Mat4 field = alpha_dot(Vec3(phase_gradient(x) + model_->A(x)));
    if (j == 1) return Mat4(pref * p_flip_ * field * p_energy_);
    // b_j from b_{j-1}, c_{j-1}; the -i grad acts on everything to its right
    // (P_omega(E) is constant so it commutes with the differentiation of c_{j-1}).
    double h = fd_step(x);
    const auto& d = dirac_matrices();
    Mat4 grad_pc = Mat4::Zero();
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = 1.0;
        Mat4 der = (-c(j - 1, Vec3(x + 2 * h * e)) + 8.0 * c(j - 1, Vec3(x + h * e)) -
                    8.0 * c(j - 1, Vec3(x - h * e)) + c(j - 1, Vec3(x - 2 * h * e))) /
                   (12.0 * h);
        grad_pc += d.alpha[k] * (-iu) * (p_energy_ * der);
    }
    Mat4 rhs = (field + model_->V(x) * Mat4::Identity()) * b(j - 1, x) +
               grad_contract_b(j - 1, x) + field * (p_energy_ * c(j - 1, x)) + grad_pc;
    return Mat4(pref * p_flip_ * rhs);
}

Mat4 TransportExpansion::b(int j, const Vec3& x) const { return b_recursive(j, x); }

Mat4 TransportExpansion::transport_source(int j, const Vec3& x) const {
    Mat4 field = alpha_dot(Vec3(phase_gradient(x) + model_->A(x)));
    Mat4 inner = field * b(j, x) + grad_contract_b(j, x);
    return Mat4(iu * (std::abs(kin_.E) / kin_.nu) * p_energy_ * inner);
}

Mat4 TransportExpansion::c(int j, const Vec3& x) const {
    if (j == 0) return Mat4::Identity();
    RayBranch rb = ray_branch(omega_, kin_, sign_);
    auto f = [&](double t) -> Mat4 { return transport_source(j, Vec3(x + t * rb.step)); };
    return Mat4(rb.prefactor * integrate_halfline(f, opt_.quad_transport));
}

Mat4 TransportExpansion::w(const Vec3& x) const {
    Mat4 acc = Mat4::Zero();
    double inv_xi = 1.0 / kin_.nu;
    double scale = 1.0;
    Mat4 csum = c(0, x);
    for (int j = 1; j <= N_; ++j) {
        scale *= inv_xi;
        acc += scale * b(j, x);
        csum += scale * c(j, x);
    }
    return Mat4(acc + p_energy_ * csum);
}

Mat4 TransportExpansion::a(const Vec3& x) const {
    return Mat4(std::exp(iu * phase(x)) * w(x));
}

Mat4 TransportExpansion::u(const Vec3& x) const {
    return Mat4(std::exp(iu * x.dot(xi())) * a(x));
}

Mat4 TransportExpansion::remainder_fd(const Vec3& x) const {
    // r_N = e^{-i<x,xi>}(H-E)u_N; the plane-wave factor is carried analytically so the
    // central differences act on the smooth amplitude a_N:
    //   r_N = [alpha.(xi + A) + m beta + V - E] a_N + alpha.(-i grad a_N).
    const auto& d = dirac_matrices();
    double h = fd_step(x);
    Mat4 ax = a(x);
    Mat4 acc = (free_symbol(Vec3(xi() + model_->A(x)), kin_.m) +
                (model_->V(x) - kin_.E) * Mat4::Identity()) *
               ax;
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = 1.0;
        Mat4 der = (-a(Vec3(x + 2 * h * e)) + 8.0 * a(Vec3(x + h * e)) -
                    8.0 * a(Vec3(x - h * e)) + a(Vec3(x - 2 * h * e))) /
                   (12.0 * h);
        acc += d.alpha[k] * (-iu) * der;
    }
    return acc;
}

Mat4 TransportExpansion::remainder_order0(const Vec3& x) const {
    Mat4 field = alpha_dot(Vec3(phase_gradient(x) + model_->A(x)));
    return Mat4(std::exp(iu * phase(x)) * p_flip_ * field * p_energy_);
}

TransportExpansion transport_coefficients(ModelPtr model, const Direction& omega,
                                          const Kinematics& kin, int sign, int N,
                                          const EikonalOptions& opt) {
    return TransportExpansion(std::move(model), omega, kin, sign, N, opt);
}

Mat4 approx_eigenfunction(const TransportExpansion& exp, const Vec3& x) { return exp.u(x); }

Mat4 remainder(const TransportExpansion& exp, const Vec3& x) { return exp.remainder_fd(x); }

} // namespace dirsc
