#include "dirsc/clifford.hpp"

#include <cmath>

namespace dirsc {

namespace {

DiracMatrices build_dirac() {
    DiracMatrices d;
    Eigen::Matrix2cd s1, s2, s3, id;
    s1 << 0, 1, 1, 0;
    s2 << 0, Complex(0, -1), Complex(0, 1), 0;
    s3 << 1, 0, 0, -1;
    id.setIdentity();

    auto off_diag = [](const Eigen::Matrix2cd& s) {
        Mat4 m = Mat4::Zero();
        m.block<2, 2>(0, 2) = s;
        m.block<2, 2>(2, 0) = s;
        return m;
    };
    d.alpha[0] = off_diag(s1);
    d.alpha[1] = off_diag(s2);
    d.alpha[2] = off_diag(s3);
    d.beta = Mat4::Zero();
    d.beta.block<2, 2>(0, 0) = id;
    d.beta.block<2, 2>(2, 2) = -id;
    return d;
}

} // namespace

const DiracMatrices& dirac_matrices() {
    static const DiracMatrices d = build_dirac();
    return d;
}

Mat4 alpha_dot(const Vec3& v) {
    const auto& d = dirac_matrices();
    return v.x() * d.alpha[0] + v.y() * d.alpha[1] + v.z() * d.alpha[2];
}

Mat4 alpha_dot(const Eigen::Vector3cd& v) {
    const auto& d = dirac_matrices();
    return v.x() * d.alpha[0] + v.y() * d.alpha[1] + v.z() * d.alpha[2];
}

const Mat4& gamma_matrix() {
    static const Mat4 g = [] {
        const auto& d = dirac_matrices();
        return Mat4(d.alpha[0] * d.alpha[1] * d.alpha[2] * d.beta);
    }();
    return g;
}

Mat4 free_symbol(const Vec3& xi, double m) {
    return alpha_dot(xi) + m * dirac_matrices().beta;
}

Mat4 spectral_projector(const Vec3& xi, double m, int branch) {
    if (m <= 0) throw DomainError("spectral_projector: m must be positive");
    double lam = std::sqrt(xi.squaredNorm() + m * m);
    double s = branch >= 0 ? 1.0 : -1.0;
    return 0.5 * (Mat4::Identity() + (s / lam) * free_symbol(xi, m));
}

Mat4 spectral_projector_infty(const Direction& omega, int branch) {
    double s = branch >= 0 ? 1.0 : -1.0;
    return 0.5 * (Mat4::Identity() + s * alpha_dot(omega.vec()));
}

Mat4 energy_projector(const Kinematics& kin, const Direction& omega) {
    return spectral_projector(kin.nu * omega.vec(), kin.m, kin.sign);
}

Mat4 fw_matrix(const Vec3& xi, double m) {
    if (m <= 0) throw DomainError("fw_matrix: m must be positive");
    double t = xi.norm();
    // theta(t) = arctan(t/m)/(2t), continued by theta(0) = 1/(2m).
    double theta = t > 0 ? std::atan2(t, m) / (2.0 * t) : 1.0 / (2.0 * m);
    // (beta (alpha.xi))^2 = -|xi|^2 I, so the exponential closes in cos/sin.
    double c = std::cos(t * theta);
    double s = t > 0 ? std::sin(t * theta) / t : theta;
    return c * Mat4::Identity() + s * Mat4(dirac_matrices().beta * alpha_dot(xi));
}

Kinematics kinematics(double E, double m) {
    if (m <= 0) throw DomainError("kinematics: m must be positive");
    if (std::abs(E) <= m) throw DomainError("kinematics: inside spectral gap (|E| <= m)");
    Kinematics k;
    k.m = m;
    k.E = E;
    k.nu = std::sqrt(E * E - m * m);
    k.upsilon = std::pow(E * E * (E * E - m * m), 0.25);
    k.sign = E > 0 ? +1 : -1;
    return k;
}

} // namespace dirsc
