#pragma once

#include "dirsc/types.hpp"

#include <array>

namespace dirsc {

// Standard Dirac representation: alpha_j with off-diagonal Pauli blocks,
// beta = alpha_4 = diag(I2, -I2). alpha_j alpha_k + alpha_k alpha_j = 2 delta_jk I.
struct DiracMatrices {
    std::array<Mat4, 3> alpha;
    Mat4 beta;
};

const DiracMatrices& dirac_matrices();

// alpha . v = sum_j v_j alpha_j
Mat4 alpha_dot(const Vec3& v);
Mat4 alpha_dot(const Eigen::Vector3cd& v);

// gamma = alpha_1 alpha_2 alpha_3 beta (used by the CT / CTP symmetries)
const Mat4& gamma_matrix();

// P_pm(xi) = (I +- (xi^2+m^2)^{-1/2} (alpha.xi + m beta)) / 2,
// rank-2 orthogonal projector onto the eigenspace X^pm(xi) of alpha.xi + m beta.
Mat4 spectral_projector(const Vec3& xi, double m, int branch);

// Infinite-energy variant P_omega(+-inf) = (I +- alpha.omega)/2.
Mat4 spectral_projector_infty(const Direction& omega, int branch);

// P_omega(E): branch sgn E at momentum nu(E) omega.
Mat4 energy_projector(const Kinematics& kin, const Direction& omega);

// Foldy-Wouthuysen matrix G(xi) = exp(beta (alpha.xi) theta(|xi|)),
// theta(t) = arctan(t/m)/(2t), theta(0) = 1/(2m). Unitary, and
// G(xi)(alpha.xi + m beta)G(xi)^{-1} = sqrt(xi^2+m^2) beta.
Mat4 fw_matrix(const Vec3& xi, double m);

// Free Dirac symbol h0(xi) = alpha.xi + m beta.
Mat4 free_symbol(const Vec3& xi, double m);

} // namespace dirsc
