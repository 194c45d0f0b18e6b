#include "dirsc/inverse.hpp"
#include "oracles.hpp"

#include <cstdio>

using namespace dirsc;

int main() {
    Kinematics kin = kinematics(1.25, 1.0);
    Direction omega(0.1, -0.2, 0.97);
    ModelPtr m = make_tail_electric(0.08, 1.7, 1.0);

    KernelGrid sgrid = assemble_symbol_kernel_grid(m, kin, omega);
    PlaneBasis basis = plane_basis(omega);

    PlaneQuadratureOptions opt;
    opt.radius_cap = 200;
    opt.tail_tol = 1e-6;
    KernelEngine engine(m, kin, 0, omega, opt);

    int checked = 0;
    for (const auto& s : sgrid.samples) {
        Vec2 z = basis.project(s.theta.vec());
        double q = z.norm();
        if (q < 0.1 || q > 0.6) continue;
        if (++checked > 6) break;
        Mat4 ref = engine.g_value(s.omega, s.theta);
        std::printf("|zeta|=%.3f  |g_polar|=%.6g |g_square|=%.6g  rel=%.4f\n", q, max_abs(s.g),
                    max_abs(ref), max_abs(s.g, ref) / std::max(max_abs(ref), 1e-300));
    }
    return 0;
}
