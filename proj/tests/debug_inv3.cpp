#include "dirsc/inverse.hpp"
#include <cstdio>
using namespace dirsc;
int main() {
    Kinematics kin = kinematics(1.25, 1.0);
    Direction omega(0.1, -0.2, 0.97);
    ModelPtr m = make_tail_electric(0.08, 1.7, 1.0);
    PlaneBasis basis = plane_basis(omega);
    PlaneQuadratureOptions opt;
    opt.radius_cap = 200;
    opt.tail_tol = 1e-6;
    opt.window_start = 0.5;
    KernelEngine engine(m, kin, 0, omega, opt);
    for (double F : {12.0, 24.0, 48.0}) {
        SymbolGridSpec spec;
        spec.window_factor = F;
        KernelGrid sgrid = assemble_symbol_kernel_grid(m, kin, omega, spec);
        int checked = 0;
        double worst = 0;
        for (const auto& s : sgrid.samples) {
            double q = basis.project(s.theta.vec()).norm();
            if (q < 0.1 || q > 0.6) continue;
            if (++checked > 5) break;
            Mat4 ref = engine.g_value(s.omega, s.theta);
            worst = std::max(worst, max_abs(s.g, ref) / max_abs(ref));
        }
        std::printf("F=%4.0f worst rel vs square engine = %.4f\n", F, worst);
    }
    return 0;
}
