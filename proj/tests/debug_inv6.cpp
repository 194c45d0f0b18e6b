#include "dirsc/inverse.hpp"
#include <cstdio>
using namespace dirsc;
int main() {
    Kinematics kin = kinematics(1.25, 1.0);
    Direction omega(0.1, -0.2, 0.97);
    for (double amp : {0.08, 0.03}) {
        ModelPtr m = make_tail_electric(amp, 1.7, 1.0);
        PlaneBasis basis = plane_basis(omega);
        SymbolGridSpec spec;
        spec.theta_step = 0.1;
        KernelGrid grid = assemble_symbol_kernel_grid(m, kin, omega, spec);
        SymbolEvaluator ev(grid, 0.9 * 0.1, 2.2 * 0.1);
        std::printf("amp=%.2f mu=%.3f\n", amp, ev.mu());
        for (double r : {3.0, 5.0, 8.0, 12.0, 18.0}) {
            Vec3 y = basis.embed(Vec2(r * 0.8, r * 0.6));
            Mat4 h1 = ev.subtracted(y);
            double R = xray_R(*m, omega, kin, y);
            Mat4 expect = Mat4(-iu * kin.nu / std::abs(kin.E) * R * energy_projector(kin, omega));
            std::printf("  r=%5.1f rel=%.3f  (pred remainder scale %.3f)\n", r,
                        max_abs(h1, expect) / max_abs(expect), std::pow(r, -0.7));
        }
    }
    return 0;
}
