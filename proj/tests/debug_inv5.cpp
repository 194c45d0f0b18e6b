#include "dirsc/inverse.hpp"
#include <cstdio>
using namespace dirsc;
int main() {
    Kinematics kin = kinematics(1.25, 1.0);
    Direction omega(0.1, -0.2, 0.97);
    ModelPtr m = make_tail_electric(0.08, 1.7, 1.0);
    PlaneBasis basis = plane_basis(omega);
    for (double step : {0.134, 0.1}) {
        SymbolGridSpec spec;
        spec.theta_step = step;
        KernelGrid grid = assemble_symbol_kernel_grid(m, kin, omega, spec);
        for (double hi_mult : {2.2, 3.4, 5.0}) {
            SymbolEvaluator ev(grid, 0.9 * step, hi_mult * step);
            double worst = 0;
            for (double r : {5.0, 10.0, 14.0, 18.0}) {
                Vec3 y = basis.embed(Vec2(r * 0.8, r * 0.6));
                Mat4 h1 = ev.subtracted(y);
                double R = xray_R(*m, omega, kin, y);
                Mat4 expect =
                    Mat4(-iu * kin.nu / std::abs(kin.E) * R * energy_projector(kin, omega));
                worst = std::max(worst, max_abs(h1, expect) / max_abs(expect));
            }
            std::printf("step=%.3f ring_hi=%.1f: mu=%.3f worst_rel=%.3f\n", step, hi_mult,
                        ev.mu(), worst);
        }
    }
    return 0;
}
