#include "dirsc/amplitude.hpp"
#include <cstdio>
using namespace dirsc;
int main() {
    Kinematics kin = kinematics(2.0, 1.0);
    Direction omega(0, 0, 1);
    PlaneBasis basis = plane_basis(omega);
    ModelPtr weak = make_gaussian_electric(0.05, 1.1);
    for (double s : {0.3, 0.15, 0.075}) {
        double zt = s * std::sqrt(1.0 - s * s / 4); // |theta~| for |omega-theta| = s
        Direction th(Vec3(basis.embed(Vec2(zt, 0)) + std::sqrt(1.0 - zt * zt) * omega.vec()));
        Mat4 lead = leading_singularity(*weak, kin, omega, th);
        KernelEngine e(weak, kin, 0, omega);
        Mat4 g = e.g_value(omega, th);
        std::printf("|w-t|=%.4f rel=%.4f\n", (omega.vec() - th.vec()).norm(),
                    max_abs(g, lead) / max_abs(lead));
    }
    return 0;
}
