#include "dirsc/amplitude.hpp"
#include "oracles.hpp"

#include <cstdio>

using namespace dirsc;

int main() {
    // Leading-singularity weak-coupling agreement scan
    for (double E : {2.0, 4.0}) {
        Kinematics kin = kinematics(E, 1.0);
        Direction omega(0, 0, 1);
        PlaneBasis basis = plane_basis(omega);
        auto lift = [&](double s) {
            return Direction(
                Vec3(basis.embed(Vec2(s, 0.0)) + std::sqrt(1.0 - s * s) * omega.vec()));
        };
        Direction th = lift(0.2955); // |omega - theta| = 0.3
        for (int model_kind : {0, 1}) {
            ModelPtr weak = model_kind == 0 ? make_gaussian_electric(0.05, 1.1)
                                            : make_tail_electric(0.05, 2.0, 1.0);
            PlaneQuadratureOptions opt;
            opt.radius_cap = 160;
            opt.tail_tol = 1e-6;
            Mat4 lead = leading_singularity(*weak, kin, omega, th, opt);
            KernelEngine e(weak, kin, 0, omega, opt);
            Mat4 g = e.g_value(omega, th);
            double rel_max = max_abs(g, lead) / max_abs(lead);
            double rel_f = (g - lead).norm() / lead.norm();
            std::printf("E=%3.1f model=%d  rel_max=%.4f rel_frob=%.4f  |lead|=%.4g\n", E,
                        model_kind, rel_max, rel_f, max_abs(lead));
        }
    }

    // rho=2 slope at small separations
    {
        Kinematics kin = kinematics(1.562, 1.0);
        Direction omega0(0, 0, 1);
        PlaneBasis basis = plane_basis(omega0);
        auto pair_of = [&](double sep) {
            auto lift = [&](const Vec2& z) {
                return Direction(
                    Vec3(basis.embed(z) + std::sqrt(1.0 - z.squaredNorm()) * omega0.vec()));
            };
            return std::make_pair(lift(Vec2(sep / 2, 0)), lift(Vec2(-sep / 2, 0)));
        };
        ModelPtr m = make_tail_electric(0.15, 2.0, 1.0);
        PlaneQuadratureOptions opt;
        opt.radius_cap = 260;
        opt.tail_tol = 1e-6;
        KernelEngine e(m, kin, 0, omega0, opt);
        e.prepare(kin.nu * 0.08, kin.nu * 0.3);
        double prev = 0, prev_sep = 0;
        for (double sep : {0.08, 0.12, 0.18, 0.27}) {
            auto [w, t] = pair_of(sep);
            double v = max_abs(e.g_value(w, t));
            if (prev > 0)
                std::printf("sep %0.2f->%0.2f local slope=%.3f\n", prev_sep, sep,
                            std::log(v / prev) / std::log(sep / prev_sep));
            prev = v;
            prev_sep = sep;
            std::printf("sep=%.2f |g|=%.6g (lattice Y=%.0f h=%.2f)\n", sep, v, e.lattice().Y,
                        e.lattice().h);
        }
    }
    return 0;
}
