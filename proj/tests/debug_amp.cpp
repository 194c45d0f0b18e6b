// Scratch diagnostics for the oscillatory kernel machinery.
#include "dirsc/amplitude.hpp"
#include "oracles.hpp"

#include <cstdio>

using namespace dirsc;

int main() {
    Kinematics kin = kinematics(1.6, 1.0);
    Direction omega0(0.05, -0.1, 1.0);
    PlaneBasis basis = plane_basis(omega0);
    auto lift = [&](const Vec2& z) {
        return Direction(Vec3(basis.embed(z) + std::sqrt(1.0 - z.squaredNorm()) * omega0.vec()));
    };
    Direction w = lift(Vec2(0.175, 0.05)), th = lift(Vec2(-0.175, -0.05));

    ModelPtr m = make_sum({make_gaussian_electric(0.5, 1.1), make_gaussian_magnetic(0.3, 1.0)});
    KernelEngine engine(m, kin, 0, omega0);
    Mat4 got = engine.g_value(w, th);
    std::printf("engine lattice Y=%g h=%g M=%d tail=%g\n", engine.lattice().Y,
                engine.lattice().h, engine.lattice().M, engine.lattice().tail_estimate);

    Vec2 q = kin.nu * basis.project(Vec3(th.vec() - w.vec()));
    Mat4 sandwich = energy_projector(kin, w) * alpha_dot(omega0.vec()) * energy_projector(kin, th);
    auto scalar_part = [&](const Vec3& yy) -> Complex {
        double pp = eikonal_phase(*m, w, kin, +1, yy);
        double pm = eikonal_phase(*m, th, kin, -1, yy);
        Vec2 y2 = basis.project(yy);
        return std::exp(iu * (q.x() * y2.x() + q.y() * y2.y())) * (std::exp(iu * (pm - pp)) - 1.0);
    };
    for (double Y : {8.0, 11.0, 14.0}) {
        Complex dense = oracle::dense_plane_trapezoid(scalar_part, basis.e1, basis.e2, Y, 0.11);
        Mat4 expect = kin.upsilon * kin.upsilon / (4.0 * pi * pi) * double(kin.sign) * dense *
                      sandwich;
        std::printf("dense Y=%4.1f |expect|=%.8g  rel=%.3g\n", Y, max_abs(expect),
                    max_abs(got, expect) / max_abs(expect));
    }
    std::printf("psi=%g\n", chart_cutoff(w, th, omega0, 0.3, 0.5, +1));
    std::printf("|got|=%.8g\n", max_abs(got));

    for (double h : {0.4, 0.2, 0.11}) {
        Complex dense = oracle::dense_plane_trapezoid(scalar_part, basis.e1, basis.e2, 11.0, h);
        Mat4 expect = kin.upsilon * kin.upsilon / (4.0 * pi * pi) * double(kin.sign) * dense *
                      sandwich;
        std::printf("dense h=%4.2f |expect|=%.8g\n", h, max_abs(expect));
    }
    for (double cap : {0.4, 0.2, 0.11}) {
        PlaneQuadratureOptions o2;
        o2.spacing_cap = cap;
        KernelEngine e2(m, kin, 0, omega0, o2);
        std::printf("engine h=%4.2f |g|=%.8g\n", cap, max_abs(e2.g_value(w, th)));
    }

    // --- cross-section diagnostics
    {
        Kinematics k2 = kinematics(1.8, 1.0);
        Direction theta(0.0, 0.1, 1.0);
        ModelPtr me = make_gaussian_electric(0.25, 1.0);
        Mat4 comb = diagonal_kernel_combination(*me, k2, theta);
        std::printf("\ndiag comb |.| = %g\n", max_abs(comb));
        // compare with g(w,t) + g(t,w)^* at small separation
        PlaneBasis b2 = plane_basis(theta);
        auto lift2 = [&](const Vec2& z) {
            return Direction(Vec3(b2.embed(z) + std::sqrt(1.0 - z.squaredNorm()) * theta.vec()));
        };
        for (double sep : {0.3, 0.15, 0.08}) {
            Direction w2 = lift2(Vec2(sep / 2, 0)), t2 = lift2(Vec2(-sep / 2, 0));
            KernelEngine e2(me, k2, 0, theta);
            Mat4 gwt = e2.g_value(w2, t2);
            Mat4 gtw = e2.g_value(t2, w2);
            Mat4 sum = gwt + gtw.adjoint();
            std::printf("sep=%5.2f  |g+g*| = %g   (vs comb %g)\n", sep, max_abs(sum),
                        max_abs(comb));
        }
        Mat4 p = energy_projector(k2, theta);
        CVec4 u = CVec4::Zero();
        u(0) = 1.0;
        CVec4 pu = p * u;
        pu /= pu.norm();
        CrossSection cs = cross_section(me, k2, theta, pu, 128);
        std::printf("sigma=%g sigma_direct=%g\n", cs.sigma, cs.sigma_direct);
        for (double E : {3.0, 6.0}) {
            Kinematics kh = kinematics(E, 1.0);
            Mat4 ph = energy_projector(kh, theta);
            CVec4 uh = ph * u;
            uh /= uh.norm();
            CrossSection ch = cross_section(me, kh, theta, uh, 96);
            std::printf("E=%3.1f sigma=%g sigma_direct=%g ratio=%g\n", E, ch.sigma,
                        ch.sigma_direct, ch.sigma_direct / ch.sigma);
        }
    }

    // --- leading singularity chart comparison
    {
        Kinematics k3 = kinematics(2.0, 1.0);
        Direction omega(0, 0, 1);
        PlaneBasis b3 = plane_basis(omega);
        auto lift3 = [&](const Vec2& z) {
            return Direction(Vec3(b3.embed(z) + std::sqrt(1.0 - z.squaredNorm()) * omega.vec()));
        };
        for (double scale : {0.05, 0.02}) {
            ModelPtr weak = make_gaussian_electric(scale * 10, 1.1);
            Direction th = lift3(Vec2(0.2955, 0.05)); // |omega-theta| ~ 0.3
            std::printf("|w-t| = %g\n", (omega.vec() - th.vec()).norm());
            Mat4 lead = leading_singularity(*weak, k3, omega, th);
            KernelEngine e3(weak, k3, 0, omega);
            Mat4 g3 = e3.g_value(omega, th);
            std::printf("scale=%4.2f  |lead|=%g |g|=%g rel=%g\n", scale, max_abs(lead),
                        max_abs(g3), max_abs(g3, lead) / max_abs(lead));
        }
    }

    // --- rho=2 tail slope with bigger q
    {
        Kinematics k4 = kinematics(1.562, 1.0);
        Direction omega0b(0, 0, 1);
        PlaneBasis b4 = plane_basis(omega0b);
        auto lift4 = [&](const Vec2& z) {
            return Direction(Vec3(b4.embed(z) + std::sqrt(1.0 - z.squaredNorm()) * omega0b.vec()));
        };
        ModelPtr tail = make_tail_electric(0.5, 2.0, 1.0);
        PlaneQuadratureOptions o4;
        o4.radius_cap = 140.0;
        o4.tail_tol = 1e-6;
        KernelEngine e4(tail, k4, 0, omega0b, o4);
        e4.prepare(k4.nu * 0.2, k4.nu * 0.62);
        for (double sep : {0.2, 0.3, 0.45, 0.62}) {
            Direction w4 = lift4(Vec2(sep / 2, 0)), t4 = lift4(Vec2(-sep / 2, 0));
            Mat4 g4 = e4.g_value(w4, t4);
            std::printf("sep=%.2f |g|=%.6g\n", sep, max_abs(g4));
        }
    }
    return 0;
}
