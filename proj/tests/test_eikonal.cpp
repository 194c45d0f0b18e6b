#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dirsc/eikonal.hpp"
#include "oracles.hpp"

#include <random>

using namespace dirsc;

namespace {

ModelPtr gaussian_model() { return make_gaussian_electric(1.0, 1.0); }

ModelPtr mixed_model() {
    return make_sum({make_gaussian_electric(0.5, 1.1), make_gaussian_magnetic(0.3, 1.0)});
}

ModelPtr tail_model(double rho) {
    return make_sum({make_gaussian_electric(0.4, 1.0), make_tail_electric(0.4, rho, 1.0)});
}

double fd_eikonal_residual(const PotentialModel& m, const Direction& w, const Kinematics& kin,
                           int sign, const Vec3& x) {
    const double h = 1e-4;
    Vec3 grad;
    for (int k = 0; k < 3; ++k) {
        Vec3 e = Vec3::Zero();
        e[k] = h;
        grad[k] = (eikonal_phase(m, w, kin, sign, x + e) - eikonal_phase(m, w, kin, sign, x - e)) /
                  (2 * h);
    }
    return std::abs(w.dot(grad + m.A(x)) + kin.E / kin.nu * m.V(x));
}

} // namespace

TEST_CASE("eikonal phase closed forms and branch table") {
    Kinematics kin = kinematics(std::sqrt(2.0), 1.0);
    Direction w(1, 0, 0);

    // zero potential
    ModelPtr z = make_zero_model();
    CHECK(eikonal_phase(*z, w, kin, +1, Vec3(0.3, -0.5, 0.2)) == 0.0);

    // gaussian V, A = 0, x = 0, sign +, E > m: (|E|/nu) sqrt(pi)/2
    ModelPtr g = gaussian_model();
    double expect = std::sqrt(2.0) * std::sqrt(pi) / 2.0;
    CHECK(eikonal_phase(*g, w, kin, +1, Vec3::Zero()) == doctest::Approx(expect).epsilon(1e-9));

    // gauge shift: Phi(A + grad psi) - Phi(A) = -psi(x)
    ModelPtr psi = make_pure_gauge(0.8, 1.3);
    ModelPtr shifted = with_gauge_shift(g, psi);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 6; ++i) {
        Vec3 x(u(rng), u(rng), u(rng));
        double psi_val = 0.8 * std::exp(-x.squaredNorm() / (1.3 * 1.3));
        for (int s : {+1, -1}) {
            double d = eikonal_phase(*shifted, w, kin, s, x) - eikonal_phase(*g, w, kin, s, x);
            CHECK(d == doctest::Approx(-psi_val).epsilon(1e-9));
        }
        // and for negative energies too
        Kinematics kn = kinematics(-std::sqrt(2.0), 1.0);
        double dn = eikonal_phase(*shifted, w, kn, +1, x) - eikonal_phase(*g, w, kn, +1, x);
        CHECK(dn == doctest::Approx(-psi_val).epsilon(1e-9));
    }
}

TEST_CASE("eikonal equation residual on cone samples, both energy branches") {
    ModelPtr m = mixed_model();
    for (double E : {1.5, -1.5}) {
        Kinematics kin = kinematics(E, 1.0);
        Direction w(0.2, 0.1, 0.97);
        Cone cone{0.1, 1.0, +1, kin.sign};
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> u(-1, 1);
        int checked = 0;
        for (int i = 0; i < 60 && checked < 25; ++i) {
            Vec3 x(3 * u(rng), 3 * u(rng), 3 * u(rng));
            if (!cone.contains(x, w)) continue;
            ++checked;
            double res = fd_eikonal_residual(*m, w, kin, +1, x);
            double budget = 1e-6 * std::pow(1.0 + x.norm(), -m->rho());
            CHECK(res < std::max(budget, 1e-8) + 1e-7);
        }
        CHECK(checked >= 20);
    }
}

TEST_CASE("analytic phase gradient agrees with finite differences") {
    ModelPtr m = mixed_model();
    Kinematics kin = kinematics(1.8, 1.0);
    Direction w(0.1, -0.3, 0.95);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int i = 0; i < 8; ++i) {
        Vec3 x(u(rng), u(rng), u(rng));
        Vec3 g = eikonal_phase_gradient(*m, w, kin, -1, x);
        const double h = 1e-5;
        for (int k = 0; k < 3; ++k) {
            Vec3 e = Vec3::Zero();
            e[k] = h;
            double fd = (eikonal_phase(*m, w, kin, -1, x + e) -
                         eikonal_phase(*m, w, kin, -1, x - e)) /
                        (2 * h);
            CHECK(g[k] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
    }
}

TEST_CASE("transport coefficients: zero model, projector structure, gauge invariance") {
    Kinematics kin = kinematics(1.6, 1.0);
    Direction w(0.3, 0.1, 0.94);

    TransportExpansion z(make_zero_model(), w, kin, +1, 2);
    Vec3 x(0.7, -0.4, 1.1);
    CHECK(max_abs(z.b(1, x)) == 0.0);
    CHECK(max_abs(z.b(2, x)) == 0.0);
    CHECK(max_abs(z.c(1, x)) == 0.0);
    CHECK(max_abs(z.c(0, x), Mat4(Mat4::Identity())) == 0.0);

    ModelPtr m = mixed_model();
    for (int s : {+1, -1}) {
        TransportExpansion e(m, w, kin, s, 1);
        const Mat4 p = e.projector();
        const Mat4 pf = e.projector_flip();
        for (const Vec3& pt : {Vec3(0.5, 0.2, 0.8), Vec3(-1.2, 0.3, 2.0)}) {
            Mat4 b1 = e.b(1, pt), c1 = e.c(1, pt);
            // b_j = P(-E) b_j, b_j P(E) = b_j ; c_j P(E) = c_j   (exact algebra)
            CHECK(max_abs(Mat4(pf * b1), b1) < 1e-10);
            CHECK(max_abs(Mat4(b1 * p), b1) < 1e-10);
            CHECK(max_abs(Mat4(c1 * p), c1) < 1e-10);
        }
    }

    // gauge invariance of b and c
    ModelPtr psi = make_pure_gauge(0.6, 1.2);
    TransportExpansion e1(m, w, kin, +1, 1);
    TransportExpansion e2(with_gauge_shift(m, psi), w, kin, +1, 1);
    for (const Vec3& pt : {Vec3(0.4, 0.1, 0.9), Vec3(1.0, -0.8, 0.5)}) {
        CHECK(max_abs(e1.b(1, pt), e2.b(1, pt)) < 1e-8);
        CHECK(max_abs(e1.c(1, pt), e2.c(1, pt)) < 1e-8);
    }
}

TEST_CASE("transport coefficient and phase decay along a cone ray") {
    ModelPtr m = tail_model(2.0);
    Kinematics kin = kinematics(1.6, 1.0);
    Direction w(0.0, 0.0, 1.0);
    Cone cone{0.1, 1.0, +1, kin.sign};
    TransportExpansion e(m, w, kin, +1, 1);

    std::vector<double> rs, phis, b1s;
    for (double r : {4.0, 8.0, 16.0, 32.0}) {
        Vec3 x = cone.axis_point(w, r) + Vec3(0.3, -0.2, 0);
        CHECK(cone.contains(x, w));
        rs.push_back(r);
        phis.push_back(std::abs(e.phase(x)));
        b1s.push_back(max_abs(e.b(1, x)));
    }
    // |Phi| ~ (1+|x|)^{-(rho-1)} and |b_1| ~ (1+|x|)^{-rho} on the cone
    double phi_slope = oracle::fit_slope(rs, phis);
    CHECK(phi_slope < -(m->rho() - 1.0) + 0.1);
    double b_slope = oracle::fit_slope(rs, b1s);
    CHECK(b_slope < -(m->rho() - 0.1));
}

TEST_CASE("approximate eigenfunctions") {
    Kinematics kin = kinematics(1.6, 1.0);
    Direction w(0.25, -0.1, 0.96);

    // zero model: u_N = e^{i<x,xi>} P_omega(E)
    TransportExpansion z(make_zero_model(), w, kin, +1, 1);
    Vec3 x(0.9, 0.3, -0.6);
    Mat4 expect = std::exp(iu * x.dot(z.xi())) * z.projector();
    CHECK(max_abs(z.u(x), expect) < 1e-14);

    // column span: u_N P_omega(E) = u_N at random points
    ModelPtr m = mixed_model();
    TransportExpansion e(m, w, kin, +1, 1);
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u01(-2, 2);
    for (int i = 0; i < 20; ++i) {
        Vec3 pt(u01(rng), u01(rng), u01(rng));
        Mat4 un = e.u(pt);
        CHECK(max_abs(Mat4(un * e.projector()), un) < 1e-9);
    }

    // |u_1 - u_0| ~ C/|xi|: slope about -1 over nu in {5, 10, 20}
    std::vector<double> nus, diffs;
    for (double nu : {5.0, 10.0, 20.0}) {
        Kinematics kk = kinematics(std::sqrt(nu * nu + 1.0), 1.0);
        TransportExpansion e0(m, w, kk, +1, 0);
        TransportExpansion e1(m, w, kk, +1, 1);
        Vec3 pt(0.4, 0.2, 1.1);
        nus.push_back(nu);
        diffs.push_back(max_abs(e1.u(pt), e0.u(pt)));
    }
    double slope = oracle::fit_slope(nus, diffs);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.2));
}

TEST_CASE("remainder: zero model and the order-0 analytic oracle") {
    Kinematics kin = kinematics(1.6, 1.0);
    Direction w(0.2, 0.3, 0.93);

    TransportExpansion z(make_zero_model(), w, kin, +1, 0);
    CHECK(max_abs(z.remainder_fd(Vec3(0.4, -0.2, 0.9))) < 1e-8);

    // r_0 = e^{i Phi} P(-E) [alpha.(grad Phi + A)] P(E), independent route
    ModelPtr m = mixed_model();
    TransportExpansion e(m, w, kin, +1, 0);
    for (const Vec3& pt : {Vec3(0.8, 0.1, 1.2), Vec3(-0.4, 0.9, 2.0)}) {
        CHECK(max_abs(e.remainder_fd(pt), e.remainder_order0(pt)) < 1e-7);
    }
}

TEST_CASE("remainder decay in |x| and in |xi| on the cone") {
    ModelPtr m = tail_model(2.0);
    Direction w(0, 0, 1);

    // spatial decay at N=0: fitted exponent >= rho - 0.2 (we check > 1.9 for rho=2)
    {
        Kinematics kin = kinematics(1.6, 1.0);
        Cone cone{0.1, 1.0, +1, kin.sign};
        TransportExpansion e(m, w, kin, +1, 0);
        std::vector<double> rs, vs;
        for (double r : {4.0, 8.0, 16.0, 32.0}) {
            Vec3 x = cone.axis_point(w, r) + Vec3(0.2, 0.1, 0);
            rs.push_back(r);
            vs.push_back(max_abs(e.remainder_fd(x)));
        }
        double slope = oracle::fit_slope(rs, vs);
        CHECK(slope < -1.9);
    }

    // energy decay at N=1: slope <= -0.9 over nu in {5, 10, 20} at a fixed cone point
    {
        std::vector<double> nus, vs;
        for (double nu : {5.0, 10.0, 20.0}) {
            Kinematics kk = kinematics(std::sqrt(nu * nu + 1.0), 1.0);
            TransportExpansion e1(m, w, kk, +1, 1);
            Vec3 x(0.3, -0.1, 3.0);
            nus.push_back(nu);
            vs.push_back(max_abs(e1.remainder_fd(x)));
        }
        double slope = oracle::fit_slope(nus, vs);
        CHECK(slope <= -0.9);
    }
}

TEST_CASE("cone membership matches the defining inequality") {
    Cone c{0.1, 1.0, +1, +1};
    Direction w(0, 0, 1);
    CHECK(c.contains(Vec3(0, 0, 5), w));
    CHECK(c.contains(Vec3(0.2, 0.1, 0.3), w)); // inside R
    CHECK(!c.contains(Vec3(0, 0, -5), w));
    Cone cm{0.1, 1.0, -1, +1};
    CHECK(cm.contains(Vec3(0, 0, -5), w));
    CHECK(!cm.contains(Vec3(0, 0, 5), w));
    // negative energy flips the favorable side
    Cone ce{0.1, 1.0, +1, -1};
    CHECK(ce.contains(Vec3(0, 0, -5), w));
}

TEST_CASE("transport order cap") {
    CHECK_THROWS_AS(TransportExpansion(mixed_model(), Direction(0, 0, 1), kinematics(1.5, 1.0),
                                       +1, 3),
                    DomainError);
}
