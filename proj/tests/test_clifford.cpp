#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dirsc/clifford.hpp"
#include "oracles.hpp"

#include <random>

using namespace dirsc;

TEST_CASE("anticommutation relations hold exactly for all 16 pairs") {
    const auto& d = dirac_matrices();
    std::array<Mat4, 4> as{d.alpha[0], d.alpha[1], d.alpha[2], d.beta};
    for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) {
            Mat4 anti = as[j] * as[k] + as[k] * as[j];
            Mat4 expect = j == k ? Mat4(2.0 * Mat4::Identity()) : Mat4(Mat4::Zero());
            CHECK(max_abs(anti, expect) == 0.0);
        }
    // alpha_1^2 = I, alpha_1 alpha_2 + alpha_2 alpha_1 = 0, beta alpha_3 + alpha_3 beta = 0
    CHECK(max_abs(Mat4(d.alpha[0] * d.alpha[0]), Mat4(Mat4::Identity())) == 0.0);
    CHECK(max_abs(Mat4(d.alpha[0] * d.alpha[1] + d.alpha[1] * d.alpha[0])) == 0.0);
    CHECK(max_abs(Mat4(d.beta * d.alpha[2] + d.alpha[2] * d.beta)) == 0.0);
}

TEST_CASE("spectral projectors: closed form, algebra, and random sweep") {
    // xi = 0, branch +: diag(1,1,0,0)
    Mat4 p0 = spectral_projector(Vec3::Zero(), 1.0, +1);
    Mat4 expect = Mat4::Zero();
    expect(0, 0) = expect(1, 1) = 1.0;
    CHECK(max_abs(p0, expect) < 1e-15);

    CHECK_THROWS_AS(spectral_projector(Vec3(1, 0, 0), -1.0, +1), DomainError);

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        Vec3 xi(u(rng), u(rng), u(rng));
        double m = 0.3 + std::abs(u(rng));
        Mat4 pp = spectral_projector(xi, m, +1);
        Mat4 pm = spectral_projector(xi, m, -1);
        CHECK(max_abs(Mat4(pp + pm), Mat4(Mat4::Identity())) < 1e-14); // resolution of identity
        CHECK(max_abs(Mat4(pp * pp), pp) < 1e-12);                     // idempotent
        CHECK(max_abs(pp, Mat4(pp.adjoint())) < 1e-14);                // Hermitian
        CHECK(std::abs(pp.trace().real() - 2.0) < 1e-12);              // rank 2
        CHECK(max_abs(Mat4(pp * pm)) < 1e-13);                         // mutually annihilating
    }
}

TEST_CASE("projector/energy identities used by the kernel algebra") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 100; ++i) {
        Direction w(Vec3(u(rng), u(rng), u(rng)) + Vec3(0, 0, 1.2));
        Vec3 eta(u(rng), u(rng), u(rng));
        double m = 0.5 + std::abs(u(rng));
        double E = (i % 2 ? 1 : -1) * (m + 0.2 + std::abs(u(rng)));
        Kinematics kin = kinematics(E, m);
        Mat4 p = energy_projector(kin, w);
        Mat4 p_neg = spectral_projector(kin.nu * w.vec(), m, -kin.sign);
        // P_omega(E)(alpha.eta) = (alpha.eta) P_omega(-E) + (nu/E) <omega,eta> I
        Mat4 lhs = p * alpha_dot(eta);
        Mat4 rhs = alpha_dot(eta) * p_neg + (kin.nu / kin.E) * w.dot(eta) * Mat4::Identity();
        CHECK(max_abs(lhs, rhs) < 1e-12);
        // and therefore P (alpha.omega) P = (nu/E) P
        Mat4 paop = p * alpha_dot(w.vec()) * p;
        CHECK(max_abs(paop, Mat4((kin.nu / kin.E) * p)) < 1e-12);
    }
}

TEST_CASE("FW matrix diagonalizes the free symbol and is unitary") {
    // xi = 0 -> identity
    CHECK(max_abs(fw_matrix(Vec3::Zero(), 1.0), Mat4(Mat4::Identity())) < 1e-15);
    CHECK_THROWS_AS(fw_matrix(Vec3(1, 0, 0), 0.0), DomainError);

    // Conjugation at xi = (1,0,0), m = 1 against the expm oracle, entrywise.
    {
        Vec3 xi(1, 0, 0);
        const auto& d = dirac_matrices();
        double theta = std::atan2(1.0, 1.0) / 2.0;
        Mat4 arg = Mat4(d.beta * alpha_dot(xi) * theta);
        Mat4 g_oracle = oracle::expm(arg);
        Mat4 g = fw_matrix(xi, 1.0);
        CHECK(max_abs(g, g_oracle) < 1e-13);
        Mat4 diag = g * free_symbol(xi, 1.0) * g.inverse();
        CHECK(max_abs(diag, Mat4(std::sqrt(2.0) * d.beta)) < 1e-12);
    }

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    for (int i = 0; i < 100; ++i) {
        Vec3 xi(u(rng), u(rng), u(rng));
        double m = 0.4 + std::abs(u(rng));
        Mat4 g = fw_matrix(xi, m);
        CHECK(max_abs(Mat4(g * g.adjoint()), Mat4(Mat4::Identity())) < 1e-12); // unitary
        double lam = std::sqrt(xi.squaredNorm() + m * m);
        CHECK(max_abs(Mat4(g * free_symbol(xi, m) * g.inverse()),
                      Mat4(lam * dirac_matrices().beta)) < 1e-10);
        CHECK(max_abs(g, oracle::expm(Mat4(dirac_matrices().beta * alpha_dot(xi) *
                                           (std::atan2(xi.norm(), m) /
                                            (2.0 * std::max(xi.norm(), 1e-300)))))) < 1e-11);
    }
}

TEST_CASE("FW matrix maps P_omega(E) onto the block projectors") {
    // G(nu omega) P_omega(E) = P_pm G(nu omega) with P_+ = diag(I2,0), P_- = diag(0,I2)
    Mat4 p_plus = Mat4::Zero(), p_minus = Mat4::Zero();
    p_plus(0, 0) = p_plus(1, 1) = 1.0;
    p_minus(2, 2) = p_minus(3, 3) = 1.0;
    for (double E : {1.7, -1.7, 3.3, -3.3}) {
        Kinematics kin = kinematics(E, 1.0);
        Direction w(0.3, -0.5, 0.8);
        Mat4 g = fw_matrix(kin.nu * w.vec(), kin.m);
        Mat4 lhs = g * energy_projector(kin, w);
        Mat4 rhs = (E > 0 ? p_plus : p_minus) * g;
        CHECK(max_abs(lhs, rhs) < 1e-12);
    }
}

TEST_CASE("kinematics scalars") {
    Kinematics k = kinematics(std::sqrt(2.0), 1.0);
    CHECK(k.nu == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(k.upsilon == doctest::Approx(std::pow(2.0, 0.25)).epsilon(1e-14));
    CHECK(k.sign == 1);

    Kinematics kn = kinematics(-std::sqrt(2.0), 1.0);
    CHECK(kn.sign == -1);
    CHECK(kn.nu == doctest::Approx(1.0).epsilon(1e-14));

    // invariants: nu^2 + m^2 = E^2, upsilon^4 = E^2 nu^2
    for (double E : {1.2, 5.0, -2.4}) {
        Kinematics kk = kinematics(E, 1.0);
        CHECK(kk.nu * kk.nu + kk.m * kk.m == doctest::Approx(E * E).epsilon(1e-12));
        CHECK(std::pow(kk.upsilon, 4) == doctest::Approx(E * E * kk.nu * kk.nu).epsilon(1e-12));
    }

    CHECK_THROWS_WITH_AS(kinematics(0.5, 1.0), doctest::Contains("inside spectral gap"),
                         DomainError);
    CHECK_THROWS_AS(kinematics(1.0, 1.0), DomainError);
}
