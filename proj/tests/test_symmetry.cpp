#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dirsc/symmetry.hpp"

#include <random>

using namespace dirsc;

namespace {

std::vector<Vec3> sample_points(int n, uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<Vec3> pts;
    for (int i = 0; i < n; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    return pts;
}

const std::vector<Direction> kDirs = {Direction(0.3, 0.2, 0.93), Direction(-0.4, 0.7, 0.59)};

ModelPtr even_V() { return make_gaussian_electric(0.6, 1.2); }
ModelPtr odd_A() { return make_gaussian_magnetic(0.4, 1.0); } // generator even -> A odd
ModelPtr odd_V() {
    return make_sum({make_gaussian_electric(0.5, 1.0, Vec3(0.6, 0, 0)),
                     make_gaussian_electric(-0.5, 1.0, Vec3(-0.6, 0, 0))});
}
ModelPtr even_A() {
    // grad of an odd generator is even
    return make_sum({make_pure_gauge(0.5, 1.0, Vec3(0.4, 0, 0)),
                     make_pure_gauge(-0.5, 1.0, Vec3(-0.4, 0, 0))});
}

} // namespace

TEST_CASE("hypothesis table and checks") {
    CHECK(symmetry_case(SymmetryKind::Parity).potential_condition == "V even, A odd");
    CHECK(symmetry_name(SymmetryKind::CTP) == "CTP");

    CHECK_NOTHROW(check_hypothesis(SymmetryKind::Parity, *make_sum({even_V(), odd_A()})));
    CHECK_THROWS_WITH_AS(
        check_hypothesis(SymmetryKind::Parity, *make_gaussian_electric(0.6, 1.2, Vec3(0.7, 0, 0))),
        doctest::Contains("parity precondition violated"), DomainError);
    CHECK_NOTHROW(check_hypothesis(SymmetryKind::CT, *odd_A()));
    CHECK_THROWS_AS(check_hypothesis(SymmetryKind::CT, *even_V()), DomainError);
}

TEST_CASE("pointwise identities hold on the hypothesis classes") {
    Kinematics kin = kinematics(1.6, 1.0);
    auto pts = sample_points(6, 100);

    // zero model: every case passes with residual 0
    for (auto k : {SymmetryKind::Parity, SymmetryKind::ChargeConjugation,
                   SymmetryKind::TimeReversal, SymmetryKind::TP, SymmetryKind::CT,
                   SymmetryKind::CTP}) {
        CHECK(pointwise_residual(k, make_zero_model(), kin, 1, pts, kDirs) < 1e-12);
    }

    CHECK(pointwise_residual(SymmetryKind::Parity, make_sum({even_V(), odd_A()}), kin, 1, pts,
                             kDirs) < 1e-7);
    CHECK(pointwise_residual(SymmetryKind::ChargeConjugation, make_sum({odd_V(), even_A()}), kin,
                             1, pts, kDirs) < 1e-7);
    CHECK(pointwise_residual(SymmetryKind::TimeReversal, even_V(), kin, 1, pts, kDirs) < 1e-7);
    CHECK(pointwise_residual(SymmetryKind::TP, make_sum({even_V(), even_A()}), kin, 1, pts,
                             kDirs) < 1e-7);
    CHECK(pointwise_residual(SymmetryKind::CT, odd_A(), kin, 1, pts, kDirs) < 1e-7);
    CHECK(pointwise_residual(SymmetryKind::CTP, make_sum({odd_V(), odd_A()}), kin, 1, pts, kDirs) <
          1e-7);
}

TEST_CASE("negative controls: broken hypotheses fail loudly") {
    Kinematics kin = kinematics(1.6, 1.0);
    auto pts = sample_points(5, 200);

    // Off-center V breaks parity: precondition error raised with measured asymmetry.
    ModelPtr broken = make_gaussian_electric(0.6, 1.2, Vec3(0.7, 0, 0));
    CHECK_THROWS_AS(pointwise_residual(SymmetryKind::Parity, broken, kin, 1, pts, kDirs),
                    DomainError);

    // And the identity itself fails when evaluated without the gate.
    TransportExpansion lhs(broken, kDirs[0], kin, +1, 1);
    TransportExpansion rhs(broken, -kDirs[0], kin, +1, 1);
    const Mat4& beta = dirac_matrices().beta;
    double res = 0;
    for (const auto& x : pts) {
        res = std::max(res, std::abs(lhs.phase(x) - rhs.phase(-x)));
        res = std::max(res, max_abs(Mat4(beta * lhs.b(1, x)), Mat4(rhs.b(1, Vec3(-x)) * beta)));
    }
    CHECK(res > 1e-2);
}

TEST_CASE("gauge residual of h_N") {
    Kinematics kin = kinematics(1.6, 1.0);
    Direction w(0.1, 0.05, 1.0), th(0.4, -0.2, 0.9), w0(0.25, -0.08, 0.96);
    auto pts = sample_points(6, 300);
    ModelPtr m = make_sum({even_V(), odd_A()});

    // psi == 0
    CHECK(gauge_residual(m, make_pure_gauge(0.0, 1.0), kin, 1, pts, w, th, w0) < 1e-12);
    // gaussian psi on an electric-only model
    CHECK(gauge_residual(even_V(), make_pure_gauge(0.7, 1.2), kin, 1, pts, w, th, w0) < 1e-8);
    // large amplitude: the identity is exact, not perturbative
    CHECK(gauge_residual(m, make_pure_gauge(10.0, 1.4), kin, 1, pts, w, th, w0) < 1e-6);
}

TEST_CASE("kernel-level identities on aligned grids") {
    Kinematics kin = kinematics(1.6, 1.0);
    Direction omega0(0, 0, 1);
    PlaneBasis basis = plane_basis(omega0);
    auto lift = [&](const Vec2& z) {
        return Direction(Vec3(basis.embed(z) + std::sqrt(1.0 - z.squaredNorm()) * omega0.vec()));
    };
    std::vector<std::pair<Direction, Direction>> base = {
        {lift(Vec2(0.18, 0.04)), lift(Vec2(-0.16, -0.08))},
        {lift(Vec2(0.05, 0.2)), lift(Vec2(0.02, -0.2))},
    };

    SUBCASE("parity, even V / odd A, N=0") {
        ModelPtr m = make_sum({even_V(), odd_A()});
        auto plan = symmetric_grid_plan(SymmetryKind::Parity, base);
        KernelGrid a = assemble_kernel_grid(m, kin, 0, omega0, plan.pairs_a);
        KernelGrid b = assemble_kernel_grid(m, kin, 0, omega0, plan.pairs_b, {}, plan.branch_b);
        CHECK(kernel_residual(SymmetryKind::Parity, a, b) < 1e-5);

        // sample set not closed under the symmetry is rejected
        KernelGrid bad = assemble_kernel_grid(m, kin, 0, omega0, plan.pairs_a);
        CHECK_THROWS_WITH_AS(kernel_residual(SymmetryKind::Parity, a, bad),
                             doctest::Contains("not closed"), DomainError);
    }

    SUBCASE("CT, V=0, energies +-E") {
        ModelPtr m = odd_A(); // V = 0
        auto plan = symmetric_grid_plan(SymmetryKind::CT, base);
        Kinematics kneg = kinematics(-kin.E, kin.m);
        KernelGrid a = assemble_kernel_grid(m, kin, 0, omega0, plan.pairs_a);
        KernelGrid b = assemble_kernel_grid(m, kneg, 0, omega0, plan.pairs_b, {}, plan.branch_b);
        CHECK(kernel_residual(SymmetryKind::CT, a, b) < 1e-5);
    }

    SUBCASE("TP, even V and even A, swapped pairs") {
        ModelPtr m = make_sum({even_V(), even_A()});
        auto plan = symmetric_grid_plan(SymmetryKind::TP, base);
        KernelGrid a = assemble_kernel_grid(m, kin, 0, omega0, plan.pairs_a);
        KernelGrid b = assemble_kernel_grid(m, kin, 0, omega0, plan.pairs_b, {}, plan.branch_b);
        CHECK(kernel_residual(SymmetryKind::TP, a, b) < 1e-5);
    }
}
