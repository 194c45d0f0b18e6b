#pragma once

#include "dirsc/amplitude.hpp"

#include <string>
#include <vector>

namespace dirsc {

enum class SymmetryKind { Parity, ChargeConjugation, TimeReversal, TP, CT, CTP, Gauge };

std::string symmetry_name(SymmetryKind k);

// Hypothesis class of each transformation and the level it is checked at.
struct SymmetryCase {
    SymmetryKind kind = SymmetryKind::Parity;
    std::string potential_condition; // e.g. parity: V even, A odd
    std::string identity_level = "pointwise";
};

SymmetryCase symmetry_case(SymmetryKind k);

// Verifies the case's parity condition by sampling f(x) vs +-f(-x); throws
// "parity precondition violated" with the measured asymmetry when broken.
void check_hypothesis(SymmetryKind k, const PotentialModel& model, double tol = 1e-9);
double hypothesis_asymmetry(SymmetryKind k, const PotentialModel& model);

// Sup over samples of the matrix residual of the pointwise identity
// (Phi / b_j / c_j level, j <= N).
double pointwise_residual(SymmetryKind k, ModelPtr model, const Kinematics& kin, int N,
                          const std::vector<Vec3>& samples,
                          const std::vector<Direction>& directions);

// Aligned sample sets for the kernel-level identities: grid B is sampled at the
// symmetry image of grid A's pairs (possibly at -E and/or on the opposite chart).
struct SymmetricGridPlan {
    std::vector<std::pair<Direction, Direction>> pairs_a, pairs_b;
    int branch_b = +1;
    bool flip_energy = false;
};
SymmetricGridPlan symmetric_grid_plan(SymmetryKind k,
                                      const std::vector<std::pair<Direction, Direction>>& base);

// Sup residual of the kernel identity over aligned grids ("sample set not closed
// under symmetry" when the grids do not match the plan).
double kernel_residual(SymmetryKind k, const KernelGrid& a, const KernelGrid& b);

// Sup over samples of |h_N(...;A+grad psi) - h_N(...;A)|.
double gauge_residual(ModelPtr model, ModelPtr pure_gauge, const Kinematics& kin, int N,
                      const std::vector<Vec3>& samples, const Direction& omega,
                      const Direction& theta, const Direction& omega0);

} // namespace dirsc
