#pragma once

#include "dirsc/types.hpp"

#include <vector>

namespace dirsc {

// Spherical Fibonacci lattice; quasi-uniform directions for slice coverage.
std::vector<Direction> fibonacci_directions(int n);

// Product quadrature on S^2 (Gauss-Legendre in cos(theta) x uniform in phi),
// spectrally accurate for smooth integrands.
struct SphereQuadrature {
    std::vector<Vec3> nodes;
    std::vector<double> weights; // sum to 4*pi
};
SphereQuadrature sphere_quadrature(int n_polar, int n_azimuth);

// Orthonormal in-plane basis (e1, e2) with e1 x e2 = omega; deterministic.
struct PlaneBasis {
    Vec3 e1, e2, normal;
    Vec2 project(const Vec3& v) const { return Vec2(v.dot(e1), v.dot(e2)); }
    Vec3 embed(const Vec2& c) const { return c.x() * e1 + c.y() * e2; }
};
PlaneBasis plane_basis(const Direction& omega);

} // namespace dirsc
