#include "dirsc/sphere.hpp"

#include <cmath>

namespace dirsc {

std::vector<Direction> fibonacci_directions(int n) {
    if (n < 1) throw DomainError("fibonacci_directions: n < 1");
    std::vector<Direction> out;
    out.reserve(n);
    const double golden = pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        double z = 1.0 - 2.0 * (i + 0.5) / n;
        double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        double phi = golden * i;
        out.emplace_back(Vec3(r * std::cos(phi), r * std::sin(phi), z));
    }
    return out;
}

namespace {
// Golub-Welsch for Gauss-Legendre would be overkill; Newton on P_n works fine.
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
    x.resize(n);
    w.resize(n);
    for (int i = 0; i < n; ++i) {
        double t = std::cos(pi * (i + 0.75) / (n + 0.5));
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = t;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            double dp = n * (t * p1 - p0) / (t * t - 1.0);
            double dt = p1 / dp;
            t -= dt;
            if (std::abs(dt) < 1e-15) break;
        }
        double p0 = 1.0, p1 = t;
        for (int k = 2; k <= n; ++k) {
            double p2 = ((2 * k - 1) * t * p1 - (k - 1) * p0) / k;
            p0 = p1;
            p1 = p2;
        }
        double dp = n * (t * p1 - p0) / (t * t - 1.0);
        x[i] = t;
        w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
    }
}
} // namespace

SphereQuadrature sphere_quadrature(int n_polar, int n_azimuth) {
    std::vector<double> ct, wt;
    gauss_legendre(n_polar, ct, wt);
    SphereQuadrature q;
    q.nodes.reserve(size_t(n_polar) * n_azimuth);
    q.weights.reserve(size_t(n_polar) * n_azimuth);
    for (int i = 0; i < n_polar; ++i) {
        double c = ct[i], s = std::sqrt(std::max(0.0, 1.0 - c * c));
        for (int j = 0; j < n_azimuth; ++j) {
            double phi = 2.0 * pi * j / n_azimuth;
            q.nodes.emplace_back(s * std::cos(phi), s * std::sin(phi), c);
            q.weights.push_back(wt[i] * 2.0 * pi / n_azimuth);
        }
    }
    return q;
}

PlaneBasis plane_basis(const Direction& omega) {
    const Vec3& n = omega.vec();
    Vec3 seed = std::abs(n.z()) < 0.9 ? Vec3(0, 0, 1) : Vec3(1, 0, 0);
    PlaneBasis b;
    b.normal = n;
    b.e1 = seed.cross(n).normalized();
    b.e2 = n.cross(b.e1);
    return b;
}

} // namespace dirsc
