#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace dirsc {

using Complex = std::complex<double>;
using Mat4 = Eigen::Matrix4cd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;
using CVec4 = Eigen::Vector4cd;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr Complex iu{0.0, 1.0};

// Max-entry absolute error; all matrix comparisons in this library use it.
inline double max_abs(const Mat4& m) { return m.cwiseAbs().maxCoeff(); }
inline double max_abs(const Mat4& a, const Mat4& b) { return max_abs(Mat4(a - b)); }

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Unit vector on S^2, normalized at construction.
class Direction {
public:
    Direction() : v_(1, 0, 0) {}
    explicit Direction(const Vec3& v) {
        double n = v.norm();
        if (n == 0.0) throw DomainError("Direction: zero vector");
        v_ = v / n;
    }
    Direction(double x, double y, double z) : Direction(Vec3(x, y, z)) {}

    const Vec3& vec() const { return v_; }
    double x() const { return v_.x(); }
    double y() const { return v_.y(); }
    double z() const { return v_.z(); }
    Direction operator-() const { return Direction(Vec3(-v_)); }
    double dot(const Direction& o) const { return v_.dot(o.v_); }
    double dot(const Vec3& o) const { return v_.dot(o); }

private:
    Vec3 v_;
};

// Energy-shell scalars: nu = sqrt(E^2 - m^2), upsilon = (E^2 nu^2)^{1/4}.
struct Kinematics {
    double m = 1.0;
    double E = 0.0;
    double nu = 0.0;
    double upsilon = 0.0;
    int sign = +1;
};

Kinematics kinematics(double E, double m);

// sgn(E) sqrt(xi^2 + m^2)
inline double lambda_of_xi(const Vec3& xi, double m, int energy_sign) {
    return energy_sign * std::sqrt(xi.squaredNorm() + m * m);
}

} // namespace dirsc
