#pragma once

#include "dirsc/types.hpp"

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

namespace dirsc {

// Norms used for adaptive error control.
inline double quad_norm(double v) { return std::abs(v); }
inline double quad_norm(const Complex& v) { return std::abs(v); }
inline double quad_norm(const Vec3& v) { return v.cwiseAbs().maxCoeff(); }
inline double quad_norm(const Mat4& v) { return v.cwiseAbs().maxCoeff(); }

namespace gk {
// Gauss-Kronrod 7-15 nodes/weights on [-1,1] (symmetric half listed).
inline constexpr double xk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};
} // namespace gk

struct QuadOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-9;
    int max_depth = 12;
};

// Adaptive GK15 on [a,b] for scalar/vector/matrix-valued integrands.
template <typename F>
auto integrate(F&& f, double a, double b, const QuadOptions& opt = {})
    -> decltype(f(0.0)) {
    using T = decltype(f(0.0));
    struct Impl {
        const std::decay_t<F>& fn;
        const QuadOptions& opt;
        T panel(double lo, double hi, int depth) const {
            double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
            T kres = gk::wk[7] * fn(c);
            T gres = gk::wg[3] * fn(c);
            for (int i = 0; i < 7; ++i) {
                T lo_v = fn(c - h * gk::xk[i]);
                T hi_v = fn(c + h * gk::xk[i]);
                kres += gk::wk[i] * (lo_v + hi_v);
                if (i % 2 == 1) gres += gk::wg[i / 2] * (lo_v + hi_v);
            }
            kres *= h;
            gres *= h;
            double err = quad_norm(T(kres - gres));
            if (depth <= 0 ||
                err <= opt.abs_tol + opt.rel_tol * quad_norm(kres))
                return kres;
            T left = panel(lo, c, depth - 1);
            T right = panel(c, hi, depth - 1);
            return left + right;
        }
    };
    Impl impl{f, opt};
    return impl.panel(a, b, opt.max_depth);
}

// Integral over the whole real line via t = s/(1-s^2), s in (-1,1).
template <typename F>
auto integrate_line(F&& f, const QuadOptions& opt = {}) -> decltype(f(0.0)) {
    auto g = [&f](double s) {
        double d = 1.0 - s * s;
        double t = s / d;
        double jac = (1.0 + s * s) / (d * d);
        return decltype(f(0.0))(jac * f(t));
    };
    return integrate(g, -1.0 + 1e-14, 1.0 - 1e-14, opt);
}

// Integral over [0, inf) via t = s/(1-s), s in [0,1).
template <typename F>
auto integrate_halfline(F&& f, const QuadOptions& opt = {}) -> decltype(f(0.0)) {
    auto g = [&f](double s) {
        double d = 1.0 - s;
        double t = s / d;
        double jac = 1.0 / (d * d);
        return decltype(f(0.0))(jac * f(t));
    };
    return integrate(g, 0.0, 1.0 - 1e-14, opt);
}

// Integral over a finite segment [0,1] of a path (used for curvilinear integrals).
template <typename F>
auto integrate_segment(F&& f, const QuadOptions& opt = {}) -> decltype(f(0.0)) {
    return integrate(std::forward<F>(f), 0.0, 1.0, opt);
}

// Least-squares slope of log|f| vs log r; used to fit decay/homogeneity orders.
double loglog_slope(const std::vector<double>& r, const std::vector<double>& v);

} // namespace dirsc
