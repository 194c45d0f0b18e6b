#include "dirsc/fields.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace dirsc {

namespace {

constexpr double kAbsentDecay = 1e3; // sentinel exponent for a vanishing component

// C-infinity step: 0 for t<=0, 1 for t>=1.
double smoothstep(double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    double a = std::exp(-1.0 / t);
    double b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

double smoothstep_prime(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    double a = std::exp(-1.0 / t);
    double b = std::exp(-1.0 / (1.0 - t));
    double ap = a / (t * t);
    double bp = b / ((1.0 - t) * (1.0 - t));
    double s = a + b;
    return (ap * b + a * bp) / (s * s);
}

// cap(u): 0 for u <= 1/2, 1 for u >= 1.
double cap(double u) { return smoothstep(2.0 * u - 1.0); }
double cap_prime(double u) { return 2.0 * smoothstep_prime(2.0 * u - 1.0); }

struct Gaussian {
    double amp, w2;
    Vec3 c;
    double value(const Vec3& x) const { return amp * std::exp(-(x - c).squaredNorm() / w2); }
    Vec3 grad(const Vec3& x) const { return Vec3(-2.0 / w2 * (x - c) * value(x)); }
    Mat3 hess(const Vec3& x) const {
        Vec3 d = x - c;
        double v = value(x);
        Mat3 h = (4.0 / (w2 * w2)) * v * d * d.transpose();
        h.diagonal().array() -= 2.0 / w2 * v;
        return h;
    }
};

class GaussianElectric final : public PotentialModel {
public:
    GaussianElectric(double amp, double width, const Vec3& center)
        : g_{amp, width * width, center} {
        if (width <= 0) throw DomainError("parameter out of range: width");
    }
    double V(const Vec3& x) const override { return g_.value(x); }
    Vec3 grad_V(const Vec3& x) const override { return g_.grad(x); }
    Vec3 A(const Vec3&) const override { return Vec3::Zero(); }
    Mat3 jac_A(const Vec3&) const override { return Mat3::Zero(); }
    double rho_e() const override { return 25.0; }
    double rho_m() const override { return kAbsentDecay; }
    std::string kind() const override { return "gaussian"; }

private:
    Gaussian g_;
};

class GaussianMagnetic final : public PotentialModel {
public:
    GaussianMagnetic(double amp, double width, const Vec3& center)
        : g_{amp, width * width, center} {
        if (width <= 0) throw DomainError("parameter out of range: width");
    }
    double V(const Vec3&) const override { return 0.0; }
    Vec3 grad_V(const Vec3&) const override { return Vec3::Zero(); }
    Vec3 A(const Vec3& x) const override {
        Vec3 g = g_.grad(x);
        return Vec3(g.y(), -g.x(), 0.0);
    }
    Mat3 jac_A(const Vec3& x) const override {
        Mat3 h = g_.hess(x);
        Mat3 j;
        for (int i = 0; i < 3; ++i) {
            j(i, 0) = h(i, 1);  // d_i d_2 phi
            j(i, 1) = -h(i, 0); // -d_i d_1 phi
            j(i, 2) = 0.0;
        }
        return j;
    }
    double rho_e() const override { return kAbsentDecay; }
    double rho_m() const override { return 25.0; }
    std::string kind() const override { return "gaussian"; }

private:
    Gaussian g_;
};

class TailElectric final : public PotentialModel {
public:
    TailElectric(double amp, double order, double cut, std::vector<AngularTerm> ang)
        : amp_(amp), rho_(order), cut_(cut), ang_(std::move(ang)) {
        if (!(order > 1.0)) throw DomainError("parameter out of range: order must exceed 1");
        if (cut <= 0) throw DomainError("parameter out of range: cut_radius");
    }
    double V(const Vec3& x) const override {
        double r = x.norm();
        if (r <= 0.5 * cut_) return 0.0;
        return radial(r) * angular(x / r);
    }
    Vec3 grad_V(const Vec3& x) const override {
        double r = x.norm();
        if (r <= 0.5 * cut_) return Vec3::Zero();
        Vec3 xhat = x / r;
        Vec3 g = radial_prime(r) * angular(xhat) * xhat;
        for (const auto& t : ang_) g += radial(r) * t.coef * real_sh_grad(t.l, t.m, x);
        return g;
    }
    Vec3 A(const Vec3&) const override { return Vec3::Zero(); }
    Mat3 jac_A(const Vec3&) const override { return Mat3::Zero(); }
    double rho_e() const override { return rho_; }
    double rho_m() const override { return kAbsentDecay; }
    std::string kind() const override { return "homogeneous-tail"; }

    double order() const { return rho_; }
    double cut_radius() const { return cut_; }

private:
    double radial(double r) const { return amp_ * cap(r / cut_) * std::pow(r, -rho_); }
    double radial_prime(double r) const {
        return amp_ * (cap_prime(r / cut_) / cut_ * std::pow(r, -rho_) -
                       rho_ * cap(r / cut_) * std::pow(r, -rho_ - 1.0));
    }
    double angular(const Vec3& xhat) const {
        double s = 0;
        for (const auto& t : ang_) s += t.coef * real_sh(t.l, t.m, xhat);
        return s;
    }
    double amp_, rho_, cut_;
    std::vector<AngularTerm> ang_;
};

class TailMagnetic final : public PotentialModel {
public:
    TailMagnetic(double amp, double order, double cut, int axis, int l, int m)
        : amp_(amp), r_(order), cut_(cut), axis_(axis), l_(l), m_(m) {
        if (!(order > 2.0)) throw DomainError("parameter out of range: magnetic order must exceed 2");
        if (cut <= 0) throw DomainError("parameter out of range: cut_radius");
        if (axis < 0 || axis > 2) throw DomainError("parameter out of range: axis");
    }
    double V(const Vec3&) const override { return 0.0; }
    Vec3 grad_V(const Vec3&) const override { return Vec3::Zero(); }
    Vec3 A(const Vec3& x) const override {
        Vec3 a = Vec3::Zero();
        a[axis_] = scalar(x);
        return a;
    }
    Mat3 jac_A(const Vec3& x) const override {
        Mat3 j = Mat3::Zero();
        Vec3 g = scalar_grad(x);
        for (int i = 0; i < 3; ++i) j(i, axis_) = g[i];
        return j;
    }
    double rho_e() const override { return kAbsentDecay; }
    double rho_m() const override { return r_ - 1.0; }
    std::string kind() const override { return "homogeneous-tail"; }

    double order() const { return r_; }
    double cut_radius() const { return cut_; }

private:
    // A_axis = amp cap(r/cut) r^{-(order-1)} Y_lm(x-hat)
    double scalar(const Vec3& x) const {
        double r = x.norm();
        if (r <= 0.5 * cut_) return 0.0;
        return amp_ * cap(r / cut_) * std::pow(r, -(r_ - 1.0)) * real_sh(l_, m_, x / r);
    }
    Vec3 scalar_grad(const Vec3& x) const {
        double r = x.norm();
        if (r <= 0.5 * cut_) return Vec3::Zero();
        Vec3 xhat = x / r;
        double p = -(r_ - 1.0);
        double rad = amp_ * cap(r / cut_) * std::pow(r, p);
        double radp = amp_ * (cap_prime(r / cut_) / cut_ * std::pow(r, p) +
                              p * cap(r / cut_) * std::pow(r, p - 1.0));
        return radp * real_sh(l_, m_, xhat) * xhat + rad * real_sh_grad(l_, m_, x);
    }
    double amp_, r_, cut_;
    int axis_, l_, m_;
};

class PureGauge final : public PotentialModel {
public:
    PureGauge(double amp, double width, const Vec3& center) : g_{amp, width * width, center} {
        if (width <= 0) throw DomainError("parameter out of range: width");
    }
    double V(const Vec3&) const override { return 0.0; }
    Vec3 grad_V(const Vec3&) const override { return Vec3::Zero(); }
    Vec3 A(const Vec3& x) const override { return g_.grad(x); }
    Mat3 jac_A(const Vec3& x) const override { return g_.hess(x); }
    double rho_e() const override { return kAbsentDecay; }
    double rho_m() const override { return 25.0; }
    std::string kind() const override { return "pure-gauge"; }

    double psi(const Vec3& x) const { return g_.value(x); }

private:
    Gaussian g_;
};

class SumModel final : public PotentialModel {
public:
    explicit SumModel(std::vector<ModelPtr> terms) : terms_(std::move(terms)) {
        if (terms_.empty()) throw DomainError("parameter out of range: empty sum");
    }
    double V(const Vec3& x) const override {
        double s = 0;
        for (const auto& t : terms_) s += t->V(x);
        return s;
    }
    Vec3 grad_V(const Vec3& x) const override {
        Vec3 s = Vec3::Zero();
        for (const auto& t : terms_) s += t->grad_V(x);
        return s;
    }
    Vec3 A(const Vec3& x) const override {
        Vec3 s = Vec3::Zero();
        for (const auto& t : terms_) s += t->A(x);
        return s;
    }
    Mat3 jac_A(const Vec3& x) const override {
        Mat3 s = Mat3::Zero();
        for (const auto& t : terms_) s += t->jac_A(x);
        return s;
    }
    double rho_e() const override {
        double r = kAbsentDecay;
        for (const auto& t : terms_) r = std::min(r, t->rho_e());
        return r;
    }
    double rho_m() const override {
        double r = kAbsentDecay;
        for (const auto& t : terms_) r = std::min(r, t->rho_m());
        return r;
    }
    std::string kind() const override { return "sum"; }

private:
    std::vector<ModelPtr> terms_;
};

class ZeroModel final : public PotentialModel {
public:
    double V(const Vec3&) const override { return 0.0; }
    Vec3 grad_V(const Vec3&) const override { return Vec3::Zero(); }
    Vec3 A(const Vec3&) const override { return Vec3::Zero(); }
    Mat3 jac_A(const Vec3&) const override { return Mat3::Zero(); }
    double rho_e() const override { return kAbsentDecay; }
    double rho_m() const override { return kAbsentDecay; }
    std::string kind() const override { return "zero"; }
};

} // namespace

ModelPtr make_gaussian_electric(double a, double w, const Vec3& c) {
    return std::make_shared<GaussianElectric>(a, w, c);
}
ModelPtr make_gaussian_magnetic(double a, double w, const Vec3& c) {
    return std::make_shared<GaussianMagnetic>(a, w, c);
}
ModelPtr make_tail_electric(double a, double o, double cut, const std::vector<AngularTerm>& ang) {
    return std::make_shared<TailElectric>(a, o, cut, ang);
}
ModelPtr make_tail_magnetic(double a, double o, double cut, int axis, int l, int m) {
    return std::make_shared<TailMagnetic>(a, o, cut, axis, l, m);
}
ModelPtr make_pure_gauge(double a, double w, const Vec3& c) {
    return std::make_shared<PureGauge>(a, w, c);
}
ModelPtr make_sum(std::vector<ModelPtr> terms) { return std::make_shared<SumModel>(std::move(terms)); }
ModelPtr make_zero_model() { return std::make_shared<ZeroModel>(); }

ModelPtr with_gauge_shift(ModelPtr base, ModelPtr pure_gauge) {
    return make_sum({std::move(base), std::move(pure_gauge)});
}

double real_sh(int l, int m, const Vec3& u) {
    const double x = u.x(), y = u.y(), z = u.z();
    switch (l) {
        case 0: return 0.28209479177387814;
        case 1:
            if (m == -1) return 0.4886025119029199 * y;
            if (m == 0) return 0.4886025119029199 * z;
            if (m == 1) return 0.4886025119029199 * x;
            break;
        case 2:
            if (m == -2) return 1.0925484305920792 * x * y;
            if (m == -1) return 1.0925484305920792 * y * z;
            if (m == 0) return 0.31539156525252005 * (2 * z * z - x * x - y * y);
            if (m == 1) return 1.0925484305920792 * x * z;
            if (m == 2) return 0.5462742152960396 * (x * x - y * y);
            break;
    }
    throw DomainError("parameter out of range: spherical harmonic (l,m)");
}

Vec3 real_sh_grad(int l, int m, const Vec3& x) {
    if (l == 0) return Vec3::Zero();
    double r = x.norm();
    if (r == 0) throw DomainError("real_sh_grad: x = 0");
    Vec3 xhat = x / r;
    // Y(x-hat) = P(x)/r^l with P homogeneous of degree l:
    // grad = (grad P)/r^l - l P x / r^{l+2}.
    Vec3 gp;
    double p;
    const double a1 = 0.4886025119029199, a2 = 1.0925484305920792;
    const double a20 = 0.31539156525252005, a22 = 0.5462742152960396;
    switch (l * 10 + (m + l)) { // unique small key
        case 10: p = a1 * x.y(); gp = Vec3(0, a1, 0); break;          // (1,-1)
        case 11: p = a1 * x.z(); gp = Vec3(0, 0, a1); break;          // (1,0)
        case 12: p = a1 * x.x(); gp = Vec3(a1, 0, 0); break;          // (1,1)
        case 20: p = a2 * x.x() * x.y(); gp = a2 * Vec3(x.y(), x.x(), 0); break;
        case 21: p = a2 * x.y() * x.z(); gp = a2 * Vec3(0, x.z(), x.y()); break;
        case 22:
            p = a20 * (2 * x.z() * x.z() - x.x() * x.x() - x.y() * x.y());
            gp = a20 * Vec3(-2 * x.x(), -2 * x.y(), 4 * x.z());
            break;
        case 23: p = a2 * x.x() * x.z(); gp = a2 * Vec3(x.z(), 0, x.x()); break;
        case 24:
            p = a22 * (x.x() * x.x() - x.y() * x.y());
            gp = a22 * Vec3(2 * x.x(), -2 * x.y(), 0);
            break;
        default: throw DomainError("parameter out of range: spherical harmonic (l,m)");
    }
    double rl = std::pow(r, l);
    return gp / rl - (l * p / (rl * r)) * xhat;
}

void check_line_decay(const std::function<double(const Vec3&)>& f, const Direction& omega,
                      const Vec3& y) {
    std::vector<double> rs, vs;
    for (double t : {64.0, 128.0, 256.0, 512.0, 1024.0}) {
        double v = std::max(std::abs(f(y + t * omega.vec())), std::abs(f(y - t * omega.vec())));
        if (v > 0) {
            rs.push_back(t);
            vs.push_back(v);
        }
    }
    if (rs.size() < 3) return; // decayed below floor; certainly integrable
    double slope = loglog_slope(rs, vs);
    if (slope > -1.02) throw DomainError("non-integrable tail");
}

double cal_v(const PotentialModel& model, const Direction& omega, const Kinematics& kin,
             const Vec3& x) {
    return std::abs(kin.E) / kin.nu * model.V(x) + kin.sign * omega.dot(model.A(x));
}

double fourier_homogeneous_tail(double rho, double xi_mag) {
    if (!(rho > 1.0 && rho < 3.0)) throw DomainError("fourier_homogeneous_tail: rho outside (1,3)");
    if (!(xi_mag > 0.0)) throw DomainError("fourier_homogeneous_tail: |xi| must be positive");
    double c = std::pow(2.0, 3.0 - rho) * std::pow(pi, 1.5) * std::tgamma((3.0 - rho) / 2.0) /
               std::tgamma(rho / 2.0);
    return c * std::pow(xi_mag, -(3.0 - rho));
}

double gauge_eta(double r) { return smoothstep(2.0 * r - 1.0); }
double gauge_eta_prime(double r) { return 2.0 * smoothstep_prime(2.0 * r - 1.0); }

VectorField gauge_from_field(const VectorField& B, const GaugeOptions& opt) {
    if (opt.validate) {
        // Sampled divergence check (central differences).
        std::mt19937_64 rng(12345);
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        double scale = 0.0, worst = 0.0;
        for (int k = 0; k < 24; ++k) {
            Vec3 x(u(rng), u(rng), u(rng));
            const double h = 1e-4;
            double div = 0;
            for (int i = 0; i < 3; ++i) {
                Vec3 dp = x, dm = x;
                dp[i] += h;
                dm[i] -= h;
                div += (B(dp)[i] - B(dm)[i]) / (2 * h);
            }
            worst = std::max(worst, std::abs(div));
            scale = std::max(scale, B(x).norm());
        }
        if (worst > 1e-5 * std::max(scale, 1e-12)) throw DomainError("not divergence-free");
        // Decay check along a few rays: need r > 2.
        std::vector<double> rs, vs;
        for (double t : {8.0, 16.0, 32.0, 64.0}) {
            double v = 0;
            for (const Vec3& d : {Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(0.6, 0.48, 0.64)})
                v = std::max(v, B(t * d.normalized()).norm());
            if (v > 1e-300) {
                rs.push_back(t);
                vs.push_back(v);
            }
        }
        if (rs.size() >= 3 && loglog_slope(rs, vs) > -2.02) throw DomainError("insufficient decay");
    }

    auto a_reg = [B, opt](const Vec3& x) -> Vec3 {
        auto f = [&](double u) -> Vec3 {
            if (u <= 0) return Vec3::Zero();
            return Vec3(std::pow(u, -3.0) * x.cross(B(x / u)));
        };
        return integrate(f, 0.0, 1.0, opt.quad);
    };
    auto a_inf = [B, opt](const Vec3& x) -> Vec3 {
        auto near = [&](double s) -> Vec3 { return Vec3(s * x.cross(B(s * x))); };
        auto far = [&](double u) -> Vec3 {
            if (u <= 0) return Vec3::Zero();
            return Vec3(std::pow(u, -3.0) * x.cross(B(x / u)));
        };
        return Vec3(-(integrate(near, 0.0, 1.0, opt.quad) + integrate(far, 0.0, 1.0, opt.quad)));
    };
    auto u_line = [a_inf, opt](const Vec3& x) -> double {
        auto seg = [&](const Vec3& p, const Vec3& q) {
            auto f = [&](double t) { return a_inf(Vec3(p + t * (q - p))).dot(Vec3(q - p)); };
            return integrate_segment(f, opt.quad);
        };
        // Straight segment x0 -> x, with a detour when it passes near the origin.
        Vec3 d = x - opt.x0;
        double t_star = std::clamp(-opt.x0.dot(d) / std::max(d.squaredNorm(), 1e-300), 0.0, 1.0);
        double clearance = (opt.x0 + t_star * d).norm();
        if (clearance > opt.origin_clearance) return seg(opt.x0, x);
        return seg(opt.x0, opt.waypoint) + seg(opt.waypoint, x);
    };

    return [a_reg, a_inf, u_line](const Vec3& x) -> Vec3 {
        double r = x.norm();
        double eta = gauge_eta(r);
        Vec3 a = a_reg(x);
        if (eta < 1.0 && r > 0) {
            a += (1.0 - eta) * a_inf(x);
            double ep = gauge_eta_prime(r);
            if (ep != 0.0) a -= u_line(x) * ep * (x / r);
        }
        return a;
    };
}

namespace {

ModelPtr build_one(const nlohmann::json& j) {
    if (!j.contains("kind")) throw DomainError("unknown catalog entry: missing kind");
    std::string kind = j.at("kind").get<std::string>();
    auto get_or = [&j](const char* key, double dflt) {
        return j.contains(key) ? j.at(key).get<double>() : dflt;
    };
    Vec3 center = Vec3::Zero();
    if (j.contains("center")) {
        auto c = j.at("center");
        center = Vec3(c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>());
    }
    std::string field = j.contains("field") ? j.at("field").get<std::string>() : "electric";

    if (kind == "gaussian") {
        double amp = get_or("amplitude", 1.0), w = get_or("width", 1.0);
        if (field == "electric") return make_gaussian_electric(amp, w, center);
        if (field == "magnetic") return make_gaussian_magnetic(amp, w, center);
        throw DomainError("unknown catalog entry: field " + field);
    }
    if (kind == "homogeneous-tail") {
        double amp = get_or("amplitude", 1.0);
        double order = get_or("order", 2.0);
        double cut = get_or("cut_radius", 1.0);
        if (field == "electric") {
            std::vector<AngularTerm> ang;
            if (j.contains("angular"))
                for (const auto& t : j.at("angular"))
                    ang.push_back({t.at(0).get<int>(), t.at(1).get<int>(), t.at(2).get<double>()});
            else
                ang.push_back({0, 0, 1.0});
            return make_tail_electric(amp, order, cut, ang);
        }
        if (field == "magnetic") {
            int axis = j.contains("axis") ? j.at("axis").get<int>() : 2;
            int l = j.contains("l") ? j.at("l").get<int>() : 0;
            int m = j.contains("m") ? j.at("m").get<int>() : 0;
            return make_tail_magnetic(amp, order, cut, axis, l, m);
        }
        throw DomainError("unknown catalog entry: field " + field);
    }
    if (kind == "pure-gauge")
        return make_pure_gauge(get_or("amplitude", 1.0), get_or("width", 1.0), center);
    if (kind == "sum") {
        std::vector<ModelPtr> terms;
        for (const auto& t : j.at("terms")) terms.push_back(build_one(t));
        return make_sum(std::move(terms));
    }
    if (kind == "zero") return make_zero_model();
    throw DomainError("unknown catalog entry: " + kind);
}

} // namespace

ModelPtr build_potential_model(const nlohmann::json& spec) { return build_one(spec); }

ModelPtr load_potential_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DomainError("cannot open potential file: " + path);
    nlohmann::json j;
    in >> j;
    return build_potential_model(j);
}

} // namespace dirsc
