#include "dirsc/symmetry.hpp"

#include <cmath>
#include <random>

namespace dirsc {

std::string symmetry_name(SymmetryKind k) {
    switch (k) {
        case SymmetryKind::Parity: return "parity";
        case SymmetryKind::ChargeConjugation: return "charge-conjugation";
        case SymmetryKind::TimeReversal: return "time-reversal";
        case SymmetryKind::TP: return "TP";
        case SymmetryKind::CT: return "CT";
        case SymmetryKind::CTP: return "CTP";
        case SymmetryKind::Gauge: return "gauge";
    }
    return "?";
}

SymmetryCase symmetry_case(SymmetryKind k) {
    SymmetryCase c;
    c.kind = k;
    switch (k) {
        case SymmetryKind::Parity: c.potential_condition = "V even, A odd"; break;
        case SymmetryKind::ChargeConjugation: c.potential_condition = "V odd, A even"; break;
        case SymmetryKind::TimeReversal: c.potential_condition = "A = 0"; break;
        case SymmetryKind::TP: c.potential_condition = "V even, A even"; break;
        case SymmetryKind::CT: c.potential_condition = "V = 0"; break;
        case SymmetryKind::CTP: c.potential_condition = "V odd, A odd"; break;
        case SymmetryKind::Gauge: c.potential_condition = "none"; break;
    }
    return c;
}

double hypothesis_asymmetry(SymmetryKind k, const PotentialModel& model) {
    std::mt19937_64 rng(7771);
    std::uniform_real_distribution<double> u(-2.5, 2.5);
    double worst = 0;
    auto upd = [&worst](double v) { worst = std::max(worst, v); };
    for (int i = 0; i < 32; ++i) {
        Vec3 x(u(rng), u(rng), u(rng));
        double v = model.V(x), vm = model.V(-x);
        Vec3 a = model.A(x), am = model.A(-x);
        switch (k) {
            case SymmetryKind::Parity: // V even, A odd
                upd(std::abs(v - vm));
                upd((a + am).norm());
                break;
            case SymmetryKind::ChargeConjugation: // V odd, A even
                upd(std::abs(v + vm));
                upd((a - am).norm());
                break;
            case SymmetryKind::TimeReversal: upd(a.norm()); break;
            case SymmetryKind::TP:
                upd(std::abs(v - vm));
                upd((a - am).norm());
                break;
            case SymmetryKind::CT: upd(std::abs(v)); break;
            case SymmetryKind::CTP:
                upd(std::abs(v + vm));
                upd((a + am).norm());
                break;
            case SymmetryKind::Gauge: break;
        }
    }
    return worst;
}

void check_hypothesis(SymmetryKind k, const PotentialModel& model, double tol) {
    double asym = hypothesis_asymmetry(k, model);
    if (asym > tol)
        throw DomainError("parity precondition violated: measured asymmetry " +
                          std::to_string(asym));
}

namespace {

Mat4 conj_mat(const Mat4& m) { return m.conjugate(); }

std::shared_ptr<TransportExpansion> make_exp(ModelPtr model, const Direction& w,
                                             const Kinematics& kin, int sign, int N) {
    return std::make_shared<TransportExpansion>(std::move(model), w, kin, sign, N);
}

} // namespace

double pointwise_residual(SymmetryKind k, ModelPtr model, const Kinematics& kin, int N,
                          const std::vector<Vec3>& samples,
                          const std::vector<Direction>& directions) {
    check_hypothesis(k, *model);
    const auto& dm = dirac_matrices();
    const Mat4& beta = dm.beta;
    Mat4 a2 = dm.alpha[1];
    Mat4 a13 = dm.alpha[0] * dm.alpha[2];
    Mat4 a13b = a13 * beta;
    const Mat4& gam = gamma_matrix();
    Kinematics kin_neg = kinematics(-kin.E, kin.m);

    double worst = 0;
    for (const auto& w : directions) {
        Direction wneg = -w;
        for (int s : {+1, -1}) {
            // Left-hand side expansion and its symmetry image.
            auto lhs = make_exp(model, w, kin, s, N);
            std::shared_ptr<TransportExpansion> rhs;
            // (point map, whether to conjugate lhs)
            auto map_x = [&](const Vec3& x) -> Vec3 {
                switch (k) {
                    case SymmetryKind::Parity: return -x;
                    case SymmetryKind::ChargeConjugation: return -x;
                    case SymmetryKind::TimeReversal: return x;
                    case SymmetryKind::TP: return -x;
                    case SymmetryKind::CT: return x;
                    case SymmetryKind::CTP: return -x;
                    default: return x;
                }
            };
            switch (k) {
                case SymmetryKind::Parity: rhs = make_exp(model, wneg, kin, s, N); break;
                case SymmetryKind::ChargeConjugation: rhs = make_exp(model, w, kin_neg, s, N); break;
                case SymmetryKind::TimeReversal: rhs = make_exp(model, wneg, kin, -s, N); break;
                case SymmetryKind::TP: rhs = make_exp(model, w, kin, -s, N); break;
                case SymmetryKind::CT: rhs = make_exp(model, w, kin_neg, -s, N); break;
                case SymmetryKind::CTP: rhs = make_exp(model, wneg, kin_neg, -s, N); break;
                default: throw DomainError("pointwise_residual: use gauge_residual for gauge");
            }
            for (const auto& x : samples) {
                Vec3 xm = map_x(x);
                // Phase identity
                double lphase = lhs->phase(x);
                double rphase = rhs->phase(xm);
                double phase_res;
                switch (k) {
                    case SymmetryKind::Parity: phase_res = std::abs(lphase - rphase); break;
                    case SymmetryKind::ChargeConjugation:
                    case SymmetryKind::TimeReversal:
                    case SymmetryKind::TP: phase_res = std::abs(-lphase - rphase); break;
                    case SymmetryKind::CT:
                    case SymmetryKind::CTP: phase_res = std::abs(lphase - rphase); break;
                    default: phase_res = 0;
                }
                worst = std::max(worst, phase_res);
                for (int j = 1; j <= N; ++j) {
                    Mat4 bl = lhs->b(j, x), cl = lhs->c(j, x);
                    Mat4 br = rhs->b(j, xm), cr = rhs->c(j, xm);
                    Mat4 rb, rc;
                    switch (k) {
                        case SymmetryKind::Parity:
                            rb = beta * bl - br * beta;
                            rc = beta * cl - cr * beta;
                            break;
                        case SymmetryKind::ChargeConjugation:
                            rb = a2 * conj_mat(bl) - br * a2;
                            rc = a2 * conj_mat(cl) - cr * a2;
                            break;
                        case SymmetryKind::TimeReversal:
                            rb = a13 * conj_mat(bl) - br * a13;
                            rc = a13 * conj_mat(cl) - cr * a13;
                            break;
                        case SymmetryKind::TP:
                            rb = a13b * conj_mat(bl) - br * a13b;
                            rc = a13b * conj_mat(cl) - cr * a13b;
                            break;
                        case SymmetryKind::CT:
                            rb = gam * bl - br * gam;
                            rc = gam * cl - cr * gam;
                            break;
                        case SymmetryKind::CTP:
                            rb = gam * beta * bl - br * gam * beta;
                            rc = gam * beta * cl - cr * gam * beta;
                            break;
                        default: break;
                    }
                    worst = std::max(worst, max_abs(rb));
                    worst = std::max(worst, max_abs(rc));
                }
            }
        }
    }
    return worst;
}

SymmetricGridPlan symmetric_grid_plan(SymmetryKind k,
                                      const std::vector<std::pair<Direction, Direction>>& base) {
    SymmetricGridPlan plan;
    plan.pairs_a = base;
    for (const auto& [w, t] : base) {
        switch (k) {
            case SymmetryKind::Parity:
                plan.pairs_b.emplace_back(-w, -t);
                plan.branch_b = -1;
                break;
            case SymmetryKind::ChargeConjugation:
                plan.pairs_b.emplace_back(w, t);
                plan.flip_energy = true;
                break;
            case SymmetryKind::TimeReversal:
                plan.pairs_b.emplace_back(-t, -w);
                plan.branch_b = -1;
                break;
            case SymmetryKind::TP: plan.pairs_b.emplace_back(t, w); break;
            case SymmetryKind::CT:
                plan.pairs_b.emplace_back(t, w);
                plan.flip_energy = true;
                break;
            case SymmetryKind::CTP:
                plan.pairs_b.emplace_back(-t, -w);
                plan.branch_b = -1;
                plan.flip_energy = true;
                break;
            default: throw DomainError("symmetric_grid_plan: unsupported case");
        }
    }
    return plan;
}

double kernel_residual(SymmetryKind k, const KernelGrid& a, const KernelGrid& b) {
    if (a.samples.size() != b.samples.size())
        throw DomainError("sample set not closed under symmetry");
    SymmetricGridPlan plan;
    {
        std::vector<std::pair<Direction, Direction>> base;
        for (const auto& s : a.samples) base.emplace_back(s.omega, s.theta);
        plan = symmetric_grid_plan(k, base);
    }
    for (size_t i = 0; i < b.samples.size(); ++i) {
        if ((b.samples[i].omega.vec() - plan.pairs_b[i].first.vec()).norm() > 1e-12 ||
            (b.samples[i].theta.vec() - plan.pairs_b[i].second.vec()).norm() > 1e-12)
            throw DomainError("sample set not closed under symmetry");
    }
    if (plan.flip_energy && std::abs(b.kin.E + a.kin.E) > 1e-12)
        throw DomainError("sample set not closed under symmetry: need -E grid");

    const auto& dm = dirac_matrices();
    const Mat4& beta = dm.beta;
    Mat4 a2 = dm.alpha[1];
    Mat4 a13 = dm.alpha[0] * dm.alpha[2];
    Mat4 a13b = a13 * beta;
    const Mat4& gam = gamma_matrix();

    double worst = 0;
    for (size_t i = 0; i < a.samples.size(); ++i) {
        const Mat4& ga = a.samples[i].g;
        const Mat4& gb = b.samples[i].g;
        Mat4 res;
        switch (k) {
            case SymmetryKind::Parity: res = ga - beta * gb * beta; break;
            case SymmetryKind::ChargeConjugation: res = conj_mat(ga) - a2 * gb * a2; break;
            case SymmetryKind::TimeReversal:
                res = a13 * conj_mat(ga) - gb.adjoint() * a13;
                break;
            case SymmetryKind::TP: res = a13b * conj_mat(ga) - gb.adjoint() * a13b; break;
            case SymmetryKind::CT: res = ga - gam * gb.adjoint() * gam; break;
            case SymmetryKind::CTP: res = ga - beta * gam * gb.adjoint() * gam * beta; break;
            default: throw DomainError("kernel_residual: unsupported case");
        }
        worst = std::max(worst, max_abs(res));
    }
    return worst;
}

double gauge_residual(ModelPtr model, ModelPtr pure_gauge, const Kinematics& kin, int N,
                      const std::vector<Vec3>& samples, const Direction& omega,
                      const Direction& theta, const Direction& omega0) {
    ModelPtr shifted = with_gauge_shift(model, std::move(pure_gauge));
    TransportExpansion ep(model, omega, kin, +1, N);
    TransportExpansion em(model, theta, kin, -1, N);
    TransportExpansion ep2(shifted, omega, kin, +1, N);
    TransportExpansion em2(shifted, theta, kin, -1, N);
    double worst = 0;
    for (const auto& y : samples) {
        Mat4 h1 = h_integrand(ep, em, omega0, y);
        Mat4 h2 = h_integrand(ep2, em2, omega0, y);
        worst = std::max(worst, max_abs(h1, h2));
    }
    return worst;
}

} // namespace dirsc
