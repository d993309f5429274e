#ifndef EXPRK_INTEGRATOR_HPP
#define EXPRK_INTEGRATOR_HPP

#include <cmath>
#include <optional>
#include <stdexcept>

#include "matfun.hpp"
#include "tableau.hpp"

namespace exprk {

struct Grid1D {
    int n = 0;          // interior point count
    double h = 0.0;     // spacing 1/(n+1)

    explicit Grid1D(int n_) : n(n_), h(1.0 / (n_ + 1))
    {
        if (n < 1) throw std::invalid_argument("Grid1D: need at least one interior point");
    }
    double x(int i) const { return (i + 1) * h; } // i = 0..n-1
};

/// u' + A u = B u, u(0) = u0, on [0, T].
struct LinearProblem {
    Matrix a;
    Matrix b;
    Vector u0;
    double t_final = 0.0;
    std::optional<Grid1D> grid;

    void validate() const
    {
        detail::require_square_finite(a, "LinearProblem.A");
        detail::require_square_finite(b, "LinearProblem.B");
        if (a.rows() != b.rows() || a.rows() != u0.size())
            throw std::invalid_argument("LinearProblem: dimension mismatch between A, B, u0");
        if (!(t_final > 0.0) || !std::isfinite(t_final))
            throw std::invalid_argument("LinearProblem: T must be finite and positive");
    }
};

/// All matrices of the scheme evaluated once for a fixed (tableau, tau, A);
/// stepping is then matrix-vector products only.
struct StepperPlan {
    MethodTableau tableau;
    double tau = 0.0;
    Eigen::Index dim = 0;
    std::vector<Matrix> propagators;       // e^{-c_i tau A} per stage (shared nodes deduplicated upstream of storage cost)
    std::vector<std::vector<Matrix>> a;    // a_ij(-tau A), strictly lower triangular
    std::vector<Matrix> b;                 // b_i(-tau A)
};

inline StepperPlan precompute(const MethodTableau& tab, double tau, const Matrix& a)
{
    if (!(tau > 0.0)) throw std::invalid_argument("precompute: tau must be positive");
    tab.validate();
    detail::require_square_finite(a, "precompute");

    StepperPlan plan;
    plan.tableau = tab;
    plan.tau = tau;
    plan.dim = a.rows();

    PhiCache cache(tau, a);
    const Eigen::Index n = a.rows();

    // distinct-node exponentials computed once, then shared
    std::map<double, Matrix> props;
    for (double ci : tab.c)
        if (props.find(ci) == props.end())
            props[ci] = ci == 0.0 ? Matrix(Matrix::Identity(n, n))
                                  : Matrix(expm(Matrix(-ci * tau * a)));
    if (props.find(1.0) == props.end())
        props[1.0] = expm(Matrix(-tau * a));
    for (double ci : tab.c) plan.propagators.push_back(props[ci]);
    plan.propagators.push_back(props[1.0]); // full-step propagator, index s

    plan.a.assign(tab.stages, {});
    for (int i = 0; i < tab.stages; ++i)
        for (int j = 0; j < i; ++j)
            plan.a[i].push_back(evaluate_coefficient(tab.a[i][j], cache, n));
    for (int i = 0; i < tab.stages; ++i)
        plan.b.push_back(evaluate_coefficient(tab.b[i], cache, n));
    return plan;
}

/// One step: U_i = e^{-c_i tau A} u + tau sum_j a_ij(-tau A) B U_j,
/// u+ = e^{-tau A} u + tau sum_i b_i(-tau A) B U_i.
inline Vector step(const StepperPlan& plan, const Matrix& b, const Vector& u)
{
    if (b.rows() != plan.dim || b.cols() != plan.dim || u.size() != plan.dim)
        throw std::invalid_argument("step: dimension mismatch with plan");

    const int s = plan.tableau.stages;
    std::vector<Vector> bu(s); // B U_i
    for (int i = 0; i < s; ++i) {
        Vector ui = plan.propagators[i] * u;
        for (int j = 0; j < i; ++j)
            ui += plan.tau * (plan.a[i][j] * bu[j]);
        bu[i] = b * ui;
    }
    Vector out = plan.propagators[s] * u;
    for (int i = 0; i < s; ++i)
        out += plan.tau * (plan.b[i] * bu[i]);
    return out;
}

namespace detail {

inline long step_count(double t_final, double tau, const char* who)
{
    const double ratio = t_final / tau;
    const long n = std::lround(ratio);
    // tau must divide T; allow only rounding slack so decimal steps like 1e-3 on T = 1 pass
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9 * ratio)
        throw std::invalid_argument(std::string(who) + ": tau = " + std::to_string(tau)
            + " does not divide T = " + std::to_string(t_final));
    return n;
}

} // namespace detail

inline Vector integrate(const MethodTableau& tab, const LinearProblem& prob, double tau)
{
    prob.validate();
    const long n = detail::step_count(prob.t_final, tau, "integrate");
    StepperPlan plan = precompute(tab, tau, prob.a);
    Vector u = prob.u0;
    for (long k = 0; k < n; ++k) u = step(plan, prob.b, u);
    return u;
}

/// Matrix-free variant of one step: every stage is a single phi_action on
/// the augmented matrix instead of precomputed coefficient matrices.
inline Vector step_phi_action(const MethodTableau& tab, double tau, const Matrix& a,
                              const Matrix& b, const Vector& u)
{
    const Eigen::Index n = a.rows();
    const int s = tab.stages;
    Matrix neg_a = -a;

    auto combine = [&](double scale, const Vector& v0,
                       const std::vector<const PhiCombo*>& combos,
                       const std::vector<Vector>& gs) {
        int kmax = 0;
        for (const PhiCombo* c : combos)
            for (const PhiTerm& t : *c) kmax = std::max(kmax, t.phi_index);
        std::vector<Vector> vk(kmax, Vector::Zero(n));
        const double ts = scale * tau;
        // tau * w * phi_k(-ts A) g enters phi_action as v_k = tau w g / ts^k
        for (size_t idx = 0; idx < combos.size(); ++idx)
            for (const PhiTerm& t : *combos[idx])
                vk[t.phi_index - 1] += (tau * t.weight / std::pow(ts, t.phi_index)) * gs[idx];
        return phi_action(neg_a, ts, v0, vk);
    };

    std::vector<Vector> bu(s);
    for (int i = 0; i < s; ++i) {
        const double ci = tab.c[i];
        Vector ui;
        if (ci == 0.0) {
            ui = u; // explicit first stage; a_ij with scale 0 cannot occur
        } else {
            std::vector<const PhiCombo*> combos;
            std::vector<Vector> gs;
            for (int j = 0; j < i; ++j) {
                combos.push_back(&tab.a[i][j]);
                gs.push_back(bu[j]);
            }
            ui = combine(ci, u, combos, gs);
        }
        bu[i] = b * ui;
    }
    std::vector<const PhiCombo*> combos;
    std::vector<Vector> gs;
    for (int i = 0; i < s; ++i) {
        combos.push_back(&tab.b[i]);
        gs.push_back(bu[i]);
    }
    return combine(1.0, u, combos, gs);
}

inline Vector integrate_phi_action(const MethodTableau& tab, const LinearProblem& prob,
                                   double tau)
{
    prob.validate();
    tab.validate();
    const long n = detail::step_count(prob.t_final, tau, "integrate_phi_action");
    Vector u = prob.u0;
    for (long k = 0; k < n; ++k)
        u = step_phi_action(tab, tau, prob.a, prob.b, u);
    return u;
}

/// u(t) = e^{-t(A-B)} u0.
inline Vector exact_solution(const LinearProblem& prob, double t)
{
    prob.validate();
    if (t < 0.0) throw std::invalid_argument("exact_solution: t must be >= 0");
    if (t == 0.0) return prob.u0;
    return expm(Matrix(-t * (prob.a - prob.b))) * prob.u0;
}

/// Classical RK4 on u' = (B - A) u; fails loudly when the explicit method
/// blows up on a stiff system.
inline Vector rk4_reference(const LinearProblem& prob, double tau)
{
    prob.validate();
    const long n = detail::step_count(prob.t_final, tau, "rk4_reference");
    const Matrix m = prob.b - prob.a;
    Vector u = prob.u0;
    for (long s = 0; s < n; ++s) {
        Vector k1 = m * u;
        Vector k2 = m * (u + 0.5 * tau * k1);
        Vector k3 = m * (u + 0.5 * tau * k2);
        Vector k4 = m * (u + tau * k3);
        u += (tau / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (u.cwiseAbs().maxCoeff() > 1e12)
            throw std::runtime_error("rk4_reference: instability at tau = "
                                     + std::to_string(tau) + " (state exceeded 1e12)");
    }
    return u;
}

} // namespace exprk

#endif
