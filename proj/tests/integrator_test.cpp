#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "exprk/integrator.hpp"
#include "exprk/problems.hpp"

using exprk::LinearProblem;
using exprk::Matrix;
using exprk::Vector;

namespace {

Matrix random_matrix(Eigen::Index n, unsigned seed, double scale = 1.0)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Matrix m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = scale * dist(gen);
    return m;
}

LinearProblem random_problem(Eigen::Index n, unsigned seed, double t_final = 1.0)
{
    Matrix m = random_matrix(n, seed);
    LinearProblem prob;
    prob.a = m.transpose() * m + Matrix::Identity(n, n);
    Matrix b = random_matrix(n, seed + 1000);
    prob.b = b * (0.9 * std::sqrt(exprk::norm2(prob.a)) / exprk::norm2(b));
    prob.u0 = Vector::LinSpaced(n, -1.0, 1.0);
    prob.t_final = t_final;
    return prob;
}

} // namespace

TEST_CASE("precompute plan contents")
{
    Matrix a = random_matrix(5, 3).transpose() * random_matrix(5, 3) + Matrix::Identity(5, 5);
    const double tau = 0.2;

    SECTION("exponential Euler plan is e^{-tau A} and phi_1(-tau A)")
    {
        auto plan = exprk::precompute(exprk::exp_euler_tableau(), tau, a);
        CHECK((plan.propagators[1] - exprk::expm(Matrix(-tau * a))).norm() < 1e-13);
        CHECK((plan.b[0] - exprk::phi(1, Matrix(-tau * a))).norm() <= 1e-12);
    }

    SECTION("duplicate nodes share one propagator")
    {
        auto plan = exprk::precompute(exprk::erk43_tableau(), tau, a);
        CHECK(plan.propagators[1] == plan.propagators[2]); // c_2 = c_3 = 1/2
        CHECK((plan.propagators[0] - Matrix::Identity(5, 5)).norm() == 0.0);
    }

    SECTION("a different tau gives a different plan")
    {
        auto p1 = exprk::precompute(exprk::erk43_tableau(), tau, a);
        auto p2 = exprk::precompute(exprk::erk43_tableau(), 2 * tau, a);
        CHECK((p1.propagators[3] - p2.propagators[3]).norm() > 0.0);
    }
}

TEST_CASE("single step behavior")
{
    SECTION("B = 0 collapses to the semigroup")
    {
        Matrix a = random_matrix(6, 5);
        Vector u = Vector::Ones(6);
        auto plan = exprk::precompute(exprk::erk43_tableau(), 0.1, a);
        Vector u1 = exprk::step(plan, Matrix::Zero(6, 6), u);
        CHECK((u1 - exprk::expm(Matrix(-0.1 * a)) * u).norm() <= 1e-13);
    }

    SECTION("scalar problem, one step has local error O(tau^4)")
    {
        Matrix a{{ 1.0 }}, b{{ 0.5 }};
        auto plan = exprk::precompute(exprk::erk43_tableau(), 0.1, a);
        Vector u1 = exprk::step(plan, b, Vector::Ones(1));
        const double exact = std::exp(-0.05);
        CHECK(std::abs(u1(0) - exact) <= std::pow(0.1, 4));
    }

    SECTION("A = 0 reduces to the underlying classical RK method")
    {
        // hand-computed update for u' = u, tau = 0.1 with the phi_k(0) = 1/k!
        // coefficients: c = (0,1/2,1/2,1), a = [[1/2],[1/4,1/4],[0,1,0]],
        // b = (1/6, 0, 2/3, 1/6)
        const double tau = 0.1;
        const double s1 = 1.0;
        const double s2 = 1.0 + tau * 0.5 * s1;
        const double s3 = 1.0 + tau * (0.25 * s1 + 0.25 * s2);
        const double s4 = 1.0 + tau * s2;
        const double expected = 1.0 + tau * (s1 / 6.0 + 2.0 * s3 / 3.0 + s4 / 6.0);

        Matrix a{{ 0.0 }}, b{{ 1.0 }};
        auto plan = exprk::precompute(exprk::erk43_tableau(), tau, a);
        Vector u1 = exprk::step(plan, b, Vector::Ones(1));
        CHECK(u1(0) == Catch::Approx(expected).epsilon(1e-14));
        CHECK(std::abs(u1(0) - std::exp(tau)) <= std::pow(tau, 4));
    }

    SECTION("dimension mismatch is rejected")
    {
        Matrix a = random_matrix(4, 7);
        auto plan = exprk::precompute(exprk::erk43_tableau(), 0.1, a);
        CHECK_THROWS_AS(exprk::step(plan, Matrix::Zero(3, 3), Vector::Zero(4)),
                        std::invalid_argument);
        CHECK_THROWS_AS(exprk::step(plan, Matrix::Zero(4, 4), Vector::Zero(5)),
                        std::invalid_argument);
    }

    SECTION("stepping is deterministic under plan reuse")
    {
        Matrix a = random_matrix(6, 9);
        Matrix b = random_matrix(6, 10, 0.3);
        Vector u = Vector::LinSpaced(6, 0.0, 1.0);
        auto plan = exprk::precompute(exprk::erk43_tableau(), 0.05, a);
        Vector r1 = exprk::step(plan, b, u);
        Vector r2 = exprk::step(plan, b, u);
        CHECK(r1 == r2);
    }
}

TEST_CASE("one-step order of erk43 on a scalar problem")
{
    Matrix a{{ 1.0 }}, b{{ 0.5 }};
    std::vector<std::pair<double, double>> pts;
    for (int k = 4; k <= 10; ++k) {
        const double tau = std::ldexp(1.0, -k);
        auto plan = exprk::precompute(exprk::erk43_tableau(), tau, a);
        Vector u1 = exprk::step(plan, b, Vector::Ones(1));
        pts.emplace_back(std::log(tau), std::log(std::abs(u1(0) - std::exp(-0.5 * tau))));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) { sx += x; sy += y; sxx += x * x; sxy += x * y; }
    const double m = pts.size();
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    CHECK(slope > 3.9);
    CHECK(slope < 4.1);
}

TEST_CASE("integrate")
{
    SECTION("exact for B = 0, any tableau")
    {
        LinearProblem prob = random_problem(7, 60, 0.5);
        prob.b.setZero();
        for (const char* name : { "erk43", "etd3rk", "exp-euler" }) {
            Vector u = exprk::integrate(exprk::builtin_tableau(name), prob, 1.0 / 16);
            Vector exact = exprk::expm(Matrix(-prob.t_final * prob.a)) * prob.u0;
            CHECK((u - exact).norm() <= 1e-10 * prob.u0.norm());
        }
    }

    SECTION("non-divisible tau is a configuration error")
    {
        LinearProblem prob = random_problem(4, 61);
        CHECK_THROWS_AS(exprk::integrate(exprk::erk43_tableau(), prob, 0.3),
                        std::invalid_argument);
    }

    SECTION("linear in the initial state")
    {
        LinearProblem prob = random_problem(6, 62, 0.25);
        const double alpha = 1.7;
        Vector v0 = Vector::Ones(6);
        Vector lhs, rhs;
        {
            LinearProblem p = prob;
            p.u0 = alpha * prob.u0 + v0;
            lhs = exprk::integrate(exprk::erk43_tableau(), p, 1.0 / 32);
        }
        {
            LinearProblem p = prob;
            rhs = alpha * exprk::integrate(exprk::erk43_tableau(), p, 1.0 / 32);
            p.u0 = v0;
            rhs += exprk::integrate(exprk::erk43_tableau(), p, 1.0 / 32);
        }
        CHECK((lhs - rhs).norm() <= 1e-12 * rhs.norm());
    }

    SECTION("matches the expm oracle on mild random problems")
    {
        for (unsigned seed : { 70u, 71u }) {
            LinearProblem prob = random_problem(10, seed);
            Vector u = exprk::integrate(exprk::erk43_tableau(), prob, 1e-3);
            Vector exact = exprk::exact_solution(prob, prob.t_final);
            CHECK((u - exact).norm() <= 1e-8 * exact.norm());
        }
    }
}

TEST_CASE("phi_action path agrees with the dense path")
{
    LinearProblem prob = random_problem(10, 80, 0.25);
    for (const char* name : { "erk43", "etd3rk", "exp-euler" }) {
        auto tab = exprk::builtin_tableau(name);
        Vector dense = exprk::integrate(tab, prob, 1.0 / 16);
        Vector action = exprk::integrate_phi_action(tab, prob, 1.0 / 16);
        CHECK((dense - action).norm() <= 1e-10 * dense.norm());
    }
}

TEST_CASE("exact_solution")
{
    LinearProblem prob = random_problem(6, 90, 2.0);

    CHECK(exprk::exact_solution(prob, 0.0) == prob.u0);
    CHECK_THROWS_AS(exprk::exact_solution(prob, -0.1), std::invalid_argument);

    SECTION("B = A freezes the state")
    {
        LinearProblem p = prob;
        p.b = p.a;
        for (double t : { 0.3, 1.0, 2.0 })
            CHECK((exprk::exact_solution(p, t) - p.u0).norm() <= 1e-12 * p.u0.norm());
    }

    SECTION("cross-check against a fine RK4 run")
    {
        LinearProblem p = random_problem(6, 91, 0.5);
        Vector exact = exprk::exact_solution(p, p.t_final);
        Vector rk4 = exprk::rk4_reference(p, 1e-4);
        CHECK((exact - rk4).norm() <= 1e-9 * exact.norm());
    }
}

TEST_CASE("rk4_reference")
{
    SECTION("scalar single step")
    {
        LinearProblem p;
        p.a = Matrix{{ 1.0 }};
        p.b = Matrix::Zero(1, 1);
        p.u0 = Vector::Ones(1);
        p.t_final = 0.1;
        Vector u = exprk::rk4_reference(p, 0.1);
        CHECK(u(0) == Catch::Approx(0.90483750).epsilon(1e-8));
    }

    SECTION("A = B and zero right-hand side leave u0 unchanged")
    {
        LinearProblem p = random_problem(5, 95);
        p.b = p.a;
        CHECK(exprk::rk4_reference(p, 0.25) == p.u0);
        p.a.setZero();
        p.b.setZero();
        CHECK(exprk::rk4_reference(p, 0.25) == p.u0);
    }

    SECTION("instability on a stiff system fails loudly")
    {
        exprk::AdvectionDiffusionSpec spec;
        spec.n = 99;
        LinearProblem p = exprk::build_advection_diffusion(spec);
        CHECK_THROWS_WITH(exprk::rk4_reference(p, 0.25),
                          Catch::Matchers::ContainsSubstring("instability")
                              && Catch::Matchers::ContainsSubstring("0.25"));
    }
}
