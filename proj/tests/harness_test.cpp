#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <sstream>

#include "exprk/harness.hpp"

using exprk::ConvergenceConfig;
using exprk::ConvergenceReport;
using exprk::NormKind;

TEST_CASE("fit_order")
{
    SECTION("recovers an exact power law")
    {
        std::vector<std::pair<double, double>> rows;
        for (int k = 1; k <= 6; ++k) {
            const double tau = std::ldexp(1.0, -k);
            rows.emplace_back(tau, tau * tau * tau);
        }
        CHECK(exprk::fit_order(rows) == Catch::Approx(3.0).margin(1e-12));

        // any constant prefactor lands in the intercept
        for (auto& [tau, err] : rows) err *= 17.3;
        CHECK(exprk::fit_order(rows) == Catch::Approx(3.0).margin(1e-12));
    }

    SECTION("perturbed power law stays near its exponent")
    {
        std::vector<std::pair<double, double>> rows;
        for (int k = 1; k <= 8; ++k) {
            const double tau = std::ldexp(1.0, -k);
            rows.emplace_back(tau, std::pow(tau, 2.5) * (1.0 + 0.01 * std::sin(std::log(tau))));
        }
        const double slope = exprk::fit_order(rows);
        CHECK(slope > 2.45);
        CHECK(slope < 2.55);
    }

    SECTION("zero errors are excluded; too few rows fail")
    {
        std::vector<std::pair<double, double>> rows = {
            { 0.5, 0.125 }, { 0.25, 0.0 }, { 0.125, 0.001953125 }, { 0.0625, 0.000244140625 }
        };
        CHECK(exprk::fit_order(rows) == Catch::Approx(3.0).margin(1e-10));
        rows.resize(2);
        CHECK_THROWS_AS(exprk::fit_order(rows), std::runtime_error);
    }

    SECTION("invariant under row reordering")
    {
        std::vector<std::pair<double, double>> rows;
        std::mt19937 gen(5);
        for (int k = 1; k <= 7; ++k) {
            const double tau = std::ldexp(1.0, -k);
            rows.emplace_back(tau, std::pow(tau, 1.7));
        }
        const double before = exprk::fit_order(rows);
        std::shuffle(rows.begin(), rows.end(), gen);
        CHECK(exprk::fit_order(rows) == Catch::Approx(before).margin(1e-12));
    }
}

TEST_CASE("csv emit/parse round trip")
{
    ConvergenceReport rep;
    rep.method = "erk43";
    rep.norms = { NormKind::L1, NormKind::Linf };
    rep.rows.push_back({ 0.125, { { NormKind::L1, 1.25e-4 }, { NormKind::Linf, 3.5e-4 } } });
    rep.rows.push_back({ 0.0625, { { NormKind::L1, 1.5e-5 }, { NormKind::Linf, 4.25e-5 } } });
    rep.fitted_order[NormKind::L1] = 3.01;
    rep.fitted_order[NormKind::Linf] = 3.05;

    std::ostringstream out;
    exprk::emit_csv(rep, out);
    CHECK(out.str().rfind("tau,err_l1,err_linf\n", 0) == 0);

    std::istringstream in(out.str());
    ConvergenceReport back = exprk::parse_csv(in);
    REQUIRE(back.rows.size() == rep.rows.size());
    CHECK(back.norms == rep.norms);
    for (size_t i = 0; i < rep.rows.size(); ++i) {
        CHECK(back.rows[i].tau == rep.rows[i].tau);
        CHECK(back.rows[i].err == rep.rows[i].err);
    }
    CHECK(back.fitted_order == rep.fitted_order);
}

TEST_CASE("convergence sweep on a coarse problem")
{
    ConvergenceConfig cfg;
    cfg.problem.n = 21;
    cfg.k_min = 3;
    cfg.k_max = 7;

    SECTION("exponential Euler is first order")
    {
        cfg.method = "exp-euler";
        auto rep = exprk::run_convergence(cfg);
        REQUIRE(rep.rows.size() == 5);
        for (NormKind which : rep.norms) {
            CHECK(rep.fitted_order.at(which) > 0.9);
            CHECK(rep.fitted_order.at(which) < 1.1);
        }
    }

    SECTION("errors shrink monotonically as tau halves")
    {
        cfg.method = "erk43";
        auto rep = exprk::run_convergence(cfg);
        for (size_t i = 1; i < rep.rows.size(); ++i)
            for (NormKind which : rep.norms)
                CHECK(rep.rows[i].err.at(which) < rep.rows[i - 1].err.at(which));
    }

    SECTION("expm and fine-RK4 references agree to 1%")
    {
        cfg.method = "erk43";
        auto rep_expm = exprk::run_convergence(cfg);
        cfg.reference = exprk::ReferenceKind::Rk4;
        auto rep_rk4 = exprk::run_convergence(cfg);
        for (size_t i = 0; i < rep_expm.rows.size(); ++i)
            for (NormKind which : rep_expm.norms) {
                const double a = rep_expm.rows[i].err.at(which);
                const double b = rep_rk4.rows[i].err.at(which);
                CHECK(std::abs(a - b) <= 0.01 * a);
            }
    }

    SECTION("byte-identical output across repeated runs")
    {
        cfg.method = "etd3rk";
        std::ostringstream a, b;
        exprk::emit_csv(exprk::run_convergence(cfg), a);
        exprk::emit_csv(exprk::run_convergence(cfg), b);
        CHECK(a.str() == b.str());
    }
}

TEST_CASE("default sweep emits 7 rows")
{
    ConvergenceConfig cfg;
    cfg.problem.n = 15; // keep the default k range cheap
    cfg.method = "exp-euler";
    auto rep = exprk::run_convergence(cfg);
    std::ostringstream out;
    exprk::emit_csv(rep, out);
    std::istringstream in(out.str());
    CHECK(exprk::parse_csv(in).rows.size() == 7);
}

TEST_CASE("config validation")
{
    ConvergenceConfig cfg;
    cfg.k_min = 5;
    cfg.k_max = 3;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.k_max = 6;
    cfg.norms.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
