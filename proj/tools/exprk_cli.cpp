#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "exprk/harness.hpp"
#include "exprk/integrator.hpp"
#include "exprk/problems.hpp"
#include "exprk/tableau.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNumerical = 2;

struct ProblemFlags {
    double nu = 0.2;
    int n = 199;
    double t_final = 1.0;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--nu", nu, "diffusion coefficient");
        cmd->add_option("--n", n, "interior grid points");
        cmd->add_option("--t-final", t_final, "final time");
    }
    exprk::AdvectionDiffusionSpec spec() const { return { nu, n, t_final }; }
};

int run_converge(const std::string& method, const ProblemFlags& pf, int k_min, int k_max,
                 const std::string& reference, const std::string& out_path)
{
    exprk::ConvergenceConfig cfg;
    cfg.method = method;
    cfg.problem = pf.spec();
    cfg.k_min = k_min;
    cfg.k_max = k_max;
    cfg.reference = reference == "rk4" ? exprk::ReferenceKind::Rk4
                                       : exprk::ReferenceKind::Expm;
    exprk::ConvergenceReport rep = exprk::run_convergence(cfg);

    if (out_path.empty())
        exprk::emit_csv(rep, std::cout);
    else
        exprk::emit_csv(rep, out_path);

    std::cerr << rep.method << " on " << rep.problem_fingerprint << "\n";
    for (exprk::NormKind which : rep.norms)
        std::cerr << "  fitted order (" << exprk::norm_name(which) << "): "
                  << rep.fitted_order.at(which) << "\n";
    return kExitOk;
}

int run_check_tableau(const std::string& file, double tau, int dim, unsigned seed,
                      double tol)
{
    exprk::MethodTableau tab;
    if (file == "erk43" || file == "etd3rk" || file == "exp-euler") {
        tab = exprk::builtin_tableau(file);
    } else {
        std::ifstream in(file);
        if (!in) {
            std::cerr << "cannot open tableau file '" << file << "'\n";
            return kExitUsage;
        }
        tab = exprk::parse_tableau(in);
    }

    // random SPD test operator: M^T M + I with seeded uniform entries
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    exprk::Matrix m(dim, dim);
    for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) m(r, c) = dist(gen);
    exprk::Matrix a = m.transpose() * m + exprk::Matrix::Identity(dim, dim);

    auto js = exprk::random_j_samples(dim, 5, seed + 1);
    exprk::ResidualReport rep = exprk::check_order_conditions(tab, tau, a, js, tol);

    auto line = [&](const char* name, double res) {
        std::printf("%-28s residual %.3e  %s\n", name, res, res <= tol ? "pass" : "FAIL");
    };
    std::printf("tableau '%s' (%d stages), tau = %g, dim = %d, tol = %g\n",
                tab.name.c_str(), tab.stages, tau, dim, tol);
    line("sum b_i = phi_1", rep.res_b_phi1);
    line("sum c_i b_i = phi_2", rep.res_cb_phi2);
    for (size_t i = 0; i < rep.res_rows.size(); ++i) {
        std::string name = "row " + std::to_string(i + 2) + " sum = c phi_1";
        line(name.c_str(), rep.res_rows[i]);
    }
    line("sum c_i^2 b_i = 2 phi_3", rep.res_ccb_phi3);
    line("weak b J psi_2 = 0", rep.res_weak);
    for (size_t i = 0; i < rep.b_norms.size(); ++i) {
        const bool ok = rep.b_norms[i] <= tol || rep.psi_norms[i] <= tol;
        std::printf("stage %zu strong form         |b| %.3e  |psi_2| %.3e  %s\n",
                    i + 2, rep.b_norms[i], rep.psi_norms[i], ok ? "pass" : "FAIL");
    }
    std::printf("overall: %s\n", rep.all_pass() ? "all conditions satisfied"
                                                : "conditions violated");
    return rep.all_pass() ? kExitOk : kExitNumerical;
}

int run_solve(const std::string& method, const ProblemFlags& pf, double tau,
              const std::string& out_path)
{
    exprk::LinearProblem prob = exprk::build_advection_diffusion(pf.spec());
    exprk::Vector u = exprk::integrate(exprk::builtin_tableau(method), prob, tau);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!out_path.empty()) {
        file.open(out_path);
        if (!file) {
            std::cerr << "cannot open '" << out_path << "' for writing\n";
            return kExitUsage;
        }
        out = &file;
    }
    char buf[64];
    for (Eigen::Index i = 0; i < u.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", u(i));
        *out << buf << "\n";
    }
    return kExitOk;
}

int run_probe(const ProblemFlags& pf, double gamma, const std::vector<int>& n_list)
{
    auto rows = exprk::boundedness_probe(pf.spec(), gamma, n_list);
    std::printf("%6s  %14s  %14s  %14s\n", "n", "|B A^-g|", "|A^-g B|", "|B|");
    for (const auto& r : rows)
        std::printf("%6d  %14.6e  %14.6e  %14.6e\n", r.n, r.norm_b_a_neg_gamma,
                    r.norm_a_neg_gamma_b, r.norm_b);
    for (size_t i = 1; i < rows.size(); ++i)
        std::printf("ratio %d -> %d: |B A^-g| x%.3f, |B| x%.3f\n", rows[i - 1].n,
                    rows[i].n, rows[i].norm_b_a_neg_gamma / rows[i - 1].norm_b_a_neg_gamma,
                    rows[i].norm_b / rows[i - 1].norm_b);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"exponential Runge-Kutta methods for linear stiff problems"};
    app.require_subcommand(1);

    std::string method = "erk43";
    ProblemFlags pf;
    int k_min = 3, k_max = 9;
    std::string reference = "expm";
    std::string out_path;
    double tau = 0.1;
    int dim = 8;
    unsigned seed = 42;
    double tol = 1e-10;
    std::string tableau_file;
    double gamma = 0.5;
    std::vector<int> n_list = { 25, 50, 100, 200 };

    auto* converge = app.add_subcommand("converge", "convergence sweep with order fit");
    converge->add_option("--method", method)->check(CLI::IsMember({ "erk43", "etd3rk", "exp-euler" }));
    pf.attach(converge);
    converge->add_option("--k-min", k_min, "smallest k in tau = T 2^-k");
    converge->add_option("--k-max", k_max, "largest k in tau = T 2^-k");
    converge->add_option("--reference", reference)->check(CLI::IsMember({ "expm", "rk4" }));
    converge->add_option("--out", out_path, "CSV output path (default stdout)");

    auto* check = app.add_subcommand("check-tableau", "verify stiff order conditions");
    check->add_option("--file", tableau_file, "tableau file, or builtin name")->required();
    check->add_option("--tau", tau, "step size for the evaluation");
    check->add_option("--dim", dim, "dimension of the random SPD operator");
    check->add_option("--seed", seed, "RNG seed");
    check->add_option("--tol", tol, "residual tolerance");

    auto* solve = app.add_subcommand("solve", "integrate and write the final state");
    solve->add_option("--method", method)->check(CLI::IsMember({ "erk43", "etd3rk", "exp-euler" }));
    pf.attach(solve);
    solve->add_option("--tau", tau, "step size")->required();
    solve->add_option("--out", out_path, "output path (default stdout)");

    auto* probe = app.add_subcommand("probe", "relative-boundedness probe across resolutions");
    probe->add_option("--gamma", gamma, "fractional power");
    probe->add_option("--n-list", n_list, "resolutions")->delimiter(',');
    probe->add_option("--nu", pf.nu, "diffusion coefficient");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (converge->parsed())
            return run_converge(method, pf, k_min, k_max, reference, out_path);
        if (check->parsed())
            return run_check_tableau(tableau_file, tau, dim, seed, tol);
        if (solve->parsed())
            return run_solve(method, pf, tau, out_path);
        if (probe->parsed())
            return run_probe(pf, gamma, n_list);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
