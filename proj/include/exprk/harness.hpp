#ifndef EXPRK_HARNESS_HPP
#define EXPRK_HARNESS_HPP

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "integrator.hpp"
#include "problems.hpp"
#include "tableau.hpp"

namespace exprk {

enum class ReferenceKind { Expm, Rk4 };

struct ConvergenceConfig {
    std::string method = "erk43";
    AdvectionDiffusionSpec problem;
    int k_min = 3;                       // tau = T * 2^{-k}
    int k_max = 9;
    ReferenceKind reference = ReferenceKind::Expm;
    double rk4_reference_tau = std::ldexp(1.0, -14);
    std::vector<NormKind> norms = { NormKind::L1, NormKind::L2, NormKind::Linf };

    std::vector<double> tau_list() const
    {
        std::vector<double> out;
        for (int k = k_min; k <= k_max; ++k)
            out.push_back(problem.t_final * std::ldexp(1.0, -k));
        return out;
    }

    void validate() const
    {
        problem.validate();
        if (k_min > k_max) throw std::invalid_argument("ConvergenceConfig: k_min > k_max");
        if (norms.empty()) throw std::invalid_argument("ConvergenceConfig: no norms selected");
    }
};

struct ConvergenceRow {
    double tau;
    std::map<NormKind, double> err;
};

struct ConvergenceReport {
    std::string method;
    std::string problem_fingerprint;
    std::vector<NormKind> norms;
    std::vector<ConvergenceRow> rows;            // sorted by decreasing tau
    std::map<NormKind, double> fitted_order;
};

/// Least-squares slope of log(err) against log(tau). Rows with err = 0
/// are dropped with a warning; fewer than 3 usable rows is an error.
inline double fit_order(const std::vector<std::pair<double, double>>& rows)
{
    std::vector<std::pair<double, double>> usable;
    for (const auto& [tau, err] : rows) {
        if (err > 0.0) {
            usable.emplace_back(std::log(tau), std::log(err));
        } else {
            std::cerr << "fit_order: dropping tau = " << tau << " with zero error\n";
        }
    }
    if (usable.size() < 3)
        throw std::runtime_error("fit_order: need at least 3 rows with positive error, have "
                                 + std::to_string(usable.size()));
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [x, y] : usable) {
        sx += x; sy += y; sxx += x * x; sxy += x * y;
    }
    const double m = static_cast<double>(usable.size());
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

inline ConvergenceReport run_convergence(const ConvergenceConfig& cfg)
{
    cfg.validate();
    const MethodTableau tab = builtin_tableau(cfg.method);
    const LinearProblem prob = build_advection_diffusion(cfg.problem);
    const Grid1D grid = *prob.grid;

    Vector ref;
    if (cfg.reference == ReferenceKind::Expm)
        ref = exact_solution(prob, prob.t_final);
    else
        ref = rk4_reference(prob, cfg.rk4_reference_tau);

    ConvergenceReport rep;
    rep.method = tab.name;
    rep.norms = cfg.norms;
    {
        std::ostringstream fp;
        fp << "advdiff nu=" << cfg.problem.nu << " n=" << cfg.problem.n
           << " T=" << cfg.problem.t_final;
        rep.problem_fingerprint = fp.str();
    }

    for (double tau : cfg.tau_list()) {
        Vector u = integrate(tab, prob, tau);
        ConvergenceRow row;
        row.tau = tau;
        for (NormKind which : cfg.norms)
            row.err[which] = discrete_norm(u - ref, grid, which);
        rep.rows.push_back(std::move(row));
    }

    for (NormKind which : cfg.norms) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& row : rep.rows) pts.emplace_back(row.tau, row.err.at(which));
        rep.fitted_order[which] = fit_order(pts);
    }
    return rep;
}

inline void emit_csv(const ConvergenceReport& rep, std::ostream& out)
{
    out << "tau";
    for (NormKind which : rep.norms) out << ",err_" << norm_name(which);
    out << "\n";
    char buf[64];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& row : rep.rows) {
        out << fmt(row.tau);
        for (NormKind which : rep.norms) out << "," << fmt(row.err.at(which));
        out << "\n";
    }
    out << "# fitted_order_";
    bool first = true;
    for (NormKind which : rep.norms) {
        if (!first) out << ",";
        out << norm_name(which) << "=" << fmt(rep.fitted_order.at(which));
        first = false;
    }
    out << "\n";
}

inline void emit_csv(const ConvergenceReport& rep, const std::string& path)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("emit_csv: cannot open '" + path + "' for writing");
    emit_csv(rep, out);
    if (!out) throw std::runtime_error("emit_csv: write failure on '" + path + "'");
}

/// Inverse of emit_csv, used for round-trip checks and downstream tooling.
inline ConvergenceReport parse_csv(std::istream& in)
{
    ConvergenceReport rep;
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("parse_csv: empty input");

    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::istringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(tok);
        return out;
    };

    auto norm_from_name = [](const std::string& s) {
        if (s == "l1") return NormKind::L1;
        if (s == "l2") return NormKind::L2;
        if (s == "linf") return NormKind::Linf;
        throw std::runtime_error("parse_csv: unknown norm '" + s + "'");
    };

    const auto header = split(line);
    if (header.empty() || header[0] != "tau")
        throw std::runtime_error("parse_csv: header must start with 'tau'");
    for (size_t i = 1; i < header.size(); ++i) {
        if (header[i].rfind("err_", 0) != 0)
            throw std::runtime_error("parse_csv: bad header column '" + header[i] + "'");
        rep.norms.push_back(norm_from_name(header[i].substr(4)));
    }

    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eqpos = line.find("fitted_order_");
            if (eqpos == std::string::npos) continue;
            std::string rest = line.substr(eqpos + std::string("fitted_order_").size());
            for (const auto& field : split(rest)) {
                const auto eq = field.find('=');
                if (eq == std::string::npos)
                    throw std::runtime_error("parse_csv: bad fitted-order field '" + field + "'");
                rep.fitted_order[norm_from_name(field.substr(0, eq))] =
                    std::stod(field.substr(eq + 1));
            }
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != rep.norms.size() + 1)
            throw std::runtime_error("parse_csv: row width mismatch: " + line);
        ConvergenceRow row;
        row.tau = std::stod(cells[0]);
        for (size_t i = 0; i < rep.norms.size(); ++i)
            row.err[rep.norms[i]] = std::stod(cells[i + 1]);
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

} // namespace exprk

#endif
