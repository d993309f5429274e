#ifndef EXPRK_PROBLEMS_HPP
#define EXPRK_PROBLEMS_HPP

#include <stdexcept>
#include <vector>

#include "integrator.hpp"
#include "matfun.hpp"

namespace exprk {

/// 1D advection-diffusion u_t - nu u_xx = u_x on (0,1) with homogeneous
/// Dirichlet boundaries, discretized on n interior points.
struct AdvectionDiffusionSpec {
    double nu = 0.2;
    int n = 199;
    double t_final = 1.0;

    void validate() const
    {
        if (!(nu > 0.0)) throw std::invalid_argument("AdvectionDiffusionSpec: nu must be positive");
        if (n < 3) throw std::invalid_argument("AdvectionDiffusionSpec: need at least 3 interior points");
        if (!(t_final > 0.0)) throw std::invalid_argument("AdvectionDiffusionSpec: T must be positive");
    }
};

/// u(0,x) = 64 x^3 (1-x)^3 sampled at the interior nodes.
inline Vector initial_condition(const Grid1D& grid)
{
    Vector v(grid.n);
    for (int i = 0; i < grid.n; ++i) {
        const double x = grid.x(i);
        v(i) = 64.0 * x * x * x * (1.0 - x) * (1.0 - x) * (1.0 - x);
    }
    return v;
}

/// A = (nu/h^2) tridiag(-1, 2, -1), B = (1/(2h)) tridiag(-1, 0, +1),
/// both on interior values with Dirichlet closure.
inline LinearProblem build_advection_diffusion(const AdvectionDiffusionSpec& spec)
{
    spec.validate();
    Grid1D grid(spec.n);
    const int n = spec.n;
    const double h = grid.h;
    const double diff = spec.nu / (h * h);
    const double adv = 1.0 / (2.0 * h);

    Matrix a = Matrix::Zero(n, n);
    Matrix b = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        a(i, i) = 2.0 * diff;
        if (i > 0) {
            a(i, i - 1) = -diff;
            b(i, i - 1) = -adv;
        }
        if (i < n - 1) {
            a(i, i + 1) = -diff;
            b(i, i + 1) = adv;
        }
    }

    LinearProblem prob;
    prob.a = std::move(a);
    prob.b = std::move(b);
    prob.u0 = initial_condition(grid);
    prob.t_final = spec.t_final;
    prob.grid = grid;
    return prob;
}

enum class NormKind { L1, L2, Linf };

inline const char* norm_name(NormKind which)
{
    switch (which) {
        case NormKind::L1: return "l1";
        case NormKind::L2: return "l2";
        default: return "linf";
    }
}

/// h-weighted discrete norms approximating the continuum integrals.
inline double discrete_norm(const Vector& v, const Grid1D& grid, NormKind which)
{
    if (v.size() != grid.n)
        throw std::invalid_argument("discrete_norm: vector length does not match grid");
    switch (which) {
        case NormKind::L1: return grid.h * v.cwiseAbs().sum();
        case NormKind::L2: return std::sqrt(grid.h * v.squaredNorm());
        default: return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
    }
}

struct BoundednessRow {
    int n;
    double norm_b_a_neg_gamma;  // |B A^{-gamma}|_2
    double norm_a_neg_gamma_b;  // |A^{-gamma} B|_2
    double norm_b;              // |B|_2
};

/// Relative-boundedness probe: |B A^{-gamma}| should stay bounded as the
/// grid refines while |B| itself grows like 1/h.
inline std::vector<BoundednessRow> boundedness_probe(const AdvectionDiffusionSpec& spec,
                                                     double gamma,
                                                     const std::vector<int>& n_list)
{
    if (!(gamma > 0.0 && gamma <= 1.0))
        throw std::invalid_argument("boundedness_probe: gamma must be in (0,1]");
    std::vector<BoundednessRow> rows;
    for (int n : n_list) {
        AdvectionDiffusionSpec s = spec;
        s.n = n;
        LinearProblem prob = build_advection_diffusion(s);
        Matrix a_neg = fractional_power(prob.a, -gamma);
        rows.push_back({ n,
                         norm2(prob.b * a_neg),
                         norm2(a_neg * prob.b),
                         norm2(prob.b) });
    }
    return rows;
}

} // namespace exprk

#endif
