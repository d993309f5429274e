#ifndef EXPRK_TABLEAU_HPP
#define EXPRK_TABLEAU_HPP

#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "matfun.hpp"

namespace exprk {

/// One term weight * phi_{index}(-scale * tau * A) of a coefficient
/// function. Coefficients are formal linear combinations of these.
struct PhiTerm {
    double weight;
    int phi_index;   // >= 1
    double arg_scale; // in (0, 1]
};

/// A tableau coefficient a_ij or b_i; empty means the zero coefficient.
using PhiCombo = std::vector<PhiTerm>;

struct MethodTableau {
    std::string name;
    int stages = 0;
    std::vector<double> c;                // c[0] = 0
    std::vector<std::vector<PhiCombo>> a; // strictly lower triangular
    std::vector<PhiCombo> b;

    void validate() const
    {
        if (stages < 1) throw std::invalid_argument("tableau: stages must be >= 1");
        if (static_cast<int>(c.size()) != stages || static_cast<int>(b.size()) != stages
            || static_cast<int>(a.size()) != stages)
            throw std::invalid_argument("tableau: c/a/b size mismatch with stage count");
        if (c[0] != 0.0) throw std::invalid_argument("tableau: c_1 must be 0");
        for (double ci : c)
            if (ci < 0.0 || ci > 1.0)
                throw std::invalid_argument("tableau: nodes must lie in [0,1]");
        for (int i = 0; i < stages; ++i) {
            if (static_cast<int>(a[i].size()) != stages)
                throw std::invalid_argument("tableau: a row length mismatch");
            for (int j = i; j < stages; ++j)
                if (!a[i][j].empty())
                    throw std::invalid_argument("tableau: a must be strictly lower triangular");
        }
        auto check_terms = [](const PhiCombo& combo) {
            for (const PhiTerm& t : combo) {
                if (t.phi_index < 1)
                    throw std::invalid_argument("tableau: phi index must be >= 1");
                if (!(t.arg_scale > 0.0 && t.arg_scale <= 1.0))
                    throw std::invalid_argument("tableau: arg scale must be in (0,1]");
                if (!std::isfinite(t.weight))
                    throw std::invalid_argument("tableau: non-finite weight");
            }
        };
        for (const auto& row : a)
            for (const auto& combo : row) check_terms(combo);
        for (const auto& combo : b) check_terms(combo);
    }
};

/// Caches the phi families phi_1..phi_kmax(-scale*tau*A) per distinct
/// arg scale, so evaluating a whole tableau costs one block expm per scale.
class PhiCache {
public:
    PhiCache(double tau, const Matrix& a) : tau_(tau), a_(a) {}

    const Matrix& get(int k, double scale)
    {
        auto& fam = families_[scale];
        if (static_cast<int>(fam.size()) <= k)
            fam = phi_family(Matrix(-scale * tau_ * a_), k);
        return fam[k];
    }

private:
    double tau_;
    Matrix a_;
    std::map<double, std::vector<Matrix>> families_;
};

inline Matrix evaluate_coefficient(const PhiCombo& combo, PhiCache& cache,
                                   Eigen::Index n)
{
    Matrix out = Matrix::Zero(n, n);
    for (const PhiTerm& t : combo)
        out += t.weight * cache.get(t.phi_index, t.arg_scale);
    return out;
}

inline Matrix evaluate_coefficient(const PhiCombo& combo, double tau, const Matrix& a)
{
    detail::require_square_finite(a, "evaluate_coefficient");
    PhiCache cache(tau, a);
    return evaluate_coefficient(combo, cache, a.rows());
}

/// Stage defect psi_{2,i} = c_i^2 phi_2(-c_i tau A) - sum_{j<i} c_j a_ij(-tau A).
inline Matrix psi2(const MethodTableau& tab, int i, double tau, const Matrix& a)
{
    if (i < 2 || i > tab.stages)
        throw std::invalid_argument("psi2: stage index out of range");
    PhiCache cache(tau, a);
    const Eigen::Index n = a.rows();
    const double ci = tab.c[i - 1];
    Matrix out = ci * ci * cache.get(2, ci > 0 ? ci : 1.0);
    if (ci == 0.0) out.setZero();
    for (int j = 2; j < i; ++j)
        out -= tab.c[j - 1] * evaluate_coefficient(tab.a[i - 1][j - 1], cache, n);
    return out;
}

struct ResidualReport {
    // operator 2-norm residuals of the b-row and a-row-sum conditions;
    // a value is present only when the tableau has the stage it involves
    double res_b_phi1 = 0.0;       // sum b_i = phi_1
    double res_cb_phi2 = 0.0;      // sum c_i b_i = phi_2
    std::vector<double> res_rows;  // row i >= 2: sum_j a_ij = c_i phi_1(-c_i tau A)
    double res_ccb_phi3 = 0.0;     // sum c_i^2 b_i = 2 phi_3
    double res_weak = 0.0;         // max over J of |sum b_i J psi_{2,i}|
    std::vector<double> b_norms;   // per stage i >= 2
    std::vector<double> psi_norms; // per stage i >= 2
    double tolerance = 0.0;
    bool rows_pass = false;
    bool b_conditions_pass = false;
    bool weak_pass = false;
    bool strong_pass = false; // per stage, b_i == 0 or psi_{2,i} == 0

    bool all_pass() const { return rows_pass && b_conditions_pass && weak_pass && strong_pass; }
};

inline ResidualReport check_order_conditions(const MethodTableau& tab, double tau,
                                             const Matrix& a,
                                             const std::vector<Matrix>& j_samples,
                                             double tol = 1e-10)
{
    detail::require_square_finite(a, "check_order_conditions");
    tab.validate();
    const Eigen::Index n = a.rows();
    PhiCache cache(tau, a);

    std::vector<Matrix> bmat(tab.stages);
    for (int i = 0; i < tab.stages; ++i)
        bmat[i] = evaluate_coefficient(tab.b[i], cache, n);

    Matrix sum_b = Matrix::Zero(n, n), sum_cb = Matrix::Zero(n, n),
           sum_ccb = Matrix::Zero(n, n);
    for (int i = 0; i < tab.stages; ++i) {
        sum_b += bmat[i];
        sum_cb += tab.c[i] * bmat[i];
        sum_ccb += tab.c[i] * tab.c[i] * bmat[i];
    }

    ResidualReport rep;
    rep.tolerance = tol;
    rep.res_b_phi1 = norm2(sum_b - cache.get(1, 1.0));
    rep.res_cb_phi2 = norm2(sum_cb - cache.get(2, 1.0));
    rep.res_ccb_phi3 = norm2(sum_ccb - 2.0 * cache.get(3, 1.0));

    for (int i = 2; i <= tab.stages; ++i) {
        Matrix row = Matrix::Zero(n, n);
        for (int j = 1; j < i; ++j)
            row += evaluate_coefficient(tab.a[i - 1][j - 1], cache, n);
        const double ci = tab.c[i - 1];
        Matrix target = ci == 0.0 ? Matrix(Matrix::Zero(n, n))
                                  : Matrix(ci * cache.get(1, ci));
        rep.res_rows.push_back(norm2(row - target));
    }

    std::vector<Matrix> psis;
    for (int i = 2; i <= tab.stages; ++i) {
        psis.push_back(psi2(tab, i, tau, a));
        rep.b_norms.push_back(norm2(bmat[i - 1]));
        rep.psi_norms.push_back(norm2(psis.back()));
    }

    if (j_samples.empty())
        throw std::invalid_argument("check_order_conditions: need at least one J sample");
    for (const Matrix& j : j_samples) {
        Matrix acc = Matrix::Zero(n, n);
        for (int i = 2; i <= tab.stages; ++i)
            acc += bmat[i - 1] * j * psis[i - 2];
        rep.res_weak = std::max(rep.res_weak, norm2(acc));
    }

    rep.b_conditions_pass = rep.res_b_phi1 <= tol && rep.res_cb_phi2 <= tol
                            && rep.res_ccb_phi3 <= tol;
    rep.rows_pass = true;
    for (double r : rep.res_rows) rep.rows_pass = rep.rows_pass && r <= tol;
    rep.weak_pass = rep.res_weak <= tol;
    rep.strong_pass = true;
    for (size_t i = 0; i < rep.b_norms.size(); ++i)
        rep.strong_pass = rep.strong_pass
                          && (rep.b_norms[i] <= tol || rep.psi_norms[i] <= tol);
    return rep;
}

/// Seeded uniform(-1,1) matrices for the arbitrary-operator check.
inline std::vector<Matrix> random_j_samples(Eigen::Index n, int count, unsigned seed)
{
    std::mt19937 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<Matrix> out;
    for (int s = 0; s < count; ++s) {
        Matrix j(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c) j(r, c) = dist(gen);
        out.push_back(std::move(j));
    }
    return out;
}

// ---- builtin methods -------------------------------------------------

// a_ij terms use arg scale c_i (the phi_{j,i} = phi_j(-c_i tau A)
// notation); b terms use arg scale 1.

inline MethodTableau erk43_tableau()
{
    MethodTableau t;
    t.name = "erk43";
    t.stages = 4;
    t.c = { 0.0, 0.5, 0.5, 1.0 };
    t.a.assign(4, std::vector<PhiCombo>(4));
    t.b.assign(4, {});
    t.a[1][0] = { { 0.5, 1, 0.5 } };
    t.a[2][0] = { { 0.5, 1, 0.5 }, { -0.5, 2, 0.5 } };
    t.a[2][1] = { { 0.5, 2, 0.5 } };
    t.a[3][0] = { { 1.0, 1, 1.0 }, { -2.0, 2, 1.0 } };
    t.a[3][1] = { { 1.0, 1, 1.0 } };
    t.a[3][2] = { { -1.0, 1, 1.0 }, { 2.0, 2, 1.0 } };
    t.b[0] = { { 1.0, 1, 1.0 }, { -3.0, 2, 1.0 }, { 4.0, 3, 1.0 } };
    // b_2 identically zero
    t.b[2] = { { 4.0, 2, 1.0 }, { -8.0, 3, 1.0 } };
    t.b[3] = { { -1.0, 2, 1.0 }, { 4.0, 3, 1.0 } };
    t.validate();
    return t;
}

inline MethodTableau etd3rk_tableau()
{
    MethodTableau t;
    t.name = "etd3rk";
    t.stages = 3;
    t.c = { 0.0, 0.5, 1.0 };
    t.a.assign(3, std::vector<PhiCombo>(3));
    t.b.assign(3, {});
    t.a[1][0] = { { 0.5, 1, 0.5 } };
    t.a[2][0] = { { -1.0, 1, 1.0 } };
    t.a[2][1] = { { 2.0, 1, 1.0 } };
    t.b[0] = { { 1.0, 1, 1.0 }, { -3.0, 2, 1.0 }, { 4.0, 3, 1.0 } };
    t.b[1] = { { 4.0, 2, 1.0 }, { -8.0, 3, 1.0 } };
    t.b[2] = { { -1.0, 2, 1.0 }, { 4.0, 3, 1.0 } };
    t.validate();
    return t;
}

inline MethodTableau exp_euler_tableau()
{
    MethodTableau t;
    t.name = "exp-euler";
    t.stages = 1;
    t.c = { 0.0 };
    t.a.assign(1, std::vector<PhiCombo>(1));
    t.b = { { { 1.0, 1, 1.0 } } };
    t.validate();
    return t;
}

inline MethodTableau builtin_tableau(const std::string& name)
{
    if (name == "erk43") return erk43_tableau();
    if (name == "etd3rk") return etd3rk_tableau();
    if (name == "exp-euler" || name == "exp_euler") return exp_euler_tableau();
    throw std::invalid_argument("unknown method '" + name
                                + "' (expected erk43, etd3rk or exp-euler)");
}

// ---- tableau file format ---------------------------------------------
//
//   # comment
//   name    <label>
//   stages  <s>
//   c       <c_1> ... <c_s>
//   a <i> <j>   <weight>:<phi>:<scale>  [more terms...]
//   b <i>       <weight>:<phi>:<scale>  [more terms...]
//
// Omitted a/b entries are zero. Indices are 1-based.

inline MethodTableau parse_tableau(std::istream& in)
{
    MethodTableau t;
    t.stages = -1;
    std::string line;
    int lineno = 0;

    auto fail = [&](const std::string& what, const std::string& field) -> void {
        throw std::runtime_error("tableau parse error at line " + std::to_string(lineno)
                                 + ", field '" + field + "': " + what);
    };

    auto parse_terms = [&](std::istringstream& ss) {
        PhiCombo combo;
        std::string tok;
        while (ss >> tok) {
            PhiTerm term;
            char c1 = 0, c2 = 0;
            std::istringstream ts(tok);
            if (!(ts >> term.weight >> c1 >> term.phi_index >> c2 >> term.arg_scale)
                || c1 != ':' || c2 != ':')
                fail("expected weight:phi:scale, got '" + tok + "'", tok);
            combo.push_back(term);
        }
        return combo;
    };

    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        std::string key;
        if (!(ss >> key)) continue;

        if (key == "name") {
            if (!(ss >> t.name)) fail("missing value", "name");
        } else if (key == "stages") {
            if (!(ss >> t.stages) || t.stages < 1) fail("expected positive integer", "stages");
            t.c.assign(t.stages, 0.0);
            t.a.assign(t.stages, std::vector<PhiCombo>(t.stages));
            t.b.assign(t.stages, {});
        } else if (key == "c") {
            if (t.stages < 0) fail("'stages' must come first", "c");
            for (int i = 0; i < t.stages; ++i)
                if (!(ss >> t.c[i])) fail("expected " + std::to_string(t.stages) + " nodes", "c");
        } else if (key == "a") {
            if (t.stages < 0) fail("'stages' must come first", "a");
            int i = 0, j = 0;
            if (!(ss >> i >> j) || i < 1 || i > t.stages || j < 1 || j >= i)
                fail("need indices with 1 <= j < i <= stages", "a");
            t.a[i - 1][j - 1] = parse_terms(ss);
        } else if (key == "b") {
            if (t.stages < 0) fail("'stages' must come first", "b");
            int i = 0;
            if (!(ss >> i) || i < 1 || i > t.stages)
                fail("stage index out of range", "b");
            t.b[i - 1] = parse_terms(ss);
        } else {
            fail("unknown key '" + key + "'", key);
        }
    }
    if (t.stages < 0)
        throw std::runtime_error("tableau parse error: no 'stages' line found");
    t.validate();
    return t;
}

} // namespace exprk

#endif
