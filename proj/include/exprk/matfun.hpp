#ifndef EXPRK_MATFUN_HPP
#define EXPRK_MATFUN_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace exprk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace detail {

inline void require_square_finite(const Matrix& m, const char* who)
{
    if (m.rows() != m.cols())
        throw std::invalid_argument(std::string(who) + ": matrix must be square, got "
            + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    if (!m.allFinite())
        throw std::invalid_argument(std::string(who) + ": matrix has non-finite entries");
}

} // namespace detail

/// Symmetry check used before spectral factorizations:
/// max-norm asymmetry relative to the max-norm of the matrix.
inline bool is_symmetric(const Matrix& m, double rel_tol = 1e-12)
{
    if (m.rows() != m.cols()) return false;
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return true;
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

inline bool is_positive_definite(const Matrix& m)
{
    if (!is_symmetric(m)) return false;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff() > 0.0;
}

/// Matrix exponential by scaling-and-squaring with diagonal Pade
/// approximants (degrees 3/5/7/9/13 picked by 1-norm thresholds).
inline Matrix expm(const Matrix& a)
{
    detail::require_square_finite(a, "expm");
    const Eigen::Index n = a.rows();
    const Matrix id = Matrix::Identity(n, n);

    const double norm = a.cwiseAbs().colwise().sum().maxCoeff();

    // [m, theta_m] pairs from Higham's 2005 analysis.
    struct { int m; double theta; } static constexpr table[] = {
        { 3, 1.495585217958292e-2 },
        { 5, 2.539398330063230e-1 },
        { 7, 9.504178996162932e-1 },
        { 9, 2.097847961257068e0  },
    };
    constexpr double theta13 = 5.371920351148152e0;

    auto pade = [&](const std::vector<double>& b, const Matrix& x) {
        // u = odd part, v = even part of the numerator; denominator is v - u.
        const int m = static_cast<int>(b.size()) - 1;
        std::vector<Matrix> pow; // x^2, x^4, ...
        Matrix x2 = x * x;
        pow.push_back(x2);
        for (int p = 4; p <= m - 1; p += 2) pow.push_back(pow.back() * x2);
        Matrix v = b[0] * id;
        Matrix usum = b[1] * id;
        for (int k = 2; k <= m; ++k) {
            const Matrix& xk = pow[(k / 2) - 1];
            if (k % 2 == 0) v += b[k] * xk; else usum += b[k] * xk;
        }
        Matrix u = x * usum;
        return Matrix((v - u).partialPivLu().solve(v + u));
    };

    static const std::vector<double> b3  = { 120, 60, 12, 1 };
    static const std::vector<double> b5  = { 30240, 15120, 3360, 420, 30, 1 };
    static const std::vector<double> b7  = { 17297280, 8648640, 1995840, 277200, 25200, 1512, 56, 1 };
    static const std::vector<double> b9  = { 17643225600, 8821612800, 2075673600, 302702400,
                                             30270240, 2162160, 110880, 3960, 90, 1 };
    static const std::vector<double> b13 = { 64764752532480000, 32382376266240000,
                                             7771770303897600, 1187353796428800, 129060195264000,
                                             10559470521600, 670442572800, 33522128640,
                                             1323241920, 40840800, 960960, 16380, 182, 1 };
    const std::vector<double>* bs[] = { &b3, &b5, &b7, &b9 };

    for (int i = 0; i < 4; ++i)
        if (norm <= table[i].theta) return pade(*bs[i], a);

    int squarings = 0;
    double scaled = norm;
    while (scaled > theta13) { scaled *= 0.5; ++squarings; }
    Matrix x = a / std::ldexp(1.0, squarings);

    // degree 13 evaluates the numerator with a nested scheme
    Matrix x2 = x * x;
    Matrix x4 = x2 * x2;
    Matrix x6 = x4 * x2;
    Matrix u = x * (x6 * (b13[13] * x6 + b13[11] * x4 + b13[9] * x2)
                    + b13[7] * x6 + b13[5] * x4 + b13[3] * x2 + b13[1] * id);
    Matrix v = x6 * (b13[12] * x6 + b13[10] * x4 + b13[8] * x2)
               + b13[6] * x6 + b13[4] * x4 + b13[2] * x2 + b13[0] * id;
    Matrix r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

/// phi_0(M) .. phi_kmax(M) in one shot via the block embedding
/// exp([[M, I, 0, ...], [0, 0, I, ...], ...]): the top block row of the
/// exponential is (e^M, phi_1(M), ..., phi_kmax(M)). Well-defined for
/// singular M, unlike the division recurrence.
inline std::vector<Matrix> phi_family(const Matrix& m, int kmax)
{
    detail::require_square_finite(m, "phi_family");
    if (kmax < 0) throw std::invalid_argument("phi_family: kmax must be >= 0");
    const Eigen::Index n = m.rows();
    if (kmax == 0) return { expm(m) };

    Matrix aug = Matrix::Zero(n * (kmax + 1), n * (kmax + 1));
    aug.topLeftCorner(n, n) = m;
    for (int k = 0; k < kmax; ++k)
        aug.block(k * n, (k + 1) * n, n, n) = Matrix::Identity(n, n);

    Matrix e = expm(aug);
    std::vector<Matrix> out;
    out.reserve(kmax + 1);
    for (int k = 0; k <= kmax; ++k)
        out.push_back(e.block(0, k * n, n, n));
    return out;
}

/// phi_k(M); phi_0 == expm.
inline Matrix phi(int k, const Matrix& m)
{
    if (k < 0) throw std::invalid_argument("phi: index must be >= 0");
    return phi_family(m, k).back();
}

/// e^{tau M} v0 + sum_{k=1}^p tau^k phi_k(tau M) v_k through one
/// exponential of the (n+p)-dimensional augmented matrix
/// [[tau M, W], [0, N_p]] with N_p the nilpotent upshift.
inline Vector phi_action(const Matrix& m, double tau, const Vector& v0,
                         const std::vector<Vector>& vs)
{
    detail::require_square_finite(m, "phi_action");
    const Eigen::Index n = m.rows();
    if (v0.size() != n)
        throw std::invalid_argument("phi_action: v0 length mismatch");
    for (const Vector& v : vs)
        if (v.size() != n)
            throw std::invalid_argument("phi_action: v_k length mismatch");

    const int p = static_cast<int>(vs.size());
    if (p == 0) return expm(tau * m) * v0;

    Matrix aug = Matrix::Zero(n + p, n + p);
    aug.topLeftCorner(n, n) = tau * m;
    // column p-k+1 of W carries tau^k v_k; the upshift chain injects
    // t^{k-1}/(k-1)! of it into the inhomogeneity.
    for (int k = 1; k <= p; ++k)
        aug.block(0, n + p - k, n, 1) = std::pow(tau, k) * vs[k - 1];
    for (int j = 0; j < p - 1; ++j)
        aug(n + j, n + j + 1) = 1.0;

    Vector w = Vector::Zero(n + p);
    w.head(n) = v0;
    w(n + p - 1) = 1.0;
    return (expm(aug) * w).head(n);
}

/// M^gamma for symmetric positive definite M via the spectral
/// decomposition; refuses anything else.
inline Matrix fractional_power(const Matrix& m, double gamma)
{
    detail::require_square_finite(m, "fractional_power");
    if (!is_symmetric(m))
        throw std::domain_error("fractional_power: matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw std::domain_error("fractional_power: matrix is not positive definite");
    Vector lam = es.eigenvalues().array().pow(gamma);
    return es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose();
}

/// Operator 2-norm (largest singular value).
inline double norm2(const Matrix& m)
{
    if (m.size() == 0) return 0.0;
    return m.jacobiSvd().singularValues()(0);
}

} // namespace exprk

#endif
