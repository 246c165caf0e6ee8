#pragma once

// Symplectic eigenvalues and the Williamson normal form S^T M S = D (+) D.
//
// Both routes reduce a skew-symmetric matrix orthogonally rather than running a
// general eigensolver on J*M, so the eigenvalues of J*M come out as exact +-i*lambda pairs.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "phasespace/errors.hpp"
#include "phasespace/matrix_core.hpp"

namespace phasespace {

inline constexpr double kSymplecticZeroTolerance = 1e-10;

/// Symplectic eigenvalues lambda_1 >= ... >= lambda_n >= 0.
struct SymplecticSpectrum {
    Vector values;

    Eigen::Index size() const noexcept { return values.size(); }
    double operator[](Eigen::Index i) const { return values(i); }
};

struct WilliamsonDecomposition {
    SymplecticSpectrum spectrum;
    Matrix S; ///< symplectic, S^T M S = D (+) D
    Vector D; ///< diagonal of D, equal to spectrum.values

    /// D (+) D as a dense 2n x 2n matrix.
    Matrix normal_form() const
    {
        const Eigen::Index n = D.size();
        Matrix out = Matrix::Zero(2 * n, 2 * n);
        out.topLeftCorner(n, n) = D.asDiagonal();
        out.bottomRightCorner(n, n) = D.asDiagonal();
        return out;
    }
};

/// Symplectic eigenvalues of a positive-semidefinite M: the lambda with +-i*lambda in
/// the spectrum of J*M, sorted descending. Values within 1e-10*|M| of zero are clamped to 0.
inline SymplecticSpectrum symplectic_eigenvalues(const SymmetricMatrix& m)
{
    const Eigen::Index n = degrees_of_freedom(m.matrix());
    const EigenDecomposition eig = sym_eig(m);
    const double scale = std::max(std::abs(eig.eigenvalues(0)), std::abs(eig.eigenvalues(2 * n - 1)));
    if (eig.eigenvalues(0) < -kPositivityTolerance * scale) {
        throw NotSemidefinite("symplectic eigenvalues need a positive-semidefinite matrix", eig.eigenvalues(0));
    }
    if (scale == 0.0) {
        return {Vector::Zero(n)};
    }

    // J*M = (J R) R with R = M^{1/2} shares its spectrum with the skew-symmetric R J R,
    // whose singular values are the |eigenvalues|, each appearing twice.
    const Vector roots = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
    const Matrix r = eig.basis * roots.asDiagonal() * eig.basis.transpose();
    Matrix skew = r * standard_J(n) * r;
    skew = 0.5 * (skew - skew.transpose());
    const Vector sigma = Eigen::JacobiSVD<Matrix>(skew).singularValues();

    Vector values(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = 0.5 * (sigma(2 * i) + sigma(2 * i + 1));
        values(i) = v <= kSymplecticZeroTolerance * scale ? 0.0 : v;
    }
    return {values};
}

/// Williamson decomposition of a positive-definite M.
///
/// Builds K = M^{-1/2} J M^{-1/2}, brings it to real canonical form O^T K O =
/// [[0, D^{-1}], [-D^{-1}, 0]] with a real Schur reduction, and returns
/// S = M^{-1/2} O (D^{1/2} (+) D^{1/2}). For repeated symplectic eigenvalues any
/// orthonormal choice inside the degenerate subspace is returned.
inline WilliamsonDecomposition williamson_decompose(const SymmetricMatrix& m)
{
    const Eigen::Index n = degrees_of_freedom(m.matrix());
    const Matrix inv_root = pd_power(m, -0.5).matrix();

    Matrix k = inv_root * standard_J(n) * inv_root;
    k = 0.5 * (k - k.transpose());

    Eigen::RealSchur<Matrix> schur(k);
    if (schur.info() != Eigen::Success) {
        throw NonConvergence("real Schur reduction did not converge",
                             static_cast<std::size_t>(schur.getMaxIterations()));
    }
    const Matrix& t = schur.matrixT();
    const Matrix& q = schur.matrixU();

    struct Pair {
        double lambda;
        Eigen::Index u;
        Eigen::Index v;
    };
    std::vector<Pair> pairs;
    pairs.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < 2 * n;) {
        if (i + 1 >= 2 * n || t(i + 1, i) == 0.0) {
            throw NumericalInstability("skew-symmetric reduction produced a real eigenvalue; matrix is too "
                                       "ill-conditioned for a Williamson decomposition");
        }
        const double upper = t(i, i + 1);
        const double lower = t(i + 1, i);
        const double mu = 0.5 * std::abs(upper - lower);
        // u^T K v must be +mu so the symplectic form comes out with +I in the upper block.
        if (upper > 0.0) {
            pairs.push_back({1.0 / mu, i, i + 1});
        } else {
            pairs.push_back({1.0 / mu, i + 1, i});
        }
        i += 2;
    }
    std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) { return a.lambda > b.lambda; });

    Matrix o(2 * n, 2 * n);
    Vector d(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Pair& p = pairs[static_cast<std::size_t>(i)];
        o.col(i) = q.col(p.u);
        o.col(n + i) = q.col(p.v);
        d(i) = p.lambda;
    }

    Vector root_d(2 * n);
    root_d << d.cwiseSqrt(), d.cwiseSqrt();
    WilliamsonDecomposition out;
    out.S = inv_root * o * root_d.asDiagonal();
    out.D = d;
    out.spectrum = {d};
    return out;
}

} // namespace phasespace
