#pragma once

// Dense real-matrix primitives shared by the energy and symplectic modules.
//
// Phase-space coordinates are ordered z = (x_1..x_n, p_1..p_n) throughout, so the
// standard symplectic form is the block matrix [[0, I], [-I, 0]].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "phasespace/errors.hpp"

namespace phasespace {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kPositivityTolerance = 1e-12;

/// Largest absolute entry, the reference scale for relative tolerances.
inline double max_abs(const Matrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix& m)
{
    return m.allFinite();
}

/// A square matrix that is exactly symmetric.
///
/// Construction accepts inputs whose asymmetry is within `tolerance` relative to the
/// largest entry and stores (M + M^T)/2; anything further from symmetric is rejected.
class SymmetricMatrix {
public:
    SymmetricMatrix() = default;

    explicit SymmetricMatrix(const Matrix& m, double tolerance = kSymmetryTolerance)
    {
        if (m.rows() != m.cols() || m.rows() == 0) {
            throw DimensionError("symmetric matrix must be square and non-empty, got " +
                                 std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
        }
        if (!all_finite(m)) {
            throw Error("matrix has non-finite entries");
        }
        const double scale = max_abs(m);
        const double asym = max_abs(m - m.transpose());
        if (asym > tolerance * scale) {
            throw SymmetryError("matrix is not symmetric: max |M - M^T| = " + std::to_string(asym));
        }
        data_ = 0.5 * (m + m.transpose());
    }

    static SymmetricMatrix identity(Eigen::Index dim) { return SymmetricMatrix(Matrix::Identity(dim, dim)); }

    static SymmetricMatrix diagonal(const Vector& d) { return SymmetricMatrix(Matrix(d.asDiagonal())); }

    const Matrix& matrix() const noexcept { return data_; }
    operator const Matrix&() const noexcept { return data_; }

    Eigen::Index dim() const noexcept { return data_.rows(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return data_(i, j); }

private:
    Matrix data_;
};

/// Orthogonal eigendecomposition M = basis * diag(eigenvalues) * basis^T.
struct EigenDecomposition {
    Vector eigenvalues; ///< ascending
    Matrix basis;       ///< special orthogonal, columns are eigenvectors
};

/// Symmetric eigendecomposition with ascending eigenvalues and det(basis) = +1.
inline EigenDecomposition sym_eig(const SymmetricMatrix& m)
{
    const Eigen::Index n = m.dim();
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m.matrix());
    if (solver.info() != Eigen::Success) {
        // Eigen caps the implicit QR at 30 sweeps per row.
        throw NonConvergence("symmetric eigensolver did not converge", static_cast<std::size_t>(30 * n));
    }
    EigenDecomposition out{solver.eigenvalues(), solver.eigenvectors()};
    if (out.basis.determinant() < 0.0) {
        out.basis.col(0) *= -1.0;
    }
    return out;
}

/// M^exponent for symmetric positive-definite M, e.g. 1/2, -1/2 or -1.
inline SymmetricMatrix pd_power(const SymmetricMatrix& m, double exponent)
{
    const EigenDecomposition eig = sym_eig(m);
    const double largest = std::max(std::abs(eig.eigenvalues.maxCoeff()), std::abs(eig.eigenvalues.minCoeff()));
    const double smallest = eig.eigenvalues.minCoeff();
    if (!(smallest > kPositivityTolerance * largest) || largest == 0.0) {
        throw NotPositiveDefinite("matrix power requires a positive-definite matrix", smallest);
    }
    const Vector powered = eig.eigenvalues.array().pow(exponent).matrix();
    return SymmetricMatrix(eig.basis * powered.asDiagonal() * eig.basis.transpose(), 1e-9);
}

/// Standard symplectic form [[0, I_n], [-I_n, 0]] of size 2n.
inline Matrix standard_J(Eigen::Index n)
{
    if (n < 1) {
        throw DimensionError("standard_J needs n >= 1");
    }
    Matrix j = Matrix::Zero(2 * n, 2 * n);
    j.topRightCorner(n, n).setIdentity();
    j.bottomLeftCorner(n, n) = -Matrix::Identity(n, n);
    return j;
}

/// Degrees of freedom of a 2n-dimensional phase-space operator; throws on odd dimension.
inline Eigen::Index degrees_of_freedom(const Matrix& a)
{
    if (a.rows() != a.cols()) {
        throw DimensionError("phase-space operator must be square");
    }
    if (a.rows() == 0 || a.rows() % 2 != 0) {
        throw DimensionError("phase-space dimension must be even, got " + std::to_string(a.rows()));
    }
    return a.rows() / 2;
}

/// True iff max|A^T J A - J| <= tol.
inline bool is_symplectic(const Matrix& a, double tol)
{
    const Eigen::Index n = degrees_of_freedom(a);
    const Matrix j = standard_J(n);
    return max_abs(a.transpose() * j * a - j) <= tol;
}

inline double symplecticity_residual(const Matrix& a)
{
    const Matrix j = standard_J(degrees_of_freedom(a));
    return max_abs(a.transpose() * j * a - j);
}

/// Smallest and largest eigenvalue of a symmetric matrix.
inline std::pair<double, double> eigen_range(const SymmetricMatrix& m)
{
    const Vector ev = sym_eig(m).eigenvalues;
    return {ev(0), ev(ev.size() - 1)};
}

inline bool is_positive_definite(const SymmetricMatrix& m, double rel_tol = kPositivityTolerance)
{
    const auto [lo, hi] = eigen_range(m);
    return hi > 0.0 && lo > rel_tol * hi;
}

inline bool is_positive_semidefinite(const SymmetricMatrix& m, double rel_tol = kPositivityTolerance)
{
    const auto [lo, hi] = eigen_range(m);
    return lo >= -rel_tol * std::max(std::abs(hi), std::abs(lo));
}

} // namespace phasespace
