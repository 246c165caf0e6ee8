#pragma once

// Reference computations used only by tests. Each one takes a different route from the
// library code it checks.

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "phasespace/matrix_core.hpp"

namespace oracle {

using phasespace::Matrix;
using phasespace::Vector;

inline Matrix random_orthogonal(Eigen::Index dim, std::mt19937_64& engine)
{
    std::normal_distribution<double> normal;
    Matrix g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            g(i, j) = normal(engine);
        }
    }
    Eigen::HouseholderQR<Matrix> qr(g);
    return qr.householderQ() * Matrix::Identity(dim, dim);
}

/// Random matrix of determinant +1: uniform entries, a row flip for sign, then rescaled.
inline Matrix random_special_linear(Eigen::Index dim, std::mt19937_64& engine, double spread = 1.0)
{
    std::uniform_real_distribution<double> uniform(-spread, spread);
    Matrix g(dim, dim);
    double det = 0.0;
    do {
        for (Eigen::Index i = 0; i < dim; ++i) {
            for (Eigen::Index j = 0; j < dim; ++j) {
                g(i, j) = uniform(engine) + (i == j ? 1.0 : 0.0);
            }
        }
        det = g.determinant();
    } while (std::abs(det) < 1e-6);
    if (det < 0.0) {
        g.row(0) *= -1.0;
    }
    return g / std::pow(std::abs(det), 1.0 / static_cast<double>(dim));
}

/// Symplectic eigenvalues from the general (complex) eigenvalues of J M: the positive
/// imaginary parts, sorted descending.
inline Vector symplectic_spectrum_via_jm(const Matrix& m)
{
    const Eigen::Index n = m.rows() / 2;
    Eigen::EigenSolver<Matrix> solver(phasespace::standard_J(n) * m);
    std::vector<double> imag;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        imag.push_back(std::abs(solver.eigenvalues()(i).imag()));
    }
    std::sort(imag.begin(), imag.end(), std::greater<>());
    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out(i) = 0.5 * (imag[static_cast<std::size_t>(2 * i)] + imag[static_cast<std::size_t>(2 * i + 1)]);
    }
    return out;
}

/// tr(V A H A^T) evaluated entrywise without forming the products.
inline double trace_vaha(const Matrix& v, const Matrix& a, const Matrix& h)
{
    const Eigen::Index d = v.rows();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            for (Eigen::Index k = 0; k < d; ++k) {
                for (Eigen::Index l = 0; l < d; ++l) {
                    sum += v(i, j) * a(j, k) * h(k, l) * a(i, l);
                }
            }
        }
    }
    return sum;
}

inline double relative_error(double value, double reference)
{
    return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

/// Golden-section minimizer of a unimodal function on [lo, hi].
template <typename Fn>
double golden_minimize(Fn&& f, double lo, double hi, double tol = 1e-12)
{
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = lo;
    double b = hi;
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    while (b - a > tol) {
        if (f(c) < f(d)) {
            b = d;
        } else {
            a = c;
        }
        c = b - phi * (b - a);
        d = a + phi * (b - a);
    }
    return 0.5 * (a + b);
}

} // namespace oracle
