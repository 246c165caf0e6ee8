#pragma once

// Minimal energies of a distribution under affine volume-preserving (SL) and affine
// symplectic (Sp) maps, together with maps that attain them.
//
// With the centre of mass moved to the potential minimum the energy of A-transformed
// moments is N*V0 + tr(V A H A^T), so both problems are trace minimizations:
//   SL:  N*V0 + 2n det(V H)^{1/(2n)}
//   Sp:  N*V0 + 2 sum_i lambda^H_i lambda^V_{n+1-i}   (symplectic eigenvalues, descending)

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "phasespace/distributions.hpp"
#include "phasespace/errors.hpp"
#include "phasespace/matrix_core.hpp"
#include "phasespace/williamson.hpp"

namespace phasespace {

enum class Group { SL, Sp };

inline const char* to_string(Group g)
{
    return g == Group::SL ? "SL" : "Sp";
}

/// z -> A (z - from) + to.
struct AffineMap {
    Matrix A;
    Vector from;
    Vector to;

    Vector operator()(const Vector& z) const { return A * (z - from) + to; }
};

struct EnergyReport {
    Group group = Group::SL;
    double E_min = 0.0;
    double initial_energy = 0.0;
    std::optional<double> fraction; ///< E_min / initial_energy, absent when the initial energy is 0
    AffineMap map;
    Vector spectrum_V; ///< descending; ordinary eigenvalues for SL, symplectic for Sp
    Vector spectrum_H;
};

/// Relative size of the shift eps*I used when V is singular and no minimizer exists.
inline constexpr double kMapRegularization = 1e-6;

/// Moments of the pushed-forward distribution under an affine map with det A = 1.
inline Moments transformed_moments(const Moments& m, const AffineMap& map)
{
    return {m.N, map(m.c), SymmetricMatrix(map.A * m.H.matrix() * map.A.transpose(), 1e-9)};
}

/// Symplectic rotation acting as [[cos, sin], [-sin, cos]] on each (x_i, p_i) pair.
inline Matrix symplectic_rotation(const std::vector<double>& thetas)
{
    const auto n = static_cast<Eigen::Index>(thetas.size());
    Matrix x = Matrix::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double c = std::cos(thetas[static_cast<std::size_t>(i)]);
        const double s = std::sin(thetas[static_cast<std::size_t>(i)]);
        x(i, i) = c;
        x(i, n + i) = s;
        x(n + i, i) = -s;
        x(n + i, n + i) = c;
    }
    return x;
}

/// Relabels canonical pairs x_i -> x_{n+1-i}, p_i -> p_{n+1-i}.
inline Matrix pair_reversal(Eigen::Index n)
{
    Matrix b = Matrix::Zero(2 * n, 2 * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b(i, n - 1 - i) = 1.0;
        b(n + i, 2 * n - 1 - i) = 1.0;
    }
    return b;
}

namespace detail {

inline Eigen::Index check_problem(const Moments& m, const QuadraticPotential& pot)
{
    const Eigen::Index n = degrees_of_freedom(m.H.matrix());
    if (pot.dim() != 2 * n || m.c.size() != 2 * n) {
        throw DimensionError("moments and potential dimensions differ");
    }
    if (!(m.N > 0.0)) {
        throw EmptyDistribution("distribution has zero mass");
    }
    if (!is_positive_definite(m.H)) {
        throw DegenerateMoments("second-moment matrix H is not positive definite (smallest eigenvalue " +
                                std::to_string(eigen_range(m.H).first) + ")");
    }
    return n;
}

inline SymmetricMatrix regularized(const SymmetricMatrix& v, double eps)
{
    return SymmetricMatrix(v.matrix() + eps * Matrix::Identity(v.dim(), v.dim()));
}

inline double map_regularization(const SymmetricMatrix& v)
{
    const double scale = max_abs(v.matrix());
    return kMapRegularization * (scale > 0.0 ? scale : 1.0);
}

inline void finish(EnergyReport& r, const Moments& m, const QuadraticPotential& pot)
{
    r.initial_energy = energy_from_moments(m, pot);
    if (r.initial_energy != 0.0) {
        r.fraction = r.E_min / r.initial_energy;
    }
    r.map.from = m.c;
    r.map.to = pot.d();
}

inline Vector descending(const Vector& ascending)
{
    return ascending.reverse();
}

} // namespace detail

/// Special-linear A = O_V B O_H^T with B = det(HV)^{1/(4n)} D_V^{-1/2} D_H^{-1/2},
/// minimizing tr(V A H A^T) for positive-definite V and H.
inline Matrix optimal_special_linear_map(const SymmetricMatrix& v, const SymmetricMatrix& h)
{
    const Eigen::Index dim = v.dim();
    const EigenDecomposition ev = sym_eig(v);
    const EigenDecomposition eh = sym_eig(h);
    if (!(ev.eigenvalues(0) > 0.0) || !(eh.eigenvalues(0) > 0.0)) {
        throw NotPositiveDefinite("optimal special-linear map needs positive-definite V and H",
                                  std::min(ev.eigenvalues(0), eh.eigenvalues(0)));
    }
    const double log_det = ev.eigenvalues.array().log().sum() + eh.eigenvalues.array().log().sum();
    const double s = std::exp(log_det / (2.0 * static_cast<double>(dim)));
    const Vector b = s * (ev.eigenvalues.array() * eh.eigenvalues.array()).rsqrt().matrix();
    return ev.basis * b.asDiagonal() * eh.basis.transpose();
}

/// Symplectic A = S_V X(theta) B_rev S_H^T minimizing tr(V A H A^T) for positive-definite
/// V and H. An empty theta list means all angles zero.
inline Matrix optimal_symplectic_map(const SymmetricMatrix& v, const SymmetricMatrix& h,
                                     const std::vector<double>& thetas = {})
{
    const Eigen::Index n = degrees_of_freedom(v.matrix());
    const WilliamsonDecomposition wv = williamson_decompose(v);
    const WilliamsonDecomposition wh = williamson_decompose(h);
    Matrix b = pair_reversal(n);
    if (!thetas.empty()) {
        if (static_cast<Eigen::Index>(thetas.size()) != n) {
            throw DimensionError("need one rotation angle per degree of freedom");
        }
        b = symplectic_rotation(thetas) * b;
    }
    return wv.S * b * wh.S.transpose();
}

/// Linear Gardner energy: infimum over affine special-linear maps.
inline EnergyReport linear_gardner_energy(const Moments& m, const QuadraticPotential& pot)
{
    const Eigen::Index n = detail::check_problem(m, pot);
    const EigenDecomposition ev = sym_eig(pot.V());
    const EigenDecomposition eh = sym_eig(m.H);

    EnergyReport r;
    r.group = Group::SL;
    r.spectrum_V = detail::descending(ev.eigenvalues);
    r.spectrum_H = detail::descending(eh.eigenvalues);
    if (is_positive_definite(pot.V())) {
        const double log_det = ev.eigenvalues.array().log().sum() + eh.eigenvalues.array().log().sum();
        r.E_min = m.N * pot.V0() + 2.0 * static_cast<double>(n) * std::exp(log_det / (2.0 * n));
        r.map.A = optimal_special_linear_map(pot.V(), m.H);
    } else {
        // det(V H) = 0: the infimum N*V0 is approached but not attained.
        r.E_min = m.N * pot.V0();
        r.map.A = optimal_special_linear_map(detail::regularized(pot.V(), detail::map_regularization(pot.V())), m.H);
    }
    detail::finish(r, m, pot);
    return r;
}

/// Linear Gromov energy: infimum over affine symplectic maps.
inline EnergyReport linear_gromov_energy(const Moments& m, const QuadraticPotential& pot)
{
    const Eigen::Index n = detail::check_problem(m, pot);
    const SymplecticSpectrum lv = symplectic_eigenvalues(pot.V());
    const SymplecticSpectrum lh = symplectic_eigenvalues(m.H);

    EnergyReport r;
    r.group = Group::Sp;
    r.spectrum_V = lv.values;
    r.spectrum_H = lh.values;
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sum += lh[i] * lv[n - 1 - i];
    }
    r.E_min = m.N * pot.V0() + 2.0 * sum;
    if (is_positive_definite(pot.V())) {
        r.map.A = optimal_symplectic_map(pot.V(), m.H);
    } else {
        r.map.A = optimal_symplectic_map(detail::regularized(pot.V(), detail::map_regularization(pot.V())), m.H);
    }
    detail::finish(r, m, pot);
    return r;
}

inline EnergyReport minimal_energy(const Moments& m, const QuadraticPotential& pot, Group group)
{
    return group == Group::SL ? linear_gardner_energy(m, pot) : linear_gromov_energy(m, pot);
}

/// Energy reached by the report's map, N*V0 + tr(V A H A^T).
inline double map_energy(const AffineMap& map, const Moments& m, const QuadraticPotential& pot)
{
    return energy_from_moments(transformed_moments(m, map), pot);
}

/// |energy reached by the report's map - E_min|.
inline double verify_map_optimality(const EnergyReport& report, const Moments& m, const QuadraticPotential& pot)
{
    return std::abs(map_energy(report.map, m, pot) - report.E_min);
}

struct DegenerateLimit {
    EnergyReport report;          ///< direct-formula report; map from the last regularization
    std::vector<double> epsilons;
    std::vector<double> energies; ///< E(eps_k) with V replaced by V + eps_k I
    double extrapolated = 0.0;    ///< Richardson limit from the last two points
    double direct = 0.0;          ///< zero-eigenvalue formula evaluated on V itself

    double relative_gap() const
    {
        const double scale = std::max(std::abs(direct), std::abs(extrapolated));
        return scale == 0.0 ? 0.0 : std::abs(extrapolated - direct) / scale;
    }
};

/// Limit of the minimal energy as V + eps I -> V for positive-semidefinite V.
inline DegenerateLimit degenerate_limit(const Moments& m, const QuadraticPotential& pot, Group group,
                                        const std::vector<double>& eps_sequence)
{
    if (eps_sequence.size() < 2) {
        throw Error("degenerate_limit needs at least two regularization values");
    }
    for (std::size_t k = 0; k < eps_sequence.size(); ++k) {
        if (!(eps_sequence[k] > 0.0) || (k > 0 && !(eps_sequence[k] < eps_sequence[k - 1]))) {
            throw Error("regularization values must be positive and strictly decreasing");
        }
    }

    DegenerateLimit out;
    out.epsilons = eps_sequence;
    for (double eps : eps_sequence) {
        const QuadraticPotential shifted(pot.V0(), pot.d(), detail::regularized(pot.V(), eps));
        const EnergyReport step = minimal_energy(m, shifted, group);
        const double e = step.E_min;
        if (!out.energies.empty() && e > out.energies.back() + 1e-12 * std::abs(out.energies.back())) {
            throw NumericalInstability("regularized energies increase as eps decreases: " +
                                       std::to_string(out.energies.back()) + " -> " + std::to_string(e));
        }
        out.energies.push_back(e);
        out.report.map.A = step.map.A;
    }
    const std::size_t last = eps_sequence.size() - 1;
    const double e0 = eps_sequence[last - 1];
    const double e1 = eps_sequence[last];
    out.extrapolated = (e0 * out.energies[last] - e1 * out.energies[last - 1]) / (e0 - e1);

    const Matrix regularized_map = out.report.map.A;
    out.report = minimal_energy(m, pot, group);
    out.report.map.A = regularized_map;
    out.direct = out.report.E_min;
    return out;
}

struct BumpOnTail {
    double shift = 0.0;                   ///< optimal momentum shift
    double linear_energy_density = 0.0;   ///< energy density after the optimal shift
    double gardner_energy_density = 0.0;  ///< energy density after moving the bump to p = 0
};

/// 1-D Maxwellian of density n0 and temperature T plus a beam n1 * delta(p - p0), with
/// energy p^2/2. The only affine area-preserving x-independent maps are momentum shifts.
inline BumpOnTail bump_on_tail_1d(double n0, double T, double n1, double p0)
{
    if (!(n0 > 0.0) || !(T > 0.0) || !(n1 >= 0.0) || !std::isfinite(p0)) {
        throw Error("bump-on-tail needs n0 > 0, T > 0, n1 >= 0 and finite p0");
    }
    BumpOnTail out;
    out.shift = -n1 * p0 / (n0 + n1);
    const double dp = out.shift;
    out.linear_energy_density = 0.5 * n0 * (dp * dp + T) + 0.5 * n1 * (p0 + dp) * (p0 + dp);
    out.gardner_energy_density = 0.5 * n0 * T;
    return out;
}

} // namespace phasespace
