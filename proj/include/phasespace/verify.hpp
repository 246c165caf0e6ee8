#pragma once

// Randomized checks of the trace-minimization bound, symplectic classification of
// ellipsoids, and the affine ball-into-cylinder experiment.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "phasespace/distributions.hpp"
#include "phasespace/energy_bounds.hpp"
#include "phasespace/errors.hpp"
#include "phasespace/matrix_core.hpp"
#include "phasespace/williamson.hpp"

namespace phasespace {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Runs fn(begin, end) over `workers` contiguous chunks of [0, count).
template <typename Fn>
void parallel_chunks(std::size_t count, unsigned workers, Fn&& fn)
{
    workers = std::max(1U, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        fn(std::size_t{0}, count, 0U);
        return;
    }
    std::vector<std::jthread> pool;
    const std::size_t chunk = (count + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(count, w * chunk);
        const std::size_t end = std::min(count, begin + chunk);
        pool.emplace_back([&fn, begin, end, w] { fn(begin, end, w); });
    }
}

} // namespace detail

inline unsigned default_workers()
{
    return std::max(1U, std::thread::hardware_concurrency());
}

/// exp(J A) for symmetric A: the time-one flow of the quadratic Hamiltonian z^T A z / 2.
inline Matrix hamiltonian_flow(const SymmetricMatrix& generator)
{
    const Matrix m = standard_J(degrees_of_freedom(generator.matrix())) * generator.matrix();
    const Matrix out = m.exp();
    if (!out.allFinite()) {
        throw NumericalInstability("matrix exponential produced non-finite entries");
    }
    return out;
}

/// Random symplectic matrices exp(J A1) exp(J A2) with A1, A2 symmetric and entries
/// uniform in [-scale, scale]. The same seed always gives the same sequence.
class SymplecticSampler {
public:
    SymplecticSampler(Eigen::Index n, std::uint64_t seed, double scale = 1.0)
        : n_(n), seed_(seed), scale_(scale), engine_(detail::splitmix64(seed))
    {
        if (n < 1) {
            throw DimensionError("sampler needs n >= 1");
        }
        if (!(scale >= 0.0) || !std::isfinite(scale)) {
            throw Error("sampler scale must be finite and nonnegative");
        }
    }

    Eigen::Index n() const noexcept { return n_; }
    std::uint64_t seed() const noexcept { return seed_; }
    double scale() const noexcept { return scale_; }

    /// Next matrix of the sequential stream.
    Matrix next() { return draw(engine_); }

    /// Matrix number `index` of an independent substream; depends only on (seed, index),
    /// so trials can be split across workers without changing results.
    Matrix at(std::uint64_t index) const
    {
        std::mt19937_64 engine(detail::splitmix64(seed_ ^ detail::splitmix64(index + 0x5851f42d4c957f2dULL)));
        return draw(engine);
    }

    SymmetricMatrix generator(std::mt19937_64& engine) const
    {
        std::uniform_real_distribution<double> uniform(-scale_, scale_);
        Matrix a(2 * n_, 2 * n_);
        for (Eigen::Index i = 0; i < 2 * n_; ++i) {
            for (Eigen::Index j = 0; j < 2 * n_; ++j) {
                a(i, j) = scale_ == 0.0 ? 0.0 : uniform(engine);
            }
        }
        return SymmetricMatrix(0.5 * (a + a.transpose()));
    }

private:
    Matrix draw(std::mt19937_64& engine) const
    {
        const SymmetricMatrix a1 = generator(engine);
        const SymmetricMatrix a2 = generator(engine);
        return hamiltonian_flow(a1) * hamiltonian_flow(a2);
    }

    Eigen::Index n_;
    std::uint64_t seed_;
    double scale_;
    std::mt19937_64 engine_;
};

inline Matrix sample_symplectic(SymplecticSampler& sampler)
{
    return sampler.next();
}

/// G^T G + 1e-3 I with G uniform in [-1, 1]; keeps condition numbers bounded.
inline SymmetricMatrix random_positive_definite(Eigen::Index dim, std::mt19937_64& engine)
{
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    Matrix g(dim, dim);
    for (Eigen::Index i = 0; i < dim; ++i) {
        for (Eigen::Index j = 0; j < dim; ++j) {
            g(i, j) = uniform(engine);
        }
    }
    return SymmetricMatrix(g.transpose() * g + 1e-3 * Matrix::Identity(dim, dim), 1e-9);
}

/// 2 sum_i lambda^H_i lambda^V_{n+1-i}, the infimum of tr(S V S^T H) over Sp(2n).
inline double symplectic_trace_bound(const SymmetricMatrix& v, const SymmetricMatrix& h)
{
    const SymplecticSpectrum lv = symplectic_eigenvalues(v);
    const SymplecticSpectrum lh = symplectic_eigenvalues(h);
    const Eigen::Index n = lv.size();
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        sum += lh[i] * lv[n - 1 - i];
    }
    return 2.0 * sum;
}

struct TheoremCheck {
    double min_observed = std::numeric_limits<double>::infinity(); ///< over samples and the optimal map
    double min_sampled = std::numeric_limits<double>::infinity();  ///< over samples only
    double bound = 0.0;
    std::size_t violations = 0;
    std::size_t trials = 0;
    double optimal_gap = 0.0; ///< |tr(S* V S*^T H) - bound| for the constructed minimizer
};

/// Samples tr(S V S^T H) over random symplectic S and counts values below the bound by
/// more than 1e-8 relative. The constructed minimizer is always part of the candidates.
inline TheoremCheck theorem_check(const SymmetricMatrix& v, const SymmetricMatrix& h, std::size_t trials,
                                  const SymplecticSampler& sampler, unsigned workers = 1)
{
    if (!is_positive_definite(v)) {
        throw NotPositiveDefinite("theorem check needs positive-definite V", eigen_range(v).first);
    }
    if (!is_positive_definite(h)) {
        throw NotPositiveDefinite("theorem check needs positive-definite H", eigen_range(h).first);
    }
    if (sampler.n() != degrees_of_freedom(v.matrix()) || v.dim() != h.dim()) {
        throw DimensionError("sampler, V and H dimensions differ");
    }

    TheoremCheck out;
    out.trials = trials;
    out.bound = symplectic_trace_bound(v, h);
    const double threshold = out.bound - 1e-8 * out.bound;

    const Matrix s_opt = optimal_symplectic_map(v, h).transpose();
    const double optimal = (s_opt * v.matrix() * s_opt.transpose() * h.matrix()).trace();
    out.optimal_gap = std::abs(optimal - out.bound);

    workers = std::max(1U, workers);
    std::vector<double> mins(workers, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> counts(workers, 0);
    detail::parallel_chunks(trials, workers, [&](std::size_t begin, std::size_t end, unsigned w) {
        for (std::size_t t = begin; t < end; ++t) {
            const Matrix s = sampler.at(t);
            const double value = (s * v.matrix() * s.transpose() * h.matrix()).trace();
            mins[w] = std::min(mins[w], value);
            if (value < threshold) {
                ++counts[w];
            }
        }
    });
    for (unsigned w = 0; w < workers; ++w) {
        out.min_sampled = std::min(out.min_sampled, mins[w]);
        out.violations += counts[w];
    }
    out.min_observed = std::min(optimal, out.min_sampled);
    return out;
}

/// El(M) = { z : z^T M z <= 1 } for a pair of positive-definite matrices.
struct EllipsoidPair {
    SymmetricMatrix M;
    SymmetricMatrix M_prime;
};

/// True iff El(M) and El(M') are linearly symplectomorphic, i.e. their symplectic
/// spectra agree elementwise within `tol` relative.
inline bool ellipsoids_equivalent(const EllipsoidPair& pair, double tol)
{
    for (const SymmetricMatrix* m : {&pair.M, &pair.M_prime}) {
        if (!is_positive_definite(*m)) {
            throw NotPositiveDefinite("ellipsoid matrix must be positive definite", eigen_range(*m).first);
        }
    }
    if (pair.M.dim() != pair.M_prime.dim()) {
        return false;
    }
    const SymplecticSpectrum a = symplectic_eigenvalues(pair.M);
    const SymplecticSpectrum b = symplectic_eigenvalues(pair.M_prime);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (std::abs(a[i] - b[i]) > tol * std::max(std::abs(a[i]), std::abs(b[i]))) {
            return false;
        }
    }
    return true;
}

namespace detail {

inline Eigen::Index require_pd_phase_space(const SymmetricMatrix& m, const char* what)
{
    const Eigen::Index n = degrees_of_freedom(m.matrix());
    if (!is_positive_definite(m)) {
        throw NotPositiveDefinite(what, eigen_range(m).first);
    }
    return n;
}

} // namespace detail

/// \int_{El(M^{-1})} (x_1^2 + p_1^2) dz
///   = sqrt(det M) |S^{2n-1}| / (2n (2n+2)) * (M_{x1 x1} + M_{p1 p1}).
inline double ellipsoid_cylinder_energy(const SymmetricMatrix& m)
{
    const Eigen::Index n = detail::require_pd_phase_space(m, "ellipsoid matrix must be positive definite");
    const double k = 2.0 * static_cast<double>(n);
    const double root_det = std::exp(0.5 * sym_eig(m).eigenvalues.array().log().sum());
    return root_det * sphere_surface_area(static_cast<int>(k)) / (k * (k + 2.0)) * (m(0, 0) + m(n, n));
}

/// Exact test of El(M^{-1}) within the closed cylinder x_1^2 + p_1^2 <= r^2: the largest
/// eigenvalue of the (x_1, p_1) block of M must not exceed r^2.
inline bool cylinder_containment(const SymmetricMatrix& m, double r)
{
    const Eigen::Index n = detail::require_pd_phase_space(m, "ellipsoid matrix must be positive definite");
    if (std::isinf(r)) {
        return true;
    }
    const double a = m(0, 0);
    const double b = m(0, n);
    const double c = m(n, n);
    const double largest = 0.5 * (a + c) + std::hypot(0.5 * (a - c), b);
    return largest <= r * r * (1.0 + 1e-12);
}

/// The two diagonal conditions M_{x1 x1} <= r^2 and M_{p1 p1} <= r^2, necessary for
/// containment but not sufficient.
inline bool cylinder_necessary_conditions(const SymmetricMatrix& m, double r)
{
    const Eigen::Index n = detail::require_pd_phase_space(m, "ellipsoid matrix must be positive definite");
    return m(0, 0) <= r * r && m(n, n) <= r * r;
}

/// \int_{B(R)} (x_1^2 + p_1^2) in R^{2n}.
inline double ball_cylinder_energy(Eigen::Index n, double radius)
{
    const int k = static_cast<int>(2 * n);
    return 2.0 * unit_ball_second_moment(k) * std::pow(radius, k + 2);
}

struct NonsqueezeResult {
    std::size_t trials = 0;
    std::size_t successes = 0; ///< images of B(R) found inside the cylinder of radius r
    double min_energy_seen = std::numeric_limits<double>::infinity();
    double ball_energy = 0.0;
};

/// Pushes B(R) through sampled symplectic maps A; the image is El(M^{-1}) with
/// M = R^2 A A^T. Counts containments in the cylinder of radius r and tracks the
/// smallest x_1^2 + p_1^2 energy among the images.
inline NonsqueezeResult nonsqueeze_search(double R, double r, std::size_t trials, const SymplecticSampler& sampler,
                                          unsigned workers = 1)
{
    if (!(R > 0.0) || !(r > 0.0)) {
        throw Error("nonsqueeze search needs positive radii");
    }
    NonsqueezeResult out;
    out.trials = trials;
    out.ball_energy = ball_cylinder_energy(sampler.n(), R);

    workers = std::max(1U, workers);
    std::vector<double> mins(workers, std::numeric_limits<double>::infinity());
    std::vector<std::size_t> hits(workers, 0);
    detail::parallel_chunks(trials, workers, [&](std::size_t begin, std::size_t end, unsigned w) {
        for (std::size_t t = begin; t < end; ++t) {
            const Matrix a = sampler.at(t);
            const SymmetricMatrix m(R * R * a * a.transpose(), 1e-9);
            if (cylinder_containment(m, r)) {
                ++hits[w];
            }
            mins[w] = std::min(mins[w], ellipsoid_cylinder_energy(m));
        }
    });
    for (unsigned w = 0; w < workers; ++w) {
        out.successes += hits[w];
        out.min_energy_seen = std::min(out.min_energy_seen, mins[w]);
    }
    return out;
}

} // namespace phasespace
