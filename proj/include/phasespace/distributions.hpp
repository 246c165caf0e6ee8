#pragma once

// Phase-space densities, the quadratic energy function, and the moments (N, c, H)
// that the linear theory reduces every distribution to.

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "phasespace/errors.hpp"
#include "phasespace/matrix_core.hpp"

namespace phasespace {

/// |S^{k-1}|, the surface area of the unit sphere in R^k.
inline double sphere_surface_area(int k)
{
    if (k < 1) {
        throw DimensionError("sphere_surface_area needs k >= 1");
    }
    const double half = 0.5 * k;
    return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

/// Volume of the unit ball in R^k.
inline double unit_ball_volume(int k)
{
    return sphere_surface_area(k) / k;
}

/// Coefficient c with \int_{B(1)} z z^T dz = c * I in R^k.
inline double unit_ball_second_moment(int k)
{
    return sphere_surface_area(k) / (k * (k + 2.0));
}

/// E(z) = V0 + (z - d)^T V (z - d) with V positive semidefinite.
class QuadraticPotential {
public:
    QuadraticPotential(double v0, Vector d, SymmetricMatrix v) : v0_(v0), d_(std::move(d)), v_(std::move(v))
    {
        if (d_.size() != v_.dim()) {
            throw DimensionError("potential minimum has length " + std::to_string(d_.size()) +
                                 " but V is " + std::to_string(v_.dim()) + "-dimensional");
        }
        if (!std::isfinite(v0_) || !d_.allFinite()) {
            throw Error("potential has non-finite entries");
        }
        if (!is_positive_semidefinite(v_)) {
            throw NotSemidefinite("potential matrix V must be positive semidefinite", eigen_range(v_).first);
        }
    }

    /// Pure quadratic z^T V z centred at the origin.
    static QuadraticPotential centered(const SymmetricMatrix& v)
    {
        return QuadraticPotential(0.0, Vector::Zero(v.dim()), v);
    }

    double V0() const noexcept { return v0_; }
    const Vector& d() const noexcept { return d_; }
    const SymmetricMatrix& V() const noexcept { return v_; }
    Eigen::Index dim() const noexcept { return v_.dim(); }

    double operator()(const Vector& z) const
    {
        const Vector r = z - d_;
        return v0_ + r.dot(v_.matrix() * r);
    }

private:
    double v0_;
    Vector d_;
    SymmetricMatrix v_;
};

struct Gaussian {
    double weight = 1.0;
    Vector mean;
    SymmetricMatrix covariance;
};

/// amplitude * indicator of the closed ball |z - center| <= radius.
struct BallIndicator {
    double radius = 1.0;
    Vector center;
    double amplitude = 1.0;
};

/// amplitude * indicator of (z - center)^T shape (z - center) <= 1.
struct EllipsoidIndicator {
    SymmetricMatrix shape;
    Vector center;
    double amplitude = 1.0;
};

struct Particle {
    Vector z;
    double weight = 1.0;
};

/// Weighted point masses.
struct Particles {
    std::vector<Particle> items;
};

/// Cell values on a uniform lattice. Cell i spans origin + h*[idx, idx+1) per axis and
/// is sampled at its centre; values are stored row-major with the last axis fastest.
struct Grid {
    Vector origin;
    double spacing = 1.0;
    std::vector<std::size_t> shape;
    std::vector<double> values;

    Eigen::Index dim() const noexcept { return static_cast<Eigen::Index>(shape.size()); }

    std::size_t cell_count() const noexcept
    {
        std::size_t count = 1;
        for (std::size_t s : shape) {
            count *= s;
        }
        return shape.empty() ? 0 : count;
    }

    double cell_volume() const { return std::pow(spacing, static_cast<double>(shape.size())); }

    Vector cell_center(std::size_t flat) const
    {
        Vector z(dim());
        for (Eigen::Index axis = dim() - 1; axis >= 0; --axis) {
            const std::size_t extent = shape[static_cast<std::size_t>(axis)];
            z(axis) = origin(axis) + (static_cast<double>(flat % extent) + 0.5) * spacing;
            flat /= extent;
        }
        return z;
    }

    /// Calls fn(flat_index, centre) for every cell in storage order.
    template <typename Fn>
    void for_each_cell(Fn&& fn) const
    {
        const std::size_t count = cell_count();
        if (count == 0) {
            return;
        }
        std::vector<std::size_t> index(shape.size(), 0);
        Vector z(dim());
        for (Eigen::Index axis = 0; axis < dim(); ++axis) {
            z(axis) = origin(axis) + 0.5 * spacing;
        }
        for (std::size_t flat = 0; flat < count; ++flat) {
            fn(flat, static_cast<const Vector&>(z));
            for (Eigen::Index axis = dim() - 1; axis >= 0; --axis) {
                const auto a = static_cast<std::size_t>(axis);
                if (++index[a] < shape[a]) {
                    z(axis) = origin(axis) + (static_cast<double>(index[a]) + 0.5) * spacing;
                    break;
                }
                index[a] = 0;
                z(axis) = origin(axis) + 0.5 * spacing;
            }
        }
    }

    /// Flat index of the cell containing z, or cell_count() when z lies outside.
    std::size_t locate(const Vector& z) const
    {
        std::size_t flat = 0;
        for (Eigen::Index axis = 0; axis < dim(); ++axis) {
            const double t = std::floor((z(axis) - origin(axis)) / spacing);
            const std::size_t extent = shape[static_cast<std::size_t>(axis)];
            if (!(t >= 0.0) || t >= static_cast<double>(extent)) {
                return cell_count();
            }
            flat = flat * extent + static_cast<std::size_t>(t);
        }
        return flat;
    }
};

struct Distribution;

struct Mixture {
    std::vector<Distribution> components;
};

/// Tagged union of the supported phase-space densities.
struct Distribution {
    using Family = std::variant<Gaussian, BallIndicator, EllipsoidIndicator, Particles, Grid, Mixture>;
    Family family;

    Distribution() = default;
    template <typename T>
        requires std::is_constructible_v<Family, T&&> && (!std::is_same_v<std::remove_cvref_t<T>, Distribution>)
    Distribution(T&& value) : family(std::forward<T>(value))
    {
    }
};

/// Total mass, centre of mass and centred second-moment matrix.
struct Moments {
    double N = 0.0;
    Vector c;
    SymmetricMatrix H;
};

namespace detail {

inline void require_positive(double value, const char* what)
{
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw Error(std::string(what) + " must be positive and finite");
    }
}

inline void require_nonnegative(double value, const char* what)
{
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw Error(std::string(what) + " must be nonnegative and finite");
    }
}

inline Moments combine(const std::vector<Moments>& parts, Eigen::Index dim)
{
    double total = 0.0;
    Vector centre = Vector::Zero(dim);
    for (const Moments& m : parts) {
        total += m.N;
        centre += m.N * m.c;
    }
    if (!(total > 0.0)) {
        throw EmptyDistribution("mixture has zero total mass");
    }
    centre /= total;
    Matrix h = Matrix::Zero(dim, dim);
    for (const Moments& m : parts) {
        const Vector offset = m.c - centre;
        h += m.H.matrix() + m.N * offset * offset.transpose();
    }
    return {total, centre, SymmetricMatrix(h, 1e-12)};
}

} // namespace detail

/// Phase-space dimension of a distribution.
inline Eigen::Index dimension(const Distribution& f)
{
    return std::visit(
        [](const auto& d) -> Eigen::Index {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return d.mean.size();
            } else if constexpr (std::is_same_v<T, BallIndicator> || std::is_same_v<T, EllipsoidIndicator>) {
                return d.center.size();
            } else if constexpr (std::is_same_v<T, Particles>) {
                if (d.items.empty()) {
                    throw EmptyDistribution("particle list is empty");
                }
                return d.items.front().z.size();
            } else if constexpr (std::is_same_v<T, Grid>) {
                return d.dim();
            } else {
                if (d.components.empty()) {
                    throw EmptyDistribution("mixture has no components");
                }
                return dimension(d.components.front());
            }
        },
        f.family);
}

/// N = \int f, c = (1/N) \int z f, H = \int (z - c)(z - c)^T f.
inline Moments moments(const Distribution& f)
{
    return std::visit(
        [](const auto& d) -> Moments {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                detail::require_positive(d.weight, "gaussian weight");
                if (d.mean.size() != d.covariance.dim()) {
                    throw DimensionError("gaussian mean and covariance dimensions differ");
                }
                if (!is_positive_definite(d.covariance)) {
                    throw NotPositiveDefinite("gaussian covariance", eigen_range(d.covariance).first);
                }
                return {d.weight, d.mean, SymmetricMatrix(d.weight * d.covariance.matrix())};
            } else if constexpr (std::is_same_v<T, BallIndicator>) {
                detail::require_positive(d.radius, "ball radius");
                detail::require_positive(d.amplitude, "ball amplitude");
                const int k = static_cast<int>(d.center.size());
                const double mass = d.amplitude * unit_ball_volume(k) * std::pow(d.radius, k);
                const double second = d.amplitude * unit_ball_second_moment(k) * std::pow(d.radius, k + 2);
                return {mass, d.center, SymmetricMatrix(second * Matrix::Identity(k, k))};
            } else if constexpr (std::is_same_v<T, EllipsoidIndicator>) {
                detail::require_positive(d.amplitude, "ellipsoid amplitude");
                const int k = static_cast<int>(d.center.size());
                if (k != d.shape.dim()) {
                    throw DimensionError("ellipsoid centre and shape dimensions differ");
                }
                const double inv_root_det = 1.0 / std::sqrt(d.shape.matrix().determinant());
                const Matrix inverse = pd_power(d.shape, -1.0).matrix();
                const double mass = d.amplitude * unit_ball_volume(k) * inv_root_det;
                return {mass, d.center,
                        SymmetricMatrix(d.amplitude * unit_ball_second_moment(k) * inv_root_det * inverse, 1e-9)};
            } else if constexpr (std::is_same_v<T, Particles>) {
                if (d.items.empty()) {
                    throw EmptyDistribution("particle list is empty");
                }
                const Eigen::Index k = d.items.front().z.size();
                double total = 0.0;
                Vector centre = Vector::Zero(k);
                for (const Particle& p : d.items) {
                    detail::require_nonnegative(p.weight, "particle weight");
                    if (p.z.size() != k) {
                        throw DimensionError("particles have inconsistent dimensions");
                    }
                    total += p.weight;
                    centre += p.weight * p.z;
                }
                if (!(total > 0.0)) {
                    throw EmptyDistribution("particles carry zero total weight");
                }
                centre /= total;
                Matrix h = Matrix::Zero(k, k);
                for (const Particle& p : d.items) {
                    const Vector r = p.z - centre;
                    h += p.weight * r * r.transpose();
                }
                return {total, centre, SymmetricMatrix(h)};
            } else if constexpr (std::is_same_v<T, Grid>) {
                detail::require_positive(d.spacing, "grid spacing");
                const Eigen::Index k = d.dim();
                if (k == 0 || d.origin.size() != k || d.values.size() != d.cell_count()) {
                    throw DimensionError("grid origin, shape and value count are inconsistent");
                }
                const double volume = d.cell_volume();
                for (double v : d.values) {
                    detail::require_nonnegative(v, "grid value");
                }
                double total = 0.0;
                Vector first = Vector::Zero(k);
                d.for_each_cell([&](std::size_t i, const Vector& z) {
                    if (d.values[i] != 0.0) {
                        total += d.values[i];
                        first += d.values[i] * z;
                    }
                });
                if (!(total > 0.0)) {
                    throw EmptyDistribution("grid has zero total mass");
                }
                const Vector centre = first / total;
                Matrix h = Matrix::Zero(k, k);
                Vector r(k);
                d.for_each_cell([&](std::size_t i, const Vector& z) {
                    if (d.values[i] != 0.0) {
                        r = z - centre;
                        h.noalias() += d.values[i] * r * r.transpose();
                    }
                });
                return {total * volume, centre, SymmetricMatrix(volume * h)};
            } else {
                if (d.components.empty()) {
                    throw EmptyDistribution("mixture has no components");
                }
                std::vector<Moments> parts;
                parts.reserve(d.components.size());
                for (const Distribution& component : d.components) {
                    parts.push_back(moments(component));
                }
                const Eigen::Index k = parts.front().c.size();
                for (const Moments& m : parts) {
                    if (m.c.size() != k) {
                        throw DimensionError("mixture components have inconsistent dimensions");
                    }
                }
                return detail::combine(parts, k);
            }
        },
        f.family);
}

using DensityFunction = std::function<double(const Vector&)>;

/// Point-evaluation closure for a density with per-family setup done once.
/// Point masses evaluate to zero; lattices handle them by deposition instead.
inline DensityFunction make_density_function(const Distribution& f)
{
    return std::visit(
        [](const auto& d) -> DensityFunction {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                const Eigen::LLT<Matrix> chol(d.covariance.matrix());
                if (chol.info() != Eigen::Success) {
                    throw NotPositiveDefinite("gaussian covariance", eigen_range(d.covariance).first);
                }
                const Matrix l = chol.matrixL();
                const double k = static_cast<double>(d.mean.size());
                const double log_norm = std::log(d.weight) - l.diagonal().array().log().sum() -
                                        0.5 * k * std::log(2.0 * std::numbers::pi);
                return [l, mean = d.mean, log_norm](const Vector& z) {
                    const Vector w = l.triangularView<Eigen::Lower>().solve(z - mean);
                    return std::exp(log_norm - 0.5 * w.squaredNorm());
                };
            } else if constexpr (std::is_same_v<T, BallIndicator>) {
                return [r2 = d.radius * d.radius, centre = d.center, a = d.amplitude](const Vector& z) {
                    return (z - centre).squaredNorm() <= r2 ? a : 0.0;
                };
            } else if constexpr (std::is_same_v<T, EllipsoidIndicator>) {
                return [m = d.shape.matrix(), centre = d.center, a = d.amplitude](const Vector& z) {
                    const Vector r = z - centre;
                    return r.dot(m * r) <= 1.0 ? a : 0.0;
                };
            } else if constexpr (std::is_same_v<T, Particles>) {
                return [](const Vector&) { return 0.0; };
            } else if constexpr (std::is_same_v<T, Grid>) {
                return [grid = d](const Vector& z) {
                    const std::size_t cell = grid.locate(z);
                    return cell < grid.values.size() ? grid.values[cell] : 0.0;
                };
            } else {
                std::vector<DensityFunction> parts;
                for (const Distribution& component : d.components) {
                    parts.push_back(make_density_function(component));
                }
                return [parts = std::move(parts)](const Vector& z) {
                    double sum = 0.0;
                    for (const DensityFunction& p : parts) {
                        sum += p(z);
                    }
                    return sum;
                };
            }
        },
        f.family);
}

inline double density(const Distribution& f, const Vector& z)
{
    return make_density_function(f)(z);
}

/// The distribution f(z - shift).
inline Distribution translated(const Distribution& f, const Vector& shift)
{
    return std::visit(
        [&shift](const auto& d) -> Distribution {
            using T = std::decay_t<decltype(d)>;
            T out = d;
            if constexpr (std::is_same_v<T, Gaussian>) {
                out.mean += shift;
            } else if constexpr (std::is_same_v<T, BallIndicator> || std::is_same_v<T, EllipsoidIndicator>) {
                out.center += shift;
            } else if constexpr (std::is_same_v<T, Particles>) {
                for (Particle& p : out.items) {
                    p.z += shift;
                }
            } else if constexpr (std::is_same_v<T, Grid>) {
                out.origin += shift;
            } else {
                for (Distribution& component : out.components) {
                    component = translated(component, shift);
                }
            }
            return out;
        },
        f.family);
}

/// \int E f for the quadratic E, from the moments alone:
/// N*V0 + tr(V H) + N (c - d)^T V (c - d).
inline double energy_from_moments(const Moments& m, const QuadraticPotential& pot)
{
    if (m.c.size() != pot.dim()) {
        throw DimensionError("distribution and potential dimensions differ");
    }
    const Vector offset = m.c - pot.d();
    return m.N * pot.V0() + (pot.V().matrix() * m.H.matrix()).trace() +
           m.N * offset.dot(pot.V().matrix() * offset);
}

inline double potential_energy(const Distribution& f, const QuadraticPotential& pot)
{
    return energy_from_moments(moments(f), pot);
}

} // namespace phasespace
