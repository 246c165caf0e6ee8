#pragma once

// Lattice restacking: the greedy rearrangement that pairs the largest cell values of f
// with the lowest-energy cells. Its limit as the lattice is refined is the minimal
// energy over area-preserving rearrangements.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "phasespace/distributions.hpp"
#include "phasespace/errors.hpp"
#include "phasespace/matrix_core.hpp"

namespace phasespace {

using EnergyFunction = std::function<double(const Vector&)>;

inline constexpr std::size_t kDefaultCellCap = std::size_t{1} << 24;

/// Axis-aligned box covered by the lattice h * Z^d with h = base_spacing * 2^-level.
struct LatticeBox {
    Vector lower;
    Vector upper;
    double base_spacing = 1.0;

    Eigen::Index dim() const noexcept { return lower.size(); }

    double spacing(int level) const { return std::ldexp(base_spacing, -level); }

    std::vector<std::size_t> shape(int level) const
    {
        const double h = spacing(level);
        std::vector<std::size_t> out;
        for (Eigen::Index axis = 0; axis < dim(); ++axis) {
            const double cells = std::ceil((upper(axis) - lower(axis)) / h - 1e-9);
            out.push_back(static_cast<std::size_t>(std::max(cells, 1.0)));
        }
        return out;
    }

    /// Cell count at a level, saturating instead of overflowing.
    double cell_count(int level) const
    {
        double count = 1.0;
        for (std::size_t s : shape(level)) {
            count *= static_cast<double>(s);
        }
        return count;
    }

    void validate() const
    {
        if (lower.size() == 0 || lower.size() != upper.size()) {
            throw DimensionError("lattice box bounds must be non-empty and of equal length");
        }
        if (!(base_spacing > 0.0) || !std::isfinite(base_spacing)) {
            throw Error("lattice spacing must be positive");
        }
        for (Eigen::Index axis = 0; axis < dim(); ++axis) {
            if (!(upper(axis) > lower(axis))) {
                throw Error("lattice box upper bound must exceed lower bound on every axis");
            }
        }
    }
};

struct RestackProblem {
    Grid grid;
    EnergyFunction energy; ///< evaluated at cell centres
    int level = 0;
};

struct RestackResult {
    double energy = 0.0;     ///< h^d * sum_i f(lambda_{i,f}) E(lambda_{i,E})
    double pre_energy = 0.0; ///< h^d * sum_i f(lambda_i) E(lambda_i), the identity arrangement
    /// permutation[source cell] = destination cell, flat row-major indices.
    std::vector<std::size_t> permutation;
};

namespace detail {

inline void deposit_point_masses(const Distribution& f, Grid& grid)
{
    std::visit(
        [&grid](const auto& d) {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Particles>) {
                const double volume = grid.cell_volume();
                for (const Particle& p : d.items) {
                    const std::size_t cell = grid.locate(p.z);
                    if (cell < grid.values.size()) {
                        grid.values[cell] += p.weight / volume;
                    }
                }
            } else if constexpr (std::is_same_v<T, Mixture>) {
                for (const Distribution& component : d.components) {
                    deposit_point_masses(component, grid);
                }
            }
        },
        f.family);
}

} // namespace detail

/// Samples f at the cell centres of the box lattice at `level`. Point masses are
/// deposited into the cell that contains them with value mass / h^d.
inline Grid rasterize(const Distribution& f, const LatticeBox& box, int level, std::size_t cap = kDefaultCellCap)
{
    box.validate();
    if (dimension(f) != box.dim()) {
        throw DimensionError("distribution and lattice box dimensions differ");
    }
    const double count = box.cell_count(level);
    if (count > static_cast<double>(cap)) {
        throw ResourceCapExceeded(count >= 1.8e19 ? ~std::size_t{0} : static_cast<std::size_t>(count), cap);
    }
    Grid grid;
    grid.origin = box.lower;
    grid.spacing = box.spacing(level);
    grid.shape = box.shape(level);
    grid.values.assign(grid.cell_count(), 0.0);
    const DensityFunction rho = make_density_function(f);
    grid.for_each_cell([&](std::size_t i, const Vector& z) { grid.values[i] = rho(z); });
    detail::deposit_point_masses(f, grid);
    return grid;
}

/// Greedy restacking: cell values sorted descending are placed on cell energies sorted
/// ascending. Both sorts are stable, so ties resolve by lexicographic cell position.
inline RestackResult restack(const RestackProblem& problem)
{
    const Grid& grid = problem.grid;
    const std::size_t count = grid.cell_count();
    if (count == 0 || grid.values.size() != count || grid.origin.size() != grid.dim()) {
        throw DimensionError("restack grid shape, origin and values are inconsistent");
    }
    if (!problem.energy) {
        throw Error("restack problem has no energy function");
    }
    bool occupied = false;
    for (double v : grid.values) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error("restack grid values must be finite and nonnegative");
        }
        occupied = occupied || v > 0.0;
    }
    if (!occupied) {
        throw EmptyDistribution("restack grid has no positive cell");
    }

    std::vector<double> energy(count);
    grid.for_each_cell([&](std::size_t i, const Vector& z) { energy[i] = problem.energy(z); });

    std::vector<std::size_t> by_value(count);
    std::vector<std::size_t> by_energy(count);
    std::iota(by_value.begin(), by_value.end(), std::size_t{0});
    std::iota(by_energy.begin(), by_energy.end(), std::size_t{0});
    std::stable_sort(by_value.begin(), by_value.end(),
                     [&](std::size_t a, std::size_t b) { return grid.values[a] > grid.values[b]; });
    std::stable_sort(by_energy.begin(), by_energy.end(),
                     [&](std::size_t a, std::size_t b) { return energy[a] < energy[b]; });

    RestackResult out;
    out.permutation.resize(count);
    double restacked = 0.0;
    double identity = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
        restacked += grid.values[by_value[k]] * energy[by_energy[k]];
        identity += grid.values[k] * energy[k];
        out.permutation[by_value[k]] = by_energy[k];
    }
    const double volume = grid.cell_volume();
    out.energy = volume * restacked;
    out.pre_energy = volume * identity;
    return out;
}

/// A density, a box containing its support, and the energy: refinable to any level.
struct RestackSource {
    Distribution density;
    LatticeBox box;
    EnergyFunction energy;
};

inline RestackProblem discretize(const RestackSource& source, int level, std::size_t cap = kDefaultCellCap)
{
    return {rasterize(source.density, source.box, level, cap), source.energy, level};
}

struct ConvergencePoint {
    int level = 0;
    double h = 0.0;
    std::size_t cells = 0;
    double energy = 0.0;
    double pre_energy = 0.0;
};

/// Restacks the same box at each level. Levels must be strictly increasing; the cap is
/// checked for every level before any work is done.
inline std::vector<ConvergencePoint> restack_convergence(const RestackSource& source, const std::vector<int>& levels,
                                                         std::size_t cap = kDefaultCellCap)
{
    source.box.validate();
    for (std::size_t k = 0; k < levels.size(); ++k) {
        if (k > 0 && !(levels[k] > levels[k - 1])) {
            throw Error("restack levels must be strictly increasing");
        }
        const double count = source.box.cell_count(levels[k]);
        if (count > static_cast<double>(cap)) {
            throw ResourceCapExceeded(count >= 1.8e19 ? ~std::size_t{0} : static_cast<std::size_t>(count), cap);
        }
    }
    std::vector<ConvergencePoint> out;
    for (int level : levels) {
        const RestackProblem problem = discretize(source, level, cap);
        const RestackResult r = restack(problem);
        out.push_back({level, problem.grid.spacing, problem.grid.cell_count(), r.energy, r.pre_energy});
    }
    return out;
}

} // namespace phasespace
