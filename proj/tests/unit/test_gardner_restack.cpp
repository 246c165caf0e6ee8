#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "phasespace/energy_bounds.hpp"
#include "phasespace/gardner_restack.hpp"

using namespace phasespace;

namespace {

Vector vec(std::initializer_list<double> values)
{
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) {
        v(i++) = x;
    }
    return v;
}

EnergyFunction half_square()
{
    return [](const Vector& z) { return 0.5 * z.squaredNorm(); };
}

RestackSource uniform_unit_interval()
{
    return {BallIndicator{0.5, vec({0.5}), 1.0}, LatticeBox{vec({-2}), vec({2}), 1.0}, half_square()};
}

Grid grid_1d(std::vector<double> values, double h = 1.0)
{
    Grid g;
    g.origin = vec({0.0});
    g.spacing = h;
    g.shape = {values.size()};
    g.values = std::move(values);
    return g;
}

} // namespace

TEST(Restack, ConstantDensityIsAlreadyOptimal)
{
    Grid g;
    g.origin = vec({-1, -1});
    g.spacing = 0.25;
    g.shape = {8, 8};
    g.values.assign(64, 2.0);
    const RestackResult r = restack({g, [](const Vector& z) { return z(0) * z(0) + 3 * z(1); }, 0});
    EXPECT_NEAR(r.energy, r.pre_energy, 1e-12 * std::abs(r.pre_energy));
}

TEST(Restack, UniformIntervalApproachesSymmetricRearrangement)
{
    const RestackResult r = restack(discretize(uniform_unit_interval(), 8));
    EXPECT_NEAR(r.energy, 1.0 / 24.0, 0.01 / 24.0);
    EXPECT_LE(r.energy, r.pre_energy);
}

TEST(Restack, ExhaustivePermutationOracle)
{
    std::mt19937_64 engine(404);
    std::uniform_int_distribution<int> value(0, 6);
    std::uniform_int_distribution<int> energy_value(-5, 9);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t cells = 2 + static_cast<std::size_t>(trial % 7);
        std::vector<double> values(cells);
        std::vector<double> energies(cells);
        for (std::size_t i = 0; i < cells; ++i) {
            values[i] = value(engine);
            energies[i] = energy_value(engine);
        }
        values[0] = std::max(values[0], 1.0);
        const Grid g = grid_1d(values);
        const EnergyFunction energy = [&](const Vector& z) { return energies[g.locate(z)]; };
        const RestackResult r = restack({g, energy, 0});

        std::vector<std::size_t> perm(cells);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        double best = std::numeric_limits<double>::infinity();
        do {
            double sum = 0.0;
            for (std::size_t i = 0; i < cells; ++i) {
                sum += values[i] * energies[perm[i]];
            }
            best = std::min(best, sum);
        } while (std::next_permutation(perm.begin(), perm.end()));
        ASSERT_EQ(r.energy, best) << "trial " << trial;
    }
}

TEST(Restack, TenCellGridsMatchExhaustiveSearch)
{
    std::mt19937_64 engine(99);
    std::uniform_int_distribution<int> digit(0, 9);
    for (int trial = 0; trial < 3; ++trial) {
        std::vector<double> values(10);
        std::vector<double> energies(10);
        for (std::size_t i = 0; i < 10; ++i) {
            values[i] = digit(engine) + 1;
            energies[i] = digit(engine) - 4;
        }
        const Grid g = grid_1d(values);
        const RestackResult r = restack({g, [&](const Vector& z) { return energies[g.locate(z)]; }, 0});
        std::vector<std::size_t> perm(10);
        std::iota(perm.begin(), perm.end(), std::size_t{0});
        double best = std::numeric_limits<double>::infinity();
        do {
            double sum = 0.0;
            for (std::size_t i = 0; i < 10; ++i) {
                sum += values[i] * energies[perm[i]];
            }
            best = std::min(best, sum);
        } while (std::next_permutation(perm.begin(), perm.end()));
        EXPECT_EQ(r.energy, best);
    }
}

TEST(Restack, PermutationIsBijectiveAndConservesValues)
{
    std::mt19937_64 engine(5);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Grid g;
    g.origin = vec({-1, -1});
    g.spacing = 0.1;
    g.shape = {20, 20};
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        g.values.push_back(uniform(engine) < 0.3 ? 0.0 : uniform(engine));
    }
    const RestackResult r = restack({g, half_square(), 0});
    std::vector<double> moved(g.cell_count(), -1.0);
    for (std::size_t src = 0; src < g.cell_count(); ++src) {
        ASSERT_LT(r.permutation[src], g.cell_count());
        ASSERT_EQ(moved[r.permutation[src]], -1.0);
        moved[r.permutation[src]] = g.values[src];
    }
    std::vector<double> a = g.values;
    std::vector<double> b = moved;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    EXPECT_EQ(a, b);
    EXPECT_LE(r.energy, r.pre_energy + 1e-12 * std::abs(r.pre_energy));
}

TEST(Restack, TiesBreakByCellOrder)
{
    const Grid g = grid_1d({1.0, 1.0, 1.0, 1.0});
    const std::vector<double> energies = {3.0, 1.0, 1.0, 0.0};
    const RestackResult r = restack({g, [&](const Vector& z) { return energies[g.locate(z)]; }, 0});
    const std::vector<std::size_t> expected = {3, 1, 2, 0};
    EXPECT_EQ(r.permutation, expected);
    const RestackResult again = restack({g, [&](const Vector& z) { return energies[g.locate(z)]; }, 0});
    EXPECT_EQ(again.permutation, r.permutation);
}

TEST(Restack, RejectsEmptyAndInvalidGrids)
{
    EXPECT_THROW(restack({grid_1d({0.0, 0.0}), half_square(), 0}), EmptyDistribution);
    EXPECT_THROW(restack({grid_1d({1.0, -1.0}), half_square(), 0}), Error);
    EXPECT_THROW(restack({grid_1d({1.0}), EnergyFunction{}, 0}), Error);
}

TEST(Restack, CellCapIsEnforcedBeforeWork)
{
    const RestackSource src = uniform_unit_interval();
    try {
        restack_convergence(src, {4, 30}, 1000);
        FAIL() << "expected ResourceCapExceeded";
    } catch (const ResourceCapExceeded& e) {
        EXPECT_EQ(e.cap(), 1000U);
        EXPECT_NE(std::string(e.what()).find("1000"), std::string::npos);
    }
    EXPECT_THROW(discretize(src, 12, 1000), ResourceCapExceeded);
    EXPECT_THROW(restack_convergence(src, {6, 4}), Error);
}

TEST(RestackConvergence, ConstantDensityLevelsAgree)
{
    Grid g;
    g.origin = vec({-1});
    g.spacing = 0.5;
    g.shape = {4};
    g.values.assign(4, 1.0);
    const RestackSource src{g, LatticeBox{vec({-1}), vec({1}), 0.5}, [](const Vector& z) { return z(0) + 2.0; }};
    const std::vector<ConvergencePoint> pts = restack_convergence(src, {0, 3});
    EXPECT_NEAR(pts[0].energy, pts[1].energy, 1e-12);
    for (const ConvergencePoint& p : pts) {
        EXPECT_NEAR(p.energy, p.pre_energy, 1e-12);
    }
}

TEST(RestackConvergence, UniformIntervalIsCauchy)
{
    const std::vector<ConvergencePoint> pts = restack_convergence(uniform_unit_interval(), {4, 6, 8, 10});
    for (std::size_t k = 2; k < pts.size(); ++k) {
        EXPECT_LT(std::abs(pts[k].energy - pts[k - 1].energy), std::abs(pts[k - 1].energy - pts[k - 2].energy));
    }
    EXPECT_NEAR(pts.back().energy, 1.0 / 24.0, 0.01 / 24.0);
    EXPECT_EQ(pts.back().cells, 4096U);
    EXPECT_EQ(pts.back().h, std::ldexp(1.0, -10));
}

TEST(RestackConvergence, GaussianTowardsHalfDensityTemperature)
{
    const double n0 = 2.0;
    const double temperature = 0.5;
    // A drifting Maxwellian: restacking recentres it at p = 0.
    const RestackSource src{Gaussian{n0, vec({1.5}), SymmetricMatrix(Matrix::Constant(1, 1, temperature))},
                            LatticeBox{vec({-6}), vec({6}), 1.0}, half_square()};
    const std::vector<ConvergencePoint> pts = restack_convergence(src, {4, 6, 8, 10});
    EXPECT_NEAR(pts.back().energy, 0.5 * n0 * temperature, 0.01 * 0.5 * n0 * temperature);
    EXPECT_LT(pts.back().energy, pts.back().pre_energy);
}

TEST(RestackConvergence, MatchedEllipsoidReachesSpecialLinearBound)
{
    Matrix shape(2, 2);
    shape << 4.0, 0.0, 0.0, 0.25;
    const SymmetricMatrix m_prime(shape);
    const SymmetricMatrix m = SymmetricMatrix::identity(2);
    const QuadraticPotential pot = QuadraticPotential::centered(m);
    const EllipsoidIndicator f{m_prime, Vector::Zero(2), 1.0};
    const double bound = linear_gardner_energy(moments(f), pot).E_min;
    EXPECT_NEAR(bound, std::numbers::pi / 2.0, 1e-12);
    const RestackSource src{f, LatticeBox{vec({-2.5, -2.5}), vec({2.5, 2.5}), 1.0},
                            [pot](const Vector& z) { return pot(z); }};
    const std::vector<ConvergencePoint> pts = restack_convergence(src, {4, 6, 7});
    EXPECT_NEAR(pts.back().energy, bound, 0.01 * bound);
    // Linear maps are among the rearrangements, so the lattice optimum approaches the bound
    // from within a discretization margin that shrinks with h.
    for (const ConvergencePoint& p : pts) {
        EXPECT_LE(p.energy, bound * (1.0 + 4.0 * p.h));
    }
}

TEST(RestackConvergence, DiscRestriction)
{
    const QuadraticPotential pot = QuadraticPotential::centered(SymmetricMatrix::identity(2));
    const BallIndicator disc{1.0, vec({0.3, -0.2}), 1.0};
    const double closed = 2.0 * std::sqrt(moments(disc).H.matrix().determinant());
    const RestackSource src{disc, LatticeBox{vec({-1.5, -1.5}), vec({1.5, 1.5}), 1.0},
                            [pot](const Vector& z) { return pot(z); }};
    const std::vector<ConvergencePoint> pts = restack_convergence(src, {5, 7});
    EXPECT_NEAR(pts.back().energy, closed, 0.01 * closed);
}

TEST(Rasterize, ParticlesLandInTheirCells)
{
    const Particles p{{{vec({0.3}), 2.0}, {vec({0.35}), 1.0}, {vec({5.0}), 7.0}}};
    const Grid g = rasterize(p, LatticeBox{vec({0}), vec({1}), 0.5}, 1);
    ASSERT_EQ(g.cell_count(), 4U);
    EXPECT_DOUBLE_EQ(g.values[1], 3.0 / 0.25);
    EXPECT_DOUBLE_EQ(g.values[0] + g.values[2] + g.values[3], 0.0);
}

TEST(Rasterize, DimensionMismatch)
{
    EXPECT_THROW(rasterize(Gaussian{1.0, Vector::Zero(2), SymmetricMatrix::identity(2)},
                           LatticeBox{vec({0}), vec({1}), 0.5}, 1),
                 DimensionError);
}
