#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "phasespace/problem_io.hpp"

using namespace phasespace;
using io::json;

namespace {

const std::filesystem::path kProblems = PHASESPACE_PROBLEMS_DIR;
const std::filesystem::path kFixtures = PHASESPACE_FIXTURES_DIR;

std::filesystem::path scratch_dir()
{
    const auto dir = std::filesystem::temp_directory_path() / "phasespace_io_tests";
    std::filesystem::create_directories(dir);
    return dir;
}

void write(const std::filesystem::path& file, const std::string& text)
{
    std::ofstream(file) << text;
}

json minimal_problem()
{
    return json::parse(R"({"n": 1, "potential": {"V": [[1, 0], [0, 1]]},
                           "distribution": {"type": "gaussian", "covariance": [[1, 0], [0, 2]]}})");
}

} // namespace

TEST(ProblemFile, LoadsWorkedExamples)
{
    const io::Problem first = io::load_problem(kProblems / "ball_squeeze.json");
    EXPECT_EQ(first.dim, 4);
    const Moments m = moments(first.distribution);
    EXPECT_NEAR(m.N, 1.0, 1e-14);
    EXPECT_LE(max_abs(m.H.matrix() - Matrix::Identity(4, 4)), 1e-13);

    const io::Problem second = io::load_problem(kProblems / "gaussian_anisotropic.json");
    EXPECT_NEAR(second.potential.V()(1, 1), 0.25, 0.0);
    EXPECT_TRUE(std::holds_alternative<Gaussian>(second.distribution.family));
}

TEST(ProblemFile, OneDimensionalRestackProblem)
{
    const io::Problem p = io::load_problem(kProblems / "restack_uniform_1d.json");
    EXPECT_EQ(p.dim, 1);
    EXPECT_FALSE(p.phase_space());
    ASSERT_TRUE(p.restack.has_value());
    EXPECT_EQ(p.restack->levels.back(), 10);
}

TEST(ProblemFile, MassNormalizesIndicators)
{
    json doc = minimal_problem();
    doc["distribution"] = json::parse(R"({"type": "ellipsoid", "matrix": [[4, 1], [1, 2]], "mass": 3})");
    EXPECT_NEAR(moments(io::parse_problem(doc).distribution).N, 3.0, 1e-14);
    doc["distribution"] = json::parse(R"({"type": "ball", "radius": 2, "mass": 0.5})");
    EXPECT_NEAR(moments(io::parse_problem(doc).distribution).N, 0.5, 1e-14);
}

TEST(ProblemFile, TemplateExpressions)
{
    json doc = minimal_problem();
    doc["potential"]["V"] = json::parse(R"([["epsilon^2", 0], [0, "2.5*epsilon"]])");
    const io::Problem p = io::parse_problem(doc, ".", 0.4);
    EXPECT_DOUBLE_EQ(p.potential.V()(0, 0), std::pow(0.4, 2.0));
    EXPECT_DOUBLE_EQ(p.potential.V()(1, 1), 1.0);
    doc["potential"]["V"][0][0] = "epsilon";
    EXPECT_DOUBLE_EQ(io::parse_problem(doc, ".", 0.4).potential.V()(0, 0), 0.4);
    doc["potential"]["V"][0][0] = "1e-1 * epsilon ^ 0.5";
    EXPECT_NEAR(io::parse_problem(doc, ".", 0.25).potential.V()(0, 0), 0.05, 1e-16);
    // Outside a sweep the token is not a number.
    try {
        io::parse_problem(doc);
        FAIL() << "expected SchemaError";
    } catch (const io::SchemaError& e) {
        EXPECT_EQ(e.path(), "/potential/V/0/0");
    }
}

TEST(SweepSpec, ValuesHitEndpointsExactly)
{
    const io::SweepSpec lin = io::load_sweep(kProblems / "gaussian_anisotropic_sweep.json");
    const std::vector<double> v = lin.values();
    ASSERT_EQ(v.size(), 30U);
    EXPECT_EQ(v.front(), 0.1);
    EXPECT_EQ(v.back(), 3.0);
    EXPECT_NEAR(v[1] - v[0], 0.1, 1e-15);

    const io::SweepSpec log = io::load_sweep(kProblems / "ball_squeeze_sweep.json");
    const std::vector<double> w = log.values();
    EXPECT_EQ(w.front(), 0.01);
    EXPECT_EQ(w.back(), 1.0);
    EXPECT_NEAR(w[1] / w[0], w[2] / w[1], 1e-12);
}

TEST(SweepSpec, TemplateFromFile)
{
    const auto dir = scratch_dir();
    json tmpl = minimal_problem();
    tmpl["potential"]["V"][1][1] = "epsilon";
    write(dir / "tmpl.json", tmpl.dump());
    write(dir / "sweep.json", R"({"range": {"start": 1, "stop": 2, "points": 3}, "template_file": "tmpl.json"})");
    const io::SweepSpec spec = io::load_sweep(dir / "sweep.json");
    EXPECT_DOUBLE_EQ(spec.instantiate(1.5).potential.V()(1, 1), 1.5);

    tmpl["potential"]["V"][1][1] = "bogus";
    write(dir / "tmpl.json", tmpl.dump());
    try {
        io::load_sweep(dir / "sweep.json");
        FAIL() << "expected SchemaError";
    } catch (const io::SchemaError& e) {
        EXPECT_EQ(e.path(), "/template_file");
        EXPECT_NE(std::string(e.what()).find("/potential/V/1/1"), std::string::npos);
    }
}

TEST(GridFile, InlineSidecarCsvAndSeparateFile)
{
    const auto dir = scratch_dir();
    write(dir / "values.csv", "0,1,2\n3, 4 ,5\n");
    write(dir / "grid.json",
          R"({"dim": 2, "shape": [2, 3], "origin": [0, 0], "spacing": 0.5, "values_csv": "values.csv"})");
    json doc = minimal_problem();
    doc["distribution"] = json::parse(R"({"type": "grid", "file": "grid.json"})");
    const io::Problem p = io::parse_problem(doc, dir);
    const Grid& g = std::get<Grid>(p.distribution.family);
    EXPECT_EQ(g.values, (std::vector<double>{0, 1, 2, 3, 4, 5}));
    EXPECT_EQ(g.shape, (std::vector<std::size_t>{2, 3}));

    doc["distribution"] = json::parse(
        R"({"type": "grid", "dim": 2, "shape": [2, 3], "origin": [0, 0], "spacing": 0.5, "values": [0,1,2,3,4,5]})");
    EXPECT_EQ(std::get<Grid>(io::parse_problem(doc).distribution.family).values, g.values);

    doc["distribution"] = json::parse(R"({"type": "grid", "file": "absent.json"})");
    try {
        io::parse_problem(doc, dir);
        FAIL() << "expected SchemaError";
    } catch (const io::SchemaError& e) {
        EXPECT_EQ(e.path(), "/distribution/file");
    }
}

TEST(Serialization, MatrixRoundTrip)
{
    Matrix m(2, 3);
    m << 1, 2.5, -3, 4e-20, 5, 6;
    EXPECT_EQ(io::matrix_from_json(io::to_json(m)), m);
    Vector v(3);
    v << 0.1, 0.2, 0.3;
    EXPECT_EQ(io::vector_from_json(io::to_json(v)), v);
}

TEST(SchemaRejection, EveryMalformedFixtureNamesItsField)
{
    const json manifest = json::parse(io::detail::read_text(kFixtures / "malformed" / "expected.json"));
    ASSERT_GE(manifest.size(), 20U);
    for (const auto& [file, expected] : manifest.items()) {
        const auto path = kFixtures / "malformed" / file;
        try {
            if (expected["kind"] == "sweep") {
                io::load_sweep(path);
            } else {
                io::load_problem(path);
            }
            ADD_FAILURE() << file << " was accepted";
        } catch (const io::SchemaError& e) {
            EXPECT_EQ(e.path(), expected["path"].get<std::string>()) << file << ": " << e.what();
        }
    }
}
