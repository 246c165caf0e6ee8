#pragma once

// JSON problem files, sweep specifications and grid files.
//
// Problem file:
//   { "n": 2,                              // or "dim": d for non phase-space lattices
//     "potential": { "V0": 0, "d": [...], "V": [[...]] },
//     "distribution": { "type": "gaussian" | "ball" | "ellipsoid" | "particles" | "grid" | "mixture", ... },
//     "restack": { "lower": [...], "upper": [...], "base_spacing": 1.0, "levels": [...] } }  // optional
//
// Schema violations raise SchemaError carrying a JSON-pointer path to the bad field.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phasespace/distributions.hpp"
#include "phasespace/errors.hpp"
#include "phasespace/gardner_restack.hpp"
#include "phasespace/matrix_core.hpp"

namespace phasespace::io {

using json = nlohmann::json;

class SchemaError : public Error {
public:
    SchemaError(std::string path, std::string message)
        : Error((path.empty() ? std::string("/") : path) + ": " + message), path_(std::move(path)),
          message_(std::move(message))
    {
    }
    const std::string& path() const noexcept { return path_; }
    const std::string& message() const noexcept { return message_; }

private:
    std::string path_;
    std::string message_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Template token recognised in matrix entries of sweep templates.
inline constexpr const char* kSweepToken = "epsilon";

namespace detail {

inline std::string escape_pointer(const std::string& key)
{
    std::string out;
    for (char ch : key) {
        if (ch == '~') {
            out += "~0";
        } else if (ch == '/') {
            out += "~1";
        } else {
            out += ch;
        }
    }
    return out;
}

/// A JSON node together with its pointer path.
class Node {
public:
    Node(const json& value, std::string path) : value_(&value), path_(std::move(path)) {}

    const json& value() const noexcept { return *value_; }
    const std::string& path() const noexcept { return path_; }

    [[noreturn]] void fail(const std::string& message) const { throw SchemaError(path_, message); }

    bool has(const std::string& key) const { return value_->is_object() && value_->contains(key); }

    Node operator[](const std::string& key) const
    {
        if (!value_->is_object()) {
            fail("expected an object");
        }
        const auto it = value_->find(key);
        if (it == value_->end()) {
            throw SchemaError(path_ + "/" + escape_pointer(key), "missing required field");
        }
        return Node(*it, path_ + "/" + escape_pointer(key));
    }

    Node operator[](std::size_t index) const
    {
        return Node(value_->at(index), path_ + "/" + std::to_string(index));
    }

    std::size_t array_size() const
    {
        if (!value_->is_array()) {
            fail("expected an array");
        }
        return value_->size();
    }

    double number() const
    {
        if (!value_->is_number()) {
            fail("expected a number");
        }
        const double v = value_->get<double>();
        if (!std::isfinite(v)) {
            fail("expected a finite number");
        }
        return v;
    }

    double positive() const
    {
        const double v = number();
        if (!(v > 0.0)) {
            fail("expected a positive number");
        }
        return v;
    }

    double nonnegative() const
    {
        const double v = number();
        if (!(v >= 0.0)) {
            fail("expected a nonnegative number");
        }
        return v;
    }

    long long integer() const
    {
        if (!value_->is_number_integer()) {
            fail("expected an integer");
        }
        return value_->get<long long>();
    }

    std::string string() const
    {
        if (!value_->is_string()) {
            fail("expected a string");
        }
        return value_->get<std::string>();
    }

    /// Number, or in sweep templates a string "[c*]epsilon[^k]".
    double entry(const std::optional<double>& epsilon) const
    {
        if (value_->is_string() && epsilon) {
            static const std::regex pattern(
                R"(^\s*(?:([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*\*\s*)?epsilon(?:\s*\^\s*([-+]?[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?))?\s*$)");
            std::smatch match;
            const std::string text = value_->get<std::string>();
            if (!std::regex_match(text, match, pattern)) {
                fail("unrecognised template expression '" + text + "'");
            }
            const double coefficient = match[1].matched ? std::stod(match[1].str()) : 1.0;
            const double power = match[2].matched ? std::stod(match[2].str()) : 1.0;
            return coefficient * std::pow(*epsilon, power);
        }
        return number();
    }

    Vector vector(Eigen::Index expected, const std::optional<double>& epsilon = std::nullopt) const
    {
        const std::size_t size = array_size();
        if (expected >= 0 && static_cast<Eigen::Index>(size) != expected) {
            fail("expected " + std::to_string(expected) + " entries, got " + std::to_string(size));
        }
        Vector out(static_cast<Eigen::Index>(size));
        for (std::size_t i = 0; i < size; ++i) {
            out(static_cast<Eigen::Index>(i)) = (*this)[i].entry(epsilon);
        }
        return out;
    }

    Matrix matrix(Eigen::Index dim, const std::optional<double>& epsilon = std::nullopt) const
    {
        if (array_size() != static_cast<std::size_t>(dim)) {
            fail("expected " + std::to_string(dim) + " rows, got " + std::to_string(array_size()));
        }
        Matrix out(dim, dim);
        for (Eigen::Index i = 0; i < dim; ++i) {
            out.row(i) = (*this)[static_cast<std::size_t>(i)].vector(dim, epsilon).transpose();
        }
        return out;
    }

    SymmetricMatrix symmetric(Eigen::Index dim, const std::optional<double>& epsilon = std::nullopt) const
    {
        const Matrix m = matrix(dim, epsilon);
        try {
            return SymmetricMatrix(m, 1e-9);
        } catch (const Error& e) {
            fail(e.what());
        }
    }

private:
    const json* value_;
    std::string path_;
};

inline std::string read_text(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in) {
        throw IoError("cannot read " + file.string());
    }
    std::ostringstream text;
    text << in.rdbuf();
    return text.str();
}

inline json parse_json_text(const std::string& text, const std::string& origin)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError("", origin + " is not valid JSON: " + e.what());
    }
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& file)
{
    const std::filesystem::path p(file);
    return p.is_absolute() ? p : base / p;
}

inline std::vector<double> read_csv_values(const std::filesystem::path& file, const Node& where)
{
    std::ifstream in(file);
    if (!in) {
        where.fail("cannot read value file " + file.string());
    }
    std::vector<double> values;
    std::string line;
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            const auto first = cell.find_first_not_of(" \t\r");
            if (first == std::string::npos) {
                continue;
            }
            try {
                values.push_back(std::stod(cell.substr(first)));
            } catch (const std::exception&) {
                where.fail("value file " + file.string() + " has a non-numeric entry '" + cell + "'");
            }
        }
    }
    return values;
}

} // namespace detail

/// Grid document: { "dim", "shape", "origin", "spacing", "values": [...] | "values_csv": "file.csv" }.
inline Grid parse_grid(const detail::Node& node, const std::filesystem::path& base_dir)
{
    Grid grid;
    const auto dim = node["dim"].integer();
    if (dim < 1) {
        node["dim"].fail("expected a positive dimension");
    }
    const detail::Node shape = node["shape"];
    if (static_cast<long long>(shape.array_size()) != dim) {
        shape.fail("expected " + std::to_string(dim) + " extents");
    }
    for (std::size_t i = 0; i < shape.array_size(); ++i) {
        const long long extent = shape[i].integer();
        if (extent < 1) {
            shape[i].fail("extent must be positive");
        }
        grid.shape.push_back(static_cast<std::size_t>(extent));
    }
    grid.origin = node["origin"].vector(dim);
    grid.spacing = node["spacing"].positive();

    if (node.has("values")) {
        const detail::Node values = node["values"];
        for (std::size_t i = 0; i < values.array_size(); ++i) {
            grid.values.push_back(values[i].nonnegative());
        }
        if (grid.values.size() != grid.cell_count()) {
            values.fail("expected " + std::to_string(grid.cell_count()) + " values, got " +
                        std::to_string(grid.values.size()));
        }
    } else if (node.has("values_csv")) {
        const detail::Node file = node["values_csv"];
        grid.values = detail::read_csv_values(detail::resolve(base_dir, file.string()), file);
        if (grid.values.size() != grid.cell_count()) {
            file.fail("expected " + std::to_string(grid.cell_count()) + " values, got " +
                      std::to_string(grid.values.size()));
        }
        for (double v : grid.values) {
            if (!(v >= 0.0) || !std::isfinite(v)) {
                file.fail("grid values must be finite and nonnegative");
            }
        }
    } else {
        node.fail("grid needs \"values\" or \"values_csv\"");
    }
    return grid;
}

inline Distribution parse_distribution(const detail::Node& node, Eigen::Index dim,
                                       const std::filesystem::path& base_dir)
{
    const std::string type = node["type"].string();
    const auto centre = [&](const char* key) {
        return node.has(key) ? node[key].vector(dim) : Vector(Vector::Zero(dim));
    };
    // Indicators take either "amplitude" or "mass" (total N), not both.
    const auto indicator_amplitude = [&](double volume) {
        if (node.has("mass")) {
            if (node.has("amplitude")) {
                node["mass"].fail("give either \"amplitude\" or \"mass\", not both");
            }
            return node["mass"].positive() / volume;
        }
        return node.has("amplitude") ? node["amplitude"].positive() : 1.0;
    };
    if (type == "gaussian") {
        Gaussian g;
        g.weight = node.has("weight") ? node["weight"].positive() : 1.0;
        g.mean = centre("mean");
        g.covariance = node["covariance"].symmetric(dim);
        if (!is_positive_definite(g.covariance)) {
            node["covariance"].fail("covariance must be positive definite");
        }
        return g;
    }
    if (type == "ball") {
        BallIndicator b;
        b.radius = node["radius"].positive();
        b.center = centre("center");
        b.amplitude = indicator_amplitude(unit_ball_volume(static_cast<int>(dim)) *
                                          std::pow(b.radius, static_cast<double>(dim)));
        return b;
    }
    if (type == "ellipsoid") {
        EllipsoidIndicator e;
        e.shape = node["matrix"].symmetric(dim);
        if (!is_positive_definite(e.shape)) {
            node["matrix"].fail("ellipsoid matrix must be positive definite");
        }
        e.center = centre("center");
        e.amplitude = indicator_amplitude(unit_ball_volume(static_cast<int>(dim)) /
                                          std::sqrt(e.shape.matrix().determinant()));
        return e;
    }
    if (type == "particles") {
        Particles p;
        const detail::Node list = node["particles"];
        for (std::size_t i = 0; i < list.array_size(); ++i) {
            const detail::Node item = list[i];
            p.items.push_back({item["z"].vector(dim), item.has("weight") ? item["weight"].nonnegative() : 1.0});
        }
        if (p.items.empty()) {
            list.fail("particle list is empty");
        }
        return p;
    }
    if (type == "grid") {
        Grid grid;
        if (node.has("file")) {
            const detail::Node file = node["file"];
            const std::filesystem::path path = detail::resolve(base_dir, file.string());
            std::string text;
            try {
                text = detail::read_text(path);
            } catch (const IoError& e) {
                file.fail(e.what());
            }
            const json doc = detail::parse_json_text(text, path.string());
            grid = parse_grid(detail::Node(doc, ""), path.parent_path());
        } else {
            grid = parse_grid(node, base_dir);
        }
        if (grid.dim() != dim) {
            node.fail("grid dimension " + std::to_string(grid.dim()) + " does not match problem dimension " +
                      std::to_string(dim));
        }
        return grid;
    }
    if (type == "mixture") {
        Mixture m;
        const detail::Node list = node["components"];
        for (std::size_t i = 0; i < list.array_size(); ++i) {
            m.components.push_back(parse_distribution(list[i], dim, base_dir));
        }
        if (m.components.empty()) {
            list.fail("mixture has no components");
        }
        return m;
    }
    node["type"].fail("unknown distribution type '" + type + "'");
}

struct RestackSettings {
    LatticeBox box;
    std::vector<int> levels;
};

struct Problem {
    Eigen::Index dim = 0;
    QuadraticPotential potential = QuadraticPotential::centered(SymmetricMatrix::identity(2));
    Distribution distribution;
    std::optional<RestackSettings> restack;

    bool phase_space() const noexcept { return dim % 2 == 0; }
};

/// Parses a problem document. In sweep templates `epsilon` supplies the value for
/// template expressions in the potential matrix.
inline Problem parse_problem(const json& doc, const std::filesystem::path& base_dir = ".",
                             const std::optional<double>& epsilon = std::nullopt)
{
    const detail::Node root(doc, "");
    if (!doc.is_object()) {
        root.fail("problem must be a JSON object");
    }
    Problem problem;
    if (root.has("n")) {
        const long long n = root["n"].integer();
        if (n < 1) {
            root["n"].fail("degrees of freedom must be positive");
        }
        problem.dim = 2 * n;
    } else if (root.has("dim")) {
        const long long d = root["dim"].integer();
        if (d < 1) {
            root["dim"].fail("dimension must be positive");
        }
        problem.dim = d;
    } else {
        throw SchemaError("/n", "missing required field (or give \"dim\")");
    }

    const detail::Node pot = root["potential"];
    const double v0 = pot.has("V0") ? pot["V0"].number() : 0.0;
    const Vector d = pot.has("d") ? pot["d"].vector(problem.dim) : Vector(Vector::Zero(problem.dim));
    const SymmetricMatrix v = pot["V"].symmetric(problem.dim, epsilon);
    if (!is_positive_semidefinite(v)) {
        pot["V"].fail("potential matrix must be positive semidefinite");
    }
    problem.potential = QuadraticPotential(v0, d, v);

    problem.distribution = parse_distribution(root["distribution"], problem.dim, base_dir);

    if (root.has("restack")) {
        const detail::Node r = root["restack"];
        RestackSettings settings;
        settings.box.lower = r["lower"].vector(problem.dim);
        settings.box.upper = r["upper"].vector(problem.dim);
        settings.box.base_spacing = r.has("base_spacing") ? r["base_spacing"].positive() : 1.0;
        for (Eigen::Index i = 0; i < problem.dim; ++i) {
            if (!(settings.box.upper(i) > settings.box.lower(i))) {
                r["upper"][static_cast<std::size_t>(i)].fail("upper bound must exceed lower bound");
            }
        }
        if (r.has("levels")) {
            const detail::Node levels = r["levels"];
            for (std::size_t i = 0; i < levels.array_size(); ++i) {
                settings.levels.push_back(static_cast<int>(levels[i].integer()));
            }
        }
        problem.restack = settings;
    }
    return problem;
}

inline Problem load_problem(const std::filesystem::path& file)
{
    const json doc = detail::parse_json_text(detail::read_text(file), file.string());
    return parse_problem(doc, file.parent_path());
}

enum class Spacing { Linear, Log };

/// { "parameter": "epsilon", "range": { "start", "stop", "points", "spacing": "linear" | "log" },
///   "template": { problem } }   or "template_file": "problem.json"
struct SweepSpec {
    std::string parameter = kSweepToken;
    double start = 0.0;
    double stop = 1.0;
    std::size_t points = 2;
    Spacing spacing = Spacing::Linear;
    json problem_template;
    std::filesystem::path base_dir = ".";

    std::vector<double> values() const
    {
        std::vector<double> out(points);
        for (std::size_t i = 0; i < points; ++i) {
            const double t = static_cast<double>(i) / static_cast<double>(points - 1);
            out[i] = spacing == Spacing::Linear ? start + t * (stop - start)
                                                : std::exp(std::log(start) + t * (std::log(stop) - std::log(start)));
        }
        out.front() = start;
        out.back() = stop;
        return out;
    }

    /// Where schema errors inside the template are reported: "/template" for an inline
    /// template, "/template_file" (with the file named in the message) otherwise.
    std::string template_pointer = "/template";
    std::string template_file;

    Problem instantiate(double epsilon) const
    {
        try {
            return parse_problem(problem_template, base_dir, epsilon);
        } catch (const SchemaError& e) {
            if (template_file.empty()) {
                throw SchemaError(template_pointer + e.path(), e.message());
            }
            throw SchemaError(template_pointer, "in " + template_file + " at " +
                                                    (e.path().empty() ? "/" : e.path()) + ": " + e.message());
        }
    }
};

inline SweepSpec parse_sweep(const json& doc, const std::filesystem::path& base_dir = ".")
{
    const detail::Node root(doc, "");
    if (!doc.is_object()) {
        root.fail("sweep spec must be a JSON object");
    }
    SweepSpec spec;
    spec.base_dir = base_dir;
    spec.parameter = root.has("parameter") ? root["parameter"].string() : std::string(kSweepToken);
    if (spec.parameter != kSweepToken) {
        root["parameter"].fail("only the 'epsilon' parameter is supported");
    }
    const detail::Node range = root["range"];
    spec.start = range["start"].number();
    spec.stop = range["stop"].number();
    if (!(spec.start < spec.stop)) {
        range["stop"].fail("stop must exceed start");
    }
    const long long points = range["points"].integer();
    if (points < 2) {
        range["points"].fail("need at least two points");
    }
    spec.points = static_cast<std::size_t>(points);
    if (range.has("spacing")) {
        const std::string s = range["spacing"].string();
        if (s == "linear") {
            spec.spacing = Spacing::Linear;
        } else if (s == "log") {
            spec.spacing = Spacing::Log;
            if (!(spec.start > 0.0)) {
                range["start"].fail("log spacing needs a positive start");
            }
        } else {
            range["spacing"].fail("expected 'linear' or 'log'");
        }
    }
    if (root.has("template")) {
        spec.problem_template = root["template"].value();
    } else {
        const detail::Node file = root["template_file"];
        const std::filesystem::path path = detail::resolve(base_dir, file.string());
        std::string text;
        try {
            text = detail::read_text(path);
        } catch (const IoError& e) {
            file.fail(e.what());
        }
        spec.problem_template = detail::parse_json_text(text, path.string());
        spec.base_dir = path.parent_path();
        spec.template_pointer = "/template_file";
        spec.template_file = path.string();
    }
    // Validate the template once so schema errors surface before any work.
    spec.instantiate(spec.start);
    return spec;
}

inline SweepSpec load_sweep(const std::filesystem::path& file)
{
    const json doc = detail::parse_json_text(detail::read_text(file), file.string());
    return parse_sweep(doc, file.parent_path());
}

inline json to_json(const Vector& v)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        out.push_back(v(i));
    }
    return out;
}

inline json to_json(const Matrix& m)
{
    json out = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        out.push_back(to_json(Vector(m.row(i).transpose())));
    }
    return out;
}

inline Matrix matrix_from_json(const json& doc, const std::string& path = "")
{
    const detail::Node node(doc, path);
    const auto rows = static_cast<Eigen::Index>(node.array_size());
    if (rows == 0) {
        return Matrix(0, 0);
    }
    const auto cols = static_cast<Eigen::Index>(node[std::size_t{0}].array_size());
    Matrix out(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        out.row(i) = node[static_cast<std::size_t>(i)].vector(cols).transpose();
    }
    return out;
}

inline Vector vector_from_json(const json& doc, const std::string& path = "")
{
    return detail::Node(doc, path).vector(-1);
}

} // namespace phasespace::io
