#pragma once

// Command implementations behind the `phasespace` executable. Each command writes its
// document to `out`, diagnostics to `err`, and returns the process exit code:
//   0 ok, 1 verification failure, 2 schema / invalid parameters, 3 degenerate moments,
//   4 I/O, 5 lattice cell cap exceeded.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "phasespace/distributions.hpp"
#include "phasespace/energy_bounds.hpp"
#include "phasespace/errors.hpp"
#include "phasespace/gardner_restack.hpp"
#include "phasespace/problem_io.hpp"
#include "phasespace/verify.hpp"

namespace phasespace::cli {

using json = nlohmann::json;

enum ExitCode : int {
    kOk = 0,
    kVerificationFailed = 1,
    kSchemaError = 2,
    kDegenerateMoments = 3,
    kIoError = 4,
    kResourceCap = 5,
};

/// Environment variable overriding the restack cell cap.
inline constexpr const char* kCellCapVariable = "PHASESPACE_CELL_CAP";

inline std::string format_number(double value)
{
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

/// Runs a command body and maps library errors onto exit codes.
inline int guarded(std::ostream& err, const std::function<int()>& body)
{
    try {
        return body();
    } catch (const io::SchemaError& e) {
        err << "error: schema: " << e.what() << '\n';
        return kSchemaError;
    } catch (const DegenerateMoments& e) {
        err << "error: degenerate moments: " << e.what() << '\n';
        return kDegenerateMoments;
    } catch (const io::IoError& e) {
        err << "error: io: " << e.what() << '\n';
        return kIoError;
    } catch (const ResourceCapExceeded& e) {
        err << "error: cell cap " << e.cap() << " exceeded: " << e.what() << " (set " << kCellCapVariable
            << " to raise it)\n";
        return kResourceCap;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kSchemaError;
    }
}

inline json map_to_json(const AffineMap& map)
{
    return {{"A", io::to_json(map.A)}, {"from", io::to_json(map.from)}, {"to", io::to_json(map.to)}};
}

inline json optional_number(const std::optional<double>& v)
{
    return v ? json(*v) : json(nullptr);
}

/// Energy report for a problem: moments, spectra, both minimal energies and maps.
inline json bounds_report(const io::Problem& problem)
{
    if (!problem.phase_space()) {
        throw io::SchemaError("/n", "energy bounds need an even phase-space dimension");
    }
    const Moments m = moments(problem.distribution);
    const EnergyReport sl = linear_gardner_energy(m, problem.potential);
    const EnergyReport sp = linear_gromov_energy(m, problem.potential);
    return {
        {"n", problem.dim / 2},
        {"N", m.N},
        {"c", io::to_json(m.c)},
        {"H", io::to_json(m.H.matrix())},
        {"eigenvalues_V", io::to_json(sl.spectrum_V)},
        {"eigenvalues_H", io::to_json(sl.spectrum_H)},
        {"lambda_V", io::to_json(sp.spectrum_V)},
        {"lambda_H", io::to_json(sp.spectrum_H)},
        {"E_initial", sl.initial_energy},
        {"E_SL", sl.E_min},
        {"E_Sp", sp.E_min},
        {"F_SL", optional_number(sl.fraction)},
        {"F_Sp", optional_number(sp.fraction)},
        {"map_SL", map_to_json(sl.map)},
        {"map_Sp", map_to_json(sp.map)},
        {"gap_SL", verify_map_optimality(sl, m, problem.potential)},
        {"gap_Sp", verify_map_optimality(sp, m, problem.potential)},
    };
}

inline int cmd_bounds(const std::filesystem::path& file, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        const io::Problem problem = io::load_problem(file);
        out << bounds_report(problem).dump(2) << '\n';
        return kOk;
    });
}

struct SweepRow {
    double epsilon = 0.0;
    double E_initial = 0.0;
    double E_SL = 0.0;
    double E_Sp = 0.0;
    std::optional<double> F_SL;
    std::optional<double> F_Sp;
};

inline std::vector<SweepRow> run_sweep(const io::SweepSpec& spec, unsigned workers = 1)
{
    const std::vector<double> eps = spec.values();
    std::vector<SweepRow> rows(eps.size());
    std::vector<std::exception_ptr> failures(eps.size());
    detail::parallel_chunks(eps.size(), workers, [&](std::size_t begin, std::size_t end, unsigned) {
        for (std::size_t i = begin; i < end; ++i) {
            try {
                const io::Problem problem = spec.instantiate(eps[i]);
                if (!problem.phase_space()) {
                    throw io::SchemaError("/template/n", "energy bounds need an even phase-space dimension");
                }
                const Moments m = moments(problem.distribution);
                const EnergyReport sl = linear_gardner_energy(m, problem.potential);
                const EnergyReport sp = linear_gromov_energy(m, problem.potential);
                rows[i] = {eps[i], sl.initial_energy, sl.E_min, sp.E_min, sl.fraction, sp.fraction};
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    });
    for (const std::exception_ptr& failure : failures) {
        if (failure) {
            std::rethrow_exception(failure);
        }
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows)
{
    std::ostringstream csv;
    csv << "epsilon,E_initial,E_SL,E_Sp,F_SL,F_Sp\n";
    const auto optional_field = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
    for (const SweepRow& r : rows) {
        csv << format_number(r.epsilon) << ',' << format_number(r.E_initial) << ',' << format_number(r.E_SL) << ','
            << format_number(r.E_Sp) << ',' << optional_field(r.F_SL) << ',' << optional_field(r.F_Sp) << '\n';
    }
    return csv.str();
}

inline std::string gnuplot_script(const std::filesystem::path& csv_file)
{
    std::ostringstream gp;
    gp << "set datafile separator ','\n"
       << "set key autotitle columnhead\n"
       << "set xlabel 'epsilon'\n"
       << "set ylabel 'minimal energy'\n"
       << "plot '" << csv_file.filename().string() << "' using 1:3 with lines title 'E_SL', \\\n"
       << "     '' using 1:4 with lines title 'E_Sp', \\\n"
       << "     '' using 1:2 with lines dashtype 2 title 'E_initial'\n";
    return gp.str();
}

inline void write_file(const std::filesystem::path& file, const std::string& text)
{
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw io::IoError("cannot write " + file.string());
    }
    out << text;
    if (!out) {
        throw io::IoError("failed writing " + file.string());
    }
}

inline int cmd_sweep(const std::filesystem::path& spec_file, const std::filesystem::path& csv_file,
                     const std::optional<std::filesystem::path>& gnuplot_file, unsigned workers, std::ostream& err)
{
    return guarded(err, [&] {
        const io::SweepSpec spec = io::load_sweep(spec_file);
        write_file(csv_file, sweep_csv(run_sweep(spec, workers)));
        if (gnuplot_file) {
            write_file(*gnuplot_file, gnuplot_script(csv_file));
        }
        return kOk;
    });
}

/// Cell cap from PHASESPACE_CELL_CAP, falling back to the library default.
inline std::size_t cell_cap_from_env()
{
    const char* raw = std::getenv(kCellCapVariable);
    if (raw == nullptr || *raw == '\0') {
        return kDefaultCellCap;
    }
    try {
        std::size_t used = 0;
        const unsigned long long cap = std::stoull(raw, &used);
        if (used != std::string(raw).size() || cap == 0) {
            throw std::invalid_argument(raw);
        }
        return static_cast<std::size_t>(cap);
    } catch (const std::exception&) {
        throw Error(std::string(kCellCapVariable) + " must be a positive integer, got '" + raw + "'");
    }
}

inline std::string restack_csv(const std::vector<ConvergencePoint>& points)
{
    std::ostringstream csv;
    csv << "level,h,cells,energy,pre_energy\n";
    for (const ConvergencePoint& p : points) {
        csv << p.level << ',' << format_number(p.h) << ',' << p.cells << ',' << format_number(p.energy) << ','
            << format_number(p.pre_energy) << '\n';
    }
    return csv.str();
}

/// Restack source for a problem: its density over the declared box, energy from the potential.
inline RestackSource restack_source(const io::Problem& problem)
{
    if (!problem.restack) {
        throw io::SchemaError("/restack", "missing required field (restacking needs a lattice box)");
    }
    if (problem.dim > 4) {
        throw io::SchemaError("/n", "restacking is limited to phase-space dimension 4 or less");
    }
    const QuadraticPotential pot = problem.potential;
    return {problem.distribution, problem.restack->box, [pot](const Vector& z) { return pot(z); }};
}

inline int cmd_restack(const std::filesystem::path& file, const std::vector<int>& levels,
                       const std::filesystem::path& csv_file, std::ostream& err)
{
    return guarded(err, [&] {
        const io::Problem problem = io::load_problem(file);
        const RestackSource source = restack_source(problem);
        std::vector<int> chosen = levels.empty() ? problem.restack->levels : levels;
        if (chosen.empty()) {
            throw io::SchemaError("/restack/levels", "no refinement levels given (use --levels)");
        }
        const std::vector<ConvergencePoint> points = restack_convergence(source, chosen, cell_cap_from_env());
        write_file(csv_file, restack_csv(points));
        return kOk;
    });
}

struct VerifyOptions {
    std::string kind;
    std::size_t trials = 10000;
    std::uint64_t seed = 0;
    double scale = 1.0;
    unsigned workers = 1;
    // theorem
    std::optional<std::filesystem::path> problem;
    std::size_t pairs = 1;
    int n = 2;
    // nonsqueeze
    double R = 1.0;
    double r = 0.5;
    // ellipsoid
    std::optional<std::filesystem::path> pair;
    double tol = 1e-9;
};

inline json theorem_case(const TheoremCheck& c)
{
    return {{"bound", c.bound},
            {"min_observed", c.min_observed},
            {"min_sampled", c.min_sampled},
            {"violations", c.violations},
            {"optimal_gap", c.optimal_gap}};
}

inline bool theorem_passed(const TheoremCheck& c)
{
    return c.violations == 0 && c.optimal_gap <= 1e-8 * std::max(1.0, c.bound);
}

inline int verify_theorem(const VerifyOptions& opt, std::ostream& out)
{
    std::vector<std::pair<SymmetricMatrix, SymmetricMatrix>> cases;
    if (opt.problem) {
        const io::Problem problem = io::load_problem(*opt.problem);
        if (!problem.phase_space()) {
            throw io::SchemaError("/n", "theorem check needs an even phase-space dimension");
        }
        cases.emplace_back(problem.potential.V(), moments(problem.distribution).H);
    } else {
        if (opt.n < 1 || opt.pairs < 1) {
            throw Error("--n and --pairs must be positive");
        }
        std::mt19937_64 engine(detail::splitmix64(opt.seed));
        for (std::size_t k = 0; k < opt.pairs; ++k) {
            const SymmetricMatrix v = random_positive_definite(2 * opt.n, engine);
            const SymmetricMatrix h = random_positive_definite(2 * opt.n, engine);
            cases.emplace_back(v, h);
        }
    }

    json list = json::array();
    std::size_t violations = 0;
    double min_ratio = std::numeric_limits<double>::infinity();
    double max_gap = 0.0;
    bool passed = true;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const Eigen::Index n = degrees_of_freedom(cases[k].first.matrix());
        const SymplecticSampler sampler(n, opt.seed + k, opt.scale);
        const TheoremCheck c = theorem_check(cases[k].first, cases[k].second, opt.trials, sampler, opt.workers);
        violations += c.violations;
        max_gap = std::max(max_gap, c.optimal_gap);
        min_ratio = std::min(min_ratio, c.min_sampled / c.bound);
        passed = passed && theorem_passed(c);
        list.push_back(theorem_case(c));
    }
    json doc = {{"kind", "theorem"},   {"trials", opt.trials},          {"seed", opt.seed},
                {"pairs", cases.size()}, {"violations", violations},    {"max_optimal_gap", max_gap},
                {"min_sampled_over_bound", min_ratio}, {"passed", passed}};
    if (cases.size() == 1) {
        doc["bound"] = list[0]["bound"];
        doc["min_observed"] = list[0]["min_observed"];
        doc["min_sampled"] = list[0]["min_sampled"];
        doc["optimal_gap"] = list[0]["optimal_gap"];
    } else {
        doc["cases"] = list;
    }
    out << doc.dump(2) << '\n';
    return passed ? kOk : kVerificationFailed;
}

inline int verify_nonsqueeze(const VerifyOptions& opt, std::ostream& out)
{
    if (opt.n < 1 || !(opt.R > 0.0) || !(opt.r > 0.0)) {
        throw Error("nonsqueeze needs --n >= 1 and positive --R, --r");
    }
    const SymplecticSampler sampler(opt.n, opt.seed, opt.scale);
    const NonsqueezeResult res = nonsqueeze_search(opt.R, opt.r, opt.trials, sampler, opt.workers);
    const bool energy_ok = res.min_energy_seen >= res.ball_energy * (1.0 - 1e-6);
    const bool passed = res.successes == 0 && energy_ok;
    const json doc = {{"kind", "nonsqueeze"},
                      {"n", opt.n},
                      {"R", opt.R},
                      {"r", opt.r},
                      {"trials", res.trials},
                      {"seed", opt.seed},
                      {"successes", res.successes},
                      {"min_energy_seen", res.min_energy_seen},
                      {"ball_energy", res.ball_energy},
                      {"energy_bound_held", energy_ok},
                      {"passed", passed}};
    out << doc.dump(2) << '\n';
    return passed ? kOk : kVerificationFailed;
}

/// Pair file: { "M": [[...]], "M_prime": [[...]] }.
inline int verify_ellipsoid(const VerifyOptions& opt, std::ostream& out)
{
    if (!opt.pair) {
        throw Error("ellipsoid verification needs --pair <file>");
    }
    const json doc = io::detail::parse_json_text(io::detail::read_text(*opt.pair), opt.pair->string());
    const io::detail::Node root(doc, "");
    const std::size_t dim = root["M"].array_size();
    if (dim == 0 || dim % 2 != 0) {
        root["M"].fail("ellipsoid matrices need an even, positive dimension");
    }
    const auto d = static_cast<Eigen::Index>(dim);
    EllipsoidPair pair{root["M"].symmetric(d), root["M_prime"].symmetric(d)};
    if (!is_positive_definite(pair.M)) {
        root["M"].fail("matrix must be positive definite");
    }
    if (!is_positive_definite(pair.M_prime)) {
        root["M_prime"].fail("matrix must be positive definite");
    }
    const bool equivalent = ellipsoids_equivalent(pair, opt.tol);
    const json report = {{"kind", "ellipsoid"},
                         {"equivalent", equivalent},
                         {"tol", opt.tol},
                         {"lambda_M", io::to_json(symplectic_eigenvalues(pair.M).values)},
                         {"lambda_M_prime", io::to_json(symplectic_eigenvalues(pair.M_prime).values)}};
    out << report.dump(2) << '\n';
    return kOk;
}

inline int cmd_verify(const VerifyOptions& opt, std::ostream& out, std::ostream& err)
{
    return guarded(err, [&] {
        if (opt.kind == "theorem") {
            return verify_theorem(opt, out);
        }
        if (opt.kind == "nonsqueeze") {
            return verify_nonsqueeze(opt, out);
        }
        if (opt.kind == "ellipsoid") {
            return verify_ellipsoid(opt, out);
        }
        throw Error("unknown verification kind '" + opt.kind + "' (theorem, nonsqueeze, ellipsoid)");
    });
}

} // namespace phasespace::cli
