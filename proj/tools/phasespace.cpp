#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "phasespace/cli.hpp"

namespace cli = phasespace::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Minimal energies of phase-space distributions under affine SL and Sp maps"};
    app.require_subcommand(1);
    app.footer("Exit codes: 0 ok, 1 verification failure, 2 schema, 3 degenerate moments, 4 I/O, 5 cell cap.\n"
               "PHASESPACE_CELL_CAP overrides the restack cell cap.");

    unsigned workers = phasespace::default_workers();

    std::string bounds_file;
    CLI::App* bounds = app.add_subcommand("bounds", "Energy report (JSON) for a problem file");
    bounds->add_option("file", bounds_file, "problem file")->required();

    std::string sweep_file;
    std::string sweep_out;
    std::string sweep_gnuplot;
    CLI::App* sweep = app.add_subcommand("sweep", "Epsilon sweep of minimal energies to CSV");
    sweep->add_option("spec", sweep_file, "sweep spec file")->required();
    sweep->add_option("-o,--output", sweep_out, "CSV output path")->required();
    sweep->add_option("--gnuplot", sweep_gnuplot, "also write a gnuplot script plotting the CSV");
    sweep->add_option("-j,--jobs", workers, "worker threads")->check(CLI::PositiveNumber);

    std::string restack_file;
    std::string restack_out;
    std::vector<int> levels;
    CLI::App* restack = app.add_subcommand("restack", "Lattice restacking convergence to CSV");
    restack->add_option("file", restack_file, "problem file with a restack box")->required();
    restack->add_option("--levels", levels, "refinement levels, e.g. 4,6,8")->delimiter(',');
    restack->add_option("-o,--output", restack_out, "CSV output path")->required();

    cli::VerifyOptions verify_opt;
    std::string verify_problem;
    std::string verify_pair;
    CLI::App* verify = app.add_subcommand("verify", "Randomized verification campaigns (JSON summary)");
    verify->add_option("kind", verify_opt.kind, "theorem | nonsqueeze | ellipsoid")
        ->required()
        ->check(CLI::IsMember({"theorem", "nonsqueeze", "ellipsoid"}));
    verify->add_option("--trials", verify_opt.trials, "sampled symplectic matrices per case");
    verify->add_option("--seed", verify_opt.seed, "random seed");
    verify->add_option("--scale", verify_opt.scale, "generator entry scale")->check(CLI::PositiveNumber);
    verify->add_option("-j,--jobs", workers, "worker threads")->check(CLI::PositiveNumber);
    verify->add_option("--problem", verify_problem, "theorem: take V and H from this problem file");
    verify->add_option("--pairs", verify_opt.pairs, "theorem: number of random PD pairs");
    verify->add_option("--n", verify_opt.n, "degrees of freedom for random cases");
    verify->add_option("--R", verify_opt.R, "nonsqueeze: ball radius");
    verify->add_option("--r", verify_opt.r, "nonsqueeze: cylinder radius");
    verify->add_option("--pair", verify_pair, "ellipsoid: JSON file with M and M_prime");
    verify->add_option("--tol", verify_opt.tol, "ellipsoid: relative tolerance on symplectic spectra");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? cli::kOk : cli::kSchemaError;
    }

    if (*bounds) {
        return cli::cmd_bounds(bounds_file, std::cout, std::cerr);
    }
    if (*sweep) {
        std::optional<std::filesystem::path> gp;
        if (!sweep_gnuplot.empty()) {
            gp = sweep_gnuplot;
        }
        return cli::cmd_sweep(sweep_file, sweep_out, gp, workers, std::cerr);
    }
    if (*restack) {
        return cli::cmd_restack(restack_file, levels, restack_out, std::cerr);
    }
    verify_opt.workers = workers;
    if (!verify_problem.empty()) {
        verify_opt.problem = verify_problem;
    }
    if (!verify_pair.empty()) {
        verify_opt.pair = verify_pair;
    }
    return cli::cmd_verify(verify_opt, std::cout, std::cerr);
}
