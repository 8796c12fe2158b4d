// Command-line front end: dataset simulation, single-dataset solves,
// full benchmark experiments, and derivative self-checks.
// Exit codes: 0 success, 1 check failure, 2 config error, 3 infeasibility.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "crnas/bench.hpp"

namespace {

using namespace crnas;
using bio::ModelKind;

int cmd_simulate(const std::string& model, int S, std::uint64_t seed, double x0,
                 const std::string& out_prefix) {
    const ModelKind kind = bio::model_kind_from_string(model);
    const datagen::RangeTable table = datagen::default_ranges(kind, S, x0);
    const datagen::GridSpec grids = datagen::grids_for(kind, S);
    Rng rng = Rng(seed).derive(1);
    const bio::ModelParams truth = datagen::sample_true_params(kind, S, table, rng);
    const bio::Dataset data = datagen::generate_dataset(kind, truth, grids, rng);
    datagen::write_dataset_json(data, out_prefix + ".json");
    datagen::write_dataset_csv(data, out_prefix + ".csv");
    std::cout << "wrote " << out_prefix << ".json and " << out_prefix << ".csv ("
              << data.n_times() << " times x " << data.n_doses() << " doses x "
              << data.replicates << " replicates)\n";
    return 0;
}

int cmd_solve(const std::string& model, int S, const std::string& solver,
              const SolverConfig& config, std::uint64_t seed, double x0,
              const std::string& data_path, int starts) {
    const ModelKind kind = bio::model_kind_from_string(model);
    const datagen::RangeTable table = datagen::default_ranges(kind, S, x0);

    bio::Dataset data;
    if (!data_path.empty()) {
        data = datagen::read_dataset_json(data_path);
        if (data.kind != kind || data.S != S) {
            throw std::invalid_argument("--data does not match --model/--S");
        }
    } else {
        Rng rng = Rng(seed).derive(1);
        const bio::ModelParams truth = datagen::sample_true_params(kind, S, table, rng);
        data = datagen::generate_dataset(kind, truth, datagen::grids_for(kind, S), rng);
    }

    Vector lo(static_cast<Eigen::Index>(table.opt.size()));
    Vector hi(static_cast<Eigen::Index>(table.opt.size()));
    for (std::size_t i = 0; i < table.opt.size(); ++i) {
        lo[static_cast<Eigen::Index>(i)] = table.opt[i].lo;
        hi[static_cast<Eigen::Index>(i)] = table.opt[i].hi;
    }
    const ConicProgram program = bio::as_conic_program(data, lo, hi);
    Rng start_rng = Rng(seed).derive(2);
    const auto points = bench::sample_initial_points(table, program, starts, start_rng);

    double best = kInf;
    SolveReport best_report;
    for (const auto& theta0 : points) {
        const SolveReport report = solver == "foas"
                                       ? foas_solve(program, theta0, config)
                                       : crnas_solve(program, theta0, config);
        if (report.best_objective < best) {
            best = report.best_objective;
            best_report = report;
        }
    }
    const Vector packed = program.provenance->to_original(best_report.best_theta);
    const bio::ModelParams estimate = bio::unpack_params(kind, S, data.x0, packed);

    std::cout << "solver:      " << solver << "\n"
              << "starts:      " << starts << "\n"
              << "best value:  " << best << "\n"
              << "iterations:  " << best_report.iterations << "\n"
              << "termination: " << to_string(best_report.termination) << "\n"
              << "fosp/sosp:   " << best_report.fosp_measure << " / "
              << best_report.sosp_measure << "\n"
              << "estimate:    " << datagen::params_to_json(estimate).dump() << "\n";
    if (data.truth && kind == ModelKind::lbd) {
        std::cout << "relative likelihood vs truth: "
                  << bench::relative_likelihood(estimate, *data.truth, data) << "\n";
    }
    return 0;
}

int cmd_bench(const std::string& config_path) {
    std::ifstream in(config_path);
    if (!in) throw std::invalid_argument("cannot read config " + config_path);
    nlohmann::json j;
    in >> j;
    bench::ExperimentConfig config = bench::experiment_config_from_json(j);
    if (config.output_dir.empty()) config.output_dir = "results";
    std::filesystem::create_directories(config.output_dir);

    const bench::ResultsTable table = bench::run_experiment(config);
    const std::string csv = config.output_dir + "/results.csv";
    const std::string jsn = config.output_dir + "/results.json";
    bench::export_csv(table, csv);
    bench::export_json(table, jsn);

    int failed = 0;
    for (const auto& r : table.rows) {
        if (!r.error.empty()) ++failed;
    }
    std::cout << "rows: " << table.rows.size() << " (" << failed << " failed), "
              << "aggregates: " << table.aggregates.size() << "\n"
              << "wrote " << csv << " and " << jsn << "\n";
    return 0;
}

// central finite differences of the oracle value/gradient at sampled
// biologically feasible parameter sets
int cmd_check_derivatives(std::uint64_t seed, int points) {
    bool all_ok = true;
    for (const auto kind :
         {ModelKind::phenopop, ModelKind::lbd, ModelKind::logistic}) {
        const int S = 2;
        const datagen::RangeTable table = datagen::default_ranges(kind, S);
        Rng rng = Rng(seed).derive(static_cast<std::uint64_t>(kind) + 10);
        const bio::ModelParams truth =
            datagen::sample_true_params(kind, S, table, rng);
        const bio::Dataset data =
            datagen::generate_dataset(kind, truth, datagen::grids_for(kind, S), rng);

        double worst_grad = 0.0, worst_hess = 0.0;
        for (int pt = 0; pt < points; ++pt) {
            const bio::ModelParams probe =
                datagen::sample_true_params(kind, S, table, rng);
            const Vector x = bio::pack_params(probe);
            const auto vgh = bio::objective(data, probe);
            for (Eigen::Index i = 0; i < x.size(); ++i) {
                const double h = 1e-5 * std::abs(x[i]);
                Vector xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                const auto up = bio::unpack_params(kind, S, data.x0, xp);
                const auto um = bio::unpack_params(kind, S, data.x0, xm);
                const double fd =
                    (bio::objective_value(data, up) - bio::objective_value(data, um)) /
                    (2.0 * h);
                worst_grad = std::max(
                    worst_grad, std::abs(fd - vgh.grad[i]) /
                                    std::max(1.0, std::abs(vgh.grad[i])));
                const Vector hcol =
                    (bio::objective(data, up).grad - bio::objective(data, um).grad) /
                    (2.0 * h);
                worst_hess = std::max(worst_hess,
                                      (hcol - vgh.hess.col(i)).norm() /
                                          std::max(1.0, vgh.hess.col(i).norm()));
            }
        }
        const bool ok = worst_grad < 1e-5 && worst_hess < 1e-5;
        all_ok = all_ok && ok;
        std::printf("%-9s gradient max rel err %.3e, hessian max rel err %.3e  [%s]\n",
                    bio::to_string(kind).c_str(), worst_grad, worst_hess,
                    ok ? "ok" : "FAIL");
    }
    return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CRNAS: cubic regularized Newton with affine scaling"};
    app.require_subcommand(1);

    std::string model = "phenopop";
    int S = 1;
    std::uint64_t seed = 0;
    double x0 = 1000.0;
    std::string out_prefix = "dataset";
    std::string data_path;
    std::string solver = "crnas";
    int starts = 1;
    int fd_points = 20;
    SolverConfig config;
    std::string bench_config_path;

    auto* sim = app.add_subcommand("simulate", "emit a synthetic dataset");
    sim->add_option("--model", model, "phenopop | lbd | logistic");
    sim->add_option("--S", S, "subpopulation count");
    sim->add_option("--seed", seed, "master seed");
    sim->add_option("--x0", x0, "initial total cell count");
    sim->add_option("--out", out_prefix, "output path prefix");

    auto* sol = app.add_subcommand("solve", "solve one dataset with one solver");
    sol->add_option("--model", model, "phenopop | lbd | logistic");
    sol->add_option("--S", S, "subpopulation count");
    sol->add_option("--solver", solver, "crnas | foas");
    sol->add_option("--alpha", config.alpha, "Dikin parameter in (0,1)");
    sol->add_option("--M0", config.M0, "initial regularization weight");
    sol->add_option("--eta", config.eta, "step-norm stopping threshold");
    sol->add_option("--epsilon", config.epsilon, "first-order tolerance");
    sol->add_option("--max-iter", config.max_iter, "iteration cap");
    sol->add_option("--seed", seed, "master seed");
    sol->add_option("--x0", x0, "initial total cell count");
    sol->add_option("--data", data_path, "dataset JSON (otherwise simulate from seed)");
    sol->add_option("--starts", starts, "number of initial points");

    auto* ben = app.add_subcommand("bench", "run a multi-start experiment");
    ben->add_option("--config", bench_config_path, "experiment config JSON")
        ->required();

    auto* chk = app.add_subcommand("check-derivatives",
                                   "finite-difference oracle validation");
    chk->add_option("--seed", seed, "master seed");
    chk->add_option("--points", fd_points, "probe points per model");

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_simulate(model, S, seed, x0, out_prefix);
        if (sol->parsed()) {
            if (solver != "crnas" && solver != "foas") {
                throw std::invalid_argument("unknown solver: " + solver);
            }
            return cmd_solve(model, S, solver, config, seed, x0, data_path, starts);
        }
        if (ben->parsed()) return cmd_bench(bench_config_path);
        if (chk->parsed()) return cmd_check_derivatives(seed, fd_points);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
