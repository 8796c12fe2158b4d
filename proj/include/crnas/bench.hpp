// Multi-start benchmark harness: dataset generation, initial-point sampling
// over the optimization feasible ranges, per-(dataset, solver, start) solver
// runs in a thread pool, aggregate metrics, and CSV/JSON result export.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "crnas/datagen.hpp"
#include "crnas/solver.hpp"

namespace crnas::bench {

using bio::Dataset;
using bio::ModelKind;
using bio::ModelParams;
using datagen::RangeTable;

struct SolverSpec {
    std::string name = "crnas";  // "crnas" or "foas"
    SolverConfig config;
};

struct ExperimentConfig {
    ModelKind kind = ModelKind::phenopop;
    int S = 1;
    int n_datasets = 100;
    int n_starts = 20;
    std::uint64_t seed = 0;
    double x0 = 1000.0;
    std::vector<SolverSpec> solvers = {SolverSpec{}};
    std::string output_dir;
};

struct ResultRow {
    int dataset_id = 0;
    std::string solver;
    int start_id = 0;
    double objective = 0.0;
    int iterations = 0;
    double wall_time_s = 0.0;
    std::string termination;
    double fosp = 0.0;
    double sosp = 0.0;
    std::optional<ModelParams> estimate;  // reported in natural coordinates
    std::string error;                    // nonempty when the solve failed
};

struct Aggregate {
    int dataset_id = 0;
    std::string solver;
    double best_value = 0.0;
    int best_start = 0;
    int iterations_to_best = 0;
    double total_time_s = 0.0;
};

struct ResultsTable {
    ExperimentConfig config;
    std::vector<ResultRow> rows;
    std::vector<Aggregate> aggregates;
};

// Initial points in cone coordinates: packed coordinates drawn uniformly in
// the optimization ranges (log-uniform on (lo + 1e-3, 100] when the upper
// bound is infinite), mapped through the provenance, projected onto the
// equality constraints, and verified interior; up to 1000 retries per point.
std::vector<Vector> sample_initial_points(const RangeTable& table,
                                          const ConicProgram& program, int count,
                                          Rng& rng);

// Objective ratio NLL(estimate) / NLL(truth) on the same dataset; below 1
// means the estimate explains the data at least as well as the truth.
double relative_likelihood(const ModelParams& estimate, const ModelParams& truth,
                           const Dataset& data);

ResultsTable run_experiment(const ExperimentConfig& config);

// Fixed CSV layout:
// dataset_id,solver,start_id,objective,iterations,wall_time_s,termination,fosp,sosp
void export_csv(const ResultsTable& table, const std::string& path);
void export_json(const ResultsTable& table, const std::string& path);

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

// Pool size: hardware concurrency, capped by the CRNAS_THREADS env variable.
int worker_count();

}  // namespace crnas::bench
