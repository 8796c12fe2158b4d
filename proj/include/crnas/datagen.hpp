// Synthetic dataset generation: biologically feasible parameter ranges,
// time/dose grid construction, deterministic simulation, exact Gillespie
// birth-death simulation, and dataset (de)serialization.
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "crnas/biomodels.hpp"
#include "crnas/rng.hpp"

namespace crnas::datagen {

using bio::Dataset;
using bio::ModelKind;
using bio::ModelParams;
using crnas::Vector;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct GridSpec {
    Vector times;
    Vector doses;  // empty for logistic
    int replicates = 1;
};

// Per-parameter ranges: the biologically feasible range (natural parameters,
// used to draw true parameter sets) and the optimization feasible range over
// the packed coordinates (upper bounds may be +inf).
struct RangeTable {
    ModelKind kind = ModelKind::phenopop;
    int S = 1;
    double x0 = 1000.0;

    // biologically feasible ranges
    Interval alpha_star;                 // phenopop growth rate
    Interval b_star;                     // max drug effect
    Interval n_star;                     // Hill coefficient
    std::vector<Interval> ec50_star;     // per-subpopulation EC50 bands
    Interval nu_star;                    // lbd death rate
    Interval beta_minus_nu_star;         // lbd birth rate offset over nu
    Interval c_star;                     // lbd observation noise (absolute)
    std::vector<Interval> logistic_alpha_star;
    std::vector<Interval> logistic_beta_star;

    // optimization feasible range over packed coordinates
    std::vector<Interval> opt;
};

// Time grid {0,3,...,36}, the 11 static dose levels, and the replicate count
// (1 deterministic, 13 for the stochastic birth-death runs). The logistic
// model uses 10 equally spaced times on [0, 10] and no dose axis.
GridSpec default_grids(ModelKind kind);

// {0} followed by 4S-1 log-spaced dose levels from 0.01 to 10 inclusive.
Vector dynamic_dose_grid(int S);

// Grids for a case study: PhenoPop with S >= 3 switches to the dynamic grid.
GridSpec grids_for(ModelKind kind, int S);

// Per-subpopulation EC50 bands derived from the dynamic dose grid: band 1
// runs from half the first nonzero dose to the midpoint of doses 2-3, band
// i >= 2 from the midpoint of doses 4i-4, 4i-3 to the midpoint of 4i-2, 4i-1.
std::vector<Interval> ec50_bands(int S);

RangeTable default_ranges(ModelKind kind, int S, double x0 = 1000.0);

ModelParams sample_true_params(ModelKind kind, int S, const RangeTable& table,
                               Rng& rng);

// Noiseless dataset containing the exact model predictions, one replicate.
Dataset simulate_deterministic(ModelKind kind, const ModelParams& params,
                               const GridSpec& grids);

// Exact stochastic simulation of a linear birth-death process started from
// x0 individuals, sampled at the (ascending) observation times. Population
// zero is absorbing.
std::vector<double> gillespie_bd(long long x0, double birth, double death,
                                 const Vector& obs_times, Rng& rng);

// Gillespie-simulated birth-death dataset: per (dose, replicate) and
// subpopulation one trajectory from round(X0 p_i) cells, summed and observed
// with N(0, c^2) noise.
Dataset simulate_lbd(const bio::LBDParams& params, const GridSpec& grids, Rng& rng);

Dataset generate_dataset(ModelKind kind, const ModelParams& params,
                         const GridSpec& grids, Rng& rng);

// Dataset files: JSON {model, S, grids, X0, true_params, observations} and
// flat CSV with columns t,d,r,x.
void write_dataset_json(const Dataset& data, const std::string& path);
Dataset read_dataset_json(const std::string& path);
void write_dataset_csv(const Dataset& data, const std::string& path);

nlohmann::json params_to_json(const ModelParams& params);
ModelParams params_from_json(ModelKind kind, const nlohmann::json& j);

}  // namespace crnas::datagen
