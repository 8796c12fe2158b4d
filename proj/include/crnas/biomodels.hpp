// The three case-study objectives with exact value/gradient/Hessian oracles:
// Hill-mixture deterministic least squares, linear birth-death negative
// log-likelihood, and heterogeneous logistic least squares. Optimization
// runs in the transformed EC50 coordinate Ecal = E^n; estimates convert back
// to E for reporting.
#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "crnas/problem.hpp"

namespace crnas::bio {

using crnas::Matrix;
using crnas::Vector;

enum class ModelKind { phenopop, lbd, logistic };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

// Dose-response parameters in the transformed coordinate Ecal = E^n.
struct HillParams {
    double b = 0.9;     // max-effect fraction, in (0,1)
    double ecal = 1.0;  // transformed EC50, > 0
    double n = 2.0;     // Hill coefficient, > 0

    double ec50() const { return std::pow(ecal, 1.0 / n); }
    static HillParams from_ec50(double b, double E, double n) {
        return {b, std::pow(E, n), n};
    }
};

struct PhenoPopSub {
    double p = 1.0;      // initial proportion
    double alpha = 0.0;  // growth rate
    HillParams hill;
};
struct PhenoPopParams {
    std::vector<PhenoPopSub> subs;
    double x0 = 1000.0;  // known initial total cell count
    int S() const { return static_cast<int>(subs.size()); }
};

struct LBDSub {
    double p = 1.0;
    double beta = 0.5;  // per-cell birth rate
    double nu = 0.3;    // per-cell baseline death rate
    HillParams hill;
};
struct LBDParams {
    std::vector<LBDSub> subs;
    double c = 10.0;  // observation-noise standard deviation
    double x0 = 1000.0;
    int S() const { return static_cast<int>(subs.size()); }
};

struct LogisticSub {
    double p = 1.0;
    double alpha = 1.0;  // max growth rate at the inflection point
    double beta = 0.0;   // inflection-time shift
};
struct LogisticParams {
    std::vector<LogisticSub> subs;
    double f0 = 1000.0;  // total count scale
    int S() const { return static_cast<int>(subs.size()); }
};

using ModelParams = std::variant<PhenoPopParams, LBDParams, LogisticParams>;

ModelKind kind_of(const ModelParams& params);
int subpop_count(const ModelParams& params);

// Observed cell counts on a (time x dose x replicate) grid; the dose axis is
// empty for the logistic model and collapses to a single slot internally.
struct Dataset {
    ModelKind kind = ModelKind::phenopop;
    int S = 1;
    double x0 = 1000.0;
    Vector times;
    Vector doses;  // empty for logistic
    int replicates = 1;
    std::vector<double> obs;  // [time][dose][replicate], row-major
    std::optional<ModelParams> truth;

    int n_times() const { return static_cast<int>(times.size()); }
    int n_doses() const { return doses.size() == 0 ? 1 : static_cast<int>(doses.size()); }
    double dose_at(int di) const { return doses.size() == 0 ? 0.0 : doses[di]; }
    int index(int ti, int di, int ri) const {
        return (ti * n_doses() + di) * replicates + ri;
    }
    double at(int ti, int di, int ri) const { return obs[index(ti, di, ri)]; }
    double& at(int ti, int di, int ri) { return obs[index(ti, di, ri)]; }
    void allocate() {
        obs.assign(static_cast<std::size_t>(n_times()) * n_doses() * replicates, 0.0);
    }
};

struct ValGradHess {
    double value = 0.0;
    Vector grad;
    Matrix hess;
};

// --- model evaluation ---

// Viable-cell fraction H(d) = b + (1-b)/(1 + d^n / Ecal); requires d >= 0.
double hill(double d, const HillParams& params);

// Expected total PhenoPop cell count sum_i p_i X0 exp(t (alpha_i + log H_i(d))).
double phenopop_predict(double t, double d, const PhenoPopParams& params);

// Per-initial-cell birth-death moments (mu_i, sigma_i^2) at time t, dose d,
// with dose-dependent death rate nu(d) = nu - log H(d). The removable
// singularity at beta = nu(d) is evaluated by series for |lambda t| < 1e-5.
std::pair<double, double> lbd_moments(double t, double d, const LBDSub& sub);

// Total logistic count sum_i F0 p_i / (1 + exp(-alpha_i t + beta_i)).
double logistic_predict(double t, const LogisticParams& params);

// --- objectives over the packed optimization coordinates ---

// Packed coordinate layout (per-subpopulation blocks; p dropped when S = 1):
//   phenopop: [p, alpha, b, Ecal, n] x S
//   lbd:      [p, beta, nu, b, Ecal, n] x S, then [c]
//   logistic: [p, alpha, beta] x S
int param_dim(ModelKind kind, int S);
std::vector<std::string> param_names(ModelKind kind, int S);
Vector pack_params(const ModelParams& params);
ModelParams unpack_params(ModelKind kind, int S, double x0, const Vector& x);

double objective_value(const Dataset& data, const ModelParams& params);
ValGradHess objective(const Dataset& data, const ModelParams& params);

// Named per-model entry points.
ValGradHess phenopop_objective(const Dataset& data, const PhenoPopParams& params);
ValGradHess lbd_nll(const Dataset& data, const LBDParams& params);
ValGradHess logistic_objective(const Dataset& data, const LogisticParams& params);

// Oracle over packed coordinates bound to one dataset.
ObjectiveOracle make_oracle(const Dataset& data);

// Box-reduces the packed coordinates through (lower, upper) and adds the
// proportion simplex equality sum_i p_i = 1 when S >= 2. The program's
// provenance maps cone coordinates back to packed (and thence E = Ecal^{1/n}).
ConicProgram as_conic_program(const Dataset& data, const Vector& lower,
                              const Vector& upper);

}  // namespace crnas::bio
