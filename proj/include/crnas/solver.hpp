// CRNAS main loop and its first-order variant (FOAS): per-iteration reduced
// subproblem, adaptive regularization with an accept/reject test matching the
// theoretical decrease guarantee, stopping criteria, and stationarity
// diagnostics measured in local norms along the constraint null space.
#pragma once

#include <string>
#include <vector>

#include "crnas/problem.hpp"
#include "crnas/subproblem.hpp"

namespace crnas {

enum class SolverVariant { second_order, first_order };

enum class TerminationReason {
    step_norm_below_eta,
    gradient_norm_below_epsilon,
    step_euclidean_below_epsilon,
    max_iterations,
    m_max_exceeded,
    numerical_limit,
};

std::string to_string(TerminationReason reason);

struct SolverConfig {
    double M0 = 1.0;        // initial regularization weight
    double alpha = 0.5;     // Dikin radius is 1 - alpha
    double eta = 1e-8;      // step-norm stopping threshold, <= 1 - alpha
    double epsilon = 1e-6;  // first-order tolerance for the two extra criteria
    int max_iter = 500;
    bool adaptive_M = true;
    double M_min = 1e-6;
    double M_max = 1e12;
    SolverVariant variant = SolverVariant::second_order;
    bool record_iterates = false;
};

struct SolveReport {
    Vector final_theta;
    Vector best_theta;
    double best_objective = 0.0;
    std::vector<double> objective_trajectory;  // L(theta^0), L(theta^1), ...
    std::vector<double> step_local_norms;      // per accepted iteration
    std::vector<double> m_history;             // M used on each accepted step
    std::vector<double> iterate_min_coord;     // per recorded point, incl. theta^0
    std::vector<double> iterate_eq_residual;
    std::vector<Vector> iterates;              // only when record_iterates
    int iterations = 0;
    TerminationReason termination = TerminationReason::max_iterations;
    double wall_time_s = 0.0;
    double fosp_measure = 0.0;  // ||scaled reduced gradient|| at final point
    double sosp_measure = 0.0;  // lambda_min of the scaled reduced Hessian
    double raw_grad_norm = 0.0; // plain Euclidean ||grad L||, diagnostic only
};

struct StationarityMeasures {
    double fosp = 0.0;
    double sosp = 0.0;
};

// fosp = ||W^{-1/2} T' grad L||, which equals max{|grad L . d| : A d = 0,
// ||d||_theta = 1}; sosp = lambda_min of the scaled reduced Hessian. theta is
// an eps-FOSP iff fosp <= eps and an eps-SOSP iff also sosp >= -sqrt(eps).
StationarityMeasures check_stationarity(const ConicProgram& program,
                                        const Vector& theta, const NullBasis& basis);

// Step-norm threshold from the iteration-complexity theorem:
// min{1 - alpha, sqrt(eps alpha / M), sqrt(eps) alpha^2 / (sqrt(2) M)}.
double theorem_eta(double epsilon, double alpha, double M);

SolveReport crnas_solve(const ConicProgram& program, const Vector& theta0,
                        const SolverConfig& config);

SolveReport foas_solve(const ConicProgram& program, const Vector& theta0,
                       const SolverConfig& config);

}  // namespace crnas
