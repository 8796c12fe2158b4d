#include "crnas/solver.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "crnas/barrier.hpp"

namespace crnas {

namespace {

Matrix reduced_hessian(const Matrix& hess_L, const Matrix& reduce) {
    const Matrix P_raw = reduce * hess_L * reduce.transpose();
    return 0.5 * (P_raw + P_raw.transpose());
}

void validate_config(const SolverConfig& c) {
    if (!(c.alpha > 0.0 && c.alpha < 1.0)) {
        throw std::invalid_argument("solver config: alpha must lie in (0,1)");
    }
    if (!(c.eta > 0.0 && c.eta <= 1.0 - c.alpha)) {
        throw std::invalid_argument("solver config: need 0 < eta <= 1 - alpha");
    }
    if (!(c.M_min <= c.M0 && c.M0 <= c.M_max) || !(c.M0 > 0.0)) {
        throw std::invalid_argument("solver config: need 0 < M_min <= M0 <= M_max");
    }
    if (c.epsilon < 0.0) {
        throw std::invalid_argument("solver config: epsilon must be >= 0");
    }
    if (c.max_iter < 1) {
        throw std::invalid_argument("solver config: max_iter must be >= 1");
    }
}

SolveReport run_solver(const ConicProgram& program, const Vector& theta0,
                       const SolverConfig& config, SolverVariant variant) {
    validate_config(config);
    {
        const auto [eq, mn] = residuals(program, theta0);
        if (!(mn > 0.0) || eq > 1e-8 * (1.0 + program.b.norm())) {
            throw std::invalid_argument("solver: theta0 is not interior feasible");
        }
    }
    const NullBasis basis = null_space_basis(program);
    const double rho = 1.0 - config.alpha;

    const auto t_start = std::chrono::steady_clock::now();

    SolveReport report;
    Vector theta = theta0;
    double L_cur = program.oracle.value(theta);
    Vector grad = program.oracle.gradient(theta);
    Matrix reduce = scaled_reduction(theta, basis);
    Vector g_red = reduce * grad;

    const auto record_point = [&](const Vector& th) {
        const auto [eq, mn] = residuals(program, th);
        report.iterate_min_coord.push_back(mn);
        report.iterate_eq_residual.push_back(eq);
        if (config.record_iterates) report.iterates.push_back(th);
    };
    record_point(theta);
    report.objective_trajectory.push_back(L_cur);
    report.best_theta = theta;
    report.best_objective = L_cur;

    double M = config.M0;
    report.termination = TerminationReason::max_iterations;

    for (int k = 0; k < config.max_iter; ++k) {
        Matrix P_red;
        if (variant == SolverVariant::second_order) {
            P_red = reduced_hessian(program.oracle.hessian(theta), reduce);
        }

        // Accept/reject loop on M. The acceptance test is the theoretical
        // decrease inequality, so accepted runs inherit its guarantees.
        Vector step;
        Vector theta_trial;
        double L_trial = 0.0;
        double step_norm = 0.0;
        bool m_exhausted = false;
        bool hit_floor = false;
        while (true) {
            if (variant == SolverVariant::second_order) {
                ReducedModel model;
                model.g = g_red;
                model.P = P_red;
                model.M = M;
                model.rho = rho;
                model.theta = theta;
                model.back = reduce.transpose();
                step = solve_ball_constrained_cubic(model);
            } else {
                const double gn = g_red.norm();
                step = gn == 0.0 ? Vector::Zero(basis.k).eval()
                                 : (-std::min(gn / M, rho) / gn * g_red).eval();
            }
            step_norm = step.norm();
            theta_trial = theta + reduce.transpose() * step;
            // the Dikin ball keeps trial points interior in exact arithmetic;
            // a nonpositive coordinate means rounding noise exceeded that
            // coordinate's scale, so the trial is rejected like a non-finite one
            const bool trial_interior = theta_trial.minCoeff() > 0.0;
            L_trial = trial_interior
                          ? program.oracle.value(theta_trial)
                          : std::numeric_limits<double>::quiet_NaN();
            const double required =
                variant == SolverVariant::second_order
                    ? (M / 12.0) * step_norm * step_norm * step_norm
                    : (M / 4.0) * step_norm * step_norm;
            const bool acceptable = trial_interior && std::isfinite(L_trial) &&
                                    L_cur - L_trial >= required - 1e-12;
            if (acceptable) break;
            if (!config.adaptive_M) {
                if (!trial_interior || !std::isfinite(L_trial)) hit_floor = true;
                break;
            }
            if (M >= config.M_max) {
                m_exhausted = true;
                break;
            }
            M = std::min(2.0 * M, config.M_max);
        }
        if (m_exhausted) {
            report.termination = TerminationReason::m_max_exceeded;
            break;
        }
        if (hit_floor) {
            report.termination = TerminationReason::numerical_limit;
            break;
        }

        // the next metric must be representable before the step commits
        Matrix reduce_next;
        try {
            reduce_next = scaled_reduction(theta_trial, basis);
        } catch (const MetricOverflowError&) {
            report.termination = TerminationReason::numerical_limit;
            break;
        }

        const Vector theta_prev = theta;
        theta = theta_trial;
        L_cur = L_trial;
        report.iterations = k + 1;
        report.objective_trajectory.push_back(L_cur);
        report.step_local_norms.push_back(step_norm);
        report.m_history.push_back(M);
        record_point(theta);
        if (L_cur < report.best_objective) {
            report.best_objective = L_cur;
            report.best_theta = theta;
        }
        if (config.adaptive_M) M = std::max(0.5 * M, config.M_min);

        grad = program.oracle.gradient(theta);
        reduce = std::move(reduce_next);
        g_red = reduce * grad;

        if (step_norm < config.eta) {
            report.termination = TerminationReason::step_norm_below_eta;
            break;
        }
        if (g_red.norm() < config.epsilon) {
            report.termination = TerminationReason::gradient_norm_below_epsilon;
            break;
        }
        if ((theta - theta_prev).norm() < config.epsilon) {
            report.termination = TerminationReason::step_euclidean_below_epsilon;
            break;
        }
    }

    report.final_theta = theta;
    report.raw_grad_norm = grad.norm();
    report.fosp_measure = g_red.norm();
    {
        const Matrix P_fin = reduced_hessian(program.oracle.hessian(theta), reduce);
        Eigen::SelfAdjointEigenSolver<Matrix> es(P_fin, Eigen::EigenvaluesOnly);
        report.sosp_measure = es.eigenvalues().minCoeff();
    }
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
            .count();
    return report;
}

}  // namespace

std::string to_string(TerminationReason reason) {
    switch (reason) {
        case TerminationReason::step_norm_below_eta: return "step_norm_below_eta";
        case TerminationReason::gradient_norm_below_epsilon:
            return "gradient_norm_below_epsilon";
        case TerminationReason::step_euclidean_below_epsilon:
            return "step_euclidean_below_epsilon";
        case TerminationReason::max_iterations: return "max_iterations";
        case TerminationReason::m_max_exceeded: return "m_max_exceeded";
        case TerminationReason::numerical_limit: return "numerical_limit";
    }
    return "unknown";
}

StationarityMeasures check_stationarity(const ConicProgram& program,
                                        const Vector& theta, const NullBasis& basis) {
    const Matrix reduce = scaled_reduction(theta, basis);
    const Vector g_red = reduce * program.oracle.gradient(theta);
    const Matrix P_red = reduced_hessian(program.oracle.hessian(theta), reduce);
    Eigen::SelfAdjointEigenSolver<Matrix> es(P_red, Eigen::EigenvaluesOnly);
    return {g_red.norm(), es.eigenvalues().minCoeff()};
}

double theorem_eta(double epsilon, double alpha, double M) {
    if (!(epsilon > 0.0) || !(alpha > 0.0 && alpha < 1.0) || !(M > 0.0)) {
        throw std::invalid_argument("theorem_eta: need epsilon, M > 0 and alpha in (0,1)");
    }
    const double t1 = 1.0 - alpha;
    const double t2 = std::sqrt(epsilon * alpha / M);
    const double t3 = std::sqrt(epsilon) * alpha * alpha / (std::sqrt(2.0) * M);
    return std::min(t1, std::min(t2, t3));
}

SolveReport crnas_solve(const ConicProgram& program, const Vector& theta0,
                        const SolverConfig& config) {
    return run_solver(program, theta0, config, SolverVariant::second_order);
}

SolveReport foas_solve(const ConicProgram& program, const Vector& theta0,
                       const SolverConfig& config) {
    return run_solver(program, theta0, config, SolverVariant::first_order);
}

}  // namespace crnas
