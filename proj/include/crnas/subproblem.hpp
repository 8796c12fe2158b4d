// The per-iteration subproblem in scaled null-space coordinates:
//   min  g's + 1/2 s'Ps + (M/6)||s||^3   s.t.  ||s|| <= rho,
// solved exactly through eigendecomposition and scalar secular equations,
// with hard-case eigenvector completion. rho = 1 - alpha keeps the
// back-mapped step inside the Dikin ellipsoid at the current iterate.
#pragma once

#include <Eigen/Core>

#include "crnas/problem.hpp"

namespace crnas {

// Subproblem data in scaled null-space coordinates plus the map back to the
// full space: backmap(s) = theta_k + T W^{-1/2} s with W = T' hess(B) T,
// which makes ||backmap(s) - theta_k||_{theta_k} = ||s|| exactly.
struct ReducedModel {
    Vector g;        // scaled reduced gradient, W^{-1/2} T' grad(L)
    Matrix P;        // scaled reduced Hessian, W^{-1/2} T' hess(L) T W^{-1/2}
    double M = 0.0;  // cubic regularization weight, > 0
    double rho = 0.0;  // Dikin radius 1 - alpha, in (0,1)
    Vector theta;    // expansion point
    Matrix back;     // T W^{-1/2}

    Vector backmap(const Vector& s) const { return theta + back * s; }
};

// Solution of a secular-equation solve, kept for diagnostics.
struct SubproblemSolution {
    Vector step;
    double multiplier = 0.0;      // lambda = (M/2)||s|| (cubic) or TR multiplier
    double secular_residual = 0.0; // |phi(root)| of the scalar equation solved
    bool hard_case = false;
};

// Raised when an iterate sits so close to the cone boundary that the barrier
// metric is no longer representable in double precision.
struct MetricOverflowError : std::overflow_error {
    using std::overflow_error::overflow_error;
};

// k x n factor F = R^{-T} T' with W = T' hess(B) T = R'R, so that
// g_red = F grad, P_red = F hess F', and F' maps reduced steps back to the
// full space. W is factored after equilibration to unit diagonal, which
// keeps the factor accurate even when the coordinates span many orders of
// magnitude near the boundary.
Matrix scaled_reduction(const Vector& theta, const NullBasis& basis);

// Assembles the scaled reduced model at an interior feasible point.
ReducedModel build_reduced_model(const ConicProgram& program, const Vector& theta,
                                 const Vector& grad_L, const Matrix& hess_L,
                                 const NullBasis& basis, double M, double alpha);

// Global minimizer of g's + 1/2 s'Ps + (M/6)||s||^3 over all of R^k.
// Returns the step and lambda = (M/2)||s*||.
SubproblemSolution solve_unconstrained_cubic(const Vector& g, const Matrix& P, double M);

// Global minimizer of g's + 1/2 s'Ps over ||s|| <= rho (trust region).
SubproblemSolution solve_trust_region(const Vector& g, const Matrix& P, double rho);

// Dispatch: the unconstrained cubic minimizer if it fits inside the ball,
// otherwise the trust-region solution, which then lies on the boundary.
Vector solve_ball_constrained_cubic(const ReducedModel& model);

// Cubic model value g's + 1/2 s'Ps + (M/6)||s||^3.
double cubic_model_value(const Vector& g, const Matrix& P, double M, const Vector& s);

}  // namespace crnas
