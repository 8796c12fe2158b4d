// Logarithmic barrier calculus for the nonnegative orthant: barrier value,
// derivatives, the induced local norms, and Dikin-ellipsoid membership.
// This five-operation contract is the extension seam for other cones; only
// the orthant barrier B(theta) = -sum log(theta_i) ships here.
#pragma once

#include <Eigen/Core>

namespace crnas {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Diagonal of the barrier Hessian at a point, entries 1/theta_i^2.
// Kept as a vector; all local-norm operations exploit diagonality.
struct LocalMetric {
    Vector diag_hess;
};

// B(theta) = -sum_i log(theta_i). Throws std::domain_error if any
// coordinate is <= 0 (exactly; interiority margins are the caller's job).
double barrier_value(const Vector& theta);

// Gradient of B: (-1/theta_1, ..., -1/theta_n).
Vector barrier_grad(const Vector& theta);

// Hessian of B, diagonal with entries 1/theta_i^2.
LocalMetric barrier_hess(const Vector& theta);

// Local norm ||v||_theta = sqrt(v' H v) with H the barrier Hessian.
double local_norm(const Vector& theta, const Vector& v);

// Dual local norm ||v||*_theta = sqrt(v' H^{-1} v) = sqrt(sum v_i^2 theta_i^2).
double dual_local_norm(const Vector& theta, const Vector& v);

// Induced matrix norm ||C||*_theta = max_{||v||_theta <= 1} ||Cv||*_theta,
// the spectral norm of H^{-1/2} C H^{-1/2}. C must be symmetric.
double local_matrix_norm(const Vector& theta, const Matrix& C);

// True iff ||theta - theta0||_{theta0} <= radius. For radius < 1 membership
// implies theta lies strictly inside the orthant.
bool dikin_contains(const Vector& theta0, const Vector& theta, double radius);

}  // namespace crnas
