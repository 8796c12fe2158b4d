// Conic programs  min L(theta)  s.t.  A theta = b, theta in the nonnegative
// orthant, with derivative oracles, the box-to-cone reduction, null-space
// bases of the equality constraints, and interior feasible-point search.
#pragma once

#include <Eigen/Core>

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "crnas/rng.hpp"

namespace crnas {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Smooth objective with exact derivatives. All three callables must be
// reentrant: they are shared across concurrent solver runs.
struct ObjectiveOracle {
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
};

// Affine bijection between original box variables x (l <= x <= u) and the
// cone coordinates produced by the box-to-cone reduction. Coordinate j maps
// to the shifted primal coordinate theta_j = x_j - l_j; coordinates with
// finite u_j additionally own a slack theta_{slack_index[j]} = u_j - x_j.
struct BoxProvenance {
    Vector lower;                 // l, finite
    Vector upper;                 // u, entries may be +inf
    std::vector<int> slack_index; // -1 when u_j = +inf

    int n_original() const { return static_cast<int>(lower.size()); }

    Vector to_cone(const Vector& x) const;
    Vector to_original(const Vector& theta) const;
};

struct ConicProgram {
    ObjectiveOracle oracle;
    Matrix A;  // m x n, m may be 0
    Vector b;
    int n = 0; // cone dimension
    std::optional<BoxProvenance> provenance;
};

// Orthonormal basis of the null space of A.
struct NullBasis {
    Matrix T; // n x k, A*T = 0, T'T = I
    int k = 0;
};

struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised when rank(A) = n and the feasible set is a single point.
struct TrivialNullSpaceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rewrites  min f(x) s.t. A x = b, l <= x <= u  over cone coordinates.
// Finite-u components get a paired slack and the equality
// theta_j + theta_slack = u_j - l_j; infinite-u components stay as single
// shifted coordinates. The oracle is pulled back through the affine map and
// the provenance records the bijection. Requires l < u componentwise.
ConicProgram from_box_constrained(const ObjectiveOracle& oracle, const Matrix& A,
                                  const Vector& b, const Vector& lower,
                                  const Vector& upper);

// Orthonormal basis of {d : A d = 0} via SVD, rank tolerance 1e-10 * ||A||.
// Throws TrivialNullSpaceError when the null space is {0}.
NullBasis null_space_basis(const Matrix& A, int n_cols);
NullBasis null_space_basis(const ConicProgram& program);

// Least-squares projection of theta onto {A theta = b}.
Vector project_affine(const Matrix& A, const Vector& b, const Vector& theta);

// Finds theta0 with ||A theta0 - b|| <= 1e-8 (1 + ||b||) and min theta0_i > 0.
// With a hint (per-coordinate finite sampling ranges in cone coordinates),
// samples the hint interior and projects onto the affine set, retrying up to
// 1000 times. Without a hint, runs damped Newton toward the analytic center
// of {A theta = b, theta > 0}. Throws InfeasibleError on failure.
Vector feasible_interior_point(
    const ConicProgram& program,
    const std::optional<std::vector<std::pair<double, double>>>& box_hint, Rng& rng);

// Diagnostics: (||A theta - b||, min_i theta_i).
std::pair<double, double> residuals(const ConicProgram& program, const Vector& theta);

}  // namespace crnas
