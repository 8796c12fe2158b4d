#include "crnas/problem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>

#include "crnas/barrier.hpp"

namespace crnas {

Vector BoxProvenance::to_cone(const Vector& x) const {
    const int n_orig = n_original();
    int n_cone = n_orig;
    for (int j = 0; j < n_orig; ++j)
        if (slack_index[j] >= 0) ++n_cone;
    Vector theta(n_cone);
    for (int j = 0; j < n_orig; ++j) {
        theta[j] = x[j] - lower[j];
        if (slack_index[j] >= 0) theta[slack_index[j]] = upper[j] - x[j];
    }
    return theta;
}

Vector BoxProvenance::to_original(const Vector& theta) const {
    const int n_orig = n_original();
    Vector x(n_orig);
    for (int j = 0; j < n_orig; ++j) x[j] = lower[j] + theta[j];
    return x;
}

ConicProgram from_box_constrained(const ObjectiveOracle& oracle, const Matrix& A,
                                  const Vector& b, const Vector& lower,
                                  const Vector& upper) {
    const int n_orig = static_cast<int>(lower.size());
    if (upper.size() != n_orig) {
        throw std::invalid_argument("from_box_constrained: bound size mismatch");
    }
    if (A.size() > 0 && A.cols() != n_orig) {
        throw std::invalid_argument("from_box_constrained: A has wrong column count");
    }
    for (int j = 0; j < n_orig; ++j) {
        if (!std::isfinite(lower[j]) || !(lower[j] < upper[j])) {
            throw std::invalid_argument(
                "from_box_constrained: requires finite l_j < u_j in coordinate " +
                std::to_string(j));
        }
    }

    BoxProvenance prov;
    prov.lower = lower;
    prov.upper = upper;
    prov.slack_index.assign(n_orig, -1);
    int n_cone = n_orig;
    for (int j = 0; j < n_orig; ++j) {
        if (std::isfinite(upper[j])) prov.slack_index[j] = n_cone++;
    }

    const int m_orig = static_cast<int>(A.rows());
    const int n_pairs = n_cone - n_orig;
    Matrix A_cone = Matrix::Zero(m_orig + n_pairs, n_cone);
    Vector b_cone(m_orig + n_pairs);
    if (m_orig > 0) {
        A_cone.topLeftCorner(m_orig, n_orig) = A;
        b_cone.head(m_orig) = b - A * lower;
    }
    int row = m_orig;
    for (int j = 0; j < n_orig; ++j) {
        if (prov.slack_index[j] < 0) continue;
        A_cone(row, j) = 1.0;
        A_cone(row, prov.slack_index[j]) = 1.0;
        b_cone[row] = upper[j] - lower[j];
        ++row;
    }

    ObjectiveOracle pulled;
    pulled.value = [oracle, prov](const Vector& theta) {
        return oracle.value(prov.to_original(theta));
    };
    pulled.gradient = [oracle, prov, n_cone](const Vector& theta) {
        Vector g = Vector::Zero(n_cone);
        g.head(prov.n_original()) = oracle.gradient(prov.to_original(theta));
        return g;
    };
    pulled.hessian = [oracle, prov, n_cone](const Vector& theta) {
        Matrix H = Matrix::Zero(n_cone, n_cone);
        const int no = prov.n_original();
        H.topLeftCorner(no, no) = oracle.hessian(prov.to_original(theta));
        return H;
    };

    ConicProgram program;
    program.oracle = std::move(pulled);
    program.A = std::move(A_cone);
    program.b = std::move(b_cone);
    program.n = n_cone;
    program.provenance = std::move(prov);
    return program;
}

NullBasis null_space_basis(const Matrix& A, int n_cols) {
    if (A.rows() == 0 || A.size() == 0) {
        return NullBasis{Matrix::Identity(n_cols, n_cols), n_cols};
    }
    if (!A.allFinite()) {
        throw std::invalid_argument("null_space_basis: A has non-finite entries");
    }
    // Coordinates with an identically zero column are exact null directions
    // and get pure identity basis vectors; keeping them out of the SVD block
    // stops huge steps along them from polluting the constraint rows through
    // rounded mixed-scale inner products.
    std::vector<int> touched, untouched;
    for (int j = 0; j < n_cols; ++j) {
        if (A.col(j).cwiseAbs().maxCoeff() == 0.0) {
            untouched.push_back(j);
        } else {
            touched.push_back(j);
        }
    }
    const int nb = static_cast<int>(touched.size());
    Matrix AB(A.rows(), nb);
    for (int j = 0; j < nb; ++j) AB.col(j) = A.col(touched[j]);

    int kb = 0;
    Matrix VB;
    if (nb > 0) {
        Eigen::JacobiSVD<Matrix> svd(AB, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double tol = 1e-10 * (sv.size() > 0 ? sv[0] : 0.0);
        int rank = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv[i] > tol) ++rank;
        kb = nb - rank;
        if (kb > 0) VB = svd.matrixV().rightCols(kb);
    }
    const int k = kb + static_cast<int>(untouched.size());
    if (k == 0) {
        throw TrivialNullSpaceError(
            "null_space_basis: fully determined feasible set (rank(A) = n)");
    }
    Matrix T = Matrix::Zero(n_cols, k);
    for (int j = 0; j < nb; ++j) T.row(touched[j]).head(kb) = VB.row(j);
    for (std::size_t u = 0; u < untouched.size(); ++u) {
        T(untouched[u], kb + static_cast<int>(u)) = 1.0;
    }
    return NullBasis{std::move(T), k};
}

NullBasis null_space_basis(const ConicProgram& program) {
    return null_space_basis(program.A, program.n);
}

Vector project_affine(const Matrix& A, const Vector& b, const Vector& theta) {
    if (A.rows() == 0) return theta;
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    return theta - cod.solve(A * theta - b);
}

namespace {

bool is_interior_feasible(const ConicProgram& p, const Vector& theta) {
    const auto [eq, mn] = residuals(p, theta);
    return mn > 0.0 && eq <= 1e-8 * (1.0 + p.b.norm());
}

// Phase-I: push min_i theta_i positive by minimizing the smooth proxy
// s * log sum_i exp(-theta_i / s) over the null-space coordinates,
// annealing s downward. Convex in z for each s.
bool phase_one_interior(const Matrix& T, Vector& theta) {
    double s = std::max(1.0, -2.0 * theta.minCoeff());
    const auto proxy = [&s](const Vector& th) {
        const double mx = (-th.array() / s).maxCoeff();
        return s * (mx + std::log(((-th.array() / s) - mx).exp().sum()));
    };
    for (int round = 0; round < 60 && theta.minCoeff() <= 0.0; ++round) {
        for (int it = 0; it < 50; ++it) {
            const double mx = (-theta.array() / s).maxCoeff();
            Vector w = ((-theta.array() / s) - mx).exp().matrix();
            w /= w.sum();
            const Vector grad = -T.transpose() * w;
            if (grad.norm() < 1e-14) break;
            const Vector Tw = T.transpose() * w;
            Matrix H = (T.transpose() * w.asDiagonal() * T - Tw * Tw.transpose()) / s;
            H.diagonal().array() += 1e-12 + 1e-8 * H.diagonal().maxCoeff();
            Vector dz = H.ldlt().solve(-grad);
            if (!dz.allFinite()) break;
            // keep moves at a moderate scale so coordinates stay representable
            const double cap = 10.0 * (1.0 + theta.norm());
            if (dz.norm() > cap) dz *= cap / dz.norm();
            const double f0 = proxy(theta);
            double t = 1.0;
            bool moved = false;
            for (int ls = 0; ls < 40; ++ls) {
                const Vector cand = theta + t * (T * dz);
                if (proxy(cand) < f0 - 1e-12 * std::abs(f0)) {
                    theta = cand;
                    moved = true;
                    break;
                }
                t *= 0.5;
            }
            if (theta.minCoeff() > 0.0) return true;
            if (!moved) break;
        }
        s *= 0.3;
    }
    return theta.minCoeff() > 0.0;
}

// Damped Newton on the barrier restricted to the affine set, starting from a
// strictly interior feasible point. When the feasible set has a recession
// direction no center exists and the barrier decreases forever; the growth
// cap stops such runs at a still-interior, still-feasible iterate.
Vector analytic_center(const Matrix& T, Vector theta) {
    const double scale0 = 1.0 + theta.norm();
    for (int it = 0; it < 100; ++it) {
        const Vector g = T.transpose() * barrier_grad(theta);
        const Vector d = barrier_hess(theta).diag_hess;
        const Matrix H = T.transpose() * d.asDiagonal() * T;
        const Vector dz = H.ldlt().solve(-g);
        const double lambda2 = -g.dot(dz);
        if (!(lambda2 > 1e-20) || !dz.allFinite()) break;
        const double lambda = std::sqrt(lambda2);
        theta += (1.0 / (1.0 + lambda)) * (T * dz);
        if (lambda < 1e-10) break;
        if (theta.norm() > 1e3 * scale0) break;
    }
    return theta;
}

}  // namespace

Vector feasible_interior_point(
    const ConicProgram& program,
    const std::optional<std::vector<std::pair<double, double>>>& box_hint, Rng& rng) {
    const int n = program.n;

    if (box_hint) {
        if (static_cast<int>(box_hint->size()) != n) {
            throw std::invalid_argument("feasible_interior_point: hint size mismatch");
        }
        for (int attempt = 0; attempt < 1000; ++attempt) {
            Vector theta(n);
            for (int i = 0; i < n; ++i) {
                theta[i] = rng.uniform((*box_hint)[i].first, (*box_hint)[i].second);
            }
            theta = project_affine(program.A, program.b, theta);
            if (is_interior_feasible(program, theta)) return theta;
        }
        throw InfeasibleError(
            "feasible_interior_point: no interior point after 1000 hint samples");
    }

    if (program.A.rows() == 0) {
        return Vector::Ones(n);
    }

    // Min-norm particular solution; coordinates untouched by any equality are
    // free in the affine set, so lift them to 1.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(program.A);
    Vector theta = cod.solve(program.b);
    for (int i = 0; i < n; ++i) {
        if (program.A.col(i).cwiseAbs().maxCoeff() == 0.0 && theta[i] <= 0.0) {
            theta[i] = 1.0;
        }
    }

    const NullBasis basis = null_space_basis(program);
    if (theta.minCoeff() <= 0.0 && !phase_one_interior(basis.T, theta)) {
        throw InfeasibleError(
            "feasible_interior_point: phase-I failed to reach the cone interior");
    }
    theta = analytic_center(basis.T, theta);
    theta = project_affine(program.A, program.b, theta);  // kill roundoff drift
    if (!is_interior_feasible(program, theta)) {
        throw InfeasibleError("feasible_interior_point: analytic center not feasible");
    }
    return theta;
}

std::pair<double, double> residuals(const ConicProgram& program, const Vector& theta) {
    const double eq =
        program.A.rows() == 0 ? 0.0 : (program.A * theta - program.b).norm();
    return {eq, theta.minCoeff()};
}

}  // namespace crnas
