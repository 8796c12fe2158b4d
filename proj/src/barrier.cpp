#include "crnas/barrier.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace crnas {

namespace {

void require_interior(const Vector& theta) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        if (!(theta[i] > 0.0)) {
            throw std::domain_error("barrier: coordinate " + std::to_string(i) +
                                    " is not strictly positive");
        }
    }
}

void require_same_size(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("barrier: dimension mismatch");
    }
}

}  // namespace

double barrier_value(const Vector& theta) {
    require_interior(theta);
    return -theta.array().log().sum();
}

Vector barrier_grad(const Vector& theta) {
    require_interior(theta);
    return (-theta.array().inverse()).matrix();
}

LocalMetric barrier_hess(const Vector& theta) {
    require_interior(theta);
    return LocalMetric{theta.array().square().inverse().matrix()};
}

double local_norm(const Vector& theta, const Vector& v) {
    require_interior(theta);
    require_same_size(theta, v);
    return std::sqrt((v.array() / theta.array()).square().sum());
}

double dual_local_norm(const Vector& theta, const Vector& v) {
    require_interior(theta);
    require_same_size(theta, v);
    return std::sqrt((v.array() * theta.array()).square().sum());
}

double local_matrix_norm(const Vector& theta, const Matrix& C) {
    require_interior(theta);
    if (C.rows() != C.cols() || C.rows() != theta.size()) {
        throw std::invalid_argument("local_matrix_norm: C must be n x n");
    }
    const double asym = (C - C.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * (1.0 + C.cwiseAbs().maxCoeff())) {
        throw std::invalid_argument("local_matrix_norm: C is not symmetric");
    }
    // H^{-1/2} = diag(theta), so the norm is the spectral norm of D C D.
    const Matrix scaled =
        theta.asDiagonal() * (0.5 * (C + C.transpose())) * theta.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Matrix> es(scaled, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool dikin_contains(const Vector& theta0, const Vector& theta, double radius) {
    return local_norm(theta0, theta - theta0) <= radius;
}

}  // namespace crnas
