#include "crnas/subproblem.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

#include "crnas/barrier.hpp"

namespace crnas {

namespace {

struct EigData {
    Vector lam;   // ascending
    Matrix U;     // columns are eigenvectors
    Vector ghat;  // U' g
};

EigData decompose(const Vector& g, const Matrix& P) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("subproblem: eigendecomposition failed");
    }
    return {es.eigenvalues(), es.eigenvectors(), es.eigenvectors().transpose() * g};
}

// ||(Lam + shift I)^{-1} ghat|| restricted to indices with lam_i > lam_cut.
double shifted_norm(const EigData& e, double shift, double lam_cut) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < e.lam.size(); ++i) {
        if (e.lam[i] <= lam_cut) continue;
        const double d = e.ghat[i] / (e.lam[i] + shift);
        acc += d * d;
    }
    return std::sqrt(acc);
}

Vector assemble_step(const EigData& e, double shift, double lam_cut) {
    Vector coeff = Vector::Zero(e.lam.size());
    for (Eigen::Index i = 0; i < e.lam.size(); ++i) {
        if (e.lam[i] <= lam_cut) continue;
        coeff[i] = -e.ghat[i] / (e.lam[i] + shift);
    }
    return e.U * coeff;
}

// Indices in the minimal eigenspace cluster; tol relative to spectrum scale.
bool grad_orth_to_min_space(const EigData& e, double cluster_tol) {
    const double gnorm = e.ghat.norm();
    if (gnorm == 0.0) return true;
    for (Eigen::Index i = 0; i < e.lam.size(); ++i) {
        if (e.lam[i] > e.lam[0] + cluster_tol) break;
        if (std::abs(e.ghat[i]) > 1e-12 * gnorm) return false;
    }
    return true;
}

double cluster_tolerance(const EigData& e) {
    const double scale = std::max({1.0, std::abs(e.lam[0]),
                                   std::abs(e.lam[e.lam.size() - 1])});
    return 1e-12 * scale;
}

// sign of a completion component along the minimal eigenvector: descend
// against the gradient component when it is nonzero
double completion_sign(const EigData& e) {
    return e.ghat[0] > 0.0 ? -1.0 : 1.0;
}

}  // namespace

double cubic_model_value(const Vector& g, const Matrix& P, double M, const Vector& s) {
    const double ns = s.norm();
    return g.dot(s) + 0.5 * s.dot(P * s) + (M / 6.0) * ns * ns * ns;
}

Matrix scaled_reduction(const Vector& theta, const NullBasis& basis) {
    if (basis.T.rows() != theta.size()) {
        throw std::invalid_argument("scaled_reduction: basis/theta size mismatch");
    }
    const Vector d = barrier_hess(theta).diag_hess;
    if (!d.allFinite() || !(d.minCoeff() > 0.0)) {
        throw MetricOverflowError(
            "barrier metric exceeds double range (coordinate magnitude extreme)");
    }
    const Matrix W = basis.T.transpose() * d.asDiagonal() * basis.T;
    if (!W.allFinite()) {
        throw MetricOverflowError("barrier metric exceeds double range");
    }
    // equilibrate to unit diagonal, factor there, and undo the scaling:
    // W = J^{-1} Wt J^{-1}, Wt = Rt'Rt  =>  R = Rt J^{-1},  R^{-T} = Rt^{-T} J
    const Vector j = W.diagonal().cwiseSqrt().cwiseInverse();
    Matrix Wt = j.asDiagonal() * W * j.asDiagonal();
    Eigen::LLT<Matrix> llt(Wt);
    if (llt.info() != Eigen::Success) {
        Wt.diagonal().array() += 1e-14;
        llt.compute(Wt);
        if (llt.info() != Eigen::Success) {
            // cannot happen for interior theta and orthonormal T
            throw std::logic_error("scaled_reduction: metric not positive definite");
        }
    }
    // F = Rt^{-T} J T'
    const Matrix jt = j.asDiagonal() * basis.T.transpose();
    return llt.matrixL().solve(jt);
}

ReducedModel build_reduced_model(const ConicProgram& program, const Vector& theta,
                                 const Vector& grad_L, const Matrix& hess_L,
                                 const NullBasis& basis, double M, double alpha) {
    if (!(M > 0.0)) throw std::invalid_argument("build_reduced_model: M must be > 0");
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("build_reduced_model: alpha must lie in (0,1)");
    }
    (void)program;

    const Matrix reduce = scaled_reduction(theta, basis);

    ReducedModel model;
    model.g = reduce * grad_L;
    const Matrix P_raw = reduce * hess_L * reduce.transpose();
    model.P = 0.5 * (P_raw + P_raw.transpose());
    model.M = M;
    model.rho = 1.0 - alpha;
    model.theta = theta;
    model.back = reduce.transpose();
    return model;
}

SubproblemSolution solve_unconstrained_cubic(const Vector& g, const Matrix& P,
                                             double M) {
    if (!(M > 0.0)) throw std::invalid_argument("cubic: M must be > 0");
    const EigData e = decompose(g, P);
    const double lam_min = e.lam[0];
    const double r_low = std::max(0.0, -2.0 * lam_min / M);
    const double cluster_tol = cluster_tolerance(e);
    const double lam_cut = lam_min + cluster_tol;

    // Fully dominated cases: g = 0 with convex P, or an exact hard case where
    // the gradient lacks any component along the minimal eigenspace.
    if (grad_orth_to_min_space(e, cluster_tol)) {
        const double norm_perp = shifted_norm(e, 0.5 * M * r_low, lam_cut);
        if (norm_perp <= r_low) {
            Vector s = assemble_step(e, 0.5 * M * r_low, lam_cut);
            const double tau2 = r_low * r_low - norm_perp * norm_perp;
            if (tau2 > 0.0) s += completion_sign(e) * std::sqrt(tau2) * e.U.col(0);
            return {s, 0.5 * M * r_low, 0.0, r_low > 0.0};
        }
    }

    // Regular case: a unique root of chi(r) = r with r > r_low, where
    // chi(r) = ||(Lam + (M/2) r I)^{-1} ghat||.
    const double lam_cut_none = lam_min - 1.0;  // include every eigenvalue
    const auto chi = [&](double r) {
        return shifted_norm(e, 0.5 * M * r, lam_cut_none);
    };
    const auto chi_deriv = [&](double r, double chi_r) {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < e.lam.size(); ++i) {
            const double den = e.lam[i] + 0.5 * M * r;
            acc += e.ghat[i] * e.ghat[i] / (den * den * den);
        }
        return -(0.5 * M / chi_r) * acc;
    };

    // Lower bracket end with phi(a) > 0 and a representably above r_low. chi
    // blows up toward r_low in this branch, so shrink the offset until the
    // sign is right. If no representable offset works, the root coincides
    // with r_low at working precision: build the boundary solution there.
    double a = 0.0;
    bool bracketed = false;
    {
        double delta = 1e-8 * std::max(1.0, r_low);
        const double delta_floor = 8.0 * 2.22e-16 * std::max(1.0, r_low);
        for (int i = 0; i < 200; ++i) {
            const double cand = r_low + delta;
            if (cand > r_low) {
                const double c = chi(cand);
                if (std::isfinite(c) && c > cand) {
                    a = cand;
                    bracketed = true;
                    break;
                }
            }
            if (delta <= delta_floor) break;
            delta = std::max(delta * 1e-4, delta_floor);
        }
    }
    if (!bracketed) {
        const double shift = 0.5 * M * r_low;
        Vector s = assemble_step(e, shift, lam_cut);
        const double tau2 = r_low * r_low - s.squaredNorm();
        if (tau2 > 0.0) s += completion_sign(e) * std::sqrt(tau2) * e.U.col(0);
        return {s, shift, 0.0, true};
    }
    double b = chi(a);  // chi decreasing => phi(b) <= 0
    double r = 0.5 * (a + b);
    double phi_r = chi(r) - r;
    for (int it = 0; it < 200; ++it) {
        if (phi_r > 0.0) a = r; else b = r;
        if (b - a <= 1e-14 * std::max(1.0, b)) break;
        const double c = chi(r);
        const double dphi = chi_deriv(r, c) - 1.0;
        double r_next = r - phi_r / dphi;  // Newton, dphi < 0 always
        if (!(r_next > a && r_next < b)) r_next = 0.5 * (a + b);
        r = r_next;
        phi_r = chi(r) - r;
        if (std::abs(phi_r) <= 1e-15 * std::max(1.0, r)) break;
    }
    Vector s = assemble_step(e, 0.5 * M * r, lam_cut_none);
    return {s, 0.5 * M * r, std::abs(chi(r) - r), false};
}

SubproblemSolution solve_trust_region(const Vector& g, const Matrix& P, double rho) {
    if (!(rho > 0.0)) throw std::invalid_argument("trust_region: rho must be > 0");
    const EigData e = decompose(g, P);
    const double lam_min = e.lam[0];
    const double cluster_tol = cluster_tolerance(e);
    const double lam_cut = lam_min + cluster_tol;
    const double lam_low = std::max(0.0, -lam_min);

    // Unconstrained Newton point, valid when P is positive definite. Ties
    // between interior and boundary resolve to the interior point.
    if (lam_min > 0.0) {
        const double full_norm = shifted_norm(e, 0.0, lam_min - 1.0);
        if (full_norm <= rho) {
            return {assemble_step(e, 0.0, lam_min - 1.0), 0.0, 0.0, false};
        }
    }

    if (lam_min <= 0.0 && grad_orth_to_min_space(e, cluster_tol)) {
        const double norm_perp = shifted_norm(e, lam_low, lam_cut);
        if (norm_perp <= rho) {
            Vector s = assemble_step(e, lam_low, lam_cut);
            if (lam_low > 0.0) {
                // boundary completion along the minimal eigenvector
                const double tau2 = rho * rho - norm_perp * norm_perp;
                if (tau2 > 0.0) s += completion_sign(e) * std::sqrt(tau2) * e.U.col(0);
                return {s, lam_low, 0.0, true};
            }
            return {s, 0.0, 0.0, false};  // PSD with zero multiplier
        }
    }

    // Regular boundary case: root of chi(lambda) = rho for lambda > lam_low.
    // Solve the near-linear form 1/chi(lambda) = 1/rho (More-Sorensen).
    const double lam_cut_none = lam_min - 1.0;
    const auto chi = [&](double lam) { return shifted_norm(e, lam, lam_cut_none); };
    double a = 0.0;
    bool bracketed = false;
    {
        double delta = 1e-8 * std::max(1.0, lam_low);
        const double delta_floor = 8.0 * 2.22e-16 * std::max(1.0, lam_low);
        for (int i = 0; i < 200; ++i) {
            const double cand = lam_low + delta;
            if (cand > lam_low) {
                const double c = chi(cand);
                if (std::isfinite(c) && c > rho) {
                    a = cand;
                    bracketed = true;
                    break;
                }
            }
            if (delta <= delta_floor) break;
            delta = std::max(delta * 1e-4, delta_floor);
        }
    }
    if (!bracketed) {
        // multiplier equals lam_low at working precision: boundary completion
        Vector s = assemble_step(e, lam_low, lam_cut);
        const double tau2 = rho * rho - s.squaredNorm();
        if (tau2 > 0.0 && lam_low > 0.0) {
            s += completion_sign(e) * std::sqrt(tau2) * e.U.col(0);
        }
        return {s, lam_low, 0.0, lam_low > 0.0};
    }
    double b = std::max(2.0 * a + 1.0, e.ghat.norm() / rho - lam_min);
    double lam = std::min(std::max(0.5 * (a + b), a), b);
    for (int it = 0; it < 200; ++it) {
        const double c = chi(lam);
        if (c > rho) a = lam; else b = lam;
        if (std::abs(c - rho) <= 1e-13 * std::max(1.0, rho)) break;
        if (b - a <= 4.0 * 2.22e-16 * std::max(1.0, b)) break;
        // h(lam) = 1/chi - 1/rho; h' = -chi'/chi^2
        double acc = 0.0;
        for (Eigen::Index i = 0; i < e.lam.size(); ++i) {
            const double den = e.lam[i] + lam;
            acc += e.ghat[i] * e.ghat[i] / (den * den * den);
        }
        const double chi_d = -acc / c;
        const double h = 1.0 / c - 1.0 / rho;
        const double h_d = -chi_d / (c * c);
        double lam_next = lam - h / h_d;
        if (!(lam_next > a && lam_next < b)) lam_next = 0.5 * (a + b);
        lam = lam_next;
    }
    // finish at the converged multiplier, or at the inside endpoint when the
    // bracket hit the representability floor still outside the ball; any
    // residual gap is closed along the minimal eigenvector, replacing that
    // component of the step so the sphere constraint holds exactly
    const double c_lam = chi(lam);
    double lam_fin = lam;
    if (c_lam - rho > 1e-13 * std::max(1.0, rho)) lam_fin = b;
    Vector s = assemble_step(e, lam_fin, lam_cut_none);
    const double ns = s.norm();
    if (rho - ns > 1e-12 * std::max(1.0, rho)) {
        Vector s_perp = assemble_step(e, lam_fin, lam_cut);
        const double tau2 = rho * rho - s_perp.squaredNorm();
        if (tau2 > 0.0) {
            s_perp += completion_sign(e) * std::sqrt(tau2) * e.U.col(0);
        }
        return {s_perp, lam_fin, 0.0, true};
    }
    return {s, lam_fin, std::abs(ns - rho), false};
}

Vector solve_ball_constrained_cubic(const ReducedModel& model) {
    SubproblemSolution cubic = solve_unconstrained_cubic(model.g, model.P, model.M);
    if (cubic.step.norm() <= model.rho) {
        return cubic.step;
    }
    SubproblemSolution tr = solve_trust_region(model.g, model.P, model.rho);
    if (tr.step.norm() > model.rho + 1e-12) {
        throw std::logic_error("ball-constrained cubic: step escaped the Dikin ball");
    }
    return tr.step;
}

}  // namespace crnas
