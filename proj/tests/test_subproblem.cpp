#include <doctest.h>

#include <cmath>

#include "crnas/barrier.hpp"
#include "crnas/subproblem.hpp"
#include "oracles.hpp"

using namespace crnas;

namespace {

double quad_model(const Vector& g, const Matrix& P, const Vector& s) {
    return g.dot(s) + 0.5 * s.dot(P * s);
}

ReducedModel make_model(const Vector& g, const Matrix& P, double M, double rho) {
    ReducedModel m;
    m.g = g;
    m.P = P;
    m.M = M;
    m.rho = rho;
    m.theta = Vector::Ones(g.size());
    m.back = Matrix::Identity(g.size(), g.size());
    return m;
}

ObjectiveOracle dummy_oracle(int n) {
    ObjectiveOracle o;
    o.value = [](const Vector&) { return 0.0; };
    o.gradient = [n](const Vector&) { return Vector::Zero(n); };
    o.hessian = [n](const Vector&) { return Matrix::Zero(n, n); };
    return o;
}

}  // namespace

TEST_CASE("reduced model with no equalities at ones is the raw model") {
    const int n = 3;
    ConicProgram p;
    p.oracle = dummy_oracle(n);
    p.A = Matrix(0, n);
    p.b = Vector(0);
    p.n = n;
    const NullBasis basis = null_space_basis(p);

    Rng rng(31);
    Vector grad(n);
    for (int i = 0; i < n; ++i) grad[i] = rng.normal01();
    const Matrix hess = testutil::random_symmetric(n, 1.0, rng);

    const ReducedModel m =
        build_reduced_model(p, Vector::Ones(n), grad, hess, basis, 2.0, 0.5);
    CHECK((m.g - grad).norm() < 1e-12);
    CHECK((m.P - hess).norm() < 1e-12);
    CHECK(m.rho == doctest::Approx(0.5));
}

TEST_CASE("reduced model on the 2-simplex at its center") {
    const int n = 2;
    ConicProgram p;
    p.oracle = dummy_oracle(n);
    p.A = Matrix::Ones(1, n);
    p.b = Vector::Ones(1);
    p.n = n;
    const NullBasis basis = null_space_basis(p);
    REQUIRE(basis.k == 1);

    Vector theta(2);
    theta << 0.5, 0.5;
    Vector grad(2);
    grad << 1.0, -1.0;
    const Matrix hess = Matrix::Identity(2, 2);

    // W = T' diag(4,4) T = 4, so the metric square root is 2
    const ReducedModel m = build_reduced_model(p, theta, grad, hess, basis, 1.0, 0.5);
    const Vector expected_g = basis.T.transpose() * grad / 2.0;
    CHECK((m.g - expected_g).norm() < 1e-12);
    CHECK(m.P(0, 0) == doctest::Approx(0.25));
    // backmap moves along T with half the reduced magnitude
    Vector s(1);
    s << 0.3;
    CHECK((m.backmap(s) - (theta + basis.T * (s / 2.0))).norm() < 1e-12);
}

TEST_CASE("backmap preserves the local norm") {
    Rng rng(32);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform(0.0, 5.0));
        ConicProgram p;
        p.oracle = dummy_oracle(n);
        p.A = Matrix::Ones(1, n);
        p.b = Vector::Ones(1);
        p.n = n;
        const NullBasis basis = null_space_basis(p);
        Vector theta(n);
        for (int i = 0; i < n; ++i) theta[i] = rng.uniform(0.05, 2.0);
        Vector grad(n);
        for (int i = 0; i < n; ++i) grad[i] = rng.normal01();
        const Matrix hess = testutil::random_symmetric(n, 1.0, rng);
        const ReducedModel m =
            build_reduced_model(p, theta, grad, hess, basis, 1.5, 0.4);
        CHECK((m.P - m.P.transpose()).cwiseAbs().maxCoeff() < 1e-10);

        Vector s(basis.k);
        for (int i = 0; i < basis.k; ++i) s[i] = rng.normal01();
        const double local = local_norm(theta, m.backmap(s) - theta);
        CHECK(std::abs(local - s.norm()) <= 1e-8 * std::max(1.0, s.norm()));
    }
}

TEST_CASE("unconstrained cubic: closed forms") {
    SUBCASE("zero gradient with convex curvature") {
        Vector g = Vector::Zero(2);
        Matrix P = Matrix::Identity(2, 2);
        const auto sol = solve_unconstrained_cubic(g, P, 3.0);
        CHECK(sol.step.norm() == 0.0);
        CHECK(sol.multiplier == 0.0);
    }
    SUBCASE("one dimensional stationarity") {
        Vector g = Vector::Constant(1, 1.0);
        Matrix P = Matrix::Zero(1, 1);
        const auto sol = solve_unconstrained_cubic(g, P, 2.0);
        CHECK(sol.step[0] == doctest::Approx(-1.0).epsilon(1e-10));
        CHECK(sol.multiplier == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("pure negative curvature escapes along the eigenvector") {
        Vector g = Vector::Zero(2);
        Matrix P = Matrix::Zero(2, 2);
        P(0, 0) = -1.0;
        P(1, 1) = 1.0;
        const auto sol = solve_unconstrained_cubic(g, P, 2.0);
        CHECK(sol.hard_case);
        CHECK(sol.step.norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(sol.step[0]) == doctest::Approx(1.0).epsilon(1e-10));
    }
    SUBCASE("hard case with orthogonal gradient") {
        Vector g(2);
        g << 0.0, 0.1;
        Matrix P = Matrix::Zero(2, 2);
        P(0, 0) = -1.0;
        P(1, 1) = 1.0;
        const auto sol = solve_unconstrained_cubic(g, P, 2.0);
        CHECK(sol.hard_case);
        // lambda = -lam_min = 1, radius 1; second coordinate -0.1/(1+1)
        CHECK(sol.step[1] == doctest::Approx(-0.05).epsilon(1e-10));
        CHECK(sol.step.norm() == doctest::Approx(1.0).epsilon(1e-10));
        // KKT: (P + lambda I) s = -g
        const Vector kkt = (P + Matrix::Identity(2, 2)) * sol.step + g;
        CHECK(kkt.norm() < 1e-10);
    }
}

TEST_CASE("unconstrained cubic matches a brute-force oracle") {
    Rng rng(33);
    for (int trial = 0; trial < 60; ++trial) {
        const int k = 1 + trial % 3;
        Vector g(k);
        for (int i = 0; i < k; ++i) g[i] = rng.normal01();
        const Matrix P = testutil::random_symmetric(k, 1.0, rng);
        const double M = rng.uniform(0.5, 4.0);

        const auto sol = solve_unconstrained_cubic(g, P, M);
        const double got = cubic_model_value(g, P, M, sol.step);

        // lambda consistency and KKT residual
        CHECK(std::abs(sol.multiplier - 0.5 * M * sol.step.norm()) < 1e-9);
        const Vector kkt =
            (P + sol.multiplier * Matrix::Identity(k, k)) * sol.step + g;
        CHECK(kkt.norm() < 1e-9 * std::max(1.0, g.norm()));

        // the minimizer must lie in a ball of radius chi(r_low); 3 is ample
        // for these scales, verified against the search oracle
        const auto model = [&](const Vector& s) {
            return cubic_model_value(g, P, M, s);
        };
        const auto model_grad = [&](const Vector& s) {
            return (g + P * s + 0.5 * M * s.norm() * s).eval();
        };
        const Vector bf =
            testutil::grid_polish_min_ball(model, model_grad, k, 4.0, 30000, rng);
        CHECK(got <= model(bf) + 1e-6);
    }
}

TEST_CASE("trust region: closed forms") {
    SUBCASE("boundary projection of a long Newton step") {
        Vector g(2);
        g << -2.0, 0.0;
        const Matrix P = Matrix::Identity(2, 2);
        const auto sol = solve_trust_region(g, P, 1.0);
        CHECK(sol.step[0] == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(sol.step[1] == doctest::Approx(0.0));
        CHECK(sol.multiplier == doctest::Approx(1.0).epsilon(1e-8));
    }
    SUBCASE("interior Newton point for positive definite curvature") {
        Vector g(2);
        g << -0.2, 0.1;
        const Matrix P = 2.0 * Matrix::Identity(2, 2);
        const auto sol = solve_trust_region(g, P, 1.0);
        Vector expected(2);
        expected << 0.1, -0.05;
        CHECK((sol.step - expected).norm() < 1e-12);
        CHECK(sol.multiplier == 0.0);
    }
    SUBCASE("zero gradient, positive definite") {
        const auto sol =
            solve_trust_region(Vector::Zero(2), Matrix::Identity(2, 2), 0.7);
        CHECK(sol.step.norm() == 0.0);
    }
    SUBCASE("hard case completes along the negative eigenvector") {
        Vector g(2);
        g << 0.0, 0.1;
        Matrix P = Matrix::Zero(2, 2);
        P(0, 0) = -1.0;
        P(1, 1) = 1.0;
        Rng rng(34);
        const auto sol = solve_trust_region(g, P, 1.0);
        CHECK(sol.hard_case);
        CHECK(sol.step.norm() == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(std::abs(sol.step[0]) > 0.9);
        const auto model = [&](const Vector& s) { return quad_model(g, P, s); };
        const auto model_grad = [&](const Vector& s) { return (g + P * s).eval(); };
        const Vector bf =
            testutil::grid_polish_min_ball(model, model_grad, 2, 1.0, 30000, rng);
        CHECK(model(sol.step) <= model(bf) + 1e-6);
    }
}

TEST_CASE("trust region matches a brute-force oracle") {
    Rng rng(35);
    for (int trial = 0; trial < 60; ++trial) {
        const int k = 1 + trial % 3;
        Vector g(k);
        for (int i = 0; i < k; ++i) g[i] = rng.normal01();
        const Matrix P = testutil::random_symmetric(k, 1.5, rng);
        const double rho = rng.uniform(0.2, 1.0);
        const auto sol = solve_trust_region(g, P, rho);
        REQUIRE(sol.step.norm() <= rho + 1e-12);
        // KKT residual with the reported multiplier
        const Vector kkt =
            (P + sol.multiplier * Matrix::Identity(k, k)) * sol.step + g;
        CHECK(kkt.norm() < 1e-8 * std::max(1.0, g.norm()));
        const auto model = [&](const Vector& s) { return quad_model(g, P, s); };
        const auto model_grad = [&](const Vector& s) { return (g + P * s).eval(); };
        const Vector bf =
            testutil::grid_polish_min_ball(model, model_grad, k, rho, 30000, rng);
        CHECK(model(sol.step) <= model(bf) + 1e-6);
    }
}

TEST_CASE("ball-constrained cubic dispatch") {
    SUBCASE("interior cubic minimizer is returned unchanged") {
        Vector g(2);
        g << 0.05, -0.02;
        const Matrix P = Matrix::Identity(2, 2);
        const ReducedModel m = make_model(g, P, 2.0, 0.5);
        const Vector s = solve_ball_constrained_cubic(m);
        const auto unc = solve_unconstrained_cubic(g, P, 2.0);
        CHECK((s - unc.step).norm() < 1e-12);
        CHECK(s.norm() < 0.5);
    }
    SUBCASE("outside minimizer falls back to the boundary") {
        Vector g = Vector::Constant(1, 1.0);
        const Matrix P = Matrix::Zero(1, 1);
        const ReducedModel m = make_model(g, P, 2.0, 0.5);
        const Vector s = solve_ball_constrained_cubic(m);
        CHECK(s[0] == doctest::Approx(-0.5).epsilon(1e-12));
    }
    SUBCASE("model decrease is never positive") {
        Rng rng(36);
        for (int trial = 0; trial < 100; ++trial) {
            const int k = 1 + trial % 3;
            Vector g(k);
            for (int i = 0; i < k; ++i) g[i] = rng.normal01();
            const ReducedModel m = make_model(
                g, testutil::random_symmetric(k, 1.0, rng), rng.uniform(0.5, 3.0),
                rng.uniform(0.2, 0.8));
            const Vector s = solve_ball_constrained_cubic(m);
            CHECK(s.norm() <= m.rho + 1e-12);
            CHECK(cubic_model_value(m.g, m.P, m.M, s) <= 1e-14);
        }
    }
    SUBCASE("boundary law over random outside instances") {
        Rng rng(37);
        int outside = 0;
        for (int trial = 0; trial < 400 && outside < 100; ++trial) {
            const int k = 1 + trial % 3;
            Vector g(k);
            for (int i = 0; i < k; ++i) g[i] = 2.0 * rng.normal01();
            const Matrix P = testutil::random_symmetric(k, 1.0, rng);
            const double M = rng.uniform(0.3, 2.0);
            const double rho = rng.uniform(0.2, 0.6);
            if (solve_unconstrained_cubic(g, P, M).step.norm() <= rho) continue;
            ++outside;
            const ReducedModel m = make_model(g, P, M, rho);
            const Vector s = solve_ball_constrained_cubic(m);
            CHECK(std::abs(s.norm() - rho) < 1e-10);
        }
        CHECK(outside >= 50);
    }
}
