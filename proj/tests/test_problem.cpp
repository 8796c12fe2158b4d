#include <doctest.h>

#include <cmath>

#include "crnas/problem.hpp"
#include "oracles.hpp"

using namespace crnas;

namespace {

// smooth nonconvex test objective with closed-form derivatives
ObjectiveOracle rosenbrock_like(int n) {
    ObjectiveOracle oracle;
    oracle.value = [n](const Vector& x) {
        double v = 0.0;
        for (int i = 0; i < n; ++i) v += std::exp(0.1 * x[i]) + 0.5 * x[i] * x[i] * x[i];
        return v;
    };
    oracle.gradient = [n](const Vector& x) {
        Vector g(n);
        for (int i = 0; i < n; ++i) g[i] = 0.1 * std::exp(0.1 * x[i]) + 1.5 * x[i] * x[i];
        return g;
    };
    oracle.hessian = [n](const Vector& x) {
        Matrix H = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i) H(i, i) = 0.01 * std::exp(0.1 * x[i]) + 3.0 * x[i];
        return H;
    };
    return oracle;
}

}  // namespace

TEST_CASE("box-to-cone reduction: scalar box becomes a simplex") {
    const ObjectiveOracle oracle = rosenbrock_like(1);
    const Vector l = Vector::Zero(1);
    const Vector u = Vector::Ones(1);
    const ConicProgram p = from_box_constrained(oracle, Matrix(0, 1), Vector(0), l, u);
    CHECK(p.n == 2);
    REQUIRE(p.A.rows() == 1);
    CHECK(p.A(0, 0) == 1.0);
    CHECK(p.A(0, 1) == 1.0);
    CHECK(p.b[0] == 1.0);
}

TEST_CASE("box-to-cone reduction: infinite upper bounds add nothing") {
    const ObjectiveOracle oracle = rosenbrock_like(3);
    Vector l = Vector::Zero(3);
    Vector u = Vector::Constant(3, kInf);
    const ConicProgram p = from_box_constrained(oracle, Matrix(0, 3), Vector(0), l, u);
    CHECK(p.n == 3);
    CHECK(p.A.rows() == 0);
    // identity mapping
    Vector x(3);
    x << 0.3, 1.7, 2.2;
    CHECK((p.provenance->to_cone(x) - x).norm() == 0.0);
}

TEST_CASE("box-to-cone round trip and objective pullback") {
    Rng rng(21);
    const int n = 4;
    const ObjectiveOracle oracle = rosenbrock_like(n);
    Vector l(n), u(n);
    l << -1.0, 0.0, 2.0, -3.0;
    u << 1.0, kInf, 5.0, kInf;
    const ConicProgram p = from_box_constrained(oracle, Matrix(0, n), Vector(0), l, u);
    CHECK(p.n == 6);
    CHECK(p.A.rows() == 2);

    for (int trial = 0; trial < 1000; ++trial) {
        Vector x(n);
        for (int i = 0; i < n; ++i) {
            const double hi = std::isfinite(u[i]) ? u[i] : l[i] + 10.0;
            x[i] = rng.uniform(l[i] + 1e-3, hi - 1e-3);
        }
        const Vector theta = p.provenance->to_cone(x);
        CHECK((p.provenance->to_original(theta) - x).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((p.A * theta - p.b).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK(std::abs(p.oracle.value(theta) - oracle.value(x)) <=
              1e-12 * std::max(1.0, std::abs(oracle.value(x))));
    }
}

TEST_CASE("box-to-cone pullback derivatives are consistent") {
    Rng rng(22);
    const int n = 3;
    const ObjectiveOracle oracle = rosenbrock_like(n);
    Vector l = Vector::Zero(n);
    Vector u(n);
    u << 1.0, kInf, 4.0;
    const ConicProgram p = from_box_constrained(oracle, Matrix(0, n), Vector(0), l, u);
    for (int trial = 0; trial < 10; ++trial) {
        Vector theta(p.n);
        for (int i = 0; i < p.n; ++i) theta[i] = rng.uniform(0.1, 0.9);
        const Vector fd = testutil::fd_gradient(p.oracle.value, theta);
        CHECK(testutil::rel_err(p.oracle.gradient(theta), fd) < 1e-6);
        const Matrix fdH = testutil::fd_jacobian(p.oracle.gradient, theta);
        CHECK(testutil::rel_err(p.oracle.hessian(theta), fdH) < 1e-6);
    }
}

TEST_CASE("box-to-cone rejects inverted bounds") {
    const ObjectiveOracle oracle = rosenbrock_like(1);
    Vector l = Vector::Ones(1);
    Vector u = Vector::Zero(1);
    CHECK_THROWS_AS(from_box_constrained(oracle, Matrix(0, 1), Vector(0), l, u),
                    std::invalid_argument);
}

TEST_CASE("null space basis") {
    SUBCASE("single sum constraint") {
        Matrix A(1, 2);
        A << 1.0, 1.0;
        const NullBasis basis = null_space_basis(A, 2);
        CHECK(basis.k == 1);
        const Vector t = basis.T.col(0);
        CHECK(std::abs(std::abs(t[0]) - 1.0 / std::sqrt(2.0)) < 1e-12);
        CHECK(std::abs(t[0] + t[1]) < 1e-12);
    }
    SUBCASE("no constraints give the identity") {
        const NullBasis basis = null_space_basis(Matrix(0, 5), 5);
        CHECK(basis.k == 5);
        CHECK((basis.T - Matrix::Identity(5, 5)).norm() == 0.0);
    }
    SUBCASE("random rectangular systems") {
        Rng rng(23);
        for (int trial = 0; trial < 50; ++trial) {
            Matrix A(3, 7);
            for (int i = 0; i < A.size(); ++i) A(i / 7, i % 7) = rng.normal01();
            const NullBasis basis = null_space_basis(A, 7);
            CHECK(basis.k == 4);
            CHECK((A * basis.T).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((basis.T.transpose() * basis.T - Matrix::Identity(4, 4))
                      .cwiseAbs()
                      .maxCoeff() < 1e-10);
        }
    }
    SUBCASE("rank-deficient rows are detected") {
        Matrix A(2, 3);
        A << 1.0, 1.0, 1.0, 2.0, 2.0, 2.0;
        const NullBasis basis = null_space_basis(A, 3);
        CHECK(basis.k == 2);
        CHECK((A * basis.T).cwiseAbs().maxCoeff() < 1e-10);
    }
    SUBCASE("trivial null space is a structured error") {
        Matrix A = Matrix::Identity(3, 3);
        CHECK_THROWS_AS(null_space_basis(A, 3), TrivialNullSpaceError);
    }
}

TEST_CASE("feasible interior point") {
    SUBCASE("simplex analytic center") {
        const int n = 3;
        ConicProgram p;
        p.oracle = rosenbrock_like(n);
        p.A = Matrix::Ones(1, n);
        p.b = Vector::Ones(1);
        p.n = n;
        Rng rng(24);
        const Vector theta = feasible_interior_point(p, std::nullopt, rng);
        CHECK((theta - Vector::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-6);
    }
    SUBCASE("no equalities with a hint") {
        ConicProgram p;
        p.oracle = rosenbrock_like(2);
        p.A = Matrix(0, 2);
        p.b = Vector(0);
        p.n = 2;
        Rng rng(25);
        std::vector<std::pair<double, double>> hint{{0.0, 1.0}, {0.0, 1.0}};
        const Vector theta = feasible_interior_point(p, hint, rng);
        CHECK(theta.minCoeff() > 0.0);
        CHECK(theta.maxCoeff() < 1.0);
    }
    SUBCASE("skewed equality needing phase one") {
        // theta_1 - theta_2 = 3 has a min-norm solution with a negative entry
        ConicProgram p;
        p.oracle = rosenbrock_like(2);
        p.A = Matrix(1, 2);
        p.A << 1.0, -1.0;
        p.b = Vector::Constant(1, 3.0);
        p.n = 2;
        Rng rng(26);
        const Vector theta = feasible_interior_point(p, std::nullopt, rng);
        const auto [eq, mn] = residuals(p, theta);
        CHECK(mn > 0.0);
        CHECK(eq <= 1e-8 * (1.0 + p.b.norm()));
    }
}

TEST_CASE("residual diagnostics") {
    ConicProgram p;
    p.oracle = rosenbrock_like(2);
    p.A = Matrix::Ones(1, 2);
    p.b = Vector::Ones(1);
    p.n = 2;

    Vector feasible(2);
    feasible << 0.25, 0.75;
    auto [eq, mn] = residuals(p, feasible);
    CHECK(eq == doctest::Approx(0.0));
    CHECK(mn == doctest::Approx(0.25));

    Vector boundary(2);
    boundary << 0.0, 1.0;
    CHECK(residuals(p, boundary).second == 0.0);

    Vector off(2);
    off << 0.3, 0.75;
    CHECK(residuals(p, off).first == doctest::Approx(0.05));
}
