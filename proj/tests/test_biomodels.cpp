#include <doctest.h>

#include <cmath>

#include "crnas/biomodels.hpp"
#include "crnas/datagen.hpp"
#include "oracles.hpp"

using namespace crnas;
using namespace crnas::bio;

namespace {

PhenoPopParams two_pop_phenopop() {
    PhenoPopParams p;
    p.x0 = 1000.0;
    p.subs.push_back({0.4, 0.05, HillParams::from_ec50(0.85, 0.08, 2.5)});
    p.subs.push_back({0.6, 0.08, HillParams::from_ec50(0.9, 1.2, 3.0)});
    return p;
}

LogisticParams two_pop_logistic() {
    LogisticParams p;
    p.f0 = 1000.0;
    p.subs.push_back({0.45, 0.8, 0.6});
    p.subs.push_back({0.55, 2.4, 2.7});
    return p;
}

}  // namespace

TEST_CASE("hill curve") {
    const HillParams h{0.8, std::pow(0.5, 3.0), 3.0};
    CHECK(hill(0.0, h) == doctest::Approx(1.0));
    // at d = E the response is halfway between 1 and b
    CHECK(hill(0.5, h) == doctest::Approx(0.9));
    CHECK(hill(1e9, h) == doctest::Approx(0.8).epsilon(1e-6));
    CHECK_THROWS_AS(hill(-0.1, h), std::invalid_argument);
}

TEST_CASE("transformed and untransformed hill agree") {
    Rng rng(51);
    for (int trial = 0; trial < 10000; ++trial) {
        const double b = rng.uniform(0.05, 0.99);
        const double E = rng.log_uniform(1e-3, 1e2);
        const double n = rng.uniform(0.2, 6.0);
        const double d = rng.log_uniform(1e-4, 1e3);
        const double direct = b + (1.0 - b) / (1.0 + std::pow(d / E, n));
        const double transformed = hill(d, HillParams::from_ec50(b, E, n));
        CHECK(std::abs(direct - transformed) <=
              1e-12 * std::max(1.0, std::abs(direct)));
    }
}

TEST_CASE("phenopop prediction") {
    const PhenoPopParams p = two_pop_phenopop();
    CHECK(phenopop_predict(0.0, 0.7, p) == doctest::Approx(1000.0));
    CHECK(phenopop_predict(0.0, 0.0, p) == doctest::Approx(1000.0));

    PhenoPopParams single;
    single.x0 = 500.0;
    single.subs.push_back({1.0, 0.07, HillParams::from_ec50(0.9, 0.1, 2.0)});
    CHECK(phenopop_predict(12.0, 0.0, single) ==
          doctest::Approx(500.0 * std::exp(0.07 * 12.0)));

    // additivity over subpopulations
    PhenoPopParams only1 = p, only2 = p;
    only1.subs = {p.subs[0]};
    only2.subs = {p.subs[1]};
    only1.subs[0].p = 1.0;
    only2.subs[0].p = 1.0;
    const double combined = phenopop_predict(7.0, 0.3, p);
    const double split = p.subs[0].p * phenopop_predict(7.0, 0.3, only1) +
                         p.subs[1].p * phenopop_predict(7.0, 0.3, only2);
    CHECK(combined == doctest::Approx(split).epsilon(1e-12));
}

TEST_CASE("lbd moments") {
    const LBDSub sub{1.0, 0.5, 0.3, HillParams::from_ec50(0.9, 0.5, 2.0)};
    SUBCASE("time zero") {
        const auto [mu, var] = lbd_moments(0.0, 0.4, sub);
        CHECK(mu == doctest::Approx(1.0));
        CHECK(var == doctest::Approx(0.0));
    }
    SUBCASE("critical process uses the series branch") {
        // beta == nu and d = 0 make lambda exactly zero
        const LBDSub crit{1.0, 0.5, 0.5, HillParams::from_ec50(0.9, 0.5, 2.0)};
        const auto [mu, var] = lbd_moments(6.0, 0.0, crit);
        CHECK(mu == doctest::Approx(1.0));
        CHECK(var == doctest::Approx((0.5 + 0.5) * 6.0));
    }
    SUBCASE("series and direct formula agree across the switch") {
        // scan lambda*t through +-1e-5 by varying beta around nu(d) and
        // compare each branch against an extended-precision direct formula
        // (valid for |lambda t| well above long-double cancellation)
        const double t = 2.0;
        const double nu_d =
            0.3 - std::log(hill(0.4, HillParams::from_ec50(0.9, 0.5, 2.0)));
        for (double lam_t = -2e-5; lam_t <= 2e-5; lam_t += 1e-7) {
            if (std::abs(lam_t) < 1e-7) continue;
            const double beta = nu_d + lam_t / t;
            const LBDSub s{1.0, beta, 0.3, HillParams::from_ec50(0.9, 0.5, 2.0)};
            const double var = lbd_moments(t, 0.4, s).second;
            const long double x = static_cast<long double>(beta - nu_d) * t;
            const long double exact = (static_cast<long double>(beta) + nu_d) /
                                      (x / t) *
                                      (std::exp(2.0L * x) - std::exp(x));
            const double rel =
                std::abs(var - static_cast<double>(exact)) /
                std::max(1.0, std::abs(static_cast<double>(exact)));
            CHECK(rel < 1e-8);
        }
    }
    SUBCASE("variance is never negative") {
        Rng rng(52);
        for (int trial = 0; trial < 10000; ++trial) {
            const LBDSub s{1.0, rng.uniform(0.0, 1.1), rng.uniform(0.0, 1.0),
                           HillParams::from_ec50(rng.uniform(0.5, 0.99),
                                                 rng.log_uniform(0.02, 3.0),
                                                 rng.uniform(1.0, 5.0))};
            const double t = rng.uniform(0.0, 36.0);
            const double d = rng.uniform(0.0, 5.0);
            CHECK(lbd_moments(t, d, s).second >= 0.0);
        }
    }
}

TEST_CASE("logistic prediction") {
    const LogisticParams p = two_pop_logistic();
    // saturates at the total count scale
    CHECK(logistic_predict(1e4, p) == doctest::Approx(1000.0).epsilon(1e-9));
    LogisticParams flat;
    flat.f0 = 800.0;
    flat.subs.push_back({0.5, 0.0, 0.0});
    flat.subs.push_back({0.5, 0.0, 0.0});
    CHECK(logistic_predict(3.0, flat) == doctest::Approx(400.0));

    LogisticParams only1 = p, only2 = p;
    only1.subs = {p.subs[0]};
    only2.subs = {p.subs[1]};
    const double combined = logistic_predict(4.0, p);
    CHECK(combined == doctest::Approx(logistic_predict(4.0, only1) +
                                      logistic_predict(4.0, only2)));
}

TEST_CASE("objectives vanish on noiseless self-generated data") {
    const auto grids_pp = datagen::default_grids(ModelKind::phenopop);
    const PhenoPopParams pp = two_pop_phenopop();
    const Dataset data_pp =
        datagen::simulate_deterministic(ModelKind::phenopop, pp, grids_pp);
    const auto vgh = phenopop_objective(data_pp, pp);
    CHECK(vgh.value == doctest::Approx(0.0));
    CHECK(vgh.grad.cwiseAbs().maxCoeff() == doctest::Approx(0.0));

    const auto grids_lg = datagen::default_grids(ModelKind::logistic);
    const LogisticParams lg = two_pop_logistic();
    const Dataset data_lg =
        datagen::simulate_deterministic(ModelKind::logistic, lg, grids_lg);
    CHECK(logistic_objective(data_lg, lg).value == doctest::Approx(0.0));
}

TEST_CASE("single perturbed observation contributes its square") {
    const auto grids = datagen::default_grids(ModelKind::phenopop);
    const PhenoPopParams pp = two_pop_phenopop();
    Dataset data = datagen::simulate_deterministic(ModelKind::phenopop, pp, grids);
    data.at(3, 2, 0) += 0.25;
    CHECK(phenopop_objective(data, pp).value == doctest::Approx(0.0625));
}

TEST_CASE("objective derivatives match finite differences") {
    Rng rng(53);
    for (const auto kind :
         {ModelKind::phenopop, ModelKind::lbd, ModelKind::logistic}) {
        for (const int S : {1, 2}) {
            const auto table = datagen::default_ranges(kind, S);
            const auto grids = datagen::grids_for(kind, S);
            const ModelParams truth =
                datagen::sample_true_params(kind, S, table, rng);
            Dataset data;
            if (kind == ModelKind::lbd) {
                Rng sim = rng.derive(99);
                data = datagen::simulate_lbd(std::get<LBDParams>(truth), grids, sim);
            } else {
                data = datagen::simulate_deterministic(kind, truth, grids);
            }
            for (int pt = 0; pt < 5; ++pt) {
                const ModelParams probe =
                    datagen::sample_true_params(kind, S, table, rng);
                const Vector x = pack_params(probe);
                const auto vgh = objective(data, probe);

                const auto value_at = [&](const Vector& xq) {
                    return objective_value(data,
                                           unpack_params(kind, S, data.x0, xq));
                };
                const Vector fd_g = testutil::fd_gradient(value_at, x);
                CHECK(testutil::rel_err(vgh.grad, fd_g) < 1e-5);

                const auto grad_at = [&](const Vector& xq) {
                    return objective(data, unpack_params(kind, S, data.x0, xq)).grad;
                };
                const Matrix fd_h = testutil::fd_jacobian(grad_at, x);
                CHECK(testutil::rel_err(vgh.hess, fd_h) < 1e-5);
                CHECK((vgh.hess - vgh.hess.transpose()).cwiseAbs().maxCoeff() <=
                      1e-10 * std::max(1.0, vgh.hess.cwiseAbs().maxCoeff()));
            }
        }
    }
}

TEST_CASE("lbd nll dominated by the log normalizer for huge c") {
    Rng rng(54);
    const auto table = datagen::default_ranges(ModelKind::lbd, 2);
    const auto truth = std::get<LBDParams>(
        datagen::sample_true_params(ModelKind::lbd, 2, table, rng));
    const auto grids = datagen::grids_for(ModelKind::lbd, 2);
    Rng sim = rng.derive(7);
    const Dataset data = datagen::simulate_lbd(truth, grids, sim);

    LBDParams big_c = truth;
    big_c.c = 1e9;
    const double nll = lbd_nll(data, big_c).value;
    const double cells = static_cast<double>(data.n_times()) * data.n_doses();
    const double normalizer =
        data.replicates * cells * std::log(std::sqrt(2.0 * 3.14159265358979323846) * big_c.c);
    CHECK(nll == doctest::Approx(normalizer).epsilon(1e-4));
}

TEST_CASE("packing round trip") {
    Rng rng(55);
    for (const auto kind :
         {ModelKind::phenopop, ModelKind::lbd, ModelKind::logistic}) {
        for (const int S : {1, 2, 3}) {
            const auto table = datagen::default_ranges(kind, S);
            const ModelParams params =
                datagen::sample_true_params(kind, S, table, rng);
            const Vector x = pack_params(params);
            CHECK(x.size() == param_dim(kind, S));
            CHECK(param_names(kind, S).size() == static_cast<std::size_t>(x.size()));
            const ModelParams back = unpack_params(kind, S, 1000.0, x);
            CHECK((pack_params(back) - x).norm() == 0.0);
        }
    }
}

TEST_CASE("as_conic_program structure for two subpopulations") {
    Rng rng(56);
    const auto table = datagen::default_ranges(ModelKind::phenopop, 2);
    const auto truth = datagen::sample_true_params(ModelKind::phenopop, 2, table, rng);
    const Dataset data = datagen::simulate_deterministic(
        ModelKind::phenopop, truth, datagen::grids_for(ModelKind::phenopop, 2));

    Vector lo(10), hi(10);
    for (int i = 0; i < 10; ++i) {
        lo[i] = table.opt[i].lo;
        hi[i] = table.opt[i].hi;
    }
    const ConicProgram program = bio::as_conic_program(data, lo, hi);
    // 10 packed coordinates, 6 of them with finite upper bounds (p, alpha, b)
    CHECK(program.n == 16);
    CHECK(program.A.rows() == 7);  // simplex row plus six pairings
    // the simplex row acts on the p coordinates
    CHECK(program.A(0, 0) == 1.0);
    CHECK(program.A(0, 5) == 1.0);
    CHECK(program.b[0] == 1.0);

    // round trip through the provenance
    const Vector x = pack_params(truth);
    const Vector theta = program.provenance->to_cone(x);
    CHECK((program.provenance->to_original(theta) - x).cwiseAbs().maxCoeff() < 1e-12);
    // the sampled truth lies strictly inside the optimization ranges
    const auto [eq, mn] = residuals(program, theta);
    CHECK(mn > 0.0);
    CHECK(eq < 1e-10);

    // interior point construction satisfies all constraints strictly
    Rng rng2(57);
    std::vector<std::pair<double, double>> hint;
    for (int i = 0; i < program.n; ++i) hint.push_back({0.01, 0.99});
    const Vector start = feasible_interior_point(program, hint, rng2);
    const auto [eq2, mn2] = residuals(program, start);
    CHECK(mn2 > 0.0);
    CHECK(eq2 <= 1e-8 * (1.0 + program.b.norm()));

    CHECK_THROWS_AS(bio::as_conic_program(data, lo.head(4), hi.head(4)),
                    std::invalid_argument);
}

TEST_CASE("oracle over packed coordinates matches the struct form") {
    Rng rng(58);
    const auto table = datagen::default_ranges(ModelKind::lbd, 2);
    const auto truth = std::get<LBDParams>(
        datagen::sample_true_params(ModelKind::lbd, 2, table, rng));
    Rng sim = rng.derive(3);
    const Dataset data =
        datagen::simulate_lbd(truth, datagen::grids_for(ModelKind::lbd, 2), sim);
    const ObjectiveOracle oracle = make_oracle(data);
    const Vector x = pack_params(ModelParams(truth));
    CHECK(oracle.value(x) == doctest::Approx(lbd_nll(data, truth).value));
    CHECK((oracle.gradient(x) - lbd_nll(data, truth).grad).norm() == 0.0);
}
