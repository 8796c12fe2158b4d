#include "crnas/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace crnas::datagen {

using bio::LBDParams;
using bio::LogisticParams;
using bio::PhenoPopParams;
using nlohmann::json;

GridSpec default_grids(ModelKind kind) {
    GridSpec g;
    if (kind == ModelKind::logistic) {
        g.times = Vector::LinSpaced(10, 0.0, 10.0);
        g.doses = Vector(0);
        g.replicates = 1;
        return g;
    }
    g.times = Vector::LinSpaced(13, 0.0, 36.0);
    g.doses = Vector(11);
    g.doses << 0.0, 0.0313, 0.0625, 0.125, 0.25, 0.375, 0.5, 1.25, 2.5, 3.75, 5.0;
    g.replicates = kind == ModelKind::lbd ? 13 : 1;
    return g;
}

Vector dynamic_dose_grid(int S) {
    if (S < 2) throw std::invalid_argument("dynamic_dose_grid: S must be >= 2");
    const int levels = 4 * S;  // including dose 0
    Vector d(levels);
    d[0] = 0.0;
    // 4S-1 log-spaced points from 0.01 to 10, ratio 10^{3/(4S-2)}
    const int npos = levels - 1;
    for (int i = 0; i < npos; ++i) {
        d[i + 1] = std::pow(10.0, -2.0 + 3.0 * i / (npos - 1));
    }
    d[levels - 1] = 10.0;
    return d;
}

GridSpec grids_for(ModelKind kind, int S) {
    GridSpec g = default_grids(kind);
    if (kind == ModelKind::phenopop && S >= 3) {
        g.doses = dynamic_dose_grid(S);
    }
    return g;
}

std::vector<Interval> ec50_bands(int S) {
    if (S == 1) return {{0.05, 0.1}};
    if (S == 2) return {{0.05, 0.1}, {0.5, 2.5}};
    const Vector grid = dynamic_dose_grid(S);
    const Vector d = grid.tail(grid.size() - 1);  // nonzero levels, 4S-1 of them
    std::vector<Interval> bands(static_cast<std::size_t>(S));
    bands[0] = {d[0] / 2.0, (d[1] + d[2]) / 2.0};
    for (int i = 2; i <= S; ++i) {
        bands[i - 1] = {(d[4 * i - 5] + d[4 * i - 4]) / 2.0,
                        (d[4 * i - 3] + d[4 * i - 2]) / 2.0};
    }
    return bands;
}

RangeTable default_ranges(ModelKind kind, int S, double x0) {
    RangeTable t;
    t.kind = kind;
    t.S = S;
    t.x0 = x0;
    t.alpha_star = {0.0, 0.1};
    t.b_star = {0.8, 1.0};
    t.n_star = {1.5, 5.0};
    t.ec50_star = ec50_bands(S);
    t.nu_star = {0.0, 1.0};
    t.beta_minus_nu_star = {0.0, 0.1};
    t.c_star = {0.01 * x0, 0.05 * x0};
    for (int i = 0; i < S; ++i) {
        t.logistic_alpha_star.push_back({2.0 * i, 2.0 * i + 1.0});
        t.logistic_beta_star.push_back({2.0 * i, 2.0 * i + 1.0});
    }

    const bool with_p = S > 1;
    const double c_min = 1e-3 * x0;
    for (int i = 0; i < S; ++i) {
        switch (kind) {
            case ModelKind::phenopop:
                if (with_p) t.opt.push_back({0.0, 1.0});
                t.opt.push_back({0.0, 1.0});    // alpha
                t.opt.push_back({0.0, 1.0});    // b
                t.opt.push_back({0.0, kInf});   // Ecal
                t.opt.push_back({0.0, kInf});   // n
                break;
            case ModelKind::lbd:
                if (with_p) t.opt.push_back({0.0, 1.0});
                t.opt.push_back({0.0, 1.0});    // beta
                t.opt.push_back({0.0, 1.0});    // nu
                t.opt.push_back({0.0, 1.0});    // b
                t.opt.push_back({0.0, kInf});   // Ecal
                t.opt.push_back({0.0, kInf});   // n
                break;
            case ModelKind::logistic:
                if (with_p) t.opt.push_back({0.0, 1.0});
                t.opt.push_back({0.0, 10.0});   // alpha
                t.opt.push_back({0.0, 10.0});   // beta
                break;
        }
    }
    if (kind == ModelKind::lbd) t.opt.push_back({c_min, kInf});
    return t;
}

namespace {

std::vector<double> sample_proportions(int S, Rng& rng) {
    if (S == 1) return {1.0};
    if (S == 2) {
        const double p1 = rng.uniform(0.0, 1.0);
        return {p1, 1.0 - p1};
    }
    return rng.dirichlet1(S);
}

double draw(const Interval& iv, Rng& rng) { return rng.uniform(iv.lo, iv.hi); }

}  // namespace

ModelParams sample_true_params(ModelKind kind, int S, const RangeTable& table,
                               Rng& rng) {
    const auto p = sample_proportions(S, rng);
    if (kind == ModelKind::phenopop) {
        PhenoPopParams pp;
        pp.x0 = table.x0;
        for (int i = 0; i < S; ++i) {
            bio::PhenoPopSub s;
            s.p = p[i];
            s.alpha = draw(table.alpha_star, rng);
            const double b = draw(table.b_star, rng);
            const double n = draw(table.n_star, rng);
            const double E = draw(table.ec50_star[i], rng);
            s.hill = bio::HillParams::from_ec50(b, E, n);
            pp.subs.push_back(s);
        }
        return pp;
    }
    if (kind == ModelKind::lbd) {
        LBDParams lp;
        lp.x0 = table.x0;
        for (int i = 0; i < S; ++i) {
            bio::LBDSub s;
            s.p = p[i];
            // beta = nu + U(0, 0.1), redrawn until it also fits the
            // optimization range beta < 1
            do {
                s.nu = draw(table.nu_star, rng);
                s.beta = s.nu + draw(table.beta_minus_nu_star, rng);
            } while (s.beta >= 1.0);
            const double b = draw(table.b_star, rng);
            const double n = draw(table.n_star, rng);
            const double E = draw(table.ec50_star[i], rng);
            s.hill = bio::HillParams::from_ec50(b, E, n);
            lp.subs.push_back(s);
        }
        lp.c = draw(table.c_star, rng);
        return lp;
    }
    LogisticParams lg;
    lg.f0 = table.x0;
    for (int i = 0; i < S; ++i) {
        bio::LogisticSub s;
        s.p = p[i];
        s.alpha = draw(table.logistic_alpha_star[i], rng);
        s.beta = draw(table.logistic_beta_star[i], rng);
        lg.subs.push_back(s);
    }
    return lg;
}

Dataset simulate_deterministic(ModelKind kind, const ModelParams& params,
                               const GridSpec& grids) {
    if (bio::kind_of(params) != kind) {
        throw std::invalid_argument("simulate_deterministic: params/kind mismatch");
    }
    Dataset data;
    data.kind = kind;
    data.S = bio::subpop_count(params);
    data.times = grids.times;
    data.doses = grids.doses;
    data.replicates = 1;
    data.truth = params;
    if (kind == ModelKind::phenopop) {
        const auto& pp = std::get<PhenoPopParams>(params);
        data.x0 = pp.x0;
        data.allocate();
        for (int ti = 0; ti < data.n_times(); ++ti) {
            for (int di = 0; di < data.n_doses(); ++di) {
                data.at(ti, di, 0) =
                    bio::phenopop_predict(data.times[ti], data.dose_at(di), pp);
            }
        }
    } else if (kind == ModelKind::logistic) {
        const auto& lg = std::get<LogisticParams>(params);
        data.x0 = lg.f0;
        data.doses = Vector(0);
        data.allocate();
        for (int ti = 0; ti < data.n_times(); ++ti) {
            data.at(ti, 0, 0) = bio::logistic_predict(data.times[ti], lg);
        }
    } else {
        // deterministic birth-death data: the mean process, no noise
        const auto& lp = std::get<LBDParams>(params);
        data.x0 = lp.x0;
        data.allocate();
        for (int ti = 0; ti < data.n_times(); ++ti) {
            for (int di = 0; di < data.n_doses(); ++di) {
                double mu = 0.0;
                for (const auto& s : lp.subs) {
                    mu += lp.x0 * s.p *
                          bio::lbd_moments(data.times[ti], data.dose_at(di), s).first;
                }
                data.at(ti, di, 0) = mu;
            }
        }
    }
    return data;
}

std::vector<double> gillespie_bd(long long x0, double birth, double death,
                                 const Vector& obs_times, Rng& rng) {
    if (x0 < 0 || birth < 0.0 || death < 0.0) {
        throw std::invalid_argument("gillespie_bd: negative input");
    }
    std::vector<double> traj;
    traj.reserve(static_cast<std::size_t>(obs_times.size()));
    long long x = x0;
    double t_now = 0.0;
    const double per_cell_rate = birth + death;
    double t_event = (x > 0 && per_cell_rate > 0.0)
                         ? t_now + rng.exponential(static_cast<double>(x) * per_cell_rate)
                         : kInf;
    for (Eigen::Index j = 0; j < obs_times.size(); ++j) {
        const double t_obs = obs_times[j];
        while (t_event <= t_obs) {
            t_now = t_event;
            if (rng.uniform01() < birth / per_cell_rate) {
                ++x;
            } else {
                --x;
            }
            t_event = (x > 0) ? t_now + rng.exponential(static_cast<double>(x) * per_cell_rate)
                              : kInf;
        }
        traj.push_back(static_cast<double>(x));
    }
    return traj;
}

Dataset simulate_lbd(const LBDParams& params, const GridSpec& grids, Rng& rng) {
    Dataset data;
    data.kind = ModelKind::lbd;
    data.S = params.S();
    data.x0 = params.x0;
    data.times = grids.times;
    data.doses = grids.doses;
    data.replicates = grids.replicates;
    data.truth = ModelParams(params);
    data.allocate();
    for (int di = 0; di < data.n_doses(); ++di) {
        const double d = data.dose_at(di);
        for (int r = 0; r < data.replicates; ++r) {
            std::vector<double> total(static_cast<std::size_t>(data.n_times()), 0.0);
            for (const auto& s : params.subs) {
                const double nu_d = s.nu - std::log(bio::hill(d, s.hill));
                const long long n0 = std::llround(params.x0 * s.p);
                const auto traj = gillespie_bd(n0, s.beta, nu_d, data.times, rng);
                for (int ti = 0; ti < data.n_times(); ++ti) total[ti] += traj[ti];
            }
            for (int ti = 0; ti < data.n_times(); ++ti) {
                const double noise = params.c > 0.0 ? rng.normal(0.0, params.c) : 0.0;
                data.at(ti, di, r) = total[ti] + noise;
            }
        }
    }
    return data;
}

Dataset generate_dataset(ModelKind kind, const ModelParams& params,
                         const GridSpec& grids, Rng& rng) {
    if (kind == ModelKind::lbd) {
        return simulate_lbd(std::get<LBDParams>(params), grids, rng);
    }
    return simulate_deterministic(kind, params, grids);
}

// ---------------------------------------------------------------------------
// serialization
// ---------------------------------------------------------------------------

json params_to_json(const ModelParams& params) {
    json j;
    if (const auto* pp = std::get_if<PhenoPopParams>(&params)) {
        j["X0"] = pp->x0;
        for (const auto& s : pp->subs) {
            j["subs"].push_back({{"p", s.p},
                                 {"alpha", s.alpha},
                                 {"b", s.hill.b},
                                 {"Ecal", s.hill.ecal},
                                 {"n", s.hill.n},
                                 {"E", s.hill.ec50()}});
        }
    } else if (const auto* lp = std::get_if<LBDParams>(&params)) {
        j["X0"] = lp->x0;
        j["c"] = lp->c;
        for (const auto& s : lp->subs) {
            j["subs"].push_back({{"p", s.p},
                                 {"beta", s.beta},
                                 {"nu", s.nu},
                                 {"b", s.hill.b},
                                 {"Ecal", s.hill.ecal},
                                 {"n", s.hill.n},
                                 {"E", s.hill.ec50()}});
        }
    } else {
        const auto& lg = std::get<LogisticParams>(params);
        j["F0"] = lg.f0;
        for (const auto& s : lg.subs) {
            j["subs"].push_back({{"p", s.p}, {"alpha", s.alpha}, {"beta", s.beta}});
        }
    }
    return j;
}

ModelParams params_from_json(ModelKind kind, const json& j) {
    if (kind == ModelKind::phenopop) {
        PhenoPopParams pp;
        pp.x0 = j.at("X0").get<double>();
        for (const auto& s : j.at("subs")) {
            pp.subs.push_back({s.at("p").get<double>(),
                               s.at("alpha").get<double>(),
                               {s.at("b").get<double>(), s.at("Ecal").get<double>(),
                                s.at("n").get<double>()}});
        }
        return pp;
    }
    if (kind == ModelKind::lbd) {
        LBDParams lp;
        lp.x0 = j.at("X0").get<double>();
        lp.c = j.at("c").get<double>();
        for (const auto& s : j.at("subs")) {
            lp.subs.push_back({s.at("p").get<double>(),
                               s.at("beta").get<double>(),
                               s.at("nu").get<double>(),
                               {s.at("b").get<double>(), s.at("Ecal").get<double>(),
                                s.at("n").get<double>()}});
        }
        return lp;
    }
    LogisticParams lg;
    lg.f0 = j.at("F0").get<double>();
    for (const auto& s : j.at("subs")) {
        lg.subs.push_back({s.at("p").get<double>(), s.at("alpha").get<double>(),
                           s.at("beta").get<double>()});
    }
    return lg;
}

void write_dataset_json(const Dataset& data, const std::string& path) {
    json j;
    j["model"] = bio::to_string(data.kind);
    j["S"] = data.S;
    j["X0"] = data.x0;
    j["grids"]["times"] = std::vector<double>(data.times.begin(), data.times.end());
    j["grids"]["doses"] = std::vector<double>(data.doses.begin(), data.doses.end());
    j["grids"]["replicates"] = data.replicates;
    if (data.truth) j["true_params"] = params_to_json(*data.truth);
    if (data.kind == ModelKind::logistic) {
        std::vector<double> flat(static_cast<std::size_t>(data.n_times()));
        for (int ti = 0; ti < data.n_times(); ++ti) flat[ti] = data.at(ti, 0, 0);
        j["observations"] = flat;
    } else {
        json obs = json::array();
        for (int ti = 0; ti < data.n_times(); ++ti) {
            json per_dose = json::array();
            for (int di = 0; di < data.n_doses(); ++di) {
                json reps = json::array();
                for (int r = 0; r < data.replicates; ++r) {
                    reps.push_back(data.at(ti, di, r));
                }
                per_dose.push_back(reps);
            }
            obs.push_back(per_dose);
        }
        j["observations"] = obs;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

Dataset read_dataset_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    json j;
    in >> j;

    Dataset data;
    data.kind = bio::model_kind_from_string(j.at("model").get<std::string>());
    data.S = j.at("S").get<int>();
    data.x0 = j.at("X0").get<double>();
    const auto times = j.at("grids").at("times").get<std::vector<double>>();
    const auto doses = j.at("grids").at("doses").get<std::vector<double>>();
    data.times = Eigen::Map<const Vector>(times.data(), static_cast<Eigen::Index>(times.size()));
    data.doses = Eigen::Map<const Vector>(doses.data(), static_cast<Eigen::Index>(doses.size()));
    data.replicates = j.at("grids").at("replicates").get<int>();
    if (j.contains("true_params")) {
        data.truth = params_from_json(data.kind, j.at("true_params"));
    }
    data.allocate();
    if (data.kind == ModelKind::logistic) {
        const auto flat = j.at("observations").get<std::vector<double>>();
        for (int ti = 0; ti < data.n_times(); ++ti) data.at(ti, 0, 0) = flat.at(ti);
    } else {
        const auto& obs = j.at("observations");
        for (int ti = 0; ti < data.n_times(); ++ti) {
            for (int di = 0; di < data.n_doses(); ++di) {
                for (int r = 0; r < data.replicates; ++r) {
                    data.at(ti, di, r) = obs.at(ti).at(di).at(r).get<double>();
                }
            }
        }
    }
    return data;
}

void write_dataset_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "t,d,r,x\n";
    for (int ti = 0; ti < data.n_times(); ++ti) {
        for (int di = 0; di < data.n_doses(); ++di) {
            for (int r = 0; r < data.replicates; ++r) {
                out << data.times[ti] << ',' << data.dose_at(di) << ',' << (r + 1)
                    << ',' << data.at(ti, di, r) << "\n";
            }
        }
    }
}

}  // namespace crnas::datagen
