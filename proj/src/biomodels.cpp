#include "crnas/biomodels.hpp"

#include <memory>
#include <stdexcept>

#include "crnas/dual2.hpp"

namespace crnas::bio {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::phenopop: return "phenopop";
        case ModelKind::lbd: return "lbd";
        case ModelKind::logistic: return "logistic";
    }
    return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "phenopop") return ModelKind::phenopop;
    if (name == "lbd") return ModelKind::lbd;
    if (name == "logistic") return ModelKind::logistic;
    throw std::invalid_argument("unknown model kind: " + name);
}

ModelKind kind_of(const ModelParams& params) {
    if (std::holds_alternative<PhenoPopParams>(params)) return ModelKind::phenopop;
    if (std::holds_alternative<LBDParams>(params)) return ModelKind::lbd;
    return ModelKind::logistic;
}

int subpop_count(const ModelParams& params) {
    return std::visit([](const auto& p) { return p.S(); }, params);
}

// ---------------------------------------------------------------------------
// model functions, written once over a generic scalar (double or Dual2<N>)
// ---------------------------------------------------------------------------

namespace {

template <typename T>
T hill_t(double d, const T& b, const T& ecal, const T& n) {
    using std::exp;
    using std::log;
    if (d == 0.0) return T(1.0);  // d^n = 0 for every n > 0
    // 1/(1 + d^n/ecal) evaluated through z = log(d^n/ecal) and the sigmoid
    // form that only ever exponentiates nonpositive numbers, so large Hill
    // coefficients saturate to b instead of overflowing
    const T z = n * std::log(d) - log(ecal);
    if (value_of(z) >= 0.0) {
        const T w = exp(-z);
        return b + (1.0 - b) * (w / (1.0 + w));
    }
    return b + (1.0 - b) / (1.0 + exp(z));
}

template <typename T>
T phenopop_cell_t(double t, double d, double x0, const T& p, const T& alpha,
                  const T& b, const T& ecal, const T& n) {
    using std::exp;
    using std::log;
    return p * (x0 * exp(t * (alpha + log(hill_t(d, b, ecal, n)))));
}

// Per-initial-cell moments of the linear birth-death process. The direct
// variance formula has a removable singularity at lambda = beta - nu(d) = 0;
// |lambda t| < 1e-5 switches to the series
//   sigma^2 = (beta + nu(d)) t (1 + 3x/2 + 7x^2/6 + 5x^3/8),  x = lambda t.
template <typename T>
void lbd_moments_t(double t, double d, const T& beta, const T& nu, const T& b,
                   const T& ecal, const T& n, T& mu, T& sigma2) {
    using std::exp;
    using std::log;
    const T nu_d = nu - log(hill_t(d, b, ecal, n));
    const T lam = beta - nu_d;
    mu = exp(t * lam);
    const T x = t * lam;
    if (std::abs(value_of(x)) < 1e-5) {
        sigma2 = (beta + nu_d) *
                 (t * (1.0 + x * (1.5 + x * (7.0 / 6.0 + x * 0.625))));
    } else {
        sigma2 = ((beta + nu_d) / lam) * (exp((2.0 * t) * lam) - mu);
    }
}

template <typename T>
T logistic_cell_t(double t, double f0, const T& p, const T& alpha, const T& beta) {
    using std::exp;
    return p * (f0 / (1.0 + exp(beta - alpha * t)));
}

int block_width(ModelKind kind, int S) {
    switch (kind) {
        case ModelKind::phenopop: return S == 1 ? 4 : 5;
        case ModelKind::lbd: return S == 1 ? 5 : 6;
        case ModelKind::logistic: return S == 1 ? 2 : 3;
    }
    return 0;
}

}  // namespace

int param_dim(ModelKind kind, int S) {
    const int base = block_width(kind, S) * S;
    return kind == ModelKind::lbd ? base + 1 : base;
}

std::vector<std::string> param_names(ModelKind kind, int S) {
    std::vector<std::string> names;
    const bool with_p = S > 1;
    for (int i = 1; i <= S; ++i) {
        const std::string suffix = std::to_string(i);
        switch (kind) {
            case ModelKind::phenopop:
                if (with_p) names.push_back("p" + suffix);
                names.push_back("alpha" + suffix);
                names.push_back("b" + suffix);
                names.push_back("Ecal" + suffix);
                names.push_back("n" + suffix);
                break;
            case ModelKind::lbd:
                if (with_p) names.push_back("p" + suffix);
                names.push_back("beta" + suffix);
                names.push_back("nu" + suffix);
                names.push_back("b" + suffix);
                names.push_back("Ecal" + suffix);
                names.push_back("n" + suffix);
                break;
            case ModelKind::logistic:
                if (with_p) names.push_back("p" + suffix);
                names.push_back("alpha" + suffix);
                names.push_back("beta" + suffix);
                break;
        }
    }
    if (kind == ModelKind::lbd) names.push_back("c");
    return names;
}

Vector pack_params(const ModelParams& params) {
    const ModelKind kind = kind_of(params);
    const int S = subpop_count(params);
    const int w = block_width(kind, S);
    Vector x(param_dim(kind, S));
    const bool with_p = S > 1;
    if (kind == ModelKind::phenopop) {
        const auto& pp = std::get<PhenoPopParams>(params);
        for (int i = 0; i < S; ++i) {
            int o = w * i;
            const auto& s = pp.subs[i];
            if (with_p) x[o++] = s.p;
            x[o++] = s.alpha;
            x[o++] = s.hill.b;
            x[o++] = s.hill.ecal;
            x[o] = s.hill.n;
        }
    } else if (kind == ModelKind::lbd) {
        const auto& lp = std::get<LBDParams>(params);
        for (int i = 0; i < S; ++i) {
            int o = w * i;
            const auto& s = lp.subs[i];
            if (with_p) x[o++] = s.p;
            x[o++] = s.beta;
            x[o++] = s.nu;
            x[o++] = s.hill.b;
            x[o++] = s.hill.ecal;
            x[o] = s.hill.n;
        }
        x[x.size() - 1] = lp.c;
    } else {
        const auto& lg = std::get<LogisticParams>(params);
        for (int i = 0; i < S; ++i) {
            int o = w * i;
            const auto& s = lg.subs[i];
            if (with_p) x[o++] = s.p;
            x[o++] = s.alpha;
            x[o] = s.beta;
        }
    }
    return x;
}

ModelParams unpack_params(ModelKind kind, int S, double x0, const Vector& x) {
    if (x.size() != param_dim(kind, S)) {
        throw std::invalid_argument("unpack_params: wrong coordinate count");
    }
    const int w = block_width(kind, S);
    const bool with_p = S > 1;
    if (kind == ModelKind::phenopop) {
        PhenoPopParams pp;
        pp.x0 = x0;
        for (int i = 0; i < S; ++i) {
            int o = w * i;
            PhenoPopSub s;
            s.p = with_p ? x[o++] : 1.0;
            s.alpha = x[o++];
            s.hill.b = x[o++];
            s.hill.ecal = x[o++];
            s.hill.n = x[o];
            pp.subs.push_back(s);
        }
        return pp;
    }
    if (kind == ModelKind::lbd) {
        LBDParams lp;
        lp.x0 = x0;
        for (int i = 0; i < S; ++i) {
            int o = w * i;
            LBDSub s;
            s.p = with_p ? x[o++] : 1.0;
            s.beta = x[o++];
            s.nu = x[o++];
            s.hill.b = x[o++];
            s.hill.ecal = x[o++];
            s.hill.n = x[o];
            lp.subs.push_back(s);
        }
        lp.c = x[x.size() - 1];
        return lp;
    }
    LogisticParams lg;
    lg.f0 = x0;
    for (int i = 0; i < S; ++i) {
        int o = w * i;
        LogisticSub s;
        s.p = with_p ? x[o++] : 1.0;
        s.alpha = x[o++];
        s.beta = x[o];
        lg.subs.push_back(s);
    }
    return lg;
}

// ---------------------------------------------------------------------------
// scalar entry points
// ---------------------------------------------------------------------------

double hill(double d, const HillParams& params) {
    if (d < 0.0) throw std::invalid_argument("hill: dose must be nonnegative");
    return hill_t(d, params.b, params.ecal, params.n);
}

double phenopop_predict(double t, double d, const PhenoPopParams& params) {
    if (t < 0.0 || d < 0.0) {
        throw std::invalid_argument("phenopop_predict: t and d must be nonnegative");
    }
    double total = 0.0;
    for (const auto& s : params.subs) {
        total += phenopop_cell_t(t, d, params.x0, s.p, s.alpha, s.hill.b,
                                 s.hill.ecal, s.hill.n);
    }
    return total;
}

std::pair<double, double> lbd_moments(double t, double d, const LBDSub& sub) {
    if (t < 0.0 || d < 0.0) {
        throw std::invalid_argument("lbd_moments: t and d must be nonnegative");
    }
    double mu = 0.0, sigma2 = 0.0;
    lbd_moments_t(t, d, sub.beta, sub.nu, sub.hill.b, sub.hill.ecal, sub.hill.n,
                  mu, sigma2);
    return {mu, sigma2};
}

double logistic_predict(double t, const LogisticParams& params) {
    if (t < 0.0) throw std::invalid_argument("logistic_predict: t must be nonnegative");
    double total = 0.0;
    for (const auto& s : params.subs) {
        total += logistic_cell_t(t, params.f0, s.p, s.alpha, s.beta);
    }
    return total;
}

// ---------------------------------------------------------------------------
// objective assembly
// ---------------------------------------------------------------------------

namespace {

void check_dataset_match(const Dataset& data, ModelKind kind, int S) {
    if (data.kind != kind || data.S != S) {
        throw std::invalid_argument("objective: dataset/model mismatch");
    }
}

// Least-squares accumulation shared by the PhenoPop and logistic objectives.
// f carries per-subpopulation predictions with derivatives confined to that
// subpopulation's block of width w.
template <int N>
void accumulate_least_squares(const Dataset& data, int ti, int di,
                              const std::vector<Dual2<N>>& f, int w,
                              ValGradHess& out) {
    double f_tot = 0.0;
    for (const auto& fi : f) f_tot += fi.v;
    double s1 = 0.0;
    const int R = data.replicates;
    for (int r = 0; r < R; ++r) {
        const double res = data.at(ti, di, r) - f_tot;
        out.value += res * res;
        s1 += res;
    }
    const int S = static_cast<int>(f.size());
    for (int i = 0; i < S; ++i) {
        const auto gi = f[i].g.head(w);
        const int oi = w * i;
        out.grad.segment(oi, w) -= 2.0 * s1 * gi;
        out.hess.block(oi, oi, w, w) +=
            2.0 * R * (gi * gi.transpose()) - 2.0 * s1 * f[i].h.topLeftCorner(w, w);
        for (int j = 0; j < i; ++j) {
            const auto gj = f[j].g.head(w);
            const int oj = w * j;
            const Matrix cross = 2.0 * R * (gi * gj.transpose());
            out.hess.block(oi, oj, w, w) += cross;
            out.hess.block(oj, oi, w, w) += cross.transpose();
        }
    }
}

ValGradHess eval_phenopop(const Dataset& data, const PhenoPopParams& params,
                          bool derivatives) {
    const int S = params.S();
    check_dataset_match(data, ModelKind::phenopop, S);
    const int dim = param_dim(ModelKind::phenopop, S);
    const int w = block_width(ModelKind::phenopop, S);
    const bool with_p = S > 1;

    ValGradHess out;
    if (derivatives) {
        out.grad = Vector::Zero(dim);
        out.hess = Matrix::Zero(dim, dim);
    }
    using D = Dual2<5>;
    for (int ti = 0; ti < data.n_times(); ++ti) {
        const double t = data.times[ti];
        for (int di = 0; di < data.n_doses(); ++di) {
            const double d = data.dose_at(di);
            if (!derivatives) {
                const double f_tot = phenopop_predict(t, d, params);
                for (int r = 0; r < data.replicates; ++r) {
                    const double res = data.at(ti, di, r) - f_tot;
                    out.value += res * res;
                }
                continue;
            }
            std::vector<D> f(S);
            for (int i = 0; i < S; ++i) {
                const auto& s = params.subs[i];
                int slot = 0;
                const D p = with_p ? D::variable(s.p, slot++) : D(1.0);
                const D alpha = D::variable(s.alpha, slot++);
                const D b = D::variable(s.hill.b, slot++);
                const D ecal = D::variable(s.hill.ecal, slot++);
                const D n = D::variable(s.hill.n, slot);
                f[i] = phenopop_cell_t(t, d, params.x0, p, alpha, b, ecal, n);
            }
            accumulate_least_squares(data, ti, di, f, w, out);
        }
    }
    return out;
}

ValGradHess eval_logistic(const Dataset& data, const LogisticParams& params,
                          bool derivatives) {
    const int S = params.S();
    check_dataset_match(data, ModelKind::logistic, S);
    const int dim = param_dim(ModelKind::logistic, S);
    const int w = block_width(ModelKind::logistic, S);
    const bool with_p = S > 1;

    ValGradHess out;
    if (derivatives) {
        out.grad = Vector::Zero(dim);
        out.hess = Matrix::Zero(dim, dim);
    }
    using D = Dual2<3>;
    for (int ti = 0; ti < data.n_times(); ++ti) {
        const double t = data.times[ti];
        if (!derivatives) {
            const double f_tot = logistic_predict(t, params);
            for (int r = 0; r < data.replicates; ++r) {
                const double res = data.at(ti, 0, r) - f_tot;
                out.value += res * res;
            }
            continue;
        }
        std::vector<D> f(S);
        for (int i = 0; i < S; ++i) {
            const auto& s = params.subs[i];
            int slot = 0;
            const D p = with_p ? D::variable(s.p, slot++) : D(1.0);
            const D alpha = D::variable(s.alpha, slot++);
            const D beta = D::variable(s.beta, slot);
            f[i] = logistic_cell_t(t, params.f0, p, alpha, beta);
        }
        accumulate_least_squares(data, ti, 0, f, w, out);
    }
    return out;
}

ValGradHess eval_lbd(const Dataset& data, const LBDParams& params,
                     bool derivatives) {
    const int S = params.S();
    check_dataset_match(data, ModelKind::lbd, S);
    const int dim = param_dim(ModelKind::lbd, S);
    const int w = block_width(ModelKind::lbd, S);
    const bool with_p = S > 1;
    const int c_idx = dim - 1;
    const double c = params.c;
    constexpr double two_pi = 6.283185307179586476925287;

    ValGradHess out;
    if (derivatives) {
        out.grad = Vector::Zero(dim);
        out.hess = Matrix::Zero(dim, dim);
    }
    using D = Dual2<6>;
    const int R = data.replicates;
    for (int ti = 0; ti < data.n_times(); ++ti) {
        const double t = data.times[ti];
        for (int di = 0; di < data.n_doses(); ++di) {
            const double d = data.dose_at(di);

            // per-subpopulation contributions X0 p mu_i and X0 p sigma_i^2
            std::vector<D> m(S), s2(S);
            double mu = 0.0, V = c * c;
            for (int i = 0; i < S; ++i) {
                const auto& s = params.subs[i];
                int slot = 0;
                const D p = with_p ? D::variable(s.p, slot++) : D(1.0);
                const D beta = D::variable(s.beta, slot++);
                const D nu = D::variable(s.nu, slot++);
                const D b = D::variable(s.hill.b, slot++);
                const D ecal = D::variable(s.hill.ecal, slot++);
                const D n = D::variable(s.hill.n, slot);
                D mu_i, sig2_i;
                lbd_moments_t(t, d, beta, nu, b, ecal, n, mu_i, sig2_i);
                m[i] = (params.x0 * p) * mu_i;
                s2[i] = (params.x0 * p) * sig2_i;
                mu += m[i].v;
                V += s2[i].v;
            }
            if (!(V > 0.0)) {
                throw std::domain_error("lbd_nll: nonpositive total variance");
            }

            double ssr = 0.0, s1 = 0.0;
            for (int r = 0; r < R; ++r) {
                const double res = data.at(ti, di, r) - mu;
                ssr += res * res;
                s1 += res;
            }
            out.value += 0.5 * R * std::log(two_pi * V) + ssr / (2.0 * V);
            if (!derivatives) continue;

            // partials of the cell objective in (mu, V)
            const double L_mu = -s1 / V;
            const double L_V = 0.5 * R / V - ssr / (2.0 * V * V);
            const double L_mumu = R / V;
            const double L_muV = s1 / (V * V);
            const double L_VV = -0.5 * R / (V * V) + ssr / (V * V * V);

            Vector gmu = Vector::Zero(dim);
            Vector gV = Vector::Zero(dim);
            for (int i = 0; i < S; ++i) {
                gmu.segment(w * i, w) = m[i].g.head(w);
                gV.segment(w * i, w) = s2[i].g.head(w);
            }
            gV[c_idx] = 2.0 * c;

            out.grad += L_mu * gmu + L_V * gV;
            out.hess += L_mumu * (gmu * gmu.transpose()) + L_VV * (gV * gV.transpose()) +
                        L_muV * (gmu * gV.transpose() + gV * gmu.transpose());
            for (int i = 0; i < S; ++i) {
                out.hess.block(w * i, w * i, w, w) +=
                    L_mu * m[i].h.topLeftCorner(w, w) + L_V * s2[i].h.topLeftCorner(w, w);
            }
            out.hess(c_idx, c_idx) += 2.0 * L_V;
        }
    }
    return out;
}

ValGradHess eval(const Dataset& data, const ModelParams& params, bool derivatives) {
    if (const auto* pp = std::get_if<PhenoPopParams>(&params)) {
        return eval_phenopop(data, *pp, derivatives);
    }
    if (const auto* lp = std::get_if<LBDParams>(&params)) {
        return eval_lbd(data, *lp, derivatives);
    }
    return eval_logistic(data, std::get<LogisticParams>(params), derivatives);
}

}  // namespace

double objective_value(const Dataset& data, const ModelParams& params) {
    return eval(data, params, false).value;
}

ValGradHess objective(const Dataset& data, const ModelParams& params) {
    return eval(data, params, true);
}

ValGradHess phenopop_objective(const Dataset& data, const PhenoPopParams& params) {
    return eval_phenopop(data, params, true);
}

ValGradHess lbd_nll(const Dataset& data, const LBDParams& params) {
    return eval_lbd(data, params, true);
}

ValGradHess logistic_objective(const Dataset& data, const LogisticParams& params) {
    return eval_logistic(data, params, true);
}

ObjectiveOracle make_oracle(const Dataset& data) {
    auto shared = std::make_shared<const Dataset>(data);
    ObjectiveOracle oracle;
    oracle.value = [shared](const Vector& x) {
        return objective_value(
            *shared, unpack_params(shared->kind, shared->S, shared->x0, x));
    };
    oracle.gradient = [shared](const Vector& x) {
        return objective(*shared, unpack_params(shared->kind, shared->S, shared->x0, x))
            .grad;
    };
    oracle.hessian = [shared](const Vector& x) {
        return objective(*shared, unpack_params(shared->kind, shared->S, shared->x0, x))
            .hess;
    };
    return oracle;
}

ConicProgram as_conic_program(const Dataset& data, const Vector& lower,
                              const Vector& upper) {
    const int dim = param_dim(data.kind, data.S);
    if (lower.size() != dim || upper.size() != dim) {
        throw std::invalid_argument("as_conic_program: range size mismatch");
    }
    Matrix A(0, dim);
    Vector b(0);
    if (data.S > 1) {
        A = Matrix::Zero(1, dim);
        const int w = block_width(data.kind, data.S);
        for (int i = 0; i < data.S; ++i) A(0, w * i) = 1.0;
        b = Vector::Constant(1, 1.0);
    }
    return from_box_constrained(make_oracle(data), A, b, lower, upper);
}

}  // namespace crnas::bio
