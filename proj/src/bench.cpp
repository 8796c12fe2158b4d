#include "crnas/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

namespace crnas::bench {

using nlohmann::json;

int worker_count() {
    unsigned n = std::thread::hardware_concurrency();
    if (n == 0) n = 1;
    if (const char* env = std::getenv("CRNAS_THREADS")) {
        const int cap = std::atoi(env);
        if (cap > 0) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<int>(n);
}

namespace {

void parallel_for(int count, const std::function<void(int)>& body) {
    const int workers = std::min(worker_count(), count);
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
                body(i);
            }
        });
    }
    for (auto& th : pool) th.join();
}

Vector opt_lower(const RangeTable& table) {
    Vector lo(static_cast<Eigen::Index>(table.opt.size()));
    for (std::size_t i = 0; i < table.opt.size(); ++i) lo[static_cast<Eigen::Index>(i)] = table.opt[i].lo;
    return lo;
}

Vector opt_upper(const RangeTable& table) {
    Vector hi(static_cast<Eigen::Index>(table.opt.size()));
    for (std::size_t i = 0; i < table.opt.size(); ++i) hi[static_cast<Eigen::Index>(i)] = table.opt[i].hi;
    return hi;
}

}  // namespace

std::vector<Vector> sample_initial_points(const RangeTable& table,
                                          const ConicProgram& program, int count,
                                          Rng& rng) {
    if (!program.provenance) {
        throw std::invalid_argument("sample_initial_points: program lacks provenance");
    }
    const auto& prov = *program.provenance;
    const int dim = prov.n_original();
    if (static_cast<int>(table.opt.size()) != dim) {
        throw std::invalid_argument("sample_initial_points: range/program mismatch");
    }
    std::vector<Vector> points;
    points.reserve(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        bool found = false;
        for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
            Vector x(dim);
            for (int i = 0; i < dim; ++i) {
                const auto& iv = table.opt[i];
                x[i] = std::isfinite(iv.hi) ? rng.uniform(iv.lo, iv.hi)
                                            : rng.log_uniform(iv.lo + 1e-3, 100.0);
            }
            Vector theta = project_affine(program.A, program.b, prov.to_cone(x));
            const auto [eq, mn] = residuals(program, theta);
            if (mn > 0.0 && eq <= 1e-8 * (1.0 + program.b.norm())) {
                points.push_back(std::move(theta));
                found = true;
            }
        }
        if (!found) {
            throw InfeasibleError(
                "sample_initial_points: no interior start after 1000 retries");
        }
    }
    return points;
}

double relative_likelihood(const ModelParams& estimate, const ModelParams& truth,
                           const Dataset& data) {
    const double nll_est = bio::objective_value(data, estimate);
    const double nll_true = bio::objective_value(data, truth);
    return nll_est / nll_true;
}

namespace {

SolveReport dispatch_solve(const std::string& name, const ConicProgram& program,
                           const Vector& theta0, const SolverConfig& config) {
    if (name == "crnas") return crnas_solve(program, theta0, config);
    if (name == "foas") return foas_solve(program, theta0, config);
    throw std::invalid_argument("unknown solver: " + name);
}

}  // namespace

ResultsTable run_experiment(const ExperimentConfig& config) {
    if (config.n_datasets < 1 || config.n_starts < 1) {
        throw std::invalid_argument("run_experiment: need n_datasets, n_starts >= 1");
    }
    if (config.solvers.empty()) {
        throw std::invalid_argument("run_experiment: no solvers selected");
    }
    for (const auto& s : config.solvers) {
        if (s.name != "crnas" && s.name != "foas") {
            throw std::invalid_argument("run_experiment: unknown solver " + s.name);
        }
    }

    const RangeTable table = datagen::default_ranges(config.kind, config.S, config.x0);
    const datagen::GridSpec grids = datagen::grids_for(config.kind, config.S);
    const Rng master(config.seed);

    // Datasets, programs and starts are derived per dataset id, so the
    // schedule of the worker pool cannot affect any result.
    const int nd = config.n_datasets;
    std::vector<Dataset> datasets(static_cast<std::size_t>(nd));
    std::vector<ConicProgram> programs(static_cast<std::size_t>(nd));
    std::vector<std::vector<Vector>> starts(static_cast<std::size_t>(nd));
    std::vector<std::string> dataset_errors(static_cast<std::size_t>(nd));
    parallel_for(nd, [&](int i) {
        try {
            Rng gen = master.derive(1000003ULL * static_cast<std::uint64_t>(i) + 1);
            const ModelParams truth =
                datagen::sample_true_params(config.kind, config.S, table, gen);
            datasets[i] = datagen::generate_dataset(config.kind, truth, grids, gen);
            programs[i] =
                bio::as_conic_program(datasets[i], opt_lower(table), opt_upper(table));
            Rng start_rng = master.derive(1000003ULL * static_cast<std::uint64_t>(i) + 2);
            starts[i] = sample_initial_points(table, programs[i], config.n_starts,
                                              start_rng);
        } catch (const std::exception& e) {
            dataset_errors[i] = e.what();
        }
    });

    const int n_solvers = static_cast<int>(config.solvers.size());
    const int n_tasks = nd * n_solvers * config.n_starts;
    std::vector<ResultRow> rows(static_cast<std::size_t>(n_tasks));
    parallel_for(n_tasks, [&](int task) {
        const int i = task / (n_solvers * config.n_starts);
        const int rem = task % (n_solvers * config.n_starts);
        const int si = rem / config.n_starts;
        const int start_id = rem % config.n_starts;

        ResultRow& row = rows[task];
        row.dataset_id = i;
        row.solver = config.solvers[si].name;
        row.start_id = start_id;
        if (!dataset_errors[i].empty()) {
            row.error = dataset_errors[i];
            return;
        }
        try {
            const SolveReport report =
                dispatch_solve(config.solvers[si].name, programs[i],
                               starts[i][start_id], config.solvers[si].config);
            row.objective = report.best_objective;
            row.iterations = report.iterations;
            row.wall_time_s = report.wall_time_s;
            row.termination = to_string(report.termination);
            row.fosp = report.fosp_measure;
            row.sosp = report.sosp_measure;
            const Vector packed =
                programs[i].provenance->to_original(report.best_theta);
            row.estimate = bio::unpack_params(config.kind, config.S,
                                              datasets[i].x0, packed);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });

    ResultsTable out;
    out.config = config;
    out.rows = std::move(rows);
    std::sort(out.rows.begin(), out.rows.end(),
              [](const ResultRow& a, const ResultRow& b) {
                  return std::tie(a.dataset_id, a.solver, a.start_id) <
                         std::tie(b.dataset_id, b.solver, b.start_id);
              });

    for (int i = 0; i < nd; ++i) {
        for (const auto& spec : config.solvers) {
            Aggregate agg;
            agg.dataset_id = i;
            agg.solver = spec.name;
            bool any = false;
            for (const auto& row : out.rows) {
                if (row.dataset_id != i || row.solver != spec.name) continue;
                agg.total_time_s += row.wall_time_s;
                if (!row.error.empty()) continue;
                if (!any || row.objective < agg.best_value) {
                    agg.best_value = row.objective;
                    agg.best_start = row.start_id;
                    agg.iterations_to_best = row.iterations;
                    any = true;
                }
            }
            if (any) out.aggregates.push_back(agg);
        }
    }
    return out;
}

void export_csv(const ResultsTable& table, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.precision(17);
    out << "dataset_id,solver,start_id,objective,iterations,wall_time_s,"
           "termination,fosp,sosp\n";
    for (const auto& r : table.rows) {
        out << r.dataset_id << ',' << r.solver << ',' << r.start_id << ','
            << r.objective << ',' << r.iterations << ',' << r.wall_time_s << ','
            << (r.error.empty() ? r.termination : "error") << ',' << r.fosp << ','
            << r.sosp << "\n";
    }
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& config) {
    json solvers = json::array();
    for (const auto& s : config.solvers) {
        solvers.push_back({{"name", s.name},
                           {"M0", s.config.M0},
                           {"alpha", s.config.alpha},
                           {"eta", s.config.eta},
                           {"epsilon", s.config.epsilon},
                           {"max_iter", s.config.max_iter},
                           {"adaptive_M", s.config.adaptive_M}});
    }
    return {{"model", bio::to_string(config.kind)},
            {"S", config.S},
            {"datasets", config.n_datasets},
            {"starts", config.n_starts},
            {"seed", config.seed},
            {"x0", config.x0},
            {"solvers", solvers},
            {"output_dir", config.output_dir}};
}

ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig config;
    config.kind = bio::model_kind_from_string(j.at("model").get<std::string>());
    config.S = j.value("S", 1);
    config.n_datasets = j.value("datasets", 100);
    config.n_starts = j.value("starts", 20);
    config.seed = j.value("seed", std::uint64_t{0});
    config.x0 = j.value("x0", 1000.0);
    config.output_dir = j.value("output_dir", std::string{});
    config.solvers.clear();
    if (j.contains("solvers")) {
        for (const auto& s : j.at("solvers")) {
            SolverSpec spec;
            if (s.is_string()) {
                spec.name = s.get<std::string>();
            } else {
                spec.name = s.at("name").get<std::string>();
                spec.config.M0 = s.value("M0", spec.config.M0);
                spec.config.alpha = s.value("alpha", spec.config.alpha);
                spec.config.eta = s.value("eta", spec.config.eta);
                spec.config.epsilon = s.value("epsilon", spec.config.epsilon);
                spec.config.max_iter = s.value("max_iter", spec.config.max_iter);
                spec.config.adaptive_M = s.value("adaptive_M", spec.config.adaptive_M);
                spec.config.M_min = s.value("M_min", spec.config.M_min);
                spec.config.M_max = s.value("M_max", spec.config.M_max);
            }
            config.solvers.push_back(spec);
        }
    } else {
        config.solvers.push_back(SolverSpec{});
    }
    return config;
}

void export_json(const ResultsTable& table, const std::string& path) {
    json j;
    j["config"] = experiment_config_to_json(table.config);
    j["metadata"] = {
        {"start_sampling",
         "uniform on the optimization feasible ranges; log-uniform on "
         "(lower+1e-3, 100] for coordinates with an infinite upper bound"}};
    json rows = json::array();
    for (const auto& r : table.rows) {
        json row = {{"dataset_id", r.dataset_id}, {"solver", r.solver},
                    {"start_id", r.start_id},     {"objective", r.objective},
                    {"iterations", r.iterations}, {"wall_time_s", r.wall_time_s},
                    {"termination", r.termination}, {"fosp", r.fosp},
                    {"sosp", r.sosp}};
        if (!r.error.empty()) row["error"] = r.error;
        if (r.estimate) row["estimate"] = datagen::params_to_json(*r.estimate);
        rows.push_back(row);
    }
    j["rows"] = rows;
    json aggs = json::array();
    for (const auto& a : table.aggregates) {
        aggs.push_back({{"dataset_id", a.dataset_id},
                        {"solver", a.solver},
                        {"best_value", a.best_value},
                        {"best_start", a.best_start},
                        {"iterations_to_best", a.iterations_to_best},
                        {"total_time_s", a.total_time_s}});
    }
    j["aggregates"] = aggs;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << "\n";
}

}  // namespace crnas::bench
