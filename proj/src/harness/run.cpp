#include "parlr/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace parlr::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Grid index of t, which must be (numerically) a grid point.
std::size_t grid_index(const std::vector<double>& grid, double t) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (std::abs(grid[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) {
            return i;
        }
    }
    throw InvalidInput("reference: time " + format_number(t) + " is not on the integrator grid");
}

nlohmann::json timings_json(const PhaseTimings& t) {
    return {{"k", t.k}, {"l", t.l}, {"s", t.s}, {"merge", t.merge}, {"total", t.total}};
}

void write_meta(const std::filesystem::path& path, const nlohmann::json& meta) {
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << meta.dump(2) << '\n';
}

double relative(double numerator, double denominator) {
    if (denominator == 0.0) {
        return numerator == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return numerator / denominator;
}

}  // namespace

ProblemSetup make_problem(const RunConfig& config) {
    config.validate();
    ProblemSetup setup;
    switch (config.problem) {
        case ProblemKind::planesource: {
            PlanesourceProblem::Params p;
            p.nx = config.nx;
            p.n_moments = config.nmoments;
            p.cfl = config.cfl;
            auto problem = std::make_shared<PlanesourceProblem>(p);
            setup.Y0 = problem->initial_condition(config.initial_rank);
            setup.h = config.h > 0.0 ? config.h : problem->cfl_step_size();
            setup.planesource = problem.get();
            setup.op = std::move(problem);
            break;
        }
        case ProblemKind::sylvester: {
            auto problem = std::make_shared<SylvesterProblem>(
                SylvesterProblem::random(config.sylvester_m, config.sylvester_n, config.seed));
            setup.Y0 = SylvesterProblem::decaying_initial_value(config.sylvester_m, config.sylvester_n,
                                                                config.sylvester_rank, config.sylvester_decay,
                                                                config.seed + 1);
            setup.h = config.h > 0.0 ? config.h : 0.01;
            setup.op = std::move(problem);
            break;
        }
        case ProblemKind::tangential: {
            TangentialProblem::Params p;
            p.m = config.tangential_m;
            p.n = config.tangential_n;
            p.seed = config.seed;
            auto problem = std::make_shared<TangentialProblem>(p);
            setup.Y0 = problem->exact(0.0);
            setup.h = config.h > 0.0 ? config.h : 0.01;
            setup.tangential = problem.get();
            setup.op = std::move(problem);
            break;
        }
    }
    return setup;
}

std::vector<double> requested_snapshots(const RunConfig& config) {
    if (config.snapshot_times.empty()) {
        return {config.t_end};
    }
    return config.snapshot_times;
}

std::vector<Matrix> reference_states(const ProblemSetup& setup, const RunConfig& config,
                                     const std::vector<double>& times) {
    if (!std::is_sorted(times.begin(), times.end())) {
        throw InvalidInput("reference: times must be sorted");
    }
    std::vector<Matrix> out;
    out.reserve(times.size());
    if (setup.tangential) {
        for (double t : times) {
            out.push_back(setup.tangential->exact(t).dense());
        }
        return out;
    }
    if (setup.planesource) {
        // Same grid and time-stepping rule as the integrator.
        const std::vector<double> grid = step_times(0.0, config.t_end, setup.h);
        std::vector<std::size_t> wanted;
        for (double t : times) {
            wanted.push_back(grid_index(grid, t));
        }
        std::vector<Matrix> by_index(grid.size());
        const std::size_t last = wanted.empty() ? 0 : wanted.back();
        std::vector<double> prefix(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(last) + 1);
        dense_solve_on_grid(*setup.op, setup.planesource->initial_dense(), prefix, config.substep_method,
                            [&](std::size_t i, const Matrix& Y) {
                                if (std::find(wanted.begin(), wanted.end(), i) != wanted.end()) {
                                    by_index[i] = Y;
                                }
                            });
        for (std::size_t i : wanted) {
            out.push_back(by_index[i]);
        }
        return out;
    }
    // Fine classical RK4, independent of the integrator's h.
    constexpr double steps_per_unit = 2048.0;
    Matrix Y = setup.Y0.dense();
    double t = 0.0;
    auto rhs = [&setup](double s, const Matrix& Z) { return setup.op->dense_eval(s, Z); };
    for (double target : times) {
        if (target > t) {
            const int n = static_cast<int>(std::ceil((target - t) * steps_per_unit));
            Y = solve_matrix_ode(rhs, Y, t, target, OdeMethod::rk4(std::max(n, 1)));
            t = target;
        }
        out.push_back(Y);
    }
    return out;
}

RunResult run(const RunConfig& config) {
    const auto start = Clock::now();
    config.validate();
    std::error_code ec;
    std::filesystem::create_directories(config.output_dir, ec);
    if (ec || !std::filesystem::is_directory(config.output_dir)) {
        throw InvalidInput("invalid value for key 'output_dir': cannot create " + config.output_dir.string());
    }

    RunResult result;
    result.setup = make_problem(config);
    const StepConfig cfg = step_config(config);
    const double h = result.setup.h;

    nlohmann::json meta;
    for (const auto& [key, value] : config.entries()) {
        meta["config"][key] = value;
    }
    meta["resolved"] = {{"h", h}, {"rows", result.setup.op->rows()}, {"cols", result.setup.op->cols()}};

    const auto diag_path = config.output_dir / "diagnostics.csv";
    std::ofstream diag(diag_path);
    if (!diag) {
        throw Error("cannot write " + diag_path.string());
    }
    result.files.push_back(diag_path);
    diag << "step,t,rank,eta,reject_bound,norm,retries,tail\n";
    auto row = [&diag](long step, double t, Index rank, double eta, double bound, double norm, int retries,
                       double tail) {
        diag << step << ',' << format_number(t) << ',' << rank << ',' << format_number(eta) << ','
             << format_number(bound) << ',' << format_number(norm) << ',' << retries << ','
             << format_number(tail) << '\n';
        diag.flush();
    };
    row(0, 0.0, result.setup.Y0.rank(), 0.0, 0.0, result.setup.Y0.norm(), 0, 0.0);

    IntegrateOptions options;
    options.snapshot_times = requested_snapshots(config);
    double t_prev = 0.0;
    options.on_step = [&](long step, double t1, const StepResult& res) {
        const double hk = t1 - t_prev;
        t_prev = t1;
        row(step, t1, res.rank_out, res.eta, config.c_reject * res.theta / hk, res.Y1.norm(), res.retries,
            res.discarded_tail);
    };

    const auto meta_path = config.output_dir / "run_meta.json";
    try {
        result.trajectory = integrate(*result.setup.op, result.setup.Y0, 0.0, config.t_end, h, cfg,
                                      config.integrator, options);
    } catch (const std::exception& e) {
        meta["status"] = "failed";
        meta["error"] = e.what();
        if (const auto* failure = dynamic_cast<const StepFailure*>(&e)) {
            meta["failure"] = {{"step", failure->step()}, {"rank", failure->rank()}, {"eta", failure->eta()},
                               {"theta", failure->theta()}, {"retries", failure->retries()}};
        }
        meta["wall_seconds"] = seconds_since(start);
        write_meta(meta_path, meta);
        throw;
    }
    diag.close();

    const Trajectory& traj = result.trajectory;
    nlohmann::json snapshots = nlohmann::json::array();
    for (const Snapshot& snap : traj.snapshots) {
        nlohmann::json entry = {{"requested_time", snap.requested_time}, {"time", snap.time}, {"step", snap.step}};
        if (result.setup.planesource) {
            const auto path = config.output_dir / flux_file_name(snap.requested_time);
            const ScalarFluxField phi = scalar_flux(snap.Y, *result.setup.planesource, snap.time);
            CsvTable table{{"x", "phi"}, {}};
            for (Index j = 0; j < phi.values.size(); ++j) {
                table.rows.push_back({result.setup.planesource->x()(j), phi.values(j)});
            }
            write_csv(path, table);
            result.files.push_back(path);
            entry["file"] = path.filename().string();
        }
        snapshots.push_back(entry);
    }

    PhaseTimings totals;
    for (const PhaseTimings& t : traj.timings) {
        totals.k += t.k;
        totals.l += t.l;
        totals.s += t.s;
        totals.merge += t.merge;
        totals.total += t.total;
    }
    result.wall_seconds = seconds_since(start);
    meta["status"] = "ok";
    meta["steps"] = traj.size() - 1;
    meta["final_partial_step"] = traj.final_partial_step;
    meta["final_rank"] = traj.ranks.back();
    meta["max_rank"] = *std::max_element(traj.ranks.begin(), traj.ranks.end());
    meta["total_retries"] = std::accumulate(traj.retries.begin(), traj.retries.end(), 0);
    meta["snapshots"] = snapshots;
    meta["warnings"] = traj.warnings;
    meta["phase_seconds"] = timings_json(totals);
    meta["wall_seconds"] = result.wall_seconds;
    write_meta(meta_path, meta);
    result.files.push_back(meta_path);
    return result;
}

std::vector<CompareRow> compare(const RunConfig& a, const RunConfig& b, Metric metric,
                                const std::filesystem::path& report) {
    a.validate();
    b.validate();
    auto mismatch = [](std::string_view what) {
        throw InvalidInput("compare: mismatched grids (" + std::string(what) + ")");
    };
    if (a.problem != b.problem) {
        mismatch("problem");
    }
    switch (a.problem) {
        case ProblemKind::planesource:
            if (a.nx != b.nx || a.nmoments != b.nmoments) {
                mismatch("nx/nmoments");
            }
            break;
        case ProblemKind::sylvester:
            if (a.sylvester_m != b.sylvester_m || a.sylvester_n != b.sylvester_n || a.seed != b.seed ||
                a.sylvester_rank != b.sylvester_rank || a.sylvester_decay != b.sylvester_decay) {
                mismatch("sylvester setup");
            }
            break;
        case ProblemKind::tangential:
            if (a.tangential_m != b.tangential_m || a.tangential_n != b.tangential_n || a.seed != b.seed) {
                mismatch("tangential setup");
            }
            break;
    }
    if (requested_snapshots(a) != requested_snapshots(b)) {
        mismatch("snapshot times");
    }
    if (metric == Metric::flux_l2_rel && a.problem != ProblemKind::planesource) {
        throw InvalidInput("compare: flux_l2_rel needs the planesource problem");
    }

    const RunResult ra = run(a);
    const RunResult rb = run(b);
    const auto& sa = ra.trajectory.snapshots;
    const auto& sb = rb.trajectory.snapshots;
    auto times_of = [](const std::vector<Snapshot>& snaps) {
        std::vector<double> t;
        for (const auto& s : snaps) {
            t.push_back(s.time);
        }
        return t;
    };
    // Snapshots come out in grid order; the reference needs sorted times.
    auto sorted_refs = [&](const RunResult& r, const RunConfig& c, const std::vector<Snapshot>& snaps) {
        std::vector<double> t = times_of(snaps);
        std::vector<double> sorted = t;
        std::sort(sorted.begin(), sorted.end());
        const std::vector<Matrix> refs = reference_states(r.setup, c, sorted);
        std::vector<Matrix> out;
        for (double ti : t) {
            out.push_back(refs[static_cast<std::size_t>(std::find(sorted.begin(), sorted.end(), ti) - sorted.begin())]);
        }
        return out;
    };
    const std::vector<Matrix> ref_a = sorted_refs(ra, a, sa);
    const std::vector<Matrix> ref_b = sorted_refs(rb, b, sb);

    auto distance = [&](const Matrix& x, const Matrix& y) {
        if (metric == Metric::flux_l2_rel) {
            const Vector fx = scalar_flux(x, *ra.setup.planesource).values;
            const Vector fy = scalar_flux(y, *ra.setup.planesource).values;
            return relative((fx - fy).norm(), fy.norm());
        }
        return relative((x - y).norm(), y.norm());
    };

    std::vector<CompareRow> rows;
    for (std::size_t i = 0; i < sa.size(); ++i) {
        // Match by requested time; the order of requests is the same in both runs.
        const auto it = std::find_if(sb.begin(), sb.end(), [&](const Snapshot& s) {
            return s.requested_time == sa[i].requested_time;
        });
        if (it == sb.end()) {
            mismatch("snapshot times");
        }
        const auto j = static_cast<std::size_t>(it - sb.begin());
        const Matrix ya = sa[i].Y.dense();
        const Matrix yb = sb[j].Y.dense();
        rows.push_back(CompareRow{sa[i].requested_time, sa[i].time, sb[j].time, distance(ya, yb),
                                  distance(ya, ref_a[i]), distance(yb, ref_b[j])});
    }

    CsvTable table{{"requested_time", "t_a", "t_b", "a_vs_b", "a_vs_ref", "b_vs_ref"}, {}};
    for (const auto& r : rows) {
        table.rows.push_back({r.requested_time, r.t_a, r.t_b, r.a_vs_b, r.a_vs_ref, r.b_vs_ref});
    }
    if (report.has_parent_path()) {
        std::filesystem::create_directories(report.parent_path());
    }
    write_csv(report, table);
    return rows;
}

double fitted_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw InvalidInput("fitted_slope: need at least two points of equal length");
    }
    const auto n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
            throw InvalidInput("fitted_slope: values must be positive");
        }
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = n * sxx - sx * sx;
    if (denom == 0.0) {
        throw InvalidInput("fitted_slope: x values must differ");
    }
    return (n * sxy - sx * sy) / denom;
}

ConvergenceResult convergence_study(const RunConfig& base, const std::vector<double>& h_list, ThetaRule rule) {
    base.validate();
    if (h_list.empty()) {
        throw InvalidInput("convergence_study: empty h list");
    }
    for (std::size_t i = 0; i < h_list.size(); ++i) {
        if (!(h_list[i] > 0.0) || (i > 0 && !(h_list[i] < h_list[i - 1]))) {
            throw InvalidInput("convergence_study: h list must be positive and strictly decreasing");
        }
    }

    ConvergenceResult result;
    for (double h : h_list) {
        RunConfig config = base;
        config.h = h;
        config.theta_bar = rule == ThetaRule::h_squared ? base.theta_bar * h * h : base.theta_bar;
        const ProblemSetup setup = make_problem(config);
        const Trajectory traj =
            integrate(*setup.op, setup.Y0, 0.0, config.t_end, h, step_config(config), config.integrator);
        const Matrix ref = reference_states(setup, config, {config.t_end}).front();
        ConvergenceRow row;
        row.h = h;
        row.theta = config.theta_bar;
        row.error = (traj.final_state.dense() - ref).norm();
        row.steps = static_cast<long>(traj.size()) - 1;
        row.max_rank = *std::max_element(traj.ranks.begin(), traj.ranks.end());
        result.rows.push_back(row);
    }
    if (result.rows.size() >= 2) {
        std::vector<double> hs, errors;
        for (const auto& r : result.rows) {
            hs.push_back(r.h);
            errors.push_back(r.error);
        }
        if (std::all_of(errors.begin(), errors.end(), [](double e) { return e > 0.0; })) {
            result.slope = fitted_slope(hs, errors);
        }
    }

    std::filesystem::create_directories(base.output_dir);
    CsvTable table{{"h", "theta", "error", "steps", "max_rank"}, {}};
    for (const auto& r : result.rows) {
        table.rows.push_back({r.h, r.theta, r.error, static_cast<double>(r.steps), static_cast<double>(r.max_rank)});
    }
    write_csv(base.output_dir / "convergence.csv", table);
    if (result.slope) {
        write_csv(base.output_dir / "convergence_fit.csv",
                  CsvTable{{"points", "slope"}, {{static_cast<double>(result.rows.size()), *result.slope}}});
    }
    return result;
}

}  // namespace parlr::harness
