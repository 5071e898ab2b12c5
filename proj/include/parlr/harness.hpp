#pragma once

// Benchmark driver: run configuration, problem construction, dense
// references, CSV output and the run / compare / converge studies.

#include "parlr/integrators.hpp"
#include "parlr/planesource.hpp"
#include "parlr/problems.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parlr::harness {

enum class ProblemKind { planesource, sylvester, tangential };

std::string_view to_string(ProblemKind kind);
ProblemKind parse_problem(std::string_view name);

/// Every field has a default matching the desk-scale planesource run.
struct RunConfig {
    ProblemKind problem = ProblemKind::planesource;
    Stepper integrator = Stepper::parallel;

    double theta_bar = 1e-2;
    ThetaMode theta_mode = ThetaMode::relative;
    double c_reject = 1.0;
    Index r_max = 0;  // <= 0: min(m, n)
    int max_retries = 10;
    bool reject = true;
    OdeMethod::Kind substep_method = OdeMethod::Kind::euler;
    int substep_count = 1;
    Index eta_columns = 0;  // <= 0: all columns

    // planesource
    Index nx = 200;
    Index nmoments = 100;
    double cfl = 0.99;
    /// Rank of the initial factorization; directions beyond the first carry 1e-14.
    Index initial_rank = 2;

    // sylvester
    Index sylvester_m = 100;
    Index sylvester_n = 100;
    Index sylvester_rank = 12;
    double sylvester_decay = 0.1;

    // tangential
    Index tangential_m = 40;
    Index tangential_n = 30;

    double t_end = 1.0;
    /// Empty: a single snapshot at t_end.
    std::vector<double> snapshot_times;
    /// <= 0: cfl * dx for planesource, 0.01 otherwise.
    double h = 0.0;
    std::uint64_t seed = 42;
    std::filesystem::path output_dir = "out";

    /// Set one key from its textual value. Throws InvalidInput naming the key.
    void set(std::string_view key, std::string_view value);
    /// All keys with their current values, in a stable order.
    std::vector<std::pair<std::string, std::string>> entries() const;
    void validate() const;
};

/// Flat key=value file; '#' starts a comment, blank lines are ignored.
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});
void apply_config_text(RunConfig& config, std::string_view text, std::string_view origin = "<text>");

StepConfig step_config(const RunConfig& config);

/// A constructed problem together with its initial value and step size.
struct ProblemSetup {
    std::shared_ptr<const RhsOperator> op;
    FactoredMatrix Y0;
    double h = 0.0;
    const PlanesourceProblem* planesource = nullptr;
    const TangentialProblem* tangential = nullptr;
};

ProblemSetup make_problem(const RunConfig& config);

/// Snapshot times requested by the config (t_end when none were given).
std::vector<double> requested_snapshots(const RunConfig& config);

/// Reference values at the given grid times (increasing, starting after or
/// at 0): dense Euler/RK4 on the integrator grid for planesource, a
/// fine RK4 dense solve for sylvester, the closed form for tangential.
std::vector<Matrix> reference_states(const ProblemSetup& setup, const RunConfig& config,
                                     const std::vector<double>& times);

// ---- CSV ----

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(std::string_view name) const;
    std::vector<double> values(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
/// 17 significant digits, integral values without exponent.
std::string format_number(double value);

/// flux_t<time>.csv, time formatted with up to 6 significant digits.
std::string flux_file_name(double time);

// ---- studies ----

struct RunResult {
    Trajectory trajectory;
    ProblemSetup setup;
    std::vector<std::filesystem::path> files;
    double wall_seconds = 0.0;
};

/// Integrates, writes diagnostics.csv, flux snapshots and run_meta.json.
/// On a step failure the rows computed so far stay on disk and run_meta
/// records the failure before the exception propagates.
RunResult run(const RunConfig& config);

enum class Metric { flux_l2_rel, dense_l2_rel };
std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

struct CompareRow {
    double requested_time = 0.0;
    double t_a = 0.0;
    double t_b = 0.0;
    double a_vs_b = 0.0;
    double a_vs_ref = 0.0;
    double b_vs_ref = 0.0;
};

/// Runs both configs (files go to their own output_dir) and writes the
/// per-snapshot relative distances to `report`.
std::vector<CompareRow> compare(const RunConfig& a, const RunConfig& b, Metric metric,
                                const std::filesystem::path& report);

enum class ThetaRule { fixed, h_squared };
std::string_view to_string(ThetaRule rule);
ThetaRule parse_theta_rule(std::string_view name);

struct ConvergenceRow {
    double h = 0.0;
    double theta = 0.0;  // theta_bar used for this row
    double error = 0.0;  // ||Y(t_end) - Y_ref(t_end)||_F
    long steps = 0;
    Index max_rank = 0;
};

struct ConvergenceResult {
    std::vector<ConvergenceRow> rows;
    /// Least-squares slope of log(error) against log(h); absent for one row.
    std::optional<double> slope;
};

/// Writes convergence.csv and, when a slope exists, convergence_fit.csv into
/// base.output_dir.
ConvergenceResult convergence_study(const RunConfig& base, const std::vector<double>& h_list, ThetaRule rule);

/// Least-squares slope of log(y) over log(x).
double fitted_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace parlr::harness
