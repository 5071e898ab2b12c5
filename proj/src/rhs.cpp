#include "parlr/rhs.hpp"

#include <algorithm>
#include <cmath>

namespace parlr {

std::optional<LowRankFactors> RhsOperator::low_rank_factors(double, const FactoredMatrix&) const {
    return std::nullopt;
}

double ConsistencyReport::max_deviation() const {
    double m = std::max({corange, range, galerkin});
    if (factors) {
        m = std::max(m, *factors);
    }
    return m;
}

namespace {

double relative_deviation(const Matrix& structured, const Matrix& reference) {
    const double scale = reference.norm();
    const double diff = (structured - reference).norm();
    return scale > 0.0 ? diff / scale : diff;
}

}  // namespace

ConsistencyReport consistency_check(const RhsOperator& op, double t, const FactoredMatrix& sample) {
    if (sample.rows() != op.rows() || sample.cols() != op.cols()) {
        throw InvalidInput("consistency_check: sample shape does not match the operator");
    }
    const Matrix& U = sample.U();
    const Matrix& S = sample.S();
    const Matrix& V = sample.V();
    const Matrix Y = sample.dense();
    const Matrix F = op.dense_eval(t, Y);

    ConsistencyReport report;
    const Matrix K = U * S;
    report.corange = relative_deviation(op.apply_corange(t, K, V), F * V);
    const Matrix L = V * S.transpose();
    report.range = relative_deviation(op.apply_range(t, U, L), F.transpose() * U);
    report.galerkin = relative_deviation(op.galerkin(t, U, S, V), U.transpose() * F * V);
    if (auto gh = op.low_rank_factors(t, sample)) {
        report.factors = relative_deviation(gh->G * gh->H.transpose(), F);
    }
    return report;
}

Matrix dense_reference_solve(const RhsOperator& op, const Matrix& Y0, double t0, double t1, double h_sub,
                             OdeMethod::Kind method) {
    if (!(h_sub > 0.0) || !(t1 >= t0)) {
        throw InvalidInput("dense_reference_solve: need h_sub > 0 and t1 >= t0");
    }
    const double span = t1 - t0;
    const double exact_steps = span / h_sub;
    const long steps = std::lround(exact_steps);
    if (std::abs(exact_steps - static_cast<double>(steps)) > 1e-8 * std::max(1.0, exact_steps)) {
        throw InvalidInput("dense_reference_solve: h_sub does not divide t1 - t0");
    }
    std::vector<double> grid{t0};
    const double h = steps > 0 ? span / static_cast<double>(steps) : 0.0;
    for (long k = 1; k <= steps; ++k) {
        grid.push_back(k == steps ? t1 : t0 + static_cast<double>(k) * h);
    }
    return dense_solve_on_grid(op, Y0, grid, method);
}

Matrix dense_solve_on_grid(const RhsOperator& op, const Matrix& Y0, const std::vector<double>& grid,
                           OdeMethod::Kind method,
                           const std::function<void(std::size_t, const Matrix&)>& observer) {
    if (Y0.rows() != op.rows() || Y0.cols() != op.cols()) {
        throw InvalidInput("dense_reference_solve: Y0 shape does not match the operator");
    }
    if (grid.empty()) {
        throw InvalidInput("dense_reference_solve: empty time grid");
    }
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1])) {
            throw InvalidInput("dense_reference_solve: time grid must be increasing");
        }
    }
    Matrix Y = Y0;
    if (observer) {
        observer(0, Y);
    }
    auto rhs = [&op](double t, const Matrix& Z) { return op.dense_eval(t, Z); };
    for (std::size_t k = 1; k < grid.size(); ++k) {
        try {
            Y = solve_matrix_ode(rhs, Y, grid[k - 1], grid[k], OdeMethod{method, 1});
        } catch (const NumericalBlowup& e) {
            throw NumericalBlowup("dense reference solve diverged", static_cast<long>(k - 1), e.stage());
        }
        if (observer) {
            observer(k, Y);
        }
    }
    return Y;
}

}  // namespace parlr
