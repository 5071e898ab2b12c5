#pragma once

#include "parlr/lowrank.hpp"
#include "parlr/ode.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace parlr {

/// F(t, Y) = G H^T with slim factors.
struct LowRankFactors {
    Matrix G;  // m x q
    Matrix H;  // n x q
};

/// Right-hand side F(t, Y) of the matrix ODE Y' = F(t, Y), exposed through
/// the structured evaluations the low-rank integrators need.
///
/// Implementations are immutable after construction and must tolerate
/// concurrent calls.
class RhsOperator {
public:
    virtual ~RhsOperator() = default;

    virtual Index rows() const = 0;
    virtual Index cols() const = 0;

    /// F(t, K V^T) V  (m x r)
    virtual Matrix apply_corange(double t, const Matrix& K, const Matrix& V) const = 0;
    /// F(t, U L^T)^T U  (n x r)
    virtual Matrix apply_range(double t, const Matrix& U, const Matrix& L) const = 0;
    /// U^T F(t, U S V^T) V  (k x k'); U is m x k, S is k x k', V is n x k'.
    virtual Matrix galerkin(double t, const Matrix& U, const Matrix& S, const Matrix& V) const = 0;

    /// Factors of F(t, Y) when the problem can produce them cheaply.
    virtual std::optional<LowRankFactors> low_rank_factors(double t, const FactoredMatrix& Y) const;

    /// Full evaluation on a dense matrix. Reference and test path only; the
    /// integrators never call it.
    virtual Matrix dense_eval(double t, const Matrix& Y) const = 0;

    virtual std::optional<double> lipschitz_hint() const { return std::nullopt; }
};

struct ConsistencyReport {
    double corange = 0.0;
    double range = 0.0;
    double galerkin = 0.0;
    std::optional<double> factors;

    double max_deviation() const;
};

/// Relative deviations of each structured evaluation from the dense path,
/// evaluated at `sample`.
ConsistencyReport consistency_check(const RhsOperator& op, double t, const FactoredMatrix& sample);

/// Time-step the full (unprojected) ODE with uniform steps of size h_sub.
/// Throws NumericalBlowup naming the step index on non-finite values.
Matrix dense_reference_solve(const RhsOperator& op, const Matrix& Y0, double t0, double t1, double h_sub,
                             OdeMethod::Kind method);

/// One method step per interval of `grid` (increasing, grid[0] is the start
/// time). `observer(i, Y)` sees the state at grid[i] for every i.
Matrix dense_solve_on_grid(const RhsOperator& op, const Matrix& Y0, const std::vector<double>& grid,
                           OdeMethod::Kind method,
                           const std::function<void(std::size_t, const Matrix&)>& observer = {});

}  // namespace parlr
