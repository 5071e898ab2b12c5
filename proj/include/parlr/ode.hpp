#pragma once

// Explicit one-step solvers for the small matrix ODEs of the K, L and S
// substeps.

#include "parlr/error.hpp"
#include "parlr/lowrank.hpp"

#include <string_view>

namespace parlr {

struct OdeMethod {
    enum class Kind { euler, rk4 };

    Kind kind = Kind::rk4;
    int substep_count = 1;

    static OdeMethod euler(int substeps = 1) { return {Kind::euler, substeps}; }
    static OdeMethod rk4(int substeps = 1) { return {Kind::rk4, substeps}; }
};

std::string_view to_string(OdeMethod::Kind kind);
OdeMethod::Kind parse_ode_kind(std::string_view name);

namespace detail {

inline void require_finite(const Matrix& Z, long step, int stage) {
    if (!Z.allFinite()) {
        throw NumericalBlowup("non-finite value in matrix ODE solve", step, stage);
    }
}

}  // namespace detail

/// Integrate Z' = rhs(t, Z) from t0 to t1 with `method.substep_count`
/// uniform substeps. Stage indices in NumericalBlowup are 1-based (0 = the
/// updated state).
template <class Rhs>
Matrix solve_matrix_ode(Rhs&& rhs, const Matrix& Z0, double t0, double t1, const OdeMethod& method) {
    if (method.substep_count < 1) {
        throw InvalidInput("solve_matrix_ode: substep_count must be >= 1");
    }
    if (!(t1 >= t0)) {
        throw InvalidInput("solve_matrix_ode: t1 < t0");
    }
    const double delta = (t1 - t0) / method.substep_count;
    Matrix Z = Z0;
    for (long k = 0; k < method.substep_count; ++k) {
        const double t = t0 + static_cast<double>(k) * delta;
        if (method.kind == OdeMethod::Kind::euler) {
            Matrix k1 = rhs(t, Z);
            detail::require_finite(k1, k, 1);
            Z += delta * k1;
        } else {
            Matrix k1 = rhs(t, Z);
            detail::require_finite(k1, k, 1);
            Matrix k2 = rhs(t + 0.5 * delta, Matrix(Z + (0.5 * delta) * k1));
            detail::require_finite(k2, k, 2);
            Matrix k3 = rhs(t + 0.5 * delta, Matrix(Z + (0.5 * delta) * k2));
            detail::require_finite(k3, k, 3);
            Matrix k4 = rhs(t + delta, Matrix(Z + delta * k3));
            detail::require_finite(k4, k, 4);
            Z += (delta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        detail::require_finite(Z, k, 0);
    }
    return Z;
}

}  // namespace parlr
