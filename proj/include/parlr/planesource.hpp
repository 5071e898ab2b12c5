#pragma once

// Slab-geometry radiative transfer (plane-source benchmark):
//   f_t + mu f_x + f = 1/2 \int f dmu  on [a, b] x [-1, 1]
// discretized with N normalized-Legendre moments and an upwind finite
// volume scheme on Nx cells, giving the matrix ODE
//   Y' = -D_x Y A^T + D_xx Y |A|^T - Y G,  Y in R^{Nx x N}.

#include "parlr/rhs.hpp"

#include <Eigen/Sparse>

namespace parlr {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Flux matrix a_{lk} = \int mu p_l p_k dmu for normalized Legendre p_l.
Matrix build_flux_matrix(Index N);

/// T |Lambda| T^{-1} for symmetric A.
Matrix abs_flux_matrix(const Matrix& A);

struct Stencils {
    SparseMatrix D_x;   // centered first difference, +-1/(2 dx)
    SparseMatrix D_xx;  // upwind stabilization, 1/(2 dx) off-diagonal, -1/dx diagonal
};

/// Tridiagonal stencils; boundary rows drop out-of-domain neighbours.
Stencils build_stencils(Index Nx, double dx);

struct ScalarFluxField {
    Vector values;
    double time = 0.0;
};

class PlanesourceProblem final : public RhsOperator {
public:
    struct Params {
        Index nx = 200;
        Index n_moments = 100;
        double a = -5.0;
        double b = 5.0;
        double cfl = 0.99;
    };

    explicit PlanesourceProblem(Params params);

    Index rows() const override { return params_.nx; }
    Index cols() const override { return params_.n_moments; }

    Matrix apply_corange(double t, const Matrix& K, const Matrix& V) const override;
    Matrix apply_range(double t, const Matrix& U, const Matrix& L) const override;
    Matrix galerkin(double t, const Matrix& U, const Matrix& S, const Matrix& V) const override;
    /// F(Y) = [-D_x U S, D_xx U S, -U S] [A V, |A| V, G V]^T (width 3r).
    std::optional<LowRankFactors> low_rank_factors(double t, const FactoredMatrix& Y) const override;
    Matrix dense_eval(double t, const Matrix& Y) const override;

    const Params& params() const noexcept { return params_; }
    double dx() const noexcept { return dx_; }
    /// Cell midpoints.
    const Vector& x() const noexcept { return x_; }
    const Matrix& A() const noexcept { return A_; }
    const Matrix& A_abs() const noexcept { return A_abs_; }
    /// Diagonal of G = diag(0, 1, ..., 1).
    const Vector& G_diag() const noexcept { return g_; }
    const Stencils& stencils() const noexcept { return stencils_; }

    /// Initial Gaussian pulse f0(x) = exp(-x^2 / (18e-4)) / (3 sqrt(2 pi) 1e-2).
    static double initial_density(double x);

    /// Rank-1 initial value: zeroth moment sqrt(2) f0(x_j), others zero.
    FactoredMatrix initial_condition() const;
    /// Same matrix with `rank` columns; the extra directions carry 1e-14.
    FactoredMatrix initial_condition(Index rank) const;
    Matrix initial_dense() const;

    /// h = cfl * dx
    double cfl_step_size() const noexcept { return params_.cfl * dx_; }

private:
    Params params_;
    double dx_;
    Vector x_;
    Matrix A_;
    SparseMatrix A_sparse_;
    Matrix A_abs_;
    Vector g_;
    Stencils stencils_;
};

/// Phi_j = sqrt(2) * Y_{j,0}, evaluated as U S (V^T e_0).
ScalarFluxField scalar_flux(const FactoredMatrix& Y, const PlanesourceProblem& problem, double time = 0.0);
ScalarFluxField scalar_flux(const Matrix& Y, const PlanesourceProblem& problem, double time = 0.0);

double cfl_step_size(const PlanesourceProblem& problem);

}  // namespace parlr
