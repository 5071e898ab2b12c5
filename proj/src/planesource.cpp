#include "parlr/planesource.hpp"

#include "parlr/error.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <vector>

namespace parlr {

Matrix build_flux_matrix(Index N) {
    if (N < 2) {
        throw InvalidInput("build_flux_matrix: need at least 2 moments");
    }
    Matrix A = Matrix::Zero(N, N);
    for (Index l = 0; l + 1 < N; ++l) {
        const double ld = static_cast<double>(l);
        const double a = (ld + 1.0) / std::sqrt((2.0 * ld + 1.0) * (2.0 * ld + 3.0));
        A(l, l + 1) = a;
        A(l + 1, l) = a;
    }
    return A;
}

Matrix abs_flux_matrix(const Matrix& A) {
    if (A.rows() != A.cols()) {
        throw InvalidInput("abs_flux_matrix: matrix must be square");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
    if (eig.info() != Eigen::Success) {
        throw Error("abs_flux_matrix: eigensolver failed");
    }
    const Matrix& T = eig.eigenvectors();
    Matrix out = T * eig.eigenvalues().cwiseAbs().asDiagonal() * T.transpose();
    // Symmetrize rounding.
    return 0.5 * (out + out.transpose());
}

Stencils build_stencils(Index Nx, double dx) {
    if (Nx < 3) {
        throw InvalidInput("build_stencils: need at least 3 cells");
    }
    if (!(dx > 0.0)) {
        throw InvalidInput("build_stencils: dx must be positive");
    }
    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> dx_entries;
    std::vector<Triplet> dxx_entries;
    const double half = 1.0 / (2.0 * dx);
    for (Index j = 0; j < Nx; ++j) {
        dxx_entries.emplace_back(j, j, -1.0 / dx);
        if (j > 0) {
            dx_entries.emplace_back(j, j - 1, -half);
            dxx_entries.emplace_back(j, j - 1, half);
        }
        if (j + 1 < Nx) {
            dx_entries.emplace_back(j, j + 1, half);
            dxx_entries.emplace_back(j, j + 1, half);
        }
    }
    Stencils s{SparseMatrix(Nx, Nx), SparseMatrix(Nx, Nx)};
    s.D_x.setFromTriplets(dx_entries.begin(), dx_entries.end());
    s.D_xx.setFromTriplets(dxx_entries.begin(), dxx_entries.end());
    return s;
}

PlanesourceProblem::PlanesourceProblem(Params params) : params_(params) {
    if (params_.nx < 3 || params_.n_moments < 2) {
        throw InvalidInput("PlanesourceProblem: need nx >= 3 and n_moments >= 2");
    }
    if (!(params_.b > params_.a)) {
        throw InvalidInput("PlanesourceProblem: empty domain");
    }
    if (!(params_.cfl > 0.0 && params_.cfl <= 1.0)) {
        throw InvalidInput("PlanesourceProblem: cfl must lie in (0, 1]");
    }
    dx_ = (params_.b - params_.a) / static_cast<double>(params_.nx);
    x_.resize(params_.nx);
    for (Index j = 0; j < params_.nx; ++j) {
        x_(j) = params_.a + (static_cast<double>(j) + 0.5) * dx_;
    }
    A_ = build_flux_matrix(params_.n_moments);
    A_sparse_ = A_.sparseView();
    A_abs_ = abs_flux_matrix(A_);
    g_ = Vector::Ones(params_.n_moments);
    g_(0) = 0.0;
    stencils_ = build_stencils(params_.nx, dx_);
}

Matrix PlanesourceProblem::apply_corange(double, const Matrix& K, const Matrix& V) const {
    const Matrix AV = A_sparse_ * V;
    const Matrix VtAV = V.transpose() * AV;  // A symmetric: V^T A^T V = (V^T A V)^T
    const Matrix VtAabsV = V.transpose() * (A_abs_ * V);
    const Matrix VtGV = V.transpose() * g_.asDiagonal() * V;
    return -(stencils_.D_x * K) * VtAV.transpose() + (stencils_.D_xx * K) * VtAabsV.transpose() - K * VtGV;
}

Matrix PlanesourceProblem::apply_range(double, const Matrix& U, const Matrix& L) const {
    const Matrix UtDxU = U.transpose() * (stencils_.D_x * U);
    const Matrix UtDxxU = U.transpose() * (stencils_.D_xx * U);
    const Matrix UtU = U.transpose() * U;
    // F(U L^T)^T U = -A L U^T D_x^T U + |A| L U^T D_xx^T U - G L U^T U
    return -(A_sparse_ * L) * UtDxU.transpose() + (A_abs_ * L) * UtDxxU.transpose() -
           (g_.asDiagonal() * L) * UtU;
}

Matrix PlanesourceProblem::galerkin(double, const Matrix& U, const Matrix& S, const Matrix& V) const {
    const Matrix UtDxU = U.transpose() * (stencils_.D_x * U);
    const Matrix UtDxxU = U.transpose() * (stencils_.D_xx * U);
    const Matrix UtU = U.transpose() * U;
    const Matrix VtAV = V.transpose() * (A_sparse_ * V);
    const Matrix VtAabsV = V.transpose() * (A_abs_ * V);
    const Matrix VtGV = V.transpose() * g_.asDiagonal() * V;
    return -UtDxU * S * VtAV.transpose() + UtDxxU * S * VtAabsV.transpose() - UtU * S * VtGV;
}

std::optional<LowRankFactors> PlanesourceProblem::low_rank_factors(double, const FactoredMatrix& Y) const {
    const Index r = Y.rank();
    const Matrix US = Y.U() * Y.S();
    LowRankFactors f{Matrix(rows(), 3 * r), Matrix(cols(), 3 * r)};
    f.G << -(stencils_.D_x * US), stencils_.D_xx * US, -US;
    f.H << A_sparse_ * Y.V(), A_abs_ * Y.V(), g_.asDiagonal() * Y.V();
    return f;
}

Matrix PlanesourceProblem::dense_eval(double, const Matrix& Y) const {
    if (Y.rows() != rows() || Y.cols() != cols()) {
        throw InvalidInput("PlanesourceProblem::dense_eval: shape mismatch");
    }
    return -(stencils_.D_x * Y) * A_.transpose() + (stencils_.D_xx * Y) * A_abs_.transpose() -
           Y * g_.asDiagonal();
}

double PlanesourceProblem::initial_density(double x) {
    return std::exp(-x * x / 18e-4) / (3.0 * std::sqrt(2.0 * std::numbers::pi) * 1e-2);
}

Matrix PlanesourceProblem::initial_dense() const {
    Matrix Y = Matrix::Zero(rows(), cols());
    for (Index j = 0; j < rows(); ++j) {
        Y(j, 0) = std::numbers::sqrt2 * initial_density(x_(j));
    }
    return Y;
}

FactoredMatrix PlanesourceProblem::initial_condition() const { return initial_condition(1); }

FactoredMatrix PlanesourceProblem::initial_condition(Index rank) const {
    if (rank < 1 || rank > std::min(rows(), cols())) {
        throw InvalidInput("initial_condition: rank out of range");
    }
    Vector profile(rows());
    for (Index j = 0; j < rows(); ++j) {
        profile(j) = std::numbers::sqrt2 * initial_density(x_(j));
    }
    const double norm = profile.norm();
    Matrix U(rows(), 1);
    U.col(0) = profile / norm;
    Matrix V = Matrix::Zero(cols(), 1);
    V(0, 0) = 1.0;
    if (rank == 1) {
        Matrix S(1, 1);
        S(0, 0) = norm;
        return FactoredMatrix(std::move(U), std::move(S), std::move(V));
    }
    // Complete the bases with coordinate directions; deterministic.
    const AugmentedBasis Ua = orthonormalize_augment(U, Matrix::Identity(rows(), rank + 1));
    const AugmentedBasis Va = orthonormalize_augment(V, Matrix::Identity(cols(), rank + 1));
    Vector s = Vector::Constant(rank, 1e-14);
    s(0) = norm;
    return FactoredMatrix(Ua.B_hat.leftCols(rank), Matrix(s.asDiagonal()), Va.B_hat.leftCols(rank));
}

ScalarFluxField scalar_flux(const FactoredMatrix& Y, const PlanesourceProblem& problem, double time) {
    if (Y.rows() != problem.rows() || Y.cols() != problem.cols()) {
        throw InvalidInput("scalar_flux: shape mismatch");
    }
    const Vector first_row = Y.V().row(0).transpose();
    return ScalarFluxField{std::numbers::sqrt2 * (Y.U() * (Y.S() * first_row)), time};
}

ScalarFluxField scalar_flux(const Matrix& Y, const PlanesourceProblem& problem, double time) {
    if (Y.rows() != problem.rows() || Y.cols() != problem.cols()) {
        throw InvalidInput("scalar_flux: shape mismatch");
    }
    return ScalarFluxField{std::numbers::sqrt2 * Y.col(0), time};
}

double cfl_step_size(const PlanesourceProblem& problem) { return problem.cfl_step_size(); }

}  // namespace parlr
