#include "parlr/problems.hpp"
#include "parlr/rhs.hpp"

#include <gtest/gtest.h>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <random>

using namespace parlr;

namespace {

Matrix sylvester_dense(const SylvesterProblem& p, const Matrix& Y) {
    Matrix F = p.M() * Y + Y * p.N().transpose();
    if (p.forcing()) {
        F += p.forcing()->dense();
    }
    return F;
}

}  // namespace

TEST(Sylvester, StructuredEvaluationsMatchDenseFormula) {
    const SylvesterProblem p = SylvesterProblem::random(14, 11, 3);
    std::mt19937_64 rng(4);
    // Deliberately non-orthonormal inputs: the evaluations are linear
    // identities and must not rely on orthonormality.
    const Matrix K = random_gaussian(14, 3, rng);
    const Matrix V = random_gaussian(11, 3, rng);
    const Matrix U = random_gaussian(14, 2, rng);
    const Matrix L = random_gaussian(11, 2, rng);
    const Matrix S = random_gaussian(2, 3, rng);

    EXPECT_LT((p.apply_corange(0.0, K, V) - sylvester_dense(p, K * V.transpose()) * V).norm(), 1e-12);
    EXPECT_LT((p.apply_range(0.0, U, L) - sylvester_dense(p, U * L.transpose()).transpose() * U).norm(), 1e-12);
    EXPECT_LT((p.galerkin(0.0, U, S, V) - U.transpose() * sylvester_dense(p, U * S * V.transpose()) * V).norm(),
              1e-12);
    const Matrix Y = random_gaussian(14, 11, rng);
    EXPECT_LT((p.dense_eval(0.0, Y) - sylvester_dense(p, Y)).norm(), 1e-12);
}

TEST(Sylvester, LowRankFactorsReproduceF) {
    const SylvesterProblem p = SylvesterProblem::random(20, 16, 5);
    const FactoredMatrix Y = SylvesterProblem::decaying_initial_value(20, 16, 4, 0.5, 6);
    const auto gh = p.low_rank_factors(0.0, Y);
    ASSERT_TRUE(gh.has_value());
    EXPECT_LT((gh->G * gh->H.transpose() - sylvester_dense(p, Y.dense())).norm(), 1e-12);
    EXPECT_LT(consistency_check(p, 0.0, Y).max_deviation(), 1e-13);
}

TEST(Sylvester, SeededConstructionIsDeterministic) {
    const SylvesterProblem a = SylvesterProblem::random(9, 7, 11);
    const SylvesterProblem b = SylvesterProblem::random(9, 7, 11);
    const SylvesterProblem c = SylvesterProblem::random(9, 7, 12);
    EXPECT_EQ(a.M(), b.M());
    EXPECT_EQ(a.N(), b.N());
    EXPECT_NE(a.M(), c.M());
    const FactoredMatrix y = SylvesterProblem::decaying_initial_value(9, 7, 3, 0.1, 2);
    const Eigen::JacobiSVD<Matrix> svd(y.dense());
    EXPECT_NEAR(svd.singularValues()(0), 1.0, 1e-14);
    EXPECT_NEAR(svd.singularValues()(1), 0.1, 1e-14);
    EXPECT_NEAR(svd.singularValues()(2), 0.01, 1e-14);
}

TEST(Tangential, DerivativeMatchesCentralDifference) {
    const TangentialProblem p(TangentialProblem::Params{});
    const double t = 0.4;
    const double d = 1e-5;
    const Matrix fd = (p.exact(t + d).dense() - p.exact(t - d).dense()) / (2 * d);
    const LowRankFactors gh = p.derivative(t);
    const Matrix F = gh.G * gh.H.transpose();
    EXPECT_LT((F - fd).norm(), 1e-8 * F.norm());
    EXPECT_LT((p.dense_eval(t, Matrix::Zero(p.rows(), p.cols())) - F).norm(), 1e-13);
    EXPECT_LT(consistency_check(p, t, p.exact(0.1)).max_deviation(), 1e-13);
}

TEST(Tangential, ExactPathHasOrthonormalFactors) {
    const TangentialProblem p(TangentialProblem::Params{});
    const FactoredMatrix A = p.exact(1.7);
    EXPECT_LT(A.orthonormality_defect(), 1e-13);
    EXPECT_NEAR(A.S()(0, 0), std::exp(-0.1 * 1.7), 1e-14);
    EXPECT_NEAR(A.S()(2, 2), 0.25 * std::exp(-0.3 * 1.7), 1e-14);
}

TEST(Tangential, RejectsTooSmallSizes) {
    TangentialProblem::Params params;
    params.m = 5;
    EXPECT_THROW(TangentialProblem{params}, InvalidInput);
}

TEST(DenseReference, MatchesMatrixExponentialOfVectorizedSystem) {
    // vec(M Y + Y N^T + C) = (I (x) M + N (x) I) vec(Y) + vec(C); the affine
    // system is solved exactly by the exponential of the bordered matrix.
    const Index m = 20, n = 20;
    const SylvesterProblem p = SylvesterProblem::random(m, n, 21);
    const Matrix Lop = Eigen::kroneckerProduct(Matrix::Identity(n, n), p.M()).eval() +
                       Eigen::kroneckerProduct(p.N(), Matrix::Identity(m, m)).eval();
    const Matrix C = p.forcing()->dense();
    Matrix B = Matrix::Zero(m * n + 1, m * n + 1);
    B.topLeftCorner(m * n, m * n) = Lop;
    B.topRightCorner(m * n, 1) = Eigen::Map<const Vector>(C.data(), m * n);

    std::mt19937_64 rng(22);
    const Matrix Y0 = random_gaussian(m, n, rng);
    const double T = 0.75;
    Vector z0(m * n + 1);
    z0 << Eigen::Map<const Vector>(Y0.data(), m * n), 1.0;
    const Matrix E = (T * B).exp();
    const Vector z1 = E * z0;
    const Matrix exact = Eigen::Map<const Matrix>(z1.data(), m, n);

    const Matrix Y = dense_reference_solve(p, Y0, 0.0, T, T / 96, OdeMethod::Kind::rk4);
    EXPECT_LT((Y - exact).norm(), 1e-6);
    const Matrix Ye = dense_reference_solve(p, Y0, 0.0, T, T / 96, OdeMethod::Kind::euler);
    EXPECT_GT((Ye - exact).norm(), 1e-4 * exact.norm());
}

TEST(DenseReference, ScalarExponentialAndZeroRhs) {
    const SylvesterProblem growth(Matrix::Ones(1, 1), Matrix::Zero(1, 1));
    const Matrix y = dense_reference_solve(growth, Matrix::Ones(1, 1), 0.0, 1.0, 1e-2, OdeMethod::Kind::rk4);
    EXPECT_NEAR(y(0, 0), std::exp(1.0), 1e-8);

    const SylvesterProblem zero(Matrix::Zero(5, 5), Matrix::Zero(4, 4));
    std::mt19937_64 rng(3);
    const Matrix Y0 = random_gaussian(5, 4, rng);
    EXPECT_EQ(dense_reference_solve(zero, Y0, 0.0, 1.0, 0.125, OdeMethod::Kind::rk4), Y0);
    EXPECT_EQ(dense_reference_solve(zero, Y0, 0.0, 1.0, 0.125, OdeMethod::Kind::euler), Y0);
}

TEST(DenseReference, RequiresDividingSubstep) {
    const SylvesterProblem p = SylvesterProblem::random(4, 4, 1);
    EXPECT_THROW(dense_reference_solve(p, Matrix::Zero(4, 4), 0.0, 1.0, 0.3, OdeMethod::Kind::rk4), InvalidInput);
    EXPECT_THROW(dense_reference_solve(p, Matrix::Zero(3, 4), 0.0, 1.0, 0.25, OdeMethod::Kind::rk4), InvalidInput);
    EXPECT_NO_THROW(dense_reference_solve(p, Matrix::Zero(4, 4), 0.0, 1.0, 0.25, OdeMethod::Kind::rk4));
}

TEST(DenseReference, GridObserverSeesEveryNode) {
    const SylvesterProblem p = SylvesterProblem::random(4, 3, 2);
    const std::vector<double> grid{0.0, 0.1, 0.25, 0.3};
    std::vector<std::size_t> seen;
    Matrix last;
    const Matrix Y = dense_solve_on_grid(p, Matrix::Ones(4, 3), grid, OdeMethod::Kind::euler,
                                         [&](std::size_t i, const Matrix& Z) {
                                             seen.push_back(i);
                                             last = Z;
                                         });
    EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(last, Y);
    // Hand-rolled Euler on the same nonuniform grid.
    Matrix Z = Matrix::Ones(4, 3);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        Z += (grid[k] - grid[k - 1]) * sylvester_dense(p, Z);
    }
    EXPECT_LT((Y - Z).norm(), 1e-14);
    EXPECT_THROW(dense_solve_on_grid(p, Matrix::Ones(4, 3), {0.0, 0.2, 0.1}, OdeMethod::Kind::euler),
                 InvalidInput);
    EXPECT_THROW(dense_solve_on_grid(p, Matrix::Ones(4, 3), {}, OdeMethod::Kind::euler), InvalidInput);
}
