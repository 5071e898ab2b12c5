#include "parlr/error.hpp"
#include "parlr/lowrank.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace parlr;

namespace {

// Y = U diag(s) V^T with orthonormal factors and prescribed singular values.
FactoredMatrix with_singular_values(Index m, Index n, const std::vector<double>& s, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto r = static_cast<Index>(s.size());
    Vector d = Eigen::Map<const Vector>(s.data(), r);
    return FactoredMatrix(random_orthonormal(m, r, rng), Matrix(d.asDiagonal()), random_orthonormal(n, r, rng));
}

}  // namespace

TEST(FactoredMatrix, RejectsInconsistentShapes) {
    EXPECT_THROW(FactoredMatrix(Matrix::Zero(5, 2), Matrix::Zero(2, 3), Matrix::Zero(4, 2)), InvalidInput);
    EXPECT_THROW(FactoredMatrix(Matrix::Zero(5, 2), Matrix::Zero(2, 2), Matrix::Zero(4, 3)), InvalidInput);
    EXPECT_THROW(FactoredMatrix(Matrix::Zero(3, 4), Matrix::Zero(4, 4), Matrix::Zero(5, 4)), InvalidInput);
    EXPECT_NO_THROW(FactoredMatrix(Matrix::Zero(5, 2), Matrix::Zero(2, 2), Matrix::Zero(4, 2)));
}

TEST(FactoredMatrix, NormMatchesDense) {
    const FactoredMatrix Y = with_singular_values(12, 9, {3.0, 1.0, 0.25}, 1);
    EXPECT_NEAR(Y.norm(), Y.dense().norm(), 1e-13);
    EXPECT_NEAR(Y.norm(), std::sqrt(9.0 + 1.0 + 0.0625), 1e-13);
    EXPECT_LT(Y.orthonormality_defect(), 1e-14);
}

TEST(FactoredMatrix, RankOneNormalizesFactors) {
    Vector u(3), v(2);
    u << 3.0, 0.0, 4.0;
    v << 0.0, 2.0;
    const FactoredMatrix Y = FactoredMatrix::rank_one(u, 2.0, v);
    Matrix expected(3, 2);
    expected << 0.0, 1.2, 0.0, 0.0, 0.0, 1.6;
    EXPECT_LT((Y.dense() - expected).norm(), 1e-15);
    EXPECT_EQ(Y.rank(), 1);
}

TEST(FactoredMatrix, FromDenseKeepsLeadingSingularValues) {
    const FactoredMatrix Y = with_singular_values(20, 15, {5.0, 2.0, 1.0, 0.1, 0.01}, 2);
    const FactoredMatrix Y3 = FactoredMatrix::from_dense(Y.dense(), 3);
    EXPECT_EQ(Y3.rank(), 3);
    // Eckart-Young: the error is the tail of the known spectrum.
    EXPECT_NEAR((Y.dense() - Y3.dense()).norm(), std::hypot(0.1, 0.01), 1e-12);
}

TEST(Augment, KeepsOldBasisAndIsOrthonormal) {
    std::mt19937_64 rng(3);
    const Matrix B_old = random_orthonormal(30, 4, rng);
    const Matrix B_new = random_gaussian(30, 4, rng);
    const AugmentedBasis aug = orthonormalize_augment(B_old, B_new);
    EXPECT_EQ(aug.old_rank, 4);
    EXPECT_EQ(aug.effective_rank, 8);
    EXPECT_EQ(aug.B_hat.leftCols(4), B_old);
    const Matrix Q = aug.effective();
    EXPECT_LT((Q.transpose() * Q - Matrix::Identity(8, 8)).norm(), 1e-13);
    // span(B_old, B_new) is reproduced.
    EXPECT_LT((Q * (Q.transpose() * B_new) - B_new).norm(), 1e-12 * B_new.norm());
}

TEST(Augment, DropsDependentColumnsAndPadsWithZeros) {
    std::mt19937_64 rng(4);
    const Matrix B_old = random_orthonormal(25, 3, rng);
    Matrix B_new(25, 4);
    const Vector fresh = random_gaussian(25, 1, rng);
    B_new.col(0) = B_old * Vector::Ones(3);  // inside span(B_old)
    B_new.col(1) = fresh;
    B_new.col(2) = 2.0 * fresh + B_old.col(1);  // dependent on the accepted column
    B_new.col(3) = Vector::Zero(25);
    const AugmentedBasis aug = orthonormalize_augment(B_old, B_new);
    EXPECT_EQ(aug.effective_rank, 4);
    EXPECT_EQ(aug.new_count(), 1);
    EXPECT_EQ(aug.B_hat.cols(), 7);
    EXPECT_EQ(aug.B_hat.rightCols(3).norm(), 0.0);
}

TEST(Augment, SignConventionLargestEntryPositive) {
    std::mt19937_64 rng(5);
    const Matrix B_old = random_orthonormal(15, 2, rng);
    const AugmentedBasis aug = orthonormalize_augment(B_old, -random_gaussian(15, 3, rng));
    for (Index j = 2; j < aug.effective_rank; ++j) {
        Index i = 0;
        aug.B_hat.col(j).cwiseAbs().maxCoeff(&i);
        EXPECT_GT(aug.B_hat(i, j), 0.0);
    }
}

TEST(Augment, NearlyDependentColumnIsStillOrthogonal) {
    // A candidate with a 1e-9 component outside span(B_old) needs the
    // second Gram-Schmidt sweep to come out orthogonal.
    std::mt19937_64 rng(6);
    const Matrix B_old = random_orthonormal(40, 5, rng);
    Matrix B_new = B_old * random_gaussian(5, 1, rng);
    B_new += 1e-9 * random_gaussian(40, 1, rng);
    const AugmentedBasis aug = orthonormalize_augment(B_old, B_new);
    ASSERT_EQ(aug.effective_rank, 6);
    const Matrix Q = aug.effective();
    EXPECT_LT((Q.transpose() * Q - Matrix::Identity(6, 6)).norm(), 1e-12);
}

TEST(Truncate, MinimalRankWithTailBelowTheta) {
    Vector s(4);
    s << 3.0, 2.0, 1.0, 0.5;
    const SvdCores svd{Matrix::Identity(4, 4), s, Matrix::Identity(4, 4)};
    TruncatedCores t = truncate(svd, 0.6);
    EXPECT_EQ(t.r1, 3);
    EXPECT_DOUBLE_EQ(t.tail, 0.5);
    t = truncate(svd, 1.2);  // sqrt(1 + 0.25) = 1.118 <= 1.2
    EXPECT_EQ(t.r1, 2);
    EXPECT_NEAR(t.tail, std::sqrt(1.25), 1e-15);
    t = truncate(svd, 0.0);
    EXPECT_EQ(t.r1, 4);
    EXPECT_EQ(t.tail, 0.0);
    t = truncate(svd, 100.0);  // floor of one
    EXPECT_EQ(t.r1, 1);
    t = truncate(svd, 0.0, 1, 2);  // cap of two, tail above theta
    EXPECT_EQ(t.r1, 2);
    EXPECT_NEAR(t.tail, std::sqrt(1.25), 1e-15);
}

TEST(Truncate, AssembledMatrixIsWithinTheta) {
    std::mt19937_64 rng(7);
    const Matrix S_hat = random_gaussian(8, 8, rng);
    const Matrix U_hat = random_orthonormal(30, 8, rng);
    const Matrix V_hat = random_orthonormal(20, 8, rng);
    for (double theta : {0.0, 0.5, 1.0, 3.0}) {
        const TruncatedCores t = truncate_svd(S_hat, theta);
        const FactoredMatrix Y1 = assemble_truncated(U_hat, V_hat, t);
        const double err = (U_hat * S_hat * V_hat.transpose() - Y1.dense()).norm();
        EXPECT_LE(err, theta + 1e-12);
        EXPECT_NEAR(err, t.tail, 1e-12);
        EXPECT_LT(Y1.orthonormality_defect(), 1e-13);
    }
}

TEST(FrobeniusDistance, MatchesDenseDifference) {
    const FactoredMatrix A = with_singular_values(25, 18, {2.0, 1.0, 0.5}, 8);
    const FactoredMatrix B = with_singular_values(25, 18, {1.5, 0.7}, 9);
    EXPECT_NEAR(frobenius_distance(A, B), (A.dense() - B.dense()).norm(), 1e-13);
    EXPECT_LT(frobenius_distance(A, A), 1e-14);
}

TEST(FrobeniusDistance, ResolvesSmallDifferencesOfLargeMatrices) {
    // B = A + 1e-9 * (rank-1 perturbation) in a different gauge.
    const FactoredMatrix A = with_singular_values(30, 20, {1e3, 10.0, 1.0}, 10);
    std::mt19937_64 rng(11);
    const Vector u = random_orthonormal(30, 1, rng);
    const Vector v = random_orthonormal(20, 1, rng);
    Matrix UB(30, 4), VB(20, 4);
    UB << A.U(), u;
    VB << A.V(), v;
    Matrix SB = Matrix::Zero(4, 4);
    SB.topLeftCorner(3, 3) = A.S();
    SB(3, 3) = 1e-9;
    const double d = frobenius_distance(A.U(), A.S(), A.V(), UB, SB, VB);
    EXPECT_NEAR(d, 1e-9, 1e-14);
}

TEST(RandomOrthonormal, DeterministicPerSeed) {
    std::mt19937_64 a(12), b(12);
    const Matrix Qa = random_orthonormal(10, 4, a);
    const Matrix Qb = random_orthonormal(10, 4, b);
    EXPECT_EQ(Qa, Qb);
    EXPECT_LT((Qa.transpose() * Qa - Matrix::Identity(4, 4)).norm(), 1e-14);
}
