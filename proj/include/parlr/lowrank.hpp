#pragma once

// Factored low-rank matrices Y = U S V^T and the dense kernels shared by
// every integrator step: basis augmentation, truncated SVD, reassembly.

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace parlr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Rank-r matrix Y = U S V^T with orthonormal U (m x r) and V (n x r).
///
/// The constructor checks shapes only; orthonormality is a caller contract
/// (see orthonormality_defect() for diagnostics).
class FactoredMatrix {
public:
    FactoredMatrix() = default;
    FactoredMatrix(Matrix U, Matrix S, Matrix V);

    const Matrix& U() const noexcept { return U_; }
    const Matrix& S() const noexcept { return S_; }
    const Matrix& V() const noexcept { return V_; }

    Index rows() const noexcept { return U_.rows(); }
    Index cols() const noexcept { return V_.rows(); }
    Index rank() const noexcept { return S_.rows(); }

    Matrix dense() const;
    /// ||Y||_F, equal to ||S||_F for orthonormal factors.
    double norm() const;
    /// max(||U^T U - I||_F, ||V^T V - I||_F)
    double orthonormality_defect() const;

    /// Rank-1 matrix sigma * u v^T with normalized u, v.
    static FactoredMatrix rank_one(const Vector& u, double sigma, const Vector& v);
    /// Best rank-r approximation of a dense matrix (via SVD).
    static FactoredMatrix from_dense(const Matrix& Y, Index r);

private:
    Matrix U_;
    Matrix S_;
    Matrix V_;
};

/// Old basis augmented by orthonormalized new directions.
///
/// B_hat is m x (r + q) where q is the column count of the new block; its
/// first r columns are the old basis verbatim, followed by the accepted new
/// directions and then zero columns for rejected (dependent) candidates.
struct AugmentedBasis {
    Matrix B_hat;
    Index old_rank = 0;
    Index effective_rank = 0;

    /// Trailing block (possibly zero-padded).
    auto B_tilde() const { return B_hat.rightCols(B_hat.cols() - old_rank); }
    /// Nonzero new directions only.
    auto new_directions() const { return B_hat.middleCols(old_rank, effective_rank - old_rank); }
    /// Old basis plus nonzero new directions.
    auto effective() const { return B_hat.leftCols(effective_rank); }
    Index new_count() const noexcept { return effective_rank - old_rank; }
};

/// Orthonormal basis of span(B_old, B_new) that keeps B_old in front.
///
/// Columns of B_new are processed left to right with two passes of modified
/// Gram-Schmidt. A candidate whose projected norm falls below
/// 1e-12 * ||B_new||_F is treated as dependent. Each accepted column is
/// signed so that its largest-magnitude entry is positive.
AugmentedBasis orthonormalize_augment(const Matrix& B_old, const Matrix& B_new);

/// Full SVD of a small core, singular values nonincreasing.
struct SvdCores {
    Matrix P;
    Vector sigma;
    Matrix Q;
};

SvdCores svd_cores(const Matrix& S_hat);

struct TruncatedCores {
    Matrix P1;      // p x r1
    Vector sigma1;  // r1
    Matrix Q1;      // q x r1
    Index r1 = 0;
    double tail = 0.0;  // root-sum-square of the dropped singular values
};

/// Minimal r1 with tail <= theta, clamped to [r_floor, r_cap].
TruncatedCores truncate(const SvdCores& svd, double theta, Index r_floor = 1, Index r_cap = -1);

/// svd_cores + truncate in one call.
TruncatedCores truncate_svd(const Matrix& S_hat, double theta, Index r_floor = 1);

/// U1 = U_hat P1, S1 = diag(sigma1), V1 = V_hat Q1. U_hat and V_hat must have
/// as many columns as the cores have rows (pass effective() blocks, or the
/// zero-padded B_hat when the cores were computed on the padded core).
FactoredMatrix assemble_truncated(const Matrix& U_hat, const Matrix& V_hat, const TruncatedCores& cores);
FactoredMatrix assemble_truncated(const AugmentedBasis& U_hat, const AugmentedBasis& V_hat,
                                  const TruncatedCores& cores);

/// ||dense(A) - dense(B)||_F without forming either dense matrix.
double frobenius_distance(const FactoredMatrix& A, const FactoredMatrix& B);

/// Same, for general factor triples U S V^T (S may be rectangular).
double frobenius_distance(const Matrix& UA, const Matrix& SA, const Matrix& VA, const Matrix& UB,
                          const Matrix& SB, const Matrix& VB);

/// Random matrix with orthonormal columns (QR of a Gaussian matrix, signs fixed).
Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng);
Matrix random_gaussian(Index rows, Index cols, std::mt19937_64& rng);

/// Scale each column so its largest-magnitude entry is positive.
void fix_column_signs(Matrix& B);

}  // namespace parlr
