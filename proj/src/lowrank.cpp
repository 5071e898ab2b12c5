#include "parlr/lowrank.hpp"

#include "parlr/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace parlr {

namespace {

std::string shape(const Matrix& M) {
    return std::to_string(M.rows()) + "x" + std::to_string(M.cols());
}

// Subtract the projection of v onto the first k columns of B (one MGS sweep).
void project_out(const Matrix& B, Index k, Eigen::Ref<Vector> v) {
    for (Index i = 0; i < k; ++i) {
        v -= B.col(i).dot(v) * B.col(i);
    }
}

}  // namespace

FactoredMatrix::FactoredMatrix(Matrix U, Matrix S, Matrix V) : U_(std::move(U)), S_(std::move(S)), V_(std::move(V)) {
    if (S_.rows() != S_.cols() || U_.cols() != S_.rows() || V_.cols() != S_.cols()) {
        throw InvalidInput("FactoredMatrix: incompatible factor shapes U " + shape(U_) + ", S " + shape(S_) + ", V " +
                           shape(V_));
    }
    if (S_.rows() < 1) {
        throw InvalidInput("FactoredMatrix: rank must be at least 1");
    }
    if (S_.rows() > std::min(U_.rows(), V_.rows())) {
        throw InvalidInput("FactoredMatrix: rank exceeds min(m, n)");
    }
}

Matrix FactoredMatrix::dense() const { return U_ * S_ * V_.transpose(); }

double FactoredMatrix::norm() const { return S_.norm(); }

double FactoredMatrix::orthonormality_defect() const {
    const Index r = rank();
    const double du = (U_.transpose() * U_ - Matrix::Identity(r, r)).norm();
    const double dv = (V_.transpose() * V_ - Matrix::Identity(r, r)).norm();
    return std::max(du, dv);
}

FactoredMatrix FactoredMatrix::rank_one(const Vector& u, double sigma, const Vector& v) {
    const double nu = u.norm();
    const double nv = v.norm();
    if (nu == 0.0 || nv == 0.0) {
        throw InvalidInput("FactoredMatrix::rank_one: zero vector");
    }
    Matrix S(1, 1);
    S(0, 0) = sigma;
    return FactoredMatrix(Matrix(u / nu), std::move(S), Matrix(v / nv));
}

FactoredMatrix FactoredMatrix::from_dense(const Matrix& Y, Index r) {
    if (r < 1 || r > std::min(Y.rows(), Y.cols())) {
        throw InvalidInput("FactoredMatrix::from_dense: rank out of range");
    }
    Eigen::BDCSVD<Matrix> svd(Y, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Matrix S = svd.singularValues().head(r).asDiagonal();
    return FactoredMatrix(svd.matrixU().leftCols(r), std::move(S), svd.matrixV().leftCols(r));
}

void fix_column_signs(Matrix& B) {
    for (Index j = 0; j < B.cols(); ++j) {
        Index imax = 0;
        B.col(j).cwiseAbs().maxCoeff(&imax);
        if (B(imax, j) < 0.0) {
            B.col(j) = -B.col(j);
        }
    }
}

AugmentedBasis orthonormalize_augment(const Matrix& B_old, const Matrix& B_new) {
    if (B_old.rows() != B_new.rows()) {
        throw InvalidInput("orthonormalize_augment: row mismatch " + shape(B_old) + " vs " + shape(B_new));
    }
    const Index r = B_old.cols();
    const Index q = B_new.cols();

    AugmentedBasis out;
    out.old_rank = r;
    out.B_hat = Matrix::Zero(B_old.rows(), r + q);
    out.B_hat.leftCols(r) = B_old;

    const double threshold = 1e-12 * B_new.norm();
    Index k = r;
    Vector v(B_old.rows());
    for (Index j = 0; j < q; ++j) {
        v = B_new.col(j);
        project_out(out.B_hat, k, v);
        const double first = v.norm();
        if (!(first >= threshold) || first == 0.0) {
            continue;
        }
        v /= first;
        // Reorthogonalize the normalized residual; a third sweep only when
        // the second one still removed a large part.
        project_out(out.B_hat, k, v);
        double second = v.norm();
        if (second < 0.5) {
            v /= second;
            project_out(out.B_hat, k, v);
            second = v.norm();
        }
        v /= second;

        Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) {
            v = -v;
        }
        out.B_hat.col(k) = v;
        ++k;
    }
    out.effective_rank = k;
    return out;
}

SvdCores svd_cores(const Matrix& S_hat) {
    if (S_hat.size() == 0) {
        throw InvalidInput("svd_cores: empty matrix");
    }
    Eigen::BDCSVD<Matrix> svd(S_hat, Eigen::ComputeThinU | Eigen::ComputeThinV);
    return SvdCores{svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

TruncatedCores truncate(const SvdCores& svd, double theta, Index r_floor, Index r_cap) {
    const Index s = svd.sigma.size();
    if (theta < 0.0 || !std::isfinite(theta)) {
        throw InvalidInput("truncate: theta must be finite and nonnegative");
    }
    if (r_floor < 1 || r_floor > s) {
        throw InvalidInput("truncate: r_floor out of range");
    }

    // tail2[k] = sum_{j >= k} sigma_j^2, accumulated from the smallest value.
    std::vector<double> tail2(static_cast<std::size_t>(s) + 1, 0.0);
    for (Index k = s - 1; k >= 0; --k) {
        tail2[k] = tail2[k + 1] + svd.sigma(k) * svd.sigma(k);
    }
    Index r1 = s;
    for (Index k = 0; k <= s; ++k) {
        if (std::sqrt(tail2[k]) <= theta) {
            r1 = k;
            break;
        }
    }
    r1 = std::max(r1, r_floor);
    if (r_cap > 0) {
        r1 = std::min(r1, std::max(r_cap, r_floor));
    }

    TruncatedCores out;
    out.r1 = r1;
    out.P1 = svd.P.leftCols(r1);
    out.sigma1 = svd.sigma.head(r1);
    out.Q1 = svd.Q.leftCols(r1);
    out.tail = std::sqrt(tail2[r1]);
    return out;
}

TruncatedCores truncate_svd(const Matrix& S_hat, double theta, Index r_floor) {
    return truncate(svd_cores(S_hat), theta, r_floor);
}

FactoredMatrix assemble_truncated(const Matrix& U_hat, const Matrix& V_hat, const TruncatedCores& cores) {
    if (U_hat.cols() != cores.P1.rows() || V_hat.cols() != cores.Q1.rows()) {
        throw InvalidInput("assemble_truncated: basis " + shape(U_hat) + "/" + shape(V_hat) +
                           " does not match cores " + shape(cores.P1) + "/" + shape(cores.Q1));
    }
    Matrix S1 = cores.sigma1.asDiagonal();
    return FactoredMatrix(U_hat * cores.P1, std::move(S1), V_hat * cores.Q1);
}

FactoredMatrix assemble_truncated(const AugmentedBasis& U_hat, const AugmentedBasis& V_hat,
                                  const TruncatedCores& cores) {
    if (cores.P1.rows() == U_hat.B_hat.cols() && cores.Q1.rows() == V_hat.B_hat.cols()) {
        return assemble_truncated(U_hat.B_hat, V_hat.B_hat, cores);
    }
    return assemble_truncated(Matrix(U_hat.effective()), Matrix(V_hat.effective()), cores);
}

double frobenius_distance(const Matrix& UA, const Matrix& SA, const Matrix& VA, const Matrix& UB,
                          const Matrix& SB, const Matrix& VB) {
    if (UA.rows() != UB.rows() || VA.rows() != VB.rows()) {
        throw InvalidInput("frobenius_distance: outer dimensions differ");
    }
    if (UA.cols() != SA.rows() || VA.cols() != SA.cols() || UB.cols() != SB.rows() || VB.cols() != SB.cols()) {
        throw InvalidInput("frobenius_distance: inconsistent factor shapes");
    }
    // A - B = [UA UB] diag(SA, -SB) [VA VB]^T; with [UA UB] = Qu Ru and
    // [VA VB] = Qv Rv the norm is that of Ru diag(SA, -SB) Rv^T.
    auto r_factor = [](const Matrix& X, const Matrix& Y) {
        Matrix stacked(X.rows(), X.cols() + Y.cols());
        stacked << X, Y;
        Eigen::HouseholderQR<Matrix> qr(stacked);
        const Index k = std::min(stacked.rows(), stacked.cols());
        return Matrix(qr.matrixQR().topRows(k).triangularView<Eigen::Upper>());
    };
    const Matrix Ru = r_factor(UA, UB);
    const Matrix Rv = r_factor(VA, VB);
    Matrix core = Matrix::Zero(SA.rows() + SB.rows(), SA.cols() + SB.cols());
    core.topLeftCorner(SA.rows(), SA.cols()) = SA;
    core.bottomRightCorner(SB.rows(), SB.cols()) = -SB;
    return (Ru * core * Rv.transpose()).norm();
}

double frobenius_distance(const FactoredMatrix& A, const FactoredMatrix& B) {
    return frobenius_distance(A.U(), A.S(), A.V(), B.U(), B.S(), B.V());
}

Matrix random_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, 1.0);
    Matrix M(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            M(i, j) = dist(rng);
        }
    }
    return M;
}

Matrix random_orthonormal(Index rows, Index cols, std::mt19937_64& rng) {
    if (cols > rows) {
        throw InvalidInput("random_orthonormal: more columns than rows");
    }
    Eigen::HouseholderQR<Matrix> qr(random_gaussian(rows, cols, rng));
    Matrix Q = qr.householderQ() * Matrix::Identity(rows, cols);
    fix_column_signs(Q);
    return Q;
}

}  // namespace parlr
