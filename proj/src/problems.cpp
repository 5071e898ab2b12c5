#include "parlr/problems.hpp"

#include "parlr/error.hpp"

#include <cmath>
#include <random>

namespace parlr {

SylvesterProblem::SylvesterProblem(Matrix M, Matrix N, std::optional<FactoredMatrix> C)
    : M_(std::move(M)), N_(std::move(N)), C_(std::move(C)) {
    if (M_.rows() != M_.cols() || N_.rows() != N_.cols()) {
        throw InvalidInput("SylvesterProblem: M and N must be square");
    }
    if (C_ && (C_->rows() != M_.rows() || C_->cols() != N_.rows())) {
        throw InvalidInput("SylvesterProblem: forcing shape does not match M, N");
    }
}

SylvesterProblem SylvesterProblem::random(Index m, Index n, std::uint64_t seed, const RandomOptions& options) {
    std::mt19937_64 rng(seed);
    auto generator = [&](Index k) {
        const Matrix A = random_gaussian(k, k, rng);
        const Matrix W = random_gaussian(k, k, rng);
        const double scale = 1.0 / std::sqrt(static_cast<double>(k));
        Matrix out = options.rotation * 0.5 * scale * (A - A.transpose());
        out -= options.dissipation * (W * W.transpose()) / static_cast<double>(k);
        out.diagonal().array() -= options.damping;
        return out;
    };
    Matrix M = generator(m);
    Matrix N = generator(n);
    std::optional<FactoredMatrix> C;
    if (options.forcing_rank > 0) {
        const Index q = options.forcing_rank;
        Matrix CU = random_orthonormal(m, q, rng);
        Matrix CV = random_orthonormal(n, q, rng);
        Vector s(q);
        for (Index i = 0; i < q; ++i) {
            s(i) = std::pow(0.5, static_cast<double>(i));
        }
        s *= options.forcing_scale / s.norm();
        C.emplace(std::move(CU), Matrix(s.asDiagonal()), std::move(CV));
    }
    return SylvesterProblem(std::move(M), std::move(N), std::move(C));
}

FactoredMatrix SylvesterProblem::decaying_initial_value(Index m, Index n, Index r, double decay,
                                                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    Matrix U = random_orthonormal(m, r, rng);
    Matrix V = random_orthonormal(n, r, rng);
    Vector s(r);
    for (Index j = 0; j < r; ++j) {
        s(j) = std::pow(decay, static_cast<double>(j));
    }
    return FactoredMatrix(std::move(U), Matrix(s.asDiagonal()), std::move(V));
}

Matrix SylvesterProblem::apply_corange(double, const Matrix& K, const Matrix& V) const {
    Matrix out = M_ * K * (V.transpose() * V) + K * (V.transpose() * N_.transpose() * V);
    if (C_) {
        out += C_->U() * (C_->S() * (C_->V().transpose() * V));
    }
    return out;
}

Matrix SylvesterProblem::apply_range(double, const Matrix& U, const Matrix& L) const {
    Matrix out = L * (U.transpose() * M_.transpose() * U) + N_ * L * (U.transpose() * U);
    if (C_) {
        out += C_->V() * (C_->S().transpose() * (C_->U().transpose() * U));
    }
    return out;
}

Matrix SylvesterProblem::galerkin(double, const Matrix& U, const Matrix& S, const Matrix& V) const {
    Matrix out = (U.transpose() * M_ * U) * S * (V.transpose() * V) +
                 (U.transpose() * U) * S * (V.transpose() * N_.transpose() * V);
    if (C_) {
        out += (U.transpose() * C_->U()) * C_->S() * (C_->V().transpose() * V);
    }
    return out;
}

std::optional<LowRankFactors> SylvesterProblem::low_rank_factors(double, const FactoredMatrix& Y) const {
    const Index r = Y.rank();
    const Index q = C_ ? C_->rank() : 0;
    LowRankFactors f{Matrix(rows(), 2 * r + q), Matrix(cols(), 2 * r + q)};
    f.G.leftCols(r) = M_ * Y.U() * Y.S();
    f.G.middleCols(r, r) = Y.U();
    f.H.leftCols(r) = Y.V();
    f.H.middleCols(r, r) = N_ * Y.V() * Y.S().transpose();
    if (C_) {
        f.G.rightCols(q) = C_->U() * C_->S();
        f.H.rightCols(q) = C_->V();
    }
    return f;
}

Matrix SylvesterProblem::dense_eval(double, const Matrix& Y) const {
    Matrix out = M_ * Y + Y * N_.transpose();
    if (C_) {
        out += C_->dense();
    }
    return out;
}

std::optional<double> SylvesterProblem::lipschitz_hint() const {
    // Frobenius norms bound the spectral norms from above.
    return M_.norm() + N_.norm();
}

TangentialProblem::TangentialProblem(Params params) : sigma_(std::move(params.sigma)) {
    const auto r = static_cast<Index>(sigma_.size());
    if (r < 1) {
        throw InvalidInput("TangentialProblem: need at least one singular value");
    }
    if (params.m < 2 * r || params.n < 2 * r) {
        throw InvalidInput("TangentialProblem: need m, n >= 2r");
    }
    auto fill = [r](std::vector<double> given, auto make) {
        if (given.empty()) {
            for (Index i = 0; i < r; ++i) {
                given.push_back(make(static_cast<double>(i)));
            }
        }
        if (static_cast<Index>(given.size()) != r) {
            throw InvalidInput("TangentialProblem: parameter vectors must have rank entries");
        }
        return given;
    };
    rates_ = fill(std::move(params.rates), [](double i) { return -0.1 * (i + 1.0); });
    omega_u_ = fill(std::move(params.omega_u), [](double i) { return 1.0 + 0.5 * i; });
    omega_v_ = fill(std::move(params.omega_v), [](double i) { return 0.7 + 0.3 * i; });

    std::mt19937_64 rng(params.seed);
    QU_ = random_orthonormal(params.m, 2 * r, rng);
    QV_ = random_orthonormal(params.n, 2 * r, rng);
}

namespace {

// Q R(t) with R in the plane-rotation layout, or its time derivative.
Matrix rotating_columns(const Matrix& Q, const std::vector<double>& omega, double t, bool derivative) {
    const auto r = static_cast<Index>(omega.size());
    Matrix out(Q.rows(), r);
    for (Index i = 0; i < r; ++i) {
        const double w = omega[static_cast<std::size_t>(i)];
        const double c = std::cos(w * t);
        const double s = std::sin(w * t);
        if (derivative) {
            out.col(i) = w * (-s * Q.col(2 * i) + c * Q.col(2 * i + 1));
        } else {
            out.col(i) = c * Q.col(2 * i) + s * Q.col(2 * i + 1);
        }
    }
    return out;
}

}  // namespace

Matrix TangentialProblem::left(double t) const { return rotating_columns(QU_, omega_u_, t, false); }
Matrix TangentialProblem::left_dot(double t) const { return rotating_columns(QU_, omega_u_, t, true); }
Matrix TangentialProblem::right(double t) const { return rotating_columns(QV_, omega_v_, t, false); }
Matrix TangentialProblem::right_dot(double t) const { return rotating_columns(QV_, omega_v_, t, true); }

Vector TangentialProblem::diag(double t) const {
    Vector d(rank());
    for (Index i = 0; i < rank(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        d(i) = sigma_[k] * std::exp(rates_[k] * t);
    }
    return d;
}

Vector TangentialProblem::diag_dot(double t) const { return diag(t).cwiseProduct(Eigen::Map<const Vector>(rates_.data(), rank())); }

FactoredMatrix TangentialProblem::exact(double t) const {
    return FactoredMatrix(left(t), Matrix(diag(t).asDiagonal()), right(t));
}

LowRankFactors TangentialProblem::derivative(double t) const {
    const Index r = rank();
    const Matrix U = left(t);
    const Matrix V = right(t);
    const Vector s = diag(t);
    LowRankFactors f{Matrix(rows(), 3 * r), Matrix(cols(), 3 * r)};
    // A' = U' S V^T + U S' V^T + U S V'^T
    f.G << left_dot(t) * s.asDiagonal(), U * diag_dot(t).asDiagonal(), U * s.asDiagonal();
    f.H << V, V, right_dot(t);
    return f;
}

Matrix TangentialProblem::apply_corange(double t, const Matrix&, const Matrix& V) const {
    const LowRankFactors f = derivative(t);
    return f.G * (f.H.transpose() * V);
}

Matrix TangentialProblem::apply_range(double t, const Matrix& U, const Matrix&) const {
    const LowRankFactors f = derivative(t);
    return f.H * (f.G.transpose() * U);
}

Matrix TangentialProblem::galerkin(double t, const Matrix& U, const Matrix&, const Matrix& V) const {
    const LowRankFactors f = derivative(t);
    return (U.transpose() * f.G) * (f.H.transpose() * V);
}

std::optional<LowRankFactors> TangentialProblem::low_rank_factors(double t, const FactoredMatrix&) const {
    return derivative(t);
}

Matrix TangentialProblem::dense_eval(double t, const Matrix& Y) const {
    if (Y.rows() != rows() || Y.cols() != cols()) {
        throw InvalidInput("TangentialProblem::dense_eval: shape mismatch");
    }
    const LowRankFactors f = derivative(t);
    return f.G * f.H.transpose();
}

}  // namespace parlr
