#pragma once

// Synthetic test problems with exact structured evaluations.

#include "parlr/rhs.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace parlr {

/// F(t, Y) = M Y + Y N^T + C with an optional low-rank forcing C.
class SylvesterProblem final : public RhsOperator {
public:
    SylvesterProblem(Matrix M, Matrix N, std::optional<FactoredMatrix> C = std::nullopt);

    struct RandomOptions {
        double rotation = 1.0;       // scale of the skew-symmetric part
        double damping = 0.1;        // shift -damping * I
        double dissipation = 0.5;    // scale of the -W W^T / m part
        Index forcing_rank = 2;      // 0 disables C
        double forcing_scale = 1.0;  // ||C||_F
    };

    /// M, N with skew, shift and negative semidefinite parts; C random of
    /// the requested rank. Fully determined by the seed.
    static SylvesterProblem random(Index m, Index n, std::uint64_t seed, const RandomOptions& options);
    static SylvesterProblem random(Index m, Index n, std::uint64_t seed) { return random(m, n, seed, {}); }

    /// Random orthonormal factors with singular values decay^j, j = 0..r-1.
    static FactoredMatrix decaying_initial_value(Index m, Index n, Index r, double decay, std::uint64_t seed);

    Index rows() const override { return M_.rows(); }
    Index cols() const override { return N_.rows(); }

    Matrix apply_corange(double t, const Matrix& K, const Matrix& V) const override;
    Matrix apply_range(double t, const Matrix& U, const Matrix& L) const override;
    Matrix galerkin(double t, const Matrix& U, const Matrix& S, const Matrix& V) const override;
    std::optional<LowRankFactors> low_rank_factors(double t, const FactoredMatrix& Y) const override;
    Matrix dense_eval(double t, const Matrix& Y) const override;
    std::optional<double> lipschitz_hint() const override;

    const Matrix& M() const noexcept { return M_; }
    const Matrix& N() const noexcept { return N_; }
    const std::optional<FactoredMatrix>& forcing() const noexcept { return C_; }

private:
    Matrix M_;
    Matrix N_;
    std::optional<FactoredMatrix> C_;
};

/// Solution-independent right-hand side F(t, Y) = A'(t) for a prescribed
/// rank-r path A(t) = U(t) S(t) V(t)^T.
///
/// Column i of U(t) rotates in its own plane: U(t) = Q_U R(t) with
/// R(t)[2i, i] = cos(w_i t), R(t)[2i+1, i] = sin(w_i t), and likewise for V.
/// S(t) = diag(sigma_i exp(lambda_i t)). Requires m, n >= 2r.
class TangentialProblem final : public RhsOperator {
public:
    struct Params {
        Index m = 40;
        Index n = 30;
        std::vector<double> sigma = {1.0, 0.5, 0.25};
        std::vector<double> rates;    // lambda_i, default -0.1 (i + 1)
        std::vector<double> omega_u;  // default 1 + 0.5 i
        std::vector<double> omega_v;  // default 0.7 + 0.3 i
        std::uint64_t seed = 1;
    };

    explicit TangentialProblem(Params params);

    Index rows() const override { return QU_.rows(); }
    Index cols() const override { return QV_.rows(); }
    Index rank() const noexcept { return static_cast<Index>(sigma_.size()); }

    Matrix apply_corange(double t, const Matrix& K, const Matrix& V) const override;
    Matrix apply_range(double t, const Matrix& U, const Matrix& L) const override;
    Matrix galerkin(double t, const Matrix& U, const Matrix& S, const Matrix& V) const override;
    std::optional<LowRankFactors> low_rank_factors(double t, const FactoredMatrix& Y) const override;
    Matrix dense_eval(double t, const Matrix& Y) const override;

    /// A(t) in factored form.
    FactoredMatrix exact(double t) const;
    /// A'(t) as G H^T.
    LowRankFactors derivative(double t) const;

private:
    Matrix left(double t) const;
    Matrix left_dot(double t) const;
    Matrix right(double t) const;
    Matrix right_dot(double t) const;
    Vector diag(double t) const;
    Vector diag_dot(double t) const;

    Matrix QU_;
    Matrix QV_;
    std::vector<double> sigma_;
    std::vector<double> rates_;
    std::vector<double> omega_u_;
    std::vector<double> omega_v_;
};

}  // namespace parlr
