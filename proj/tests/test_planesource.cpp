#include "parlr/integrators.hpp"
#include "parlr/planesource.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

using namespace parlr;

namespace {

// Legendre P_0..P_{n-1} at x by the three-term recurrence.
std::vector<double> legendre(int n, double x) {
    std::vector<double> p(n);
    p[0] = 1.0;
    if (n > 1) {
        p[1] = x;
    }
    for (int l = 1; l + 1 < n; ++l) {
        p[l + 1] = ((2 * l + 1) * x * p[l] - l * p[l - 1]) / (l + 1);
    }
    return p;
}

// Gauss-Legendre nodes and weights by Newton iteration on P_n.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            const auto p = legendre(n + 1, x);
            dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0);
            const double dx = p[n] / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) {
                break;
            }
        }
        const auto p = legendre(n + 1, x);
        dp = n * (x * p[n] - p[n - 1]) / (x * x - 1.0);
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
}

PlanesourceProblem small_problem(Index nx = 40, Index n = 12) {
    PlanesourceProblem::Params params;
    params.nx = nx;
    params.n_moments = n;
    return PlanesourceProblem(params);
}

}  // namespace

TEST(Planesource, FluxMatrixMatchesQuadrature) {
    const int N = 9;
    std::vector<double> nodes, weights;
    gauss_legendre(N + 2, nodes, weights);
    Matrix oracle = Matrix::Zero(N, N);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        const auto P = legendre(N, nodes[q]);
        for (int l = 0; l < N; ++l) {
            for (int k = 0; k < N; ++k) {
                const double pl = std::sqrt((2.0 * l + 1) / 2.0) * P[l];
                const double pk = std::sqrt((2.0 * k + 1) / 2.0) * P[k];
                oracle(l, k) += weights[q] * nodes[q] * pl * pk;
            }
        }
    }
    EXPECT_LT((build_flux_matrix(N) - oracle).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_THROW(build_flux_matrix(1), InvalidInput);
}

TEST(Planesource, AbsoluteFluxMatrix) {
    const Matrix A = build_flux_matrix(10);
    const Matrix Aabs = abs_flux_matrix(A);
    EXPECT_EQ(Aabs, Aabs.transpose());
    EXPECT_LT((Aabs * Aabs - A * A).norm(), 1e-13);
    Eigen::SelfAdjointEigenSolver<Matrix> ea(A), eb(Aabs);
    Vector expected = ea.eigenvalues().cwiseAbs();
    std::sort(expected.data(), expected.data() + expected.size());
    EXPECT_LT((eb.eigenvalues() - expected).norm(), 1e-13);
    EXPECT_GE(eb.eigenvalues().minCoeff(), -1e-14);
}

TEST(Planesource, StencilsActOnPolynomials) {
    const Index Nx = 7;
    const double dx = 0.25;
    const Stencils s = build_stencils(Nx, dx);
    EXPECT_EQ(s.D_x.nonZeros(), 2 * (Nx - 1));
    EXPECT_EQ(s.D_xx.nonZeros(), 3 * Nx - 2);
    Vector x(Nx);
    for (Index j = 0; j < Nx; ++j) {
        x(j) = 0.3 + dx * static_cast<double>(j);
    }
    const Vector dlin = s.D_x * x;
    const Vector dconst = s.D_xx * Vector::Ones(Nx);
    const Vector dquad = s.D_xx * x.cwiseProduct(x);
    for (Index j = 1; j + 1 < Nx; ++j) {
        EXPECT_NEAR(dlin(j), 1.0, 1e-14);
        EXPECT_NEAR(dconst(j), 0.0, 1e-14);
        // (x_{j+1} - 2 x_j + x_{j-1}) / (2 dx) = dx for x^2
        EXPECT_NEAR(dquad(j), dx, 1e-13);
    }
    // Boundary rows drop the missing neighbour.
    EXPECT_NEAR(dlin(0), x(1) / (2 * dx), 1e-14);
    EXPECT_NEAR(dconst(0), -1.0 / (2 * dx), 1e-14);
    const Matrix Dx = Matrix(s.D_x);
    EXPECT_EQ(Dx, -Dx.transpose());
}

TEST(Planesource, StepSizeFromCfl) {
    PlanesourceProblem::Params params;
    params.nx = 1000;
    params.n_moments = 4;
    EXPECT_NEAR(PlanesourceProblem(params).cfl_step_size(), 0.0099, 1e-15);
    const PlanesourceProblem desk(PlanesourceProblem::Params{});
    EXPECT_NEAR(cfl_step_size(desk), 0.0495, 1e-15);
    EXPECT_NEAR(desk.dx(), 0.05, 1e-15);
    EXPECT_NEAR(desk.x()(0), -4.975, 1e-14);
    EXPECT_NEAR(desk.x()(199), 4.975, 1e-14);
}

TEST(Planesource, InitialFluxIsTwiceTheDensity) {
    const PlanesourceProblem desk(PlanesourceProblem::Params{});
    const Vector phi = scalar_flux(desk.initial_condition(), desk).values;
    const Vector phi_dense = scalar_flux(desk.initial_dense(), desk).values;
    double worst = 0.0;
    for (Index j = 0; j < desk.rows(); ++j) {
        const double x = desk.x()(j);
        const double f0 = std::exp(-x * x / 18e-4) / (3.0 * std::sqrt(2.0 * std::numbers::pi) * 1e-2);
        worst = std::max({worst, std::abs(phi(j) - 2.0 * f0), std::abs(phi_dense(j) - 2.0 * f0)});
    }
    EXPECT_LT(worst, 1e-12);
}

TEST(Planesource, PaddedInitialConditionRepresentsTheSameData) {
    const PlanesourceProblem p = small_problem();
    const FactoredMatrix Y1 = p.initial_condition();
    const FactoredMatrix Y3 = p.initial_condition(3);
    EXPECT_EQ(Y3.rank(), 3);
    EXPECT_LT(Y3.orthonormality_defect(), 1e-14);
    EXPECT_EQ(Y3.S()(1, 1), 1e-14);
    EXPECT_LT((Y3.dense() - Y1.dense()).norm(), 1e-13);
    EXPECT_LT((Y1.dense() - p.initial_dense()).norm(), 1e-12 * Y1.norm());
    EXPECT_THROW(p.initial_condition(13), InvalidInput);
}

TEST(Planesource, RhsIsLinearAndConsistent) {
    const PlanesourceProblem p = small_problem();
    std::mt19937_64 rng(1);
    const Matrix Y = random_gaussian(40, 12, rng);
    const Matrix Z = random_gaussian(40, 12, rng);
    const Matrix lhs = p.dense_eval(0.0, 2.0 * Y - 3.0 * Z);
    const Matrix rhs = 2.0 * p.dense_eval(0.0, Y) - 3.0 * p.dense_eval(0.0, Z);
    EXPECT_LT((lhs - rhs).norm(), 1e-12 * rhs.norm());

    // Independent dense formula.
    const Stencils s = build_stencils(40, p.dx());
    Matrix G = Matrix::Identity(12, 12);
    G(0, 0) = 0.0;
    const Matrix A = build_flux_matrix(12);
    const Matrix F = -Matrix(s.D_x) * Y * A.transpose() + Matrix(s.D_xx) * Y * abs_flux_matrix(A).transpose() - Y * G;
    EXPECT_LT((p.dense_eval(0.0, Y) - F).norm(), 1e-12 * F.norm());

    const FactoredMatrix sample = FactoredMatrix::from_dense(Y, 4);
    EXPECT_LT(consistency_check(p, 0.0, sample).max_deviation(), 1e-12);
}

TEST(Planesource, SemiDiscreteOperatorIsDissipative) {
    const PlanesourceProblem p = small_problem(30, 10);
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix Y = random_gaussian(30, 10, rng);
        EXPECT_LE((Y.array() * p.dense_eval(0.0, Y).array()).sum(), 1e-12 * Y.squaredNorm());
    }
}

TEST(Planesource, LowRankSolutionStaysSymmetric) {
    const PlanesourceProblem p = small_problem(60, 16);
    StepConfig cfg;
    cfg.theta_bar = 1e-3;
    cfg.c_reject = 1.0;
    cfg.substep = OdeMethod::euler(1);
    const Trajectory traj =
        integrate(p, p.initial_condition(2), 0.0, 0.5, p.cfl_step_size(), cfg, Stepper::parallel);
    const Vector phi = scalar_flux(traj.final_state, p).values;
    const Index n = phi.size();
    double asym = 0.0;
    for (Index j = 0; j < n; ++j) {
        asym = std::max(asym, std::abs(phi(j) - phi(n - 1 - j)));
    }
    EXPECT_LT(asym, 1e-8 * phi.cwiseAbs().maxCoeff());
    // Norm never grows.
    for (std::size_t k = 1; k < traj.norms.size(); ++k) {
        EXPECT_LE(traj.norms[k], traj.norms[k - 1] * (1.0 + 1e-12));
    }
}

TEST(Planesource, ExactRankOneStartStaysInEvenSector) {
    // f0 is even in x and only the zeroth moment is populated. While U is
    // even in x and V lives on even moments, U^T D_x U and V^T A V vanish,
    // so the advection coupling drops out of every substep and the odd
    // moments stay at roundoff level.
    const PlanesourceProblem p = small_problem(60, 16);
    StepConfig cfg;
    cfg.theta_bar = 1e-3;
    cfg.c_reject = 1.0;
    cfg.substep = OdeMethod::euler(1);
    const double h = p.cfl_step_size();
    auto odd_share = [&](const FactoredMatrix& Y) {
        const Matrix D = Y.dense();
        double odd = 0.0;
        for (Index l = 1; l < p.cols(); l += 2) {
            odd += D.col(l).squaredNorm();
        }
        return std::sqrt(odd) / D.norm();
    };
    const Trajectory exact = integrate(p, p.initial_condition(), 0.0, 10 * h, h, cfg, Stepper::parallel);
    EXPECT_LT(odd_share(exact.final_state), 1e-9);
    // The padded start reaches the odd moments and transports mass.
    const Trajectory padded = integrate(p, p.initial_condition(2), 0.0, 10 * h, h, cfg, Stepper::parallel);
    EXPECT_GT(odd_share(padded.final_state), 0.1);
}
