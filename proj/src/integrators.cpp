#include "parlr/integrators.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <sstream>

namespace parlr {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

const TaskRunner& runner_of(const StepConfig& cfg) { return cfg.runner ? *cfg.runner : default_runner(); }

void check_interval(double t0, double t1) {
    if (!(t1 > t0)) {
        throw InvalidInput("step interval must satisfy t1 > t0");
    }
}

Index rank_cap(const StepConfig& cfg, const RhsOperator& op) {
    const Index full = std::min(op.rows(), op.cols());
    return cfg.r_max > 0 ? std::min(cfg.r_max, full) : full;
}

Matrix block_diagonal(const Matrix& S0, Index rows, Index cols) {
    Matrix out = Matrix::Zero(rows, cols);
    out.topLeftCorner(S0.rows(), S0.cols()) = S0;
    return out;
}

// Full block U1~^T F(t0, Y0) V1~ for the given direction blocks.
Matrix normal_block(const RhsOperator& op, double t0, const FactoredMatrix& Y0, const Matrix& Ut, const Matrix& Vt) {
    if (Ut.cols() == 0 || Vt.cols() == 0) {
        return Matrix::Zero(Ut.cols(), Vt.cols());
    }
    if (auto f = op.low_rank_factors(t0, Y0)) {
        return (Ut.transpose() * f->G) * (Vt.transpose() * f->H).transpose();
    }
    // Without factors: Galerkin product on (U0, U1~) x (V0, V1~) started at
    // blockdiag(S0, 0) and keep the lower-right block.
    const Index r = Y0.rank();
    Matrix Ua(Y0.rows(), r + Ut.cols());
    Ua << Y0.U(), Ut;
    Matrix Va(Y0.cols(), r + Vt.cols());
    Va << Y0.V(), Vt;
    const Matrix full = op.galerkin(t0, Ua, block_diagonal(Y0.S(), Ua.cols(), Va.cols()), Va);
    return full.bottomRightCorner(Ut.cols(), Vt.cols());
}

enum class Variant { parallel, serial_s11, bug };

struct Attempt {
    FactoredMatrix Y1;
    AugmentedState augmented;
    Index r1 = 0;
    Index r_hat = 0;
    double eta = 0.0;
    bool eta_estimate = false;
    double theta = 0.0;
    double tail = 0.0;
    bool capped = false;
    PhaseTimings timings;
};

Attempt run_attempt(Variant variant, const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                    const StepConfig& cfg, Index r_max) {
    const double h = t1 - t0;
    Attempt a;

    std::optional<KStepResult> k;
    std::optional<LStepResult> l;
    Matrix S_bar;
    std::array<Task, 3> tasks = {
        [&] {
            const auto start = Clock::now();
            k = k_step(op, Y0, t0, t1, cfg);
            a.timings.k = seconds_since(start);
        },
        [&] {
            const auto start = Clock::now();
            l = l_step(op, Y0, t0, t1, cfg);
            a.timings.l = seconds_since(start);
        },
        [&] {
            const auto start = Clock::now();
            S_bar = s_step_parallel(op, Y0, t0, t1, cfg);
            a.timings.s = seconds_since(start);
        },
    };
    const std::size_t task_count = variant == Variant::bug ? 2 : 3;
    runner_of(cfg).run_all(std::span<const Task>(tasks.data(), task_count));

    const Matrix U_eff = k->U_hat.effective();
    const Matrix V_eff = l->V_hat.effective();
    const Matrix Ut = k->U_hat.new_directions();
    const Matrix Vt = l->V_hat.new_directions();

    Matrix S_hat;
    if (variant == Variant::bug) {
        const auto start = Clock::now();
        S_hat = s_step_bug(op, Y0, k->U_hat, l->V_hat, t0, t1, cfg);
        a.timings.s = seconds_since(start);
    }

    const auto merge_start = Clock::now();
    if (variant != Variant::bug) {
        S_hat = assemble_parallel_S1(S_bar, Ut.transpose() * k->K1, l->L1.transpose() * Vt);
    }

    const EtaResult eta = compute_eta(op, t0, Y0, Ut, Vt, cfg);
    a.eta = eta.value;
    a.eta_estimate = eta.estimate;
    if (variant == Variant::serial_s11 && Ut.cols() > 0 && Vt.cols() > 0) {
        const Matrix block = eta.estimate ? normal_block(op, t0, Y0, Ut, Vt) : eta.block;
        S_hat.bottomRightCorner(Ut.cols(), Vt.cols()) = h * block;
    }

    const SvdCores svd = svd_cores(S_hat);
    a.theta = resolve_theta(cfg, svd.sigma);
    const TruncatedCores cores = truncate(svd, a.theta, 1, r_max);
    a.r1 = cores.r1;
    a.tail = cores.tail;
    a.capped = cores.tail > a.theta;
    a.r_hat = std::min(k->U_hat.effective_rank, l->V_hat.effective_rank);
    a.Y1 = assemble_truncated(U_eff, V_eff, cores);
    a.timings.merge = seconds_since(merge_start);

    a.augmented = AugmentedState{U_eff, std::move(S_hat), V_eff};
    return a;
}

StepResult run_step(Variant variant, const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                    const StepConfig& cfg) {
    check_interval(t0, t1);
    cfg.validate();
    if (Y0.rows() != op.rows() || Y0.cols() != op.cols()) {
        throw InvalidInput("step: Y0 shape does not match the operator");
    }
    const auto step_start = Clock::now();
    const double h = t1 - t0;
    const Index r_max = rank_cap(cfg, op);

    StepResult result;
    result.rank_in = Y0.rank();
    FactoredMatrix working = Y0;
    for (int attempt = 0;; ++attempt) {
        Attempt a = run_attempt(variant, op, working, t0, t1, cfg, r_max);
        const RejectionCheck check = check_rejection(a.r1, a.r_hat, working.rank(), h, a.eta, a.theta, cfg);

        bool accept = !cfg.reject || check.decision == Decision::accept;
        bool capped = a.capped;
        const Index next_rank = std::min(a.r_hat, r_max);
        if (!accept && next_rank <= working.rank()) {
            // The criterion fired but the cap leaves no room to grow.
            accept = true;
            capped = true;
        }
        if (accept) {
            result.Y1 = std::move(a.Y1);
            result.rank_out = result.Y1.rank();
            result.working_rank = working.rank();
            result.r_hat = a.r_hat;
            result.eta = a.eta;
            result.eta_is_estimate = a.eta_estimate;
            result.retries = attempt;
            result.theta = a.theta;
            result.discarded_tail = a.tail;
            result.rank_capped = capped;
            result.augmented = std::move(a.augmented);
            result.timings = a.timings;
            result.timings.total = seconds_since(step_start);
            return result;
        }
        if (attempt >= cfg.max_retries) {
            throw StepFailure("step rejected " + std::to_string(attempt + 1) + " times", -1, working.rank(), a.eta,
                              a.theta, attempt);
        }
        result.rejections.push_back(*check.reason);

        // Restart on the augmented bases; U_hat^T Y0 V_hat = blockdiag(S0, 0)
        // because the old bases lead, so the represented matrix is unchanged.
        working = FactoredMatrix(a.augmented.U_hat.leftCols(next_rank),
                                 block_diagonal(working.S(), next_rank, next_rank),
                                 a.augmented.V_hat.leftCols(next_rank));
    }
}

}  // namespace

std::string_view to_string(ThetaMode mode) { return mode == ThetaMode::absolute ? "absolute" : "relative"; }

std::string_view to_string(Stepper stepper) {
    switch (stepper) {
        case Stepper::parallel:
            return "parallel";
        case Stepper::parallel_serial_s11:
            return "parallel_serial_s11";
        case Stepper::bug:
            return "bug";
    }
    return "unknown";
}

ThetaMode parse_theta_mode(std::string_view name) {
    if (name == "absolute") {
        return ThetaMode::absolute;
    }
    if (name == "relative") {
        return ThetaMode::relative;
    }
    throw InvalidInput("unknown theta mode '" + std::string(name) + "' (expected absolute or relative)");
}

Stepper parse_stepper(std::string_view name) {
    if (name == "parallel") {
        return Stepper::parallel;
    }
    if (name == "parallel_serial_s11") {
        return Stepper::parallel_serial_s11;
    }
    if (name == "bug") {
        return Stepper::bug;
    }
    throw InvalidInput("unknown integrator '" + std::string(name) + "' (expected parallel, parallel_serial_s11 or bug)");
}

void StepConfig::validate() const {
    if (!(theta_bar >= 0.0) || !std::isfinite(theta_bar)) {
        throw InvalidInput("theta_bar must be finite and nonnegative");
    }
    if (!(c_reject > 0.0)) {
        throw InvalidInput("c_reject must be positive");
    }
    if (max_retries < 0) {
        throw InvalidInput("max_retries must be nonnegative");
    }
    if (substep.substep_count < 1) {
        throw InvalidInput("substep_count must be at least 1");
    }
    if (eta_columns && *eta_columns < 1) {
        throw InvalidInput("eta_columns must be at least 1");
    }
}

StepFailure::StepFailure(const std::string& what, long step, Index rank, double eta, double theta, int retries)
    : Error(what + (step >= 0 ? " at step " + std::to_string(step) : std::string()) + " (rank " +
            std::to_string(rank) + ", eta " + std::to_string(eta) + ", theta " + std::to_string(theta) + ")"),
      step_(step),
      rank_(rank),
      eta_(eta),
      theta_(theta),
      retries_(retries) {}

KStepResult k_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1, const StepConfig& cfg) {
    check_interval(t0, t1);
    const Matrix& V0 = Y0.V();
    auto rhs = [&](double t, const Matrix& K) { return op.apply_corange(t, K, V0); };
    Matrix K1 = solve_matrix_ode(rhs, Matrix(Y0.U() * Y0.S()), t0, t1, cfg.substep);
    AugmentedBasis U_hat = orthonormalize_augment(Y0.U(), K1);
    return {std::move(K1), std::move(U_hat)};
}

LStepResult l_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1, const StepConfig& cfg) {
    check_interval(t0, t1);
    const Matrix& U0 = Y0.U();
    auto rhs = [&](double t, const Matrix& L) { return op.apply_range(t, U0, L); };
    Matrix L1 = solve_matrix_ode(rhs, Matrix(Y0.V() * Y0.S().transpose()), t0, t1, cfg.substep);
    AugmentedBasis V_hat = orthonormalize_augment(Y0.V(), L1);
    return {std::move(L1), std::move(V_hat)};
}

Matrix s_step_parallel(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                       const StepConfig& cfg) {
    check_interval(t0, t1);
    auto rhs = [&](double t, const Matrix& S) { return op.galerkin(t, Y0.U(), S, Y0.V()); };
    return solve_matrix_ode(rhs, Y0.S(), t0, t1, cfg.substep);
}

Matrix assemble_parallel_S1(const Matrix& S_bar, const Matrix& S1K, const Matrix& S1L) {
    const Index r = S_bar.rows();
    if (S_bar.cols() != r || S1K.cols() != r || S1L.rows() != r) {
        throw InvalidInput("assemble_parallel_S1: block shapes do not fit");
    }
    Matrix S_hat = Matrix::Zero(r + S1K.rows(), r + S1L.cols());
    S_hat.topLeftCorner(r, r) = S_bar;
    S_hat.topRightCorner(r, S1L.cols()) = S1L;
    S_hat.bottomLeftCorner(S1K.rows(), r) = S1K;
    return S_hat;
}

Matrix s_step_bug(const RhsOperator& op, const FactoredMatrix& Y0, const AugmentedBasis& U_hat,
                  const AugmentedBasis& V_hat, double t0, double t1, const StepConfig& cfg) {
    check_interval(t0, t1);
    if (U_hat.old_rank != Y0.rank() || V_hat.old_rank != Y0.rank()) {
        throw InvalidInput("s_step_bug: augmented bases were not built from Y0");
    }
    const Matrix U = U_hat.effective();
    const Matrix V = V_hat.effective();
    auto rhs = [&](double t, const Matrix& S) { return op.galerkin(t, U, S, V); };
    return solve_matrix_ode(rhs, block_diagonal(Y0.S(), U.cols(), V.cols()), t0, t1, cfg.substep);
}

EtaResult compute_eta(const RhsOperator& op, double t0, const FactoredMatrix& Y0, const Matrix& U_tilde,
                      const Matrix& V_tilde, const StepConfig& cfg) {
    if (U_tilde.rows() != Y0.rows() || V_tilde.rows() != Y0.cols()) {
        throw InvalidInput("compute_eta: direction blocks do not match Y0");
    }
    Index cu = U_tilde.cols();
    Index cv = V_tilde.cols();
    if (cfg.eta_columns) {
        cu = std::min(cu, *cfg.eta_columns);
        cv = std::min(cv, *cfg.eta_columns);
    }
    EtaResult out;
    out.estimate = cu < U_tilde.cols() || cv < V_tilde.cols();
    out.block = normal_block(op, t0, Y0, U_tilde.leftCols(cu), V_tilde.leftCols(cv));
    out.value = out.block.norm();
    return out;
}

RejectionCheck check_rejection(Index r1, Index r_hat, Index r_in, double h, double eta, double theta,
                               const StepConfig& cfg) {
    if (r1 >= r_hat && r_hat > r_in) {
        return {Decision::reject_augment, RejectReason::no_truncation};
    }
    if (h * eta > cfg.c_reject * theta) {
        return {Decision::reject_augment, RejectReason::normal_component};
    }
    return {};
}

double resolve_theta(const StepConfig& cfg, const Vector& sigma) {
    return cfg.theta_mode == ThetaMode::relative ? cfg.theta_bar * sigma.norm() : cfg.theta_bar;
}

StepResult parallel_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                         const StepConfig& cfg) {
    return run_step(Variant::parallel, op, Y0, t0, t1, cfg);
}

StepResult parallel_serial_s11_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                                    const StepConfig& cfg) {
    return run_step(Variant::serial_s11, op, Y0, t0, t1, cfg);
}

StepResult bug_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1, const StepConfig& cfg) {
    return run_step(Variant::bug, op, Y0, t0, t1, cfg);
}

StepResult step(Stepper stepper, const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                const StepConfig& cfg) {
    switch (stepper) {
        case Stepper::parallel:
            return parallel_step(op, Y0, t0, t1, cfg);
        case Stepper::parallel_serial_s11:
            return parallel_serial_s11_step(op, Y0, t0, t1, cfg);
        case Stepper::bug:
            return bug_step(op, Y0, t0, t1, cfg);
    }
    throw InvalidInput("unknown stepper");
}

std::vector<double> step_times(double t0, double t_end, double h, bool* partial) {
    if (!(h > 0.0)) {
        throw InvalidInput("integrate: h must be positive");
    }
    if (!(t_end >= t0)) {
        throw InvalidInput("integrate: t_end must not precede t0");
    }
    const double ratio = (t_end - t0) / h;
    const double nearest = std::round(ratio);
    long full = 0;
    bool has_partial = false;
    if (std::abs(ratio - nearest) <= 1e-9 * std::max(1.0, ratio)) {
        full = static_cast<long>(nearest);
    } else {
        full = static_cast<long>(std::floor(ratio));
        has_partial = true;
    }
    std::vector<double> times;
    times.reserve(static_cast<std::size_t>(full) + 2);
    for (long k = 0; k <= full; ++k) {
        times.push_back(t0 + static_cast<double>(k) * h);
    }
    if (has_partial) {
        times.push_back(t_end);
    } else if (full > 0) {
        times.back() = t_end;
    }
    if (partial) {
        *partial = has_partial;
    }
    return times;
}

Trajectory integrate(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t_end, double h,
                     const StepConfig& cfg, Stepper stepper, const IntegrateOptions& options) {
    cfg.validate();
    Trajectory traj;
    const std::vector<double> grid = step_times(t0, t_end, h, &traj.final_partial_step);

    // Each requested snapshot time maps to the nearest grid point.
    std::vector<std::pair<std::size_t, double>> wanted;
    for (double tau : options.snapshot_times) {
        if (tau < t0 - 1e-12 || tau > t_end + 1e-12) {
            throw InvalidInput("snapshot time outside [t0, t_end]");
        }
        std::size_t best = 0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            if (std::abs(grid[i] - tau) < std::abs(grid[best] - tau)) {
                best = i;
            }
        }
        wanted.emplace_back(best, tau);
    }
    auto take_snapshots = [&](std::size_t index, const FactoredMatrix& Y) {
        for (const auto& [i, tau] : wanted) {
            if (i == index) {
                traj.snapshots.push_back(Snapshot{tau, grid[index], static_cast<long>(index), Y});
            }
        }
    };

    auto record = [&](double t, double hk, const FactoredMatrix& Y, double eta, double theta, int retries,
                      double tail, bool capped, const PhaseTimings& timings) {
        traj.times.push_back(t);
        traj.step_sizes.push_back(hk);
        traj.ranks.push_back(Y.rank());
        traj.etas.push_back(eta);
        traj.thetas.push_back(theta);
        traj.norms.push_back(Y.norm());
        traj.retries.push_back(retries);
        traj.tails.push_back(tail);
        traj.rank_capped.push_back(capped);
        traj.timings.push_back(timings);
    };

    FactoredMatrix Y = Y0;
    record(grid.front(), 0.0, Y, 0.0, 0.0, 0, 0.0, false, PhaseTimings{});
    take_snapshots(0, Y);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const auto index = static_cast<long>(i);
        StepResult res;
        try {
            res = step(stepper, op, Y, grid[i - 1], grid[i], cfg);
        } catch (const StepFailure& e) {
            throw StepFailure("step rejected too often", index, e.rank(), e.eta(), e.theta(), e.retries());
        } catch (const NumericalBlowup& e) {
            throw NumericalBlowup("integration diverged", index, e.stage());
        }
        if (res.rank_capped) {
            std::ostringstream msg;
            msg << "step " << index << ": rank cap reached (rank " << res.rank_out << ")";
            traj.warnings.push_back(msg.str());
        }
        if (options.on_step) {
            options.on_step(index, grid[i], res);
        }
        Y = std::move(res.Y1);
        record(grid[i], grid[i] - grid[i - 1], Y, res.eta, res.theta, res.retries, res.discarded_tail,
               res.rank_capped, res.timings);
        take_snapshots(i, Y);
    }
    traj.final_state = std::move(Y);
    return traj;
}

}  // namespace parlr
