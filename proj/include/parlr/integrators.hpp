#pragma once

// Rank-adaptive low-rank integrators for Y' = F(t, Y):
//
//  * parallel: K, L and S substeps run concurrently; the augmented core is
//    [[S_bar, S1L], [S1K, 0]] and is truncated to the tolerance.
//  * parallel_serial_s11: as parallel, with the lower-right block filled by
//    h * U1~^T F(t0, Y0) V1~.
//  * bug: K and L concurrently, then the Galerkin update on the augmented
//    bases (basis update & Galerkin).
//
// All three share the step rejection policy: repeat the step on the
// augmented bases when nothing was truncated or when h * eta > c * theta.

#include "parlr/error.hpp"
#include "parlr/lowrank.hpp"
#include "parlr/ode.hpp"
#include "parlr/rhs.hpp"
#include "parlr/task_runner.hpp"

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parlr {

enum class ThetaMode { absolute, relative };
enum class Stepper { parallel, parallel_serial_s11, bug };

std::string_view to_string(ThetaMode mode);
std::string_view to_string(Stepper stepper);
ThetaMode parse_theta_mode(std::string_view name);
Stepper parse_stepper(std::string_view name);

struct StepConfig {
    double theta_bar = 1e-2;
    /// relative: theta = theta_bar * ||Sigma_hat||_F of the attempt's core.
    ThetaMode theta_mode = ThetaMode::relative;
    double c_reject = 10.0;
    /// Rank cap; values <= 0 mean min(m, n).
    Index r_max = 0;
    int max_retries = 10;
    /// When false every attempt is accepted (diagnostics are still computed).
    bool reject = true;
    OdeMethod substep = OdeMethod::rk4(1);
    /// Columns of U1~, V1~ used for eta; nullopt uses all of them.
    std::optional<Index> eta_columns;
    /// Executor for the concurrent substeps; nullptr selects default_runner().
    const TaskRunner* runner = nullptr;

    void validate() const;
};

enum class Decision { accept, reject_augment };
enum class RejectReason { no_truncation = 1, normal_component = 2 };

struct RejectionCheck {
    Decision decision = Decision::accept;
    std::optional<RejectReason> reason;
};

/// Wall-clock seconds per phase of the accepted attempt.
struct PhaseTimings {
    double k = 0.0;
    double l = 0.0;
    double s = 0.0;
    double merge = 0.0;  // augmentation products, eta, SVD, truncation
    double total = 0.0;  // whole step including rejected attempts
};

/// Y_hat = U_hat S_hat V_hat^T before truncation (effective columns only).
struct AugmentedState {
    Matrix U_hat;
    Matrix S_hat;
    Matrix V_hat;
};

struct StepResult {
    FactoredMatrix Y1;
    Index rank_in = 0;   // rank of Y0
    Index rank_out = 0;  // rank of Y1
    Index working_rank = 0;  // basis size of the accepted attempt
    Index r_hat = 0;     // min of the augmented ranks of the accepted attempt
    double eta = 0.0;
    bool eta_is_estimate = false;
    int retries = 0;
    double theta = 0.0;
    double discarded_tail = 0.0;
    std::vector<RejectReason> rejections;
    /// The rank cap bound: either the truncation had to keep fewer values
    /// than the tolerance asked for, or a rejection could not enlarge the basis.
    bool rank_capped = false;
    AugmentedState augmented;
    PhaseTimings timings;
};

/// Diagnostics of the last attempt when a step exhausts its retries.
class StepFailure : public Error {
public:
    StepFailure(const std::string& what, long step, Index rank, double eta, double theta, int retries);

    long step() const noexcept { return step_; }
    Index rank() const noexcept { return rank_; }
    double eta() const noexcept { return eta_; }
    double theta() const noexcept { return theta_; }
    int retries() const noexcept { return retries_; }

private:
    long step_;
    Index rank_;
    double eta_;
    double theta_;
    int retries_;
};

struct KStepResult {
    Matrix K1;
    AugmentedBasis U_hat;
};

struct LStepResult {
    Matrix L1;
    AugmentedBasis V_hat;
};

struct EtaResult {
    double value = 0.0;
    bool estimate = false;
    /// U1~^T F(t0, Y0) V1~ over the columns that were used.
    Matrix block;
};

/// K' = F(t, K V0^T) V0, K(t0) = U0 S0; U_hat from (U0, K(t1)).
KStepResult k_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1, const StepConfig& cfg);
/// L' = F(t, U0 L^T)^T U0, L(t0) = V0 S0^T; V_hat from (V0, L(t1)).
LStepResult l_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1, const StepConfig& cfg);
/// S' = U0^T F(t, U0 S V0^T) V0, S(t0) = S0.
Matrix s_step_parallel(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                       const StepConfig& cfg);
/// [[S_bar, S1L], [S1K, 0]]; S1K = U1~^T K(t1), S1L = L(t1)^T V1~.
Matrix assemble_parallel_S1(const Matrix& S_bar, const Matrix& S1K, const Matrix& S1L);
/// Galerkin ODE on the augmented bases, started from U_hat^T Y0 V_hat.
Matrix s_step_bug(const RhsOperator& op, const FactoredMatrix& Y0, const AugmentedBasis& U_hat,
                  const AugmentedBasis& V_hat, double t0, double t1, const StepConfig& cfg);
/// eta = ||U1~^T F(t0, Y0) V1~||_F.
EtaResult compute_eta(const RhsOperator& op, double t0, const FactoredMatrix& Y0, const Matrix& U_tilde,
                      const Matrix& V_tilde, const StepConfig& cfg);
/// Criterion 1: r1 == r_hat with r_hat > r_in (nothing truncated although
/// the basis grew). Criterion 2: h * eta > c * theta.
RejectionCheck check_rejection(Index r1, Index r_hat, Index r_in, double h, double eta, double theta,
                               const StepConfig& cfg);

/// theta for a core with singular values `sigma`.
double resolve_theta(const StepConfig& cfg, const Vector& sigma);

StepResult parallel_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                         const StepConfig& cfg);
StepResult parallel_serial_s11_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                                    const StepConfig& cfg);
StepResult bug_step(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1, const StepConfig& cfg);
StepResult step(Stepper stepper, const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t1,
                const StepConfig& cfg);

struct Snapshot {
    double requested_time = 0.0;
    double time = 0.0;
    long step = 0;
    FactoredMatrix Y;
};

/// Per-step diagnostics; entry 0 describes the initial value.
struct Trajectory {
    std::vector<double> times;
    std::vector<double> step_sizes;
    std::vector<Index> ranks;
    std::vector<double> etas;
    std::vector<double> thetas;
    std::vector<double> norms;
    std::vector<int> retries;
    std::vector<double> tails;
    std::vector<bool> rank_capped;
    std::vector<PhaseTimings> timings;
    std::vector<Snapshot> snapshots;
    std::vector<std::string> warnings;
    FactoredMatrix final_state;
    bool final_partial_step = false;

    std::size_t size() const noexcept { return times.size(); }
};

struct IntegrateOptions {
    std::vector<double> snapshot_times;
    /// Called after every accepted step with (step index, t1, result).
    std::function<void(long, double, const StepResult&)> on_step;
};

/// Repeated steps of size h from t0 to t_end; a shorter final step is taken
/// (and flagged) when h does not divide the interval.
Trajectory integrate(const RhsOperator& op, const FactoredMatrix& Y0, double t0, double t_end, double h,
                     const StepConfig& cfg, Stepper stepper, const IntegrateOptions& options = {});

/// Step times t0 = s_0 < s_1 < ... < s_n = t_end used by integrate().
std::vector<double> step_times(double t0, double t_end, double h, bool* partial = nullptr);

}  // namespace parlr
