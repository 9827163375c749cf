#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "edgebatch/model.hpp"

/// Joint batching and scheduling by alternating optimization.
///
/// The number of batches is fixed to the number of tasks (empty batches are
/// allowed), the batch-size indicator is replaced by an iteratively
/// reweighted linear bound, and the solver alternates between a
/// dual-subgradient task-batch association at fixed start times and the
/// closed-form latest start times for a fixed association.
namespace edgebatch::jbas {

enum class TieBreak { lowest_index };

struct SolverConfig {
    /// Smoothing constant of the log-sum approximation of the batch indicator.
    double delta = 1e-15;
    /// Scale c of the diminishing dual step c / sqrt(iter).
    double dual_step0 = 0.1;
    int dual_max_iters = 500;
    /// The inner loop stops once the dual objective moves less than this
    /// (relative) over `dual_window` iterations.
    double dual_tol = 1e-6;
    int dual_window = 10;
    int outer_max_iters = 50;
    double outer_tol = 1e-4;
    TieBreak tie_break = TieBreak::lowest_index;
    /// Number of batch slots; 0 means one slot per task.
    std::size_t max_batches = 0;
    Tolerances tol;
};

/// Throws std::invalid_argument if `config` breaks an invariant.
void validate(const SolverConfig& config);

/// Task index -> batch index, empty when the task is not scheduled.
using Association = std::vector<std::optional<std::size_t>>;

/// Lagrange multipliers of the deadline (per task and batch), batch-ordering
/// (per batch) and bandwidth (scalar) constraints.
struct DualState {
    std::size_t num_tasks = 0;
    std::size_t num_batches = 0;
    std::vector<double> beta;   // row-major [task][batch]
    std::vector<double> gamma;  // gamma[n] couples batch n to n+1; last entry pinned to 0
    double rho = 0.0;

    static DualState zeros(std::size_t num_tasks, std::size_t num_batches);

    [[nodiscard]] double beta_at(std::size_t k, std::size_t n) const { return beta[k * num_batches + n]; }
    double& beta_at(std::size_t k, std::size_t n) { return beta[k * num_batches + n]; }
};

/// Per-batch slope and offset of the linear upper bound on the batch
/// indicator, linearized at the previous association.
struct ReweightState {
    std::vector<double> theta;
    std::vector<double> psi;
    std::vector<double> prev_sums;
};

/// Deactivation constant for the deadline rows of unassigned tasks:
/// the latest deadline plus the delay of a batch holding every task.
struct BigM {
    double xi = 0.0;

    static BigM of(const Scenario& scenario);
};

/// Constraint subgradients fed to the dual update. Every row is the signed
/// slack of its constraint (positive when violated), normalized by the
/// constraint's scale: time rows by `xi^2`, the bandwidth row by `B^2`. The
/// normalization is what a unit-free dual step on the rescaled constraints
/// `g / xi <= 0` and `g / B <= 0` amounts to in the original multipliers.
struct Residuals {
    std::vector<double> deadline;   // row-major [task][batch]
    std::vector<double> causality;  // per batch
    double bandwidth = 0.0;
};

/// Continuous surrogate of the batch delay at a relaxed batch size.
double approx_delay(double batch_size, double theta, double psi, const DelayModel& model);

/// theta_n and psi_n for each previous batch sum.
ReweightState update_reweight(std::span<const double> prev_sums, double delta);

/// Number of tasks associated with each of `num_batches` batches.
std::vector<double> batch_sums(const Association& assoc, std::size_t num_batches);

/// Restricts which (task, batch) pairs the association may use.
struct AssociationMask {
    /// Drop pairs whose upload would need more than this many Hz.
    std::optional<double> per_task_bandwidth_cap;
};

/// Assigns each task to the batch with the largest positive Lagrangian
/// coefficient, or leaves it unassigned when no coefficient is positive.
/// Batches that start before the task arrives are never candidates.
Association associate_tasks(const Scenario& scenario, std::span<const double> batch_starts,
                            const DualState& duals, const ReweightState& rw, BigM xi,
                            const Tolerances& tol = {}, const AssociationMask& mask = {});

/// Coefficient of task k's indicator for batch n in the partial Lagrangian;
/// -infinity for batches the task cannot join.
std::vector<double> association_coefficients(const Scenario& scenario,
                                              std::span<const double> batch_starts,
                                              const DualState& duals, const ReweightState& rw,
                                              BigM xi, const Tolerances& tol = {},
                                              const AssociationMask& mask = {});

/// Subgradients of the dual at `assoc`. Delay terms use the exact batch delay;
/// the linearized surrogate only enters through the association coefficients.
Residuals compute_residuals(const Scenario& scenario, std::span<const double> batch_starts,
                            const Association& assoc, BigM xi, bool global_bandwidth = true);

/// Projected subgradient step `x <- max(0, x + step0 / sqrt(iter) * residual)`.
DualState update_duals(const DualState& duals, const Residuals& residuals, int iter,
                       const SolverConfig& config);

struct StartTimes {
    std::vector<double> starts;
    /// Non-empty batches whose latest start does not clear an assigned
    /// task's arrival; no start time can make them feasible.
    std::vector<std::size_t> flagged;
};

/// Latest start of every batch, swept backward from the last one: a
/// non-empty batch starts at min(earliest member deadline, next start) minus
/// its delay, an empty one at the next start, and the sweep begins at `xi`.
StartTimes batch_start_times(const Scenario& scenario, const Association& assoc,
                             std::size_t num_batches, BigM xi, const Tolerances& tol = {});

/// Builds a schedule from an association and start times, giving every
/// scheduled task the bandwidth that finishes its upload exactly at its
/// batch start. Throws CausalityError if a batch starts before one of its
/// tasks arrives.
Schedule make_schedule(const Scenario& scenario, const Association& assoc,
                       std::span<const double> batch_starts, const Tolerances& tol = {});

/// How the uplink budget is enforced.
struct BandwidthPolicy {
    /// Unset: the shared budget B is priced by a multiplier. Set: every
    /// device owns this many Hz and the budget row is dropped.
    std::optional<double> per_task_cap;
};

/// Drops tasks until the association is feasible under `policy` after the
/// start times are recomputed: first any task in a flagged batch or whose
/// batch starts too early, then the task with the largest bandwidth demand.
/// Returns the repaired association and its start times.
std::pair<Association, std::vector<double>> repair(const Scenario& scenario, Association assoc,
                                                   std::size_t num_batches, BigM xi,
                                                   const BandwidthPolicy& policy,
                                                   const Tolerances& tol = {});

/// Primal recovery at fixed start times: tasks in decreasing order of their
/// best coefficient in `mu` join the best-ranked batch that stays feasible at
/// `batch_starts`. The checks are incremental, and the result is feasible at
/// those starts and therefore also at its latest starts.
Association recover(const Scenario& scenario, std::span<const double> batch_starts,
                    std::span<const double> mu, BigM xi, const BandwidthPolicy& policy);

/// Adds unassigned tasks, visited in `order`, to a feasible association.
/// Each task takes the placement, joining a batch or opening a new one in
/// any gap, that keeps the association feasible at its recomputed latest
/// starts with the least total bandwidth demand; tasks with no such
/// placement stay out. Batches are renumbered 0..m-1 in order.
/// Returns the association with its latest starts.
/// Throws std::invalid_argument if `assoc` is not feasible to begin with.
std::pair<Association, std::vector<double>> fill(const Scenario& scenario, Association assoc,
                                                 std::span<const std::size_t> order, std::size_t num_batches,
                                                 BigM xi, const BandwidthPolicy& policy,
                                                 const Tolerances& tol = {});

/// Runs the full alternating optimization. The result always passes
/// check_schedule.
Schedule solve(const Scenario& scenario, const SolverConfig& config = {});

/// Same pipeline under an explicit bandwidth policy.
Schedule solve(const Scenario& scenario, const SolverConfig& config, const BandwidthPolicy& policy);

}  // namespace edgebatch::jbas
