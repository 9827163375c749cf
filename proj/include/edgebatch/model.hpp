#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

/// Domain types, physical formulas and the feasibility checker shared by
/// every scheduler in the library.
///
/// Units are fixed system-wide: seconds, Hz, bits and linear watts.
namespace edgebatch {

/// Raised when a physical formula is evaluated outside its domain.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a batch would start before (or too close to) a task arrival.
class CausalityError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Raised when a schedule refers to tasks or batches that do not exist.
/// Distinct from infeasibility, which is reported through FeasibilityReport.
class StructuralError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One inference request.
struct Task {
    std::size_t id = 0;
    double arrival = 0.0;       // s
    double deadline = 0.0;      // s
    double payload_bits = 0.0;  // bits
    double tx_power = 0.0;      // W
    double channel_gain = 0.0;  // linear power gain

    friend bool operator==(const Task&, const Task&) = default;
};

/// Linear batch inference latency: `per_task * size + fixed` for non-empty batches.
struct DelayModel {
    double per_task = 0.005;  // s per task
    double fixed = 0.020;     // s

    friend bool operator==(const DelayModel&, const DelayModel&) = default;
};

/// A task population plus the system constants it is served under.
struct Scenario {
    std::vector<Task> tasks;
    double total_bandwidth = 20e6;  // Hz
    double noise_power = 1.0;       // W
    DelayModel delay_model;

    // Provenance, carried through files so a scenario can be regenerated.
    std::uint64_t seed = 0;
    std::string prng = "mt19937_64";

    [[nodiscard]] std::size_t size() const noexcept { return tasks.size(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Throws std::invalid_argument describing the first broken invariant.
void validate(const Scenario& scenario);

/// A bandwidth reservation `[begin, end)` at a constant width.
struct UploadSegment {
    double begin = 0.0;
    double end = 0.0;
    double hz = 0.0;

    friend bool operator==(const UploadSegment&, const UploadSegment&) = default;
};

/// Where a scheduled task runs and how it reaches the server.
///
/// With no segments the task holds a dedicated band of `bandwidth` Hz from
/// the time origin until its batch starts, which is the static allocation the
/// bandwidth budget is written for. Spectrum-hole reallocation replaces that
/// with explicit segments; `bandwidth` then reports the first segment's width.
struct Allocation {
    std::size_t batch = 0;
    double bandwidth = 0.0;
    std::vector<UploadSegment> segments;

    friend bool operator==(const Allocation&, const Allocation&) = default;
};

/// A task that a schedule file assigns more than once.
struct ExtraAssignment {
    std::size_t task = 0;
    std::size_t batch = 0;

    friend bool operator==(const ExtraAssignment&, const ExtraAssignment&) = default;
};

/// Task-to-batch assignment, batch start times and per-task bandwidth.
struct Schedule {
    std::vector<double> batch_starts;
    /// Indexed by task id; empty for unscheduled tasks.
    std::vector<std::optional<Allocation>> tasks;
    /// Assignments beyond the first for a task, kept only so that schedules
    /// read from files can be reported as multi-assigned.
    std::vector<ExtraAssignment> extra_assignments;

    /// An all-unscheduled schedule for `num_tasks` tasks and no batches.
    static Schedule empty(std::size_t num_tasks);

    [[nodiscard]] std::size_t num_batches() const noexcept { return batch_starts.size(); }
    /// Number of tasks in each batch.
    [[nodiscard]] std::vector<std::size_t> batch_sizes() const;

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

enum class ConstraintTag {
    causality,
    deadline,
    batch_order,
    bandwidth_total,
    multi_assignment,
    upload,
};

std::string_view to_string(ConstraintTag tag) noexcept;

struct Violation {
    ConstraintTag tag = ConstraintTag::causality;
    std::optional<std::size_t> task;
    std::optional<std::size_t> batch;
    /// Amount by which the constraint is exceeded, in the constraint's unit.
    double magnitude = 0.0;
};

struct FeasibilityReport {
    std::vector<Violation> violations;

    [[nodiscard]] bool is_feasible() const noexcept { return violations.empty(); }
    [[nodiscard]] std::size_t count(ConstraintTag tag) const noexcept;
};

struct Tolerances {
    double time_margin = 1e-9;    // s, strictness margin for batch causality
    double rel_bandwidth = 1e-9;  // relative slack on the bandwidth budget
    double numeric_eps = 1e-12;   // relative slack on time comparisons
};

/// log2(1 + p h / sigma^2) in bits/s/Hz.
double spectral_efficiency(double tx_power, double channel_gain, double noise_power);

/// Spectral efficiency of `task` under `noise_power`.
double spectral_efficiency(const Task& task, double noise_power);

/// Inference latency of a batch of `size` tasks; zero for an empty batch.
double batch_delay(std::size_t size, const DelayModel& model) noexcept;

/// Minimum bandwidth that uploads `task` between its arrival and `batch_start`.
/// Throws CausalityError if `batch_start <= arrival + time_margin`.
double required_bandwidth(const Task& task, double batch_start, double noise_power,
                          double time_margin = Tolerances{}.time_margin);

/// Bits a task's allocation delivers between its arrival and `until`.
double delivered_bits(const Task& task, const Allocation& alloc, double until,
                      double noise_power);

/// Peak total bandwidth reserved at any instant by `schedule`.
double peak_bandwidth(const Schedule& schedule);

/// Checks every constraint of the joint batching problem and itemizes the
/// violations. Throws StructuralError for references to unknown tasks or
/// batches, non-positive bandwidths or a task list of the wrong length.
FeasibilityReport check_schedule(const Scenario& scenario, const Schedule& schedule,
                                 const Tolerances& tol = {});

/// Number of scheduled tasks.
std::size_t throughput(const Schedule& schedule) noexcept;

}  // namespace edgebatch
