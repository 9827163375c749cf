#pragma once

#include <cstddef>
#include <vector>

#include "edgebatch/model.hpp"

/// Spectrum-hole allocation: once a batch starts, the bandwidth its members
/// held for uploading is free. At every such checkpoint the freed bandwidth
/// is offered to unscheduled tasks, which join the next batch if its start
/// can be pulled earlier without breaking any commitment.
namespace edgebatch::holes {

struct HolesConfig {
    Tolerances tol;
};

/// State at one checkpoint: batch `index` has just started and batch
/// `next_index` is the one receiving new tasks.
struct Checkpoint {
    std::size_t index = 0;
    std::size_t next_index = 0;
    /// Checkpoint instant; new uploads may use the freed pool from here on.
    /// Minus infinity when there is no current batch.
    double now = 0.0;
    /// When the current batch finishes; the next batch cannot start earlier.
    double current_finish = 0.0;
    std::vector<std::size_t> unscheduled;
    /// Members of the next batch and the bits each still has to send at `now`.
    std::vector<std::size_t> next_members;
    std::vector<double> next_residual_bits;
    /// Start of the next batch before any adjustment.
    double next_start = 0.0;
    /// Hz available after `now` to the next batch's members and new tasks.
    double freed_bandwidth = 0.0;
};

struct ProbeResult {
    bool feasible = false;
    double new_start = 0.0;
    std::vector<std::size_t> admitted;  // ascending ids
};

/// Can exactly `pi` unscheduled tasks join the next batch? Tries every
/// tentative batch deadline from the candidate set (unscheduled deadlines
/// below the cap, then the cap itself, where the cap is the earliest
/// deadline of the next batch or `next_fixed_start`) and, at each, takes
/// the `pi` cheapest eligible tasks. `pi == 0` keeps the original start.
/// Throws std::invalid_argument if `pi` exceeds the unscheduled count.
ProbeResult feasibility_probe(const Scenario& scenario, const Checkpoint& state, std::size_t pi,
                              double next_fixed_start, const HolesConfig& config = {});

/// Largest admissible count by bisection over [0, |unscheduled|].
ProbeResult solve_checkpoint(const Scenario& scenario, const Checkpoint& state,
                             double next_fixed_start, const HolesConfig& config = {});

/// Checkpoint state at non-empty batch `index` of `schedule`, targeting
/// the following non-empty batch. Candidates are the given unscheduled ids.
Checkpoint make_checkpoint(const Scenario& scenario, const Schedule& schedule, std::size_t index,
                           std::size_t next_index, std::vector<std::size_t> unscheduled);

/// Runs every checkpoint in order. Originally scheduled tasks keep their
/// batch and their deadline; the result passes check_schedule whenever the
/// input does, and throughput never drops.
Schedule augment(const Scenario& scenario, const Schedule& schedule, const HolesConfig& config = {});

struct OnlineResult {
    Scenario scenario;  // input tasks followed by the new ones
    Schedule schedule;
};

/// Appends `new_tasks` (ids are reassigned to follow the existing ones) and
/// re-runs the checkpoints that start at or after `arrival_clock`, with the
/// new and still-unscheduled tasks as candidates.
/// Throws std::invalid_argument if a new task arrives before the clock.
OnlineResult admit_online(const Scenario& scenario, const Schedule& schedule,
                          const std::vector<Task>& new_tasks, double arrival_clock,
                          const HolesConfig& config = {});

}  // namespace edgebatch::holes
