#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "edgebatch/model.hpp"

/// Exhaustive solver for tiny instances, used as ground truth.
///
/// Every subset of tasks and every ordered partition of it into batches is
/// tried. Start times are not searched: for a fixed association the latest
/// feasible starts (swept backward from the last batch) are optimal, since
/// later starts only widen upload windows.
namespace edgebatch::oracle {

inline constexpr std::size_t kDefaultMaxTasks = 4;

/// Thrown when an instance is too large to enumerate.
class RefusalError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Task index -> batch index, empty when the task is not scheduled.
using Assignment = std::vector<std::optional<std::size_t>>;

struct SearchResult {
    Schedule schedule;
    Assignment assignment;
    /// Candidates visited: one per (subset, ordered partition) pair.
    std::uint64_t candidates = 0;
    std::uint64_t feasible_candidates = 0;
};

/// Maximum-throughput schedule. Among optimal assignments the
/// lexicographically smallest one wins, with "unscheduled" ranking below
/// any batch index. Throws RefusalError if the scenario has more than
/// `max_tasks` tasks.
SearchResult exact_search(const Scenario& scenario, std::size_t max_tasks = kDefaultMaxTasks,
                          const Tolerances& tol = {});

Schedule exact_solve(const Scenario& scenario, std::size_t max_tasks = kDefaultMaxTasks,
                     const Tolerances& tol = {});

/// Latest start of each batch of `assignment` by the backward sweep, or
/// nothing if some batch cannot start after all of its members arrive.
/// Batches are numbered 0..max index; empty ones take the next start.
std::optional<std::vector<double>> latest_starts(const Scenario& scenario,
                                                 const Assignment& assignment,
                                                 const Tolerances& tol = {});

/// Number of ordered set partitions of n labelled items (Fubini numbers).
std::uint64_t ordered_partitions(std::size_t n);

/// Sum over subsets of the ordered partition counts: the number of
/// candidates an exhaustive search over `num_tasks` tasks visits.
std::uint64_t enumeration_count(std::size_t num_tasks);

/// Independent check of the start-time elimination: searches start times on
/// the grid `lo + i * resolution` over [earliest arrival, latest deadline +
/// delay of a full batch] and returns the feasible grid point with the least
/// total bandwidth, or nothing. A dynamic program over batches keeps this
/// linear in the grid size. A feasible set narrower than the resolution can
/// be missed.
/// Throws std::invalid_argument if `resolution` is not positive.
std::optional<std::vector<double>> grid_cross_check(const Scenario& scenario,
                                                    const Assignment& assignment,
                                                    double resolution, const Tolerances& tol = {});

}  // namespace edgebatch::oracle
