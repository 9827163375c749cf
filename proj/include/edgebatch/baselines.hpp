#pragma once

#include "edgebatch/jbas.hpp"
#include "edgebatch/model.hpp"

/// Reference schedulers the joint solver is compared against.
namespace edgebatch::baselines {

/// Every device owns B/K Hz. Batching follows the joint solver with the
/// shared budget replaced by that per-device cap, so a task can only join
/// batches it can reach at B/K. Scheduled tasks are reported at B/K.
Schedule equal_bandwidth(const Scenario& scenario, const jbas::SolverConfig& config = {});

/// The default keeps each device on a fixed band, the static reservation
/// the joint solver and the oracle also assume. Processor sharing moves
/// bandwidth between devices over time, so it can beat the static optimum.
enum class GreedyUpload {
    /// Active uploads share B equally, re-split at every arrival and completion.
    processor_sharing,
    /// Every device owns B/K Hz from its arrival on.
    equal_split,
};

struct GreedyConfig {
    GreedyUpload upload = GreedyUpload::equal_split;
    Tolerances tol;
};

/// Strawman batcher: uploads start at arrival (an upload is abandoned at its
/// deadline). The first batch starts when the first upload completes; each
/// later batch starts when the previous one ends, or at the next upload
/// completion if nothing is waiting. A batch takes every completed,
/// unbatched upload. Tasks that finish after their deadline are dropped.
Schedule greedy_batching(const Scenario& scenario, const GreedyConfig& config = {});

/// Best schedule with a single batch over the whole horizon, found by
/// bisection on the batch size with the tentative-deadline probe.
Schedule single_batch(const Scenario& scenario, const Tolerances& tol = {});

}  // namespace edgebatch::baselines
