#pragma once

#include <cstddef>
#include <vector>

#include "edgebatch/model.hpp"
#include "edgebatch/scenario.hpp"

namespace edgebatch::test {

// A task with unit SNR (spectral efficiency exactly 1 bit/s/Hz).
inline Task unit_task(std::size_t id, double arrival, double deadline, double bits = 1000.0) {
    return Task{id, arrival, deadline, bits, 1.0, 1.0};
}

inline Scenario make_scenario(std::vector<Task> tasks, double bandwidth, DelayModel delay = {}) {
    Scenario s;
    s.tasks = std::move(tasks);
    for (std::size_t k = 0; k < s.tasks.size(); ++k) s.tasks[k].id = k;
    s.total_bandwidth = bandwidth;
    s.delay_model = delay;
    return s;
}

// Default generator with a few knobs changed.
inline Scenario random_scenario(std::size_t num_tasks, std::uint64_t seed, double bandwidth = GenConfig{}.total_bandwidth,
                                double snr_db = GenConfig{}.tx_snr_db) {
    GenConfig g;
    g.num_tasks = num_tasks;
    g.seed = seed;
    g.total_bandwidth = bandwidth;
    g.tx_snr_db = snr_db;
    return generate(g);
}

}  // namespace edgebatch::test
