#include "edgebatch/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "edgebatch/holes.hpp"

namespace edgebatch::baselines {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

Schedule equal_bandwidth(const Scenario& scenario, const jbas::SolverConfig& config) {
    if (scenario.size() == 0) return Schedule::empty(0);
    const double share = scenario.total_bandwidth / static_cast<double>(scenario.size());
    Schedule s = jbas::solve(scenario, config, jbas::BandwidthPolicy{share});
    for (auto& a : s.tasks)
        if (a) a->bandwidth = share;
    return s;
}

Schedule greedy_batching(const Scenario& scenario, const GreedyConfig& config) {
    const Tolerances& tol = config.tol;
    validate(scenario);
    const std::size_t num_tasks = scenario.size();
    Schedule out = Schedule::empty(num_tasks);
    if (num_tasks == 0) return out;

    enum class Phase { pending, uploading, waiting, batched, dropped };
    std::vector<Phase> phase(num_tasks, Phase::pending);
    std::vector<double> remaining(num_tasks);
    std::vector<double> rate(num_tasks);
    std::vector<std::vector<UploadSegment>> segments(num_tasks);
    for (std::size_t k = 0; k < num_tasks; ++k) {
        remaining[k] = scenario.tasks[k].payload_bits;
        rate[k] = spectral_efficiency(scenario.tasks[k], scenario.noise_power);
    }
    std::vector<std::size_t> by_arrival(num_tasks);
    std::iota(by_arrival.begin(), by_arrival.end(), 0);
    std::stable_sort(by_arrival.begin(), by_arrival.end(), [&](std::size_t i, std::size_t j) {
        return scenario.tasks[i].arrival < scenario.tasks[j].arrival;
    });

    std::size_t next_arrival = 0;
    std::vector<std::size_t> active;
    std::vector<std::size_t> waiting;
    double server_free = -kInf;  // end of the batch in service
    bool server_busy = false;
    double now = 0.0;

    std::vector<std::vector<std::size_t>> batches;
    std::vector<double> starts;

    auto open_batch = [&] {
        if (server_busy || waiting.empty()) return;
        std::sort(waiting.begin(), waiting.end());
        for (const std::size_t k : waiting) phase[k] = Phase::batched;
        batches.push_back(waiting);
        starts.push_back(now);
        server_free = now + batch_delay(waiting.size(), scenario.delay_model);
        server_busy = true;
        waiting.clear();
    };

    for (;;) {
        const double share =
            config.upload == GreedyUpload::equal_split ? scenario.total_bandwidth / static_cast<double>(num_tasks)
            : active.empty()                           ? 0.0
                                                       : scenario.total_bandwidth / static_cast<double>(active.size());
        double t_next = kInf;
        if (next_arrival < num_tasks) t_next = scenario.tasks[by_arrival[next_arrival]].arrival;
        if (server_busy) t_next = std::min(t_next, server_free);
        for (const std::size_t k : active) {
            t_next = std::min(t_next, now + remaining[k] / (rate[k] * share));
            t_next = std::min(t_next, scenario.tasks[k].deadline);
        }
        if (t_next == kInf) break;
        t_next = std::max(t_next, now);

        // Advance uploads to t_next at the current shares.
        const double dt = t_next - now;
        if (dt > 0.0)
            for (const std::size_t k : active) {
                remaining[k] -= rate[k] * share * dt;
                auto& segs = segments[k];
                if (!segs.empty() && segs.back().end == now && segs.back().hz == share)
                    segs.back().end = t_next;
                else
                    segs.push_back({now, t_next, share});
            }
        now = t_next;

        // Completions first: an upload that finishes exactly at its deadline
        // still counts as uploaded.
        std::vector<std::size_t> still;
        for (const std::size_t k : active) {
            // Rounding leaves a sliver of the finishing upload; anything well
            // inside the checker's relative tolerance counts as delivered.
            if (remaining[k] <= 0.1 * tol.rel_bandwidth * scenario.tasks[k].payload_bits) {
                remaining[k] = 0.0;
                phase[k] = Phase::waiting;
                waiting.push_back(k);
            } else if (now >= scenario.tasks[k].deadline) {
                phase[k] = Phase::dropped;
                segments[k].clear();
            } else {
                still.push_back(k);
            }
        }
        active = std::move(still);
        while (next_arrival < num_tasks && scenario.tasks[by_arrival[next_arrival]].arrival <= now) {
            const std::size_t k = by_arrival[next_arrival++];
            phase[k] = Phase::uploading;
            active.push_back(k);
        }
        std::sort(active.begin(), active.end());
        if (server_busy && now >= server_free) server_busy = false;
        open_batch();
    }

    out.batch_starts = starts;
    for (std::size_t n = 0; n < batches.size(); ++n) {
        const double finish = starts[n] + batch_delay(batches[n].size(), scenario.delay_model);
        for (const std::size_t k : batches[n]) {
            if (finish > scenario.tasks[k].deadline) continue;
            double peak = 0.0;
            for (const auto& seg : segments[k]) peak = std::max(peak, seg.hz);
            out.tasks[k] = Allocation{n, peak, std::move(segments[k])};
        }
    }
    return out;
}

Schedule single_batch(const Scenario& scenario, const Tolerances& tol) {
    validate(scenario);
    const std::size_t num_tasks = scenario.size();
    Schedule out = Schedule::empty(num_tasks);
    if (num_tasks == 0) return out;

    holes::Checkpoint cp;
    cp.now = -kInf;
    cp.current_finish = -kInf;
    cp.unscheduled.resize(num_tasks);
    std::iota(cp.unscheduled.begin(), cp.unscheduled.end(), 0);
    const double xi = jbas::BigM::of(scenario).xi;
    cp.next_start = xi;
    cp.freed_bandwidth = scenario.total_bandwidth;

    const holes::ProbeResult best = holes::solve_checkpoint(scenario, cp, xi, holes::HolesConfig{tol});
    if (best.admitted.empty()) return out;
    out.batch_starts = {best.new_start};
    for (const std::size_t k : best.admitted)
        out.tasks[k] = Allocation{0, required_bandwidth(scenario.tasks[k], best.new_start,
                                                        scenario.noise_power, tol.time_margin),
                                  {}};
    return out;
}

}  // namespace edgebatch::baselines
