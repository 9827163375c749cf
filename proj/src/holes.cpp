#include "edgebatch/holes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "edgebatch/jbas.hpp"

namespace edgebatch::holes {

namespace {

// Peak usage over [lo, hi) of the given allocations.
double peak_over(const Schedule& schedule, const std::vector<std::size_t>& tasks, double lo,
                 double hi) {
    std::vector<std::pair<double, double>> events;
    auto reserve = [&](double begin, double end, double hz) {
        begin = std::max(begin, lo);
        end = std::min(end, hi);
        if (end <= begin) return;
        events.emplace_back(begin, hz);
        events.emplace_back(end, -hz);
    };
    for (const std::size_t k : tasks) {
        const Allocation& a = *schedule.tasks[k];
        if (a.segments.empty())
            reserve(0.0, schedule.batch_starts[a.batch], a.bandwidth);
        else
            for (const auto& seg : a.segments) reserve(seg.begin, seg.end, seg.hz);
    }
    std::sort(events.begin(), events.end());
    double level = 0.0;
    double peak = 0.0;
    for (std::size_t i = 0; i < events.size();) {
        const double t = events[i].first;
        for (; i < events.size() && events[i].first == t; ++i) level += events[i].second;
        peak = std::max(peak, level);
    }
    return peak;
}

std::vector<std::size_t> nonempty_batches(const Schedule& schedule) {
    const auto sizes = schedule.batch_sizes();
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < sizes.size(); ++n)
        if (sizes[n] > 0) out.push_back(n);
    return out;
}

void apply(const Scenario& scenario, Schedule& schedule, const Checkpoint& cp,
           const ProbeResult& result) {
    const double t_new = result.new_start;
    for (std::size_t b = cp.index + 1; b < cp.next_index; ++b)
        schedule.batch_starts[b] = std::min(schedule.batch_starts[b], t_new);
    schedule.batch_starts[cp.next_index] = t_new;

    for (std::size_t i = 0; i < cp.next_members.size(); ++i) {
        const std::size_t k = cp.next_members[i];
        const Task& task = scenario.tasks[k];
        Allocation& a = *schedule.tasks[k];
        std::vector<UploadSegment> segs;
        if (a.segments.empty()) {
            if (cp.now > 0.0) segs.push_back({0.0, cp.now, a.bandwidth});
        } else {
            for (auto seg : a.segments) {
                seg.end = std::min(seg.end, cp.now);
                if (seg.end > seg.begin) segs.push_back(seg);
            }
        }
        const double residual = cp.next_residual_bits[i];
        if (residual > 0.0) {
            const double from = std::max(task.arrival, cp.now);
            const double hz =
                residual / (spectral_efficiency(task, scenario.noise_power) * (t_new - from));
            segs.push_back({cp.now, t_new, hz});
            a.bandwidth = hz;
        }
        a.segments = std::move(segs);
    }
    for (const std::size_t k : result.admitted) {
        const Task& task = scenario.tasks[k];
        const double from = std::max(task.arrival, cp.now);
        const double hz =
            task.payload_bits / (spectral_efficiency(task, scenario.noise_power) * (t_new - from));
        schedule.tasks[k] = Allocation{cp.next_index, hz, {{std::max(cp.now, 0.0), t_new, hz}}};
    }
}

// Runs the checkpoints whose instant is at or after `clock`. A candidate
// joins the pool at the first such checkpoint at or after `ready[k]`.
Schedule run_checkpoints(const Scenario& scenario, Schedule schedule,
                         const std::vector<std::size_t>& candidates,
                         const std::vector<double>& ready, double clock,
                         const HolesConfig& config) {
    const auto batches = nonempty_batches(schedule);
    const double xi = jbas::BigM::of(scenario).xi;
    std::vector<std::size_t> pool(candidates);
    std::vector<double> pool_ready(ready);
    for (std::size_t j = 0; j + 1 < batches.size(); ++j) {
        const double now = schedule.batch_starts[batches[j]];
        if (now < clock) continue;
        std::vector<std::size_t> open;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pool_ready[i] <= now) open.push_back(pool[i]);
        if (open.empty()) continue;
        const Checkpoint cp = make_checkpoint(scenario, schedule, batches[j], batches[j + 1], open);
        const double bound = j + 2 < batches.size() ? schedule.batch_starts[batches[j + 2]] : xi;
        const ProbeResult result = solve_checkpoint(scenario, cp, bound, config);
        if (result.admitted.empty()) continue;
        apply(scenario, schedule, cp, result);
        std::vector<std::size_t> kept;
        std::vector<double> kept_ready;
        for (std::size_t i = 0; i < pool.size(); ++i) {
            if (std::binary_search(result.admitted.begin(), result.admitted.end(), pool[i])) continue;
            kept.push_back(pool[i]);
            kept_ready.push_back(pool_ready[i]);
        }
        pool = std::move(kept);
        pool_ready = std::move(kept_ready);
    }
    return schedule;
}

}  // namespace

ProbeResult feasibility_probe(const Scenario& scenario, const Checkpoint& state, std::size_t pi,
                              double next_fixed_start, const HolesConfig& config) {
    if (pi > state.unscheduled.size())
        throw std::invalid_argument("feasibility_probe: pi exceeds the number of unscheduled tasks");
    if (pi == 0) return {true, state.next_start, {}};

    const double eps = config.tol.time_margin;
    double cap = next_fixed_start;
    for (const std::size_t k : state.next_members) cap = std::min(cap, scenario.tasks[k].deadline);
    const double delay = batch_delay(pi + state.next_members.size(), scenario.delay_model);

    std::vector<double> candidates;
    for (const std::size_t k : state.unscheduled)
        if (scenario.tasks[k].deadline < cap) candidates.push_back(scenario.tasks[k].deadline);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    candidates.push_back(cap);

    std::vector<std::pair<double, std::size_t>> eligible;
    for (const double tentative : candidates) {
        const double start = tentative - delay;
        if (!(start >= state.current_finish)) continue;

        double used = 0.0;
        bool members_ok = true;
        for (std::size_t i = 0; i < state.next_members.size() && members_ok; ++i) {
            const Task& task = scenario.tasks[state.next_members[i]];
            if (!(start > task.arrival + eps)) {
                members_ok = false;
                break;
            }
            const double residual = state.next_residual_bits[i];
            if (residual > 0.0)
                used += residual / (spectral_efficiency(task, scenario.noise_power) *
                                    (start - std::max(task.arrival, state.now)));
        }
        if (!members_ok || used > state.freed_bandwidth) continue;

        eligible.clear();
        for (const std::size_t k : state.unscheduled) {
            const Task& task = scenario.tasks[k];
            if (!(start > task.arrival + eps) || task.deadline < tentative) continue;
            const double cost = task.payload_bits / (spectral_efficiency(task, scenario.noise_power) *
                                                     (start - std::max(task.arrival, state.now)));
            eligible.emplace_back(cost, k);
        }
        if (eligible.size() < pi) continue;
        std::partial_sort(eligible.begin(), eligible.begin() + static_cast<std::ptrdiff_t>(pi),
                          eligible.end());
        for (std::size_t i = 0; i < pi; ++i) used += eligible[i].first;
        if (used > state.freed_bandwidth) continue;

        ProbeResult out{true, start, {}};
        for (std::size_t i = 0; i < pi; ++i) out.admitted.push_back(eligible[i].second);
        std::sort(out.admitted.begin(), out.admitted.end());
        return out;
    }
    return {false, 0.0, {}};
}

ProbeResult solve_checkpoint(const Scenario& scenario, const Checkpoint& state,
                             double next_fixed_start, const HolesConfig& config) {
    std::size_t lo = 0;
    std::size_t hi = state.unscheduled.size();
    ProbeResult best = feasibility_probe(scenario, state, 0, next_fixed_start, config);
    if (hi == 0) return best;
    while (hi - lo > 1) {
        const std::size_t mid = lo + (hi - lo) / 2;
        ProbeResult r = feasibility_probe(scenario, state, mid, next_fixed_start, config);
        if (r.feasible) {
            lo = mid;
            best = std::move(r);
        } else {
            hi = mid;
        }
    }
    ProbeResult top = feasibility_probe(scenario, state, hi, next_fixed_start, config);
    return top.feasible ? top : best;
}

Checkpoint make_checkpoint(const Scenario& scenario, const Schedule& schedule, std::size_t index,
                           std::size_t next_index, std::vector<std::size_t> unscheduled) {
    const auto sizes = schedule.batch_sizes();
    Checkpoint cp;
    cp.index = index;
    cp.next_index = next_index;
    cp.now = schedule.batch_starts[index];
    cp.current_finish = cp.now + batch_delay(sizes[index], scenario.delay_model);
    cp.unscheduled = std::move(unscheduled);
    cp.next_start = schedule.batch_starts[next_index];

    // The pool is what the finished and the next batch's members reserved;
    // it is capped by the headroom the later batches actually leave, which
    // only binds once earlier passes have reshaped those reservations.
    double reserved = 0.0;
    std::vector<std::size_t> later;
    for (std::size_t k = 0; k < schedule.tasks.size(); ++k) {
        const auto& a = schedule.tasks[k];
        if (!a) continue;
        if (a->batch <= next_index)
            reserved += a->bandwidth;
        else
            later.push_back(k);
        if (a->batch == next_index) {
            cp.next_members.push_back(k);
            const Task& task = scenario.tasks[k];
            const double from = std::max(task.arrival, cp.now);
            cp.next_residual_bits.push_back(
                std::max(0.0, task.payload_bits - delivered_bits(task, *a, from, scenario.noise_power)));
        }
    }
    const double headroom =
        scenario.total_bandwidth - peak_over(schedule, later, cp.now, cp.next_start);
    cp.freed_bandwidth = std::max(0.0, std::min(reserved, headroom));
    return cp;
}

Schedule augment(const Scenario& scenario, const Schedule& schedule, const HolesConfig& config) {
    std::vector<std::size_t> unscheduled;
    for (std::size_t k = 0; k < schedule.tasks.size(); ++k)
        if (!schedule.tasks[k]) unscheduled.push_back(k);
    if (unscheduled.empty()) return schedule;
    const double inf = std::numeric_limits<double>::infinity();
    return run_checkpoints(scenario, schedule, unscheduled,
                           std::vector<double>(unscheduled.size(), -inf), -inf, config);
}

OnlineResult admit_online(const Scenario& scenario, const Schedule& schedule,
                          const std::vector<Task>& new_tasks, double arrival_clock,
                          const HolesConfig& config) {
    OnlineResult out{scenario, schedule};
    const std::size_t base = scenario.size();
    for (std::size_t i = 0; i < new_tasks.size(); ++i) {
        if (new_tasks[i].arrival < arrival_clock)
            throw std::invalid_argument("admit_online: new task arrives before the clock");
        Task t = new_tasks[i];
        t.id = base + i;
        out.scenario.tasks.push_back(t);
        out.schedule.tasks.emplace_back();
    }
    validate(out.scenario);

    // Known tasks can be admitted at any later checkpoint; a new task waits
    // on its device until the first checkpoint after it arrives.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> candidates;
    std::vector<double> ready;
    for (std::size_t k = 0; k < out.schedule.tasks.size(); ++k) {
        if (out.schedule.tasks[k]) continue;
        candidates.push_back(k);
        ready.push_back(k < base ? -inf : out.scenario.tasks[k].arrival);
    }
    if (candidates.empty()) return out;
    out.schedule = run_checkpoints(out.scenario, std::move(out.schedule), candidates, ready,
                                   arrival_clock, config);
    return out;
}

}  // namespace edgebatch::holes
