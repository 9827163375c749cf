#include "edgebatch/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace edgebatch {

namespace {

bool positive_finite(double x) { return std::isfinite(x) && x > 0.0; }

std::string task_context(std::size_t i) { return "task " + std::to_string(i) + ": "; }

}  // namespace

void validate(const Scenario& scenario) {
    if (!positive_finite(scenario.total_bandwidth))
        throw std::invalid_argument("total_bandwidth must be positive");
    if (!positive_finite(scenario.noise_power))
        throw std::invalid_argument("noise_power must be positive");
    if (!positive_finite(scenario.delay_model.per_task))
        throw std::invalid_argument("delay_model.per_task must be positive");
    if (!std::isfinite(scenario.delay_model.fixed) || scenario.delay_model.fixed < 0.0)
        throw std::invalid_argument("delay_model.fixed must be non-negative");
    for (std::size_t i = 0; i < scenario.tasks.size(); ++i) {
        const Task& t = scenario.tasks[i];
        if (t.id != i) throw std::invalid_argument(task_context(i) + "ids must be 0..K-1 in order");
        if (!std::isfinite(t.arrival) || t.arrival < 0.0)
            throw std::invalid_argument(task_context(i) + "arrival must be >= 0");
        if (!std::isfinite(t.deadline) || t.deadline <= t.arrival)
            throw std::invalid_argument(task_context(i) + "deadline must exceed arrival");
        if (!positive_finite(t.payload_bits))
            throw std::invalid_argument(task_context(i) + "payload_bits must be positive");
        if (!positive_finite(t.tx_power))
            throw std::invalid_argument(task_context(i) + "tx_power must be positive");
        if (!positive_finite(t.channel_gain))
            throw std::invalid_argument(task_context(i) + "channel_gain must be positive");
    }
}

Schedule Schedule::empty(std::size_t num_tasks) {
    Schedule s;
    s.tasks.resize(num_tasks);
    return s;
}

std::vector<std::size_t> Schedule::batch_sizes() const {
    std::vector<std::size_t> sizes(batch_starts.size(), 0);
    for (const auto& a : tasks)
        if (a && a->batch < sizes.size()) ++sizes[a->batch];
    return sizes;
}

std::string_view to_string(ConstraintTag tag) noexcept {
    switch (tag) {
        case ConstraintTag::causality: return "causality";
        case ConstraintTag::deadline: return "deadline";
        case ConstraintTag::batch_order: return "batch_order";
        case ConstraintTag::bandwidth_total: return "bandwidth_total";
        case ConstraintTag::multi_assignment: return "multi_assignment";
        case ConstraintTag::upload: return "upload";
    }
    return "unknown";
}

std::size_t FeasibilityReport::count(ConstraintTag tag) const noexcept {
    return static_cast<std::size_t>(std::count_if(
        violations.begin(), violations.end(), [tag](const Violation& v) { return v.tag == tag; }));
}

double spectral_efficiency(double tx_power, double channel_gain, double noise_power) {
    if (!positive_finite(tx_power) || !positive_finite(channel_gain) ||
        !positive_finite(noise_power))
        throw DomainError("spectral_efficiency: inputs must be positive");
    return std::log2(1.0 + tx_power * channel_gain / noise_power);
}

double spectral_efficiency(const Task& task, double noise_power) {
    return spectral_efficiency(task.tx_power, task.channel_gain, noise_power);
}

double batch_delay(std::size_t size, const DelayModel& model) noexcept {
    if (size == 0) return 0.0;
    return model.per_task * static_cast<double>(size) + model.fixed;
}

double required_bandwidth(const Task& task, double batch_start, double noise_power,
                          double time_margin) {
    if (!(batch_start > task.arrival + time_margin))
        throw CausalityError("required_bandwidth: batch starts before task " +
                             std::to_string(task.id) + " has arrived");
    const double rate = spectral_efficiency(task, noise_power);
    return task.payload_bits / (rate * (batch_start - task.arrival));
}

double delivered_bits(const Task& task, const Allocation& alloc, double until,
                      double noise_power) {
    const double rate = spectral_efficiency(task, noise_power);
    if (alloc.segments.empty())
        return alloc.bandwidth * rate * std::max(0.0, until - task.arrival);
    double bits = 0.0;
    for (const auto& seg : alloc.segments) {
        const double lo = std::max(seg.begin, task.arrival);
        const double hi = std::min(seg.end, until);
        if (hi > lo) bits += seg.hz * rate * (hi - lo);
    }
    return bits;
}

double peak_bandwidth(const Schedule& schedule) {
    // (time, delta); releases sort before grants at equal times.
    std::vector<std::pair<double, double>> events;
    auto reserve = [&](double begin, double end, double hz) {
        if (end <= begin) return;
        events.emplace_back(begin, hz);
        events.emplace_back(end, -hz);
    };
    for (const auto& a : schedule.tasks) {
        if (!a || a->batch >= schedule.batch_starts.size()) continue;
        if (a->segments.empty())
            reserve(0.0, schedule.batch_starts[a->batch], a->bandwidth);
        else
            for (const auto& seg : a->segments) reserve(seg.begin, seg.end, seg.hz);
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

FeasibilityReport check_schedule(const Scenario& scenario, const Schedule& schedule,
                                 const Tolerances& tol) {
    const std::size_t num_tasks = scenario.tasks.size();
    const std::size_t num_batches = schedule.batch_starts.size();
    if (schedule.tasks.size() != num_tasks)
        throw StructuralError("schedule lists " + std::to_string(schedule.tasks.size()) +
                              " tasks, scenario has " + std::to_string(num_tasks));
    for (std::size_t k = 0; k < num_tasks; ++k) {
        const auto& a = schedule.tasks[k];
        if (!a) continue;
        if (a->batch >= num_batches)
            throw StructuralError(task_context(k) + "unknown batch " + std::to_string(a->batch));
        if (a->segments.empty() && !positive_finite(a->bandwidth))
            throw StructuralError(task_context(k) + "bandwidth must be positive");
        for (const auto& seg : a->segments)
            if (!positive_finite(seg.hz) || !(seg.end >= seg.begin))
                throw StructuralError(task_context(k) + "malformed upload segment");
    }
    for (const auto& extra : schedule.extra_assignments) {
        if (extra.task >= num_tasks)
            throw StructuralError("unknown task " + std::to_string(extra.task));
        if (extra.batch >= num_batches)
            throw StructuralError(task_context(extra.task) + "unknown batch " +
                                  std::to_string(extra.batch));
    }

    FeasibilityReport report;
    const auto sizes = schedule.batch_sizes();
    const auto& starts = schedule.batch_starts;
    auto time_slack = [&](double bound) { return tol.numeric_eps * std::max(1.0, std::abs(bound)); };

    for (std::size_t k = 0; k < num_tasks; ++k) {
        const auto& a = schedule.tasks[k];
        if (!a) continue;
        const Task& task = scenario.tasks[k];
        const double start = starts[a->batch];
        const double finish = start + batch_delay(sizes[a->batch], scenario.delay_model);
        const bool causal = start > task.arrival + tol.time_margin;
        if (!causal)
            report.violations.push_back({ConstraintTag::causality, k, a->batch,
                                         task.arrival + tol.time_margin - start});
        if (finish > task.deadline + time_slack(task.deadline))
            report.violations.push_back(
                {ConstraintTag::deadline, k, a->batch, finish - task.deadline});
        if (causal) {
            const double bits = delivered_bits(task, *a, start, scenario.noise_power);
            if (bits < task.payload_bits * (1.0 - tol.rel_bandwidth))
                report.violations.push_back(
                    {ConstraintTag::upload, k, a->batch, task.payload_bits - bits});
        }
    }

    for (std::size_t n = 0; n + 1 < num_batches; ++n)
        if (starts[n + 1] < starts[n] - time_slack(starts[n]))
            report.violations.push_back(
                {ConstraintTag::batch_order, std::nullopt, n, starts[n] - starts[n + 1]});

    std::optional<std::size_t> prev;
    for (std::size_t n = 0; n < num_batches; ++n) {
        if (sizes[n] == 0) continue;
        if (prev) {
            const double finish = starts[*prev] + batch_delay(sizes[*prev], scenario.delay_model);
            if (finish > starts[n] + time_slack(starts[n]))
                report.violations.push_back(
                    {ConstraintTag::batch_order, std::nullopt, *prev, finish - starts[n]});
        }
        prev = n;
    }

    const double peak = peak_bandwidth(schedule);
    if (peak > scenario.total_bandwidth * (1.0 + tol.rel_bandwidth))
        report.violations.push_back({ConstraintTag::bandwidth_total, std::nullopt, std::nullopt,
                                     peak - scenario.total_bandwidth});

    for (const auto& extra : schedule.extra_assignments)
        report.violations.push_back(
            {ConstraintTag::multi_assignment, extra.task, extra.batch, 1.0});
    return report;
}

std::size_t throughput(const Schedule& schedule) noexcept {
    return static_cast<std::size_t>(std::count_if(
        schedule.tasks.begin(), schedule.tasks.end(), [](const auto& a) { return a.has_value(); }));
}

}  // namespace edgebatch
