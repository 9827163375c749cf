#include "edgebatch/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace edgebatch::oracle {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t batch_count(const Assignment& assignment) {
    std::size_t n = 0;
    for (const auto& b : assignment)
        if (b) n = std::max(n, *b + 1);
    return n;
}

double horizon(const Scenario& scenario) {
    double latest = -kInf;
    for (const Task& t : scenario.tasks) latest = std::max(latest, t.deadline);
    return latest + batch_delay(scenario.size(), scenario.delay_model);
}

std::vector<std::vector<std::size_t>> members_of(const Assignment& assignment, std::size_t n) {
    std::vector<std::vector<std::size_t>> members(n);
    for (std::size_t k = 0; k < assignment.size(); ++k)
        if (assignment[k]) members[*assignment[k]].push_back(k);
    return members;
}

Schedule build(const Scenario& scenario, const Assignment& assignment,
               const std::vector<double>& starts, const Tolerances& tol) {
    Schedule s = Schedule::empty(scenario.size());
    s.batch_starts = starts;
    for (std::size_t k = 0; k < assignment.size(); ++k) {
        if (!assignment[k]) continue;
        const double hz = required_bandwidth(scenario.tasks[k], starts[*assignment[k]],
                                             scenario.noise_power, tol.time_margin);
        s.tasks[k] = Allocation{*assignment[k], hz, {}};
    }
    return s;
}

// True when the batch labels used are exactly 0..m-1.
bool labels_are_prefix(const Assignment& assignment) {
    const std::size_t n = batch_count(assignment);
    std::vector<bool> used(n, false);
    for (const auto& b : assignment)
        if (b) used[*b] = true;
    return std::all_of(used.begin(), used.end(), [](bool u) { return u; });
}

}  // namespace

std::optional<std::vector<double>> latest_starts(const Scenario& scenario,
                                                 const Assignment& assignment,
                                                 const Tolerances& tol) {
    const std::size_t n = batch_count(assignment);
    const auto members = members_of(assignment, n);
    std::vector<double> starts(n);
    double next = horizon(scenario);
    for (std::size_t i = n; i-- > 0;) {
        if (members[i].empty()) {
            starts[i] = next;
            continue;
        }
        double earliest_deadline = kInf;
        double latest_arrival = -kInf;
        for (const std::size_t k : members[i]) {
            earliest_deadline = std::min(earliest_deadline, scenario.tasks[k].deadline);
            latest_arrival = std::max(latest_arrival, scenario.tasks[k].arrival);
        }
        starts[i] = std::min(earliest_deadline, next) -
                    batch_delay(members[i].size(), scenario.delay_model);
        if (!(starts[i] > latest_arrival + tol.time_margin)) return std::nullopt;
        next = starts[i];
    }
    return starts;
}

SearchResult exact_search(const Scenario& scenario, std::size_t max_tasks, const Tolerances& tol) {
    const std::size_t num_tasks = scenario.size();
    if (num_tasks > max_tasks)
        throw RefusalError("exact search refuses " + std::to_string(num_tasks) +
                           " tasks (cap " + std::to_string(max_tasks) + ")");
    validate(scenario);

    SearchResult out{Schedule::empty(num_tasks), Assignment(num_tasks), 0, 0};
    std::size_t best = 0;
    bool have_best = false;
    Assignment current(num_tasks);

    // Odometer over {unscheduled, 0, ..., K-1}^K in lexicographic order, so
    // the first optimum met is the lexicographically smallest.
    std::vector<std::size_t> digit(num_tasks, 0);
    for (;;) {
        for (std::size_t k = 0; k < num_tasks; ++k)
            current[k] = digit[k] == 0 ? std::nullopt : std::optional<std::size_t>(digit[k] - 1);
        if (labels_are_prefix(current)) {
            ++out.candidates;
            if (const auto starts = latest_starts(scenario, current, tol)) {
                Schedule candidate = build(scenario, current, *starts, tol);
                if (check_schedule(scenario, candidate, tol).is_feasible()) {
                    ++out.feasible_candidates;
                    const std::size_t count = throughput(candidate);
                    if (!have_best || count > best) {
                        best = count;
                        have_best = true;
                        out.schedule = std::move(candidate);
                        out.assignment = current;
                    }
                }
            }
        }
        std::size_t k = num_tasks;
        while (k > 0 && digit[k - 1] == num_tasks) digit[--k] = 0;
        if (k == 0) break;
        ++digit[k - 1];
    }
    return out;
}

Schedule exact_solve(const Scenario& scenario, std::size_t max_tasks, const Tolerances& tol) {
    return exact_search(scenario, max_tasks, tol).schedule;
}

std::uint64_t ordered_partitions(std::size_t n) {
    // a(n) = sum_{j=1..n} C(n, j) a(n - j), a(0) = 1.
    std::vector<std::uint64_t> a(n + 1, 0);
    a[0] = 1;
    for (std::size_t m = 1; m <= n; ++m) {
        std::uint64_t binom = 1;
        for (std::size_t j = 1; j <= m; ++j) {
            binom = binom * (m - j + 1) / j;
            a[m] += binom * a[m - j];
        }
    }
    return a[n];
}

std::uint64_t enumeration_count(std::size_t num_tasks) {
    std::uint64_t total = 0;
    std::uint64_t binom = 1;
    for (std::size_t j = 0; j <= num_tasks; ++j) {
        total += binom * ordered_partitions(j);
        binom = binom * (num_tasks - j) / (j + 1);
    }
    return total;
}

std::optional<std::vector<double>> grid_cross_check(const Scenario& scenario,
                                                    const Assignment& assignment,
                                                    double resolution, const Tolerances& tol) {
    if (!(resolution > 0.0)) throw std::invalid_argument("grid_cross_check: resolution must be positive");
    const std::size_t n = batch_count(assignment);
    if (n == 0) return std::vector<double>{};
    const auto members = members_of(assignment, n);

    double lo = kInf;
    for (const Task& t : scenario.tasks) lo = std::min(lo, t.arrival);
    const double hi = horizon(scenario);
    const auto points = static_cast<std::size_t>(std::floor((hi - lo) / resolution)) + 1;
    auto grid = [&](std::size_t i) { return lo + static_cast<double>(i) * resolution; };

    std::vector<std::size_t> nonempty;
    for (std::size_t b = 0; b < n; ++b)
        if (!members[b].empty()) nonempty.push_back(b);

    // cost[j][i]: least total bandwidth of batches nonempty[0..j] with batch
    // j at grid point i; parent[j][i] is the predecessor's grid point.
    std::vector<std::vector<double>> cost(nonempty.size(), std::vector<double>(points, kInf));
    std::vector<std::vector<std::size_t>> parent(nonempty.size(), std::vector<std::size_t>(points, 0));
    for (std::size_t j = 0; j < nonempty.size(); ++j) {
        const auto& batch = members[nonempty[j]];
        const double delay = batch_delay(batch.size(), scenario.delay_model);
        double earliest_deadline = kInf;
        double latest_arrival = -kInf;
        for (const std::size_t k : batch) {
            earliest_deadline = std::min(earliest_deadline, scenario.tasks[k].deadline);
            latest_arrival = std::max(latest_arrival, scenario.tasks[k].arrival);
        }
        const double prev_delay =
            j > 0 ? batch_delay(members[nonempty[j - 1]].size(), scenario.delay_model) : 0.0;
        double prefix_best = kInf;
        std::size_t prefix_arg = 0;
        std::size_t reach = 0;  // predecessors with index < reach end in time
        for (std::size_t i = 0; i < points; ++i) {
            const double t = grid(i);
            if (j > 0)
                for (; reach < points && grid(reach) + prev_delay <= t; ++reach)
                    if (cost[j - 1][reach] < prefix_best) {
                        prefix_best = cost[j - 1][reach];
                        prefix_arg = reach;
                    }
            if (!(t > latest_arrival + tol.time_margin) || t + delay > earliest_deadline) continue;
            const double before = j > 0 ? prefix_best : 0.0;
            if (before == kInf) continue;
            double hz = 0.0;
            for (const std::size_t k : batch)
                hz += required_bandwidth(scenario.tasks[k], t, scenario.noise_power, tol.time_margin);
            cost[j][i] = before + hz;
            parent[j][i] = prefix_arg;
        }
    }

    const auto& last = cost.back();
    const auto best = static_cast<std::size_t>(std::min_element(last.begin(), last.end()) - last.begin());
    if (!(last[best] <= scenario.total_bandwidth * (1.0 + tol.rel_bandwidth))) return std::nullopt;

    std::vector<double> starts(n, hi);
    std::size_t i = best;
    for (std::size_t j = nonempty.size(); j-- > 0;) {
        starts[nonempty[j]] = grid(i);
        i = parent[j][i];
    }
    // Empty batches sit at the following start so the order is preserved.
    for (std::size_t b = n; b-- > 0;)
        if (members[b].empty()) starts[b] = b + 1 < n ? starts[b + 1] : hi;
    return starts;
}

}  // namespace edgebatch::oracle
