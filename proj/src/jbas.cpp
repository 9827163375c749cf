#include "edgebatch/jbas.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <numeric>

namespace edgebatch::jbas {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::size_t slot_count(const Scenario& scenario, const SolverConfig& config) {
    const std::size_t k = scenario.size();
    return config.max_batches == 0 ? k : std::min(config.max_batches, k);
}

std::vector<double> rates_of(const Scenario& scenario) {
    std::vector<double> r(scenario.size());
    for (std::size_t k = 0; k < r.size(); ++k)
        r[k] = spectral_efficiency(scenario.tasks[k], scenario.noise_power);
    return r;
}

std::vector<double> initial_grid(const Scenario& scenario, std::size_t num_batches) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const Task& t : scenario.tasks) {
        lo = std::min(lo, t.arrival);
        hi = std::max(hi, t.deadline);
    }
    std::vector<double> t(num_batches, hi);
    if (num_batches > 1)
        for (std::size_t n = 0; n < num_batches; ++n)
            t[n] = lo + (hi - lo) * static_cast<double>(n) / static_cast<double>(num_batches - 1);
    return t;
}

double demand(const Task& task, double rate, double start) {
    return task.payload_bits / (rate * (start - task.arrival));
}

std::size_t assigned_count(const Association& assoc) {
    return static_cast<std::size_t>(
        std::count_if(assoc.begin(), assoc.end(), [](const auto& a) { return a.has_value(); }));
}

// Value of the partial Lagrangian at `assoc`, used only to detect a stalled
// inner loop.
double lagrangian(const Association& assoc, const DualState& duals, const Residuals& res,
                  double xi, double bandwidth) {
    double value = static_cast<double>(assigned_count(assoc));
    const double time_scale = xi * xi;
    for (std::size_t i = 0; i < duals.beta.size(); ++i)
        value -= duals.beta[i] * res.deadline[i] * time_scale;
    for (std::size_t n = 0; n < duals.gamma.size(); ++n)
        value -= duals.gamma[n] * res.causality[n] * time_scale;
    value -= duals.rho * res.bandwidth * bandwidth * bandwidth;
    return value;
}

struct Incumbent {
    Association assoc;
    std::vector<double> starts;
    std::size_t count = 0;
};

}  // namespace

void validate(const SolverConfig& c) {
    if (!(c.delta > 0.0 && c.delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
    if (!(c.dual_step0 > 0.0)) throw std::invalid_argument("dual_step0 must be positive");
    if (c.dual_max_iters < 1 || c.outer_max_iters < 1 || c.dual_window < 1)
        throw std::invalid_argument("iteration caps must be >= 1");
    if (!(c.dual_tol > 0.0) || !(c.outer_tol > 0.0))
        throw std::invalid_argument("tolerances must be positive");
}

DualState DualState::zeros(std::size_t num_tasks, std::size_t num_batches) {
    DualState d;
    d.num_tasks = num_tasks;
    d.num_batches = num_batches;
    d.beta.assign(num_tasks * num_batches, 0.0);
    d.gamma.assign(num_batches, 0.0);
    return d;
}

BigM BigM::of(const Scenario& scenario) {
    double latest = 0.0;
    for (const Task& t : scenario.tasks) latest = std::max(latest, t.deadline);
    return {latest + batch_delay(scenario.size(), scenario.delay_model)};
}

double approx_delay(double batch_size, double theta, double psi, const DelayModel& model) {
    return (model.per_task + model.fixed * theta) * batch_size + model.fixed * psi;
}

ReweightState update_reweight(std::span<const double> prev_sums, double delta) {
    ReweightState rw;
    rw.prev_sums.assign(prev_sums.begin(), prev_sums.end());
    rw.theta.resize(prev_sums.size());
    rw.psi.resize(prev_sums.size());
    const double norm = std::log1p(1.0 / delta);
    for (std::size_t n = 0; n < prev_sums.size(); ++n) {
        const double m = prev_sums[n];
        rw.theta[n] = 1.0 / ((delta + m) * norm);
        rw.psi[n] = (std::log1p(m / delta) - m / (delta + m)) / norm;
    }
    return rw;
}

std::vector<double> batch_sums(const Association& assoc, std::size_t num_batches) {
    std::vector<double> sums(num_batches, 0.0);
    for (const auto& a : assoc)
        if (a && *a < num_batches) sums[*a] += 1.0;
    return sums;
}

std::vector<double> association_coefficients(const Scenario& scenario,
                                              std::span<const double> batch_starts,
                                              const DualState& duals, const ReweightState& rw,
                                              BigM xi, const Tolerances& tol,
                                              const AssociationMask& mask) {
    const std::size_t num_tasks = scenario.size();
    const std::size_t num_batches = batch_starts.size();
    const auto& model = scenario.delay_model;

    std::vector<double> slope(num_batches);
    std::vector<double> shared(num_batches);
    for (std::size_t n = 0; n < num_batches; ++n) {
        double beta_sum = 0.0;
        for (std::size_t k = 0; k < num_tasks; ++k) beta_sum += duals.beta_at(k, n);
        slope[n] = model.per_task + model.fixed * rw.theta[n];
        shared[n] = 1.0 - slope[n] * (beta_sum + duals.gamma[n]);
    }

    std::vector<double> mu(num_tasks * num_batches, kNegInf);
    for (std::size_t k = 0; k < num_tasks; ++k) {
        const Task& task = scenario.tasks[k];
        const double rate = spectral_efficiency(task, scenario.noise_power);
        for (std::size_t n = 0; n < num_batches; ++n) {
            const double t = batch_starts[n];
            if (!(t > task.arrival + tol.time_margin)) continue;
            const double bw = demand(task, rate, t);
            if (mask.per_task_bandwidth_cap && bw > *mask.per_task_bandwidth_cap) continue;
            mu[k * num_batches + n] = shared[n] - xi.xi * duals.beta_at(k, n) - duals.rho * bw;
        }
    }
    return mu;
}

Association associate_tasks(const Scenario& scenario, std::span<const double> batch_starts,
                            const DualState& duals, const ReweightState& rw, BigM xi,
                            const Tolerances& tol, const AssociationMask& mask) {
    const std::size_t num_batches = batch_starts.size();
    const auto mu = association_coefficients(scenario, batch_starts, duals, rw, xi, tol, mask);
    Association assoc(scenario.size());
    for (std::size_t k = 0; k < assoc.size(); ++k) {
        double best = 0.0;
        for (std::size_t n = 0; n < num_batches; ++n) {
            // Strict comparison keeps the lowest index among ties.
            if (mu[k * num_batches + n] > best) {
                best = mu[k * num_batches + n];
                assoc[k] = n;
            }
        }
    }
    return assoc;
}

Residuals compute_residuals(const Scenario& scenario, std::span<const double> batch_starts,
                            const Association& assoc, BigM xi, bool global_bandwidth) {
    const std::size_t num_tasks = scenario.size();
    const std::size_t num_batches = batch_starts.size();
    const double time_scale = xi.xi * xi.xi;
    const double band_scale = scenario.total_bandwidth * scenario.total_bandwidth;

    std::vector<std::size_t> sizes(num_batches, 0);
    for (const auto& a : assoc)
        if (a) ++sizes[*a];
    std::vector<double> finish(num_batches);
    for (std::size_t n = 0; n < num_batches; ++n)
        finish[n] = batch_starts[n] + batch_delay(sizes[n], scenario.delay_model);

    Residuals res;
    res.deadline.resize(num_tasks * num_batches);
    double used = 0.0;
    for (std::size_t k = 0; k < num_tasks; ++k) {
        const Task& task = scenario.tasks[k];
        for (std::size_t n = 0; n < num_batches; ++n) {
            const bool member = assoc[k] == n;
            const double slack = finish[n] - task.deadline - (member ? 0.0 : xi.xi);
            res.deadline[k * num_batches + n] = slack / time_scale;
        }
        if (assoc[k]) {
            const double t = batch_starts[*assoc[k]];
            used += demand(task, spectral_efficiency(task, scenario.noise_power), t);
        }
    }
    res.causality.assign(num_batches, 0.0);
    for (std::size_t n = 0; n + 1 < num_batches; ++n)
        res.causality[n] = (finish[n] - batch_starts[n + 1]) / time_scale;
    res.bandwidth = global_bandwidth ? (used - scenario.total_bandwidth) / band_scale : 0.0;
    return res;
}

DualState update_duals(const DualState& duals, const Residuals& residuals, int iter,
                       const SolverConfig& config) {
    const double step = config.dual_step0 / std::sqrt(static_cast<double>(std::max(iter, 1)));
    DualState out = duals;
    for (std::size_t i = 0; i < out.beta.size(); ++i)
        out.beta[i] = std::max(0.0, out.beta[i] + step * residuals.deadline[i]);
    for (std::size_t n = 0; n < out.gamma.size(); ++n)
        out.gamma[n] = std::max(0.0, out.gamma[n] + step * residuals.causality[n]);
    if (!out.gamma.empty()) out.gamma.back() = 0.0;
    out.rho = std::max(0.0, out.rho + step * residuals.bandwidth);
    return out;
}

StartTimes batch_start_times(const Scenario& scenario, const Association& assoc,
                             std::size_t num_batches, BigM xi, const Tolerances& tol) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<std::size_t> sizes(num_batches, 0);
    std::vector<double> earliest_deadline(num_batches, inf);
    std::vector<double> latest_arrival(num_batches, -inf);
    for (std::size_t k = 0; k < assoc.size(); ++k) {
        if (!assoc[k]) continue;
        const std::size_t n = *assoc[k];
        if (n >= num_batches) throw StructuralError("association references unknown batch");
        ++sizes[n];
        earliest_deadline[n] = std::min(earliest_deadline[n], scenario.tasks[k].deadline);
        latest_arrival[n] = std::max(latest_arrival[n], scenario.tasks[k].arrival);
    }

    StartTimes out;
    out.starts.assign(num_batches, xi.xi);
    double next = xi.xi;
    for (std::size_t i = num_batches; i-- > 0;) {
        if (sizes[i] == 0) {
            out.starts[i] = next;
            continue;
        }
        out.starts[i] = std::min(earliest_deadline[i], next) - batch_delay(sizes[i], scenario.delay_model);
        if (!(out.starts[i] > latest_arrival[i] + tol.time_margin)) out.flagged.push_back(i);
        next = out.starts[i];
    }
    std::reverse(out.flagged.begin(), out.flagged.end());
    return out;
}

Schedule make_schedule(const Scenario& scenario, const Association& assoc,
                       std::span<const double> batch_starts, const Tolerances& tol) {
    Schedule s = Schedule::empty(scenario.size());
    s.batch_starts.assign(batch_starts.begin(), batch_starts.end());
    for (std::size_t k = 0; k < assoc.size(); ++k) {
        if (!assoc[k]) continue;
        const double bw = required_bandwidth(scenario.tasks[k], batch_starts[*assoc[k]],
                                             scenario.noise_power, tol.time_margin);
        s.tasks[k] = Allocation{*assoc[k], bw, {}};
    }
    return s;
}

std::pair<Association, std::vector<double>> repair(const Scenario& scenario, Association assoc,
                                                   std::size_t num_batches, BigM xi,
                                                   const BandwidthPolicy& policy,
                                                   const Tolerances& tol) {
    const auto rates = rates_of(scenario);
    for (;;) {
        StartTimes st = batch_start_times(scenario, assoc, num_batches, xi, tol);
        if (!st.flagged.empty()) {
            // The latest arrival in a flagged batch is what pins its start too
            // early; removing it shrinks the batch and moves the start later.
            for (const std::size_t n : st.flagged) {
                std::optional<std::size_t> victim;
                for (std::size_t k = 0; k < assoc.size(); ++k)
                    if (assoc[k] == n &&
                        (!victim || scenario.tasks[k].arrival > scenario.tasks[*victim].arrival))
                        victim = k;
                assoc[*victim].reset();
            }
            continue;
        }

        std::optional<std::size_t> worst;
        double worst_bw = 0.0;
        double total = 0.0;
        bool over_cap = false;
        for (std::size_t k = 0; k < assoc.size(); ++k) {
            if (!assoc[k]) continue;
            const double bw = demand(scenario.tasks[k], rates[k], st.starts[*assoc[k]]);
            total += bw;
            if (policy.per_task_cap && bw > *policy.per_task_cap) over_cap = true;
            if (!worst || bw > worst_bw) {
                worst = k;
                worst_bw = bw;
            }
        }
        const bool over_budget = !policy.per_task_cap && total > scenario.total_bandwidth;
        if (!over_budget && !over_cap) return {std::move(assoc), std::move(st.starts)};
        assoc[*worst].reset();
    }
}

namespace {

// Latest start times of `assoc` when it is feasible under `policy`.
std::optional<std::vector<double>> admissible_starts(const Scenario& scenario, const Association& assoc,
                                                     std::size_t num_batches, BigM xi,
                                                     const BandwidthPolicy& policy,
                                                     const Tolerances& tol,
                                                     const std::vector<double>& rates) {
    StartTimes st = batch_start_times(scenario, assoc, num_batches, xi, tol);
    if (!st.flagged.empty()) return std::nullopt;
    double total = 0.0;
    for (std::size_t k = 0; k < assoc.size(); ++k) {
        if (!assoc[k]) continue;
        const double bw = demand(scenario.tasks[k], rates[k], st.starts[*assoc[k]]);
        if (policy.per_task_cap && bw > *policy.per_task_cap) return std::nullopt;
        total += bw;
    }
    if (!policy.per_task_cap && total > scenario.total_bandwidth) return std::nullopt;
    return std::move(st.starts);
}

}  // namespace

Association recover(const Scenario& scenario, std::span<const double> batch_starts,
                    std::span<const double> mu, BigM xi, const BandwidthPolicy& policy) {
    const std::size_t num_tasks = scenario.size();
    const std::size_t num_batches = batch_starts.size();
    const auto& model = scenario.delay_model;
    const double inf = std::numeric_limits<double>::infinity();

    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t k = 0; k < num_tasks; ++k) {
        const auto row = mu.subspan(k * num_batches, num_batches);
        const double best = *std::max_element(row.begin(), row.end());
        if (best > kNegInf) order.emplace_back(-best, k);
    }
    std::sort(order.begin(), order.end());

    std::vector<std::size_t> sizes(num_batches, 0);
    std::vector<double> earliest_deadline(num_batches, inf);
    Association assoc(num_tasks);
    double used = 0.0;
    std::vector<std::pair<double, std::size_t>> slots;
    for (const auto& entry : order) {
        const std::size_t k = entry.second;
        const Task& task = scenario.tasks[k];
        const double rate = spectral_efficiency(task, scenario.noise_power);
        slots.clear();
        for (std::size_t n = 0; n < num_batches; ++n)
            if (mu[k * num_batches + n] > kNegInf) slots.emplace_back(-mu[k * num_batches + n], n);
        std::sort(slots.begin(), slots.end());
        for (const auto& slot : slots) {
            const std::size_t n = slot.second;
            const double t = batch_starts[n];
            const double next = n + 1 < num_batches ? batch_starts[n + 1] : xi.xi;
            const double finish = t + batch_delay(sizes[n] + 1, model);
            if (finish > std::min({earliest_deadline[n], task.deadline, next})) continue;
            const double bw = demand(task, rate, t);
            if (policy.per_task_cap ? bw > *policy.per_task_cap
                                    : used + bw > scenario.total_bandwidth)
                continue;
            assoc[k] = n;
            ++sizes[n];
            earliest_deadline[n] = std::min(earliest_deadline[n], task.deadline);
            used += bw;
            break;
        }
    }
    return assoc;
}

std::pair<Association, std::vector<double>> fill(const Scenario& scenario, Association assoc,
                                                 std::span<const std::size_t> order, std::size_t num_batches,
                                                 BigM xi, const BandwidthPolicy& policy,
                                                 const Tolerances& tol) {
    const auto rates = rates_of(scenario);
    if (!admissible_starts(scenario, assoc, num_batches, xi, policy, tol, rates))
        throw std::invalid_argument("fill: association is not feasible");

    // Relabel the batches 0..m-1 in order so that a new batch can be opened
    // in any gap by shifting the labels behind it.
    std::vector<std::size_t> label(num_batches, num_batches);
    for (const auto& a : assoc)
        if (a) label[*a] = 0;
    std::size_t used = 0;
    for (auto& l : label)
        if (l == 0) l = used++;
    for (auto& a : assoc)
        if (a) a = label[*a];
    auto starts = admissible_starts(scenario, assoc, num_batches, xi, policy, tol, rates);

    auto total_demand = [&](const Association& as, const std::vector<double>& st) {
        double total = 0.0;
        for (std::size_t k = 0; k < as.size(); ++k)
            if (as[k]) total += demand(scenario.tasks[k], rates[k], st[*as[k]]);
        return total;
    };

    Association trial;
    for (const std::size_t k : order) {
        if (assoc[k]) continue;
        // Placements: join batch j (j < used) or open a batch in gap g,
        // encoded as used + g. The cheapest feasible one wins; joins come
        // first among equals.
        std::optional<std::size_t> best;
        double best_total = 0.0;
        std::optional<std::vector<double>> best_starts;
        const std::size_t gaps = used < num_batches ? used + 1 : 0;
        for (std::size_t p = 0; p < used + gaps; ++p) {
            trial = assoc;
            if (p < used) {
                trial[k] = p;
            } else {
                const std::size_t gap = p - used;
                for (auto& a : trial)
                    if (a && *a >= gap) a = *a + 1;
                trial[k] = gap;
            }
            auto st = admissible_starts(scenario, trial, num_batches, xi, policy, tol, rates);
            if (!st) continue;
            const double total = total_demand(trial, *st);
            if (!best || total < best_total) {
                best = p;
                best_total = total;
                best_starts = std::move(st);
            }
        }
        if (!best) continue;
        if (*best < used) {
            assoc[k] = *best;
        } else {
            const std::size_t gap = *best - used;
            for (auto& a : assoc)
                if (a && *a >= gap) a = *a + 1;
            assoc[k] = gap;
            ++used;
        }
        starts = std::move(best_starts);
    }
    return {std::move(assoc), std::move(*starts)};
}

Schedule solve(const Scenario& scenario, const SolverConfig& config) {
    return solve(scenario, config, BandwidthPolicy{});
}

Schedule solve(const Scenario& scenario, const SolverConfig& config, const BandwidthPolicy& policy) {
    validate(config);
    validate(scenario);
    const std::size_t num_tasks = scenario.size();
    if (num_tasks == 0) return Schedule::empty(0);

    const std::size_t num_batches = slot_count(scenario, config);
    const BigM xi = BigM::of(scenario);
    const Tolerances& tol = config.tol;
    AssociationMask mask;
    mask.per_task_bandwidth_cap = policy.per_task_cap;

    // Polishing orders: the dual ranking, and least slack first.
    std::vector<std::size_t> by_slack(num_tasks);
    std::iota(by_slack.begin(), by_slack.end(), 0);
    std::stable_sort(by_slack.begin(), by_slack.end(), [&](std::size_t i, std::size_t j) {
        const Task& a = scenario.tasks[i];
        const Task& b = scenario.tasks[j];
        return a.deadline - a.arrival < b.deadline - b.arrival;
    });

    // Cheapest first: demand at the latest start a task could ever get.
    std::vector<std::size_t> by_cost(num_tasks);
    std::iota(by_cost.begin(), by_cost.end(), 0);
    {
        std::vector<double> cost(num_tasks);
        for (std::size_t k = 0; k < num_tasks; ++k) {
            const Task& t = scenario.tasks[k];
            const double window = t.deadline - batch_delay(1, scenario.delay_model) - t.arrival;
            cost[k] = window > 0.0 ? t.payload_bits / (spectral_efficiency(t, scenario.noise_power) * window)
                                   : std::numeric_limits<double>::infinity();
        }
        std::stable_sort(by_cost.begin(), by_cost.end(),
                         [&](std::size_t i, std::size_t j) { return cost[i] < cost[j]; });
    }

    std::vector<double> starts = initial_grid(scenario, num_batches);
    auto consider = [&](Incumbent& inc, const Association& assoc) {
        if (assigned_count(assoc) <= inc.count) return;
        auto [fixed, fixed_starts] = repair(scenario, assoc, num_batches, xi, policy, tol);
        const std::size_t count = assigned_count(fixed);
        if (count > inc.count) inc = {std::move(fixed), std::move(fixed_starts), count};
    };

    Incumbent best{Association(num_tasks), std::vector<double>(num_batches, xi.xi), 0};
    std::vector<double> prev_sums(num_batches, 0.0);
    double prev_objective = std::numeric_limits<double>::quiet_NaN();

    for (int outer = 1; outer <= config.outer_max_iters; ++outer) {
        const ReweightState rw = update_reweight(prev_sums, config.delta);
        DualState duals = DualState::zeros(num_tasks, num_batches);
        Incumbent round{Association(num_tasks), {}, 0};
        std::deque<double> history;
        std::vector<double> mu;
        for (int it = 1; it <= config.dual_max_iters; ++it) {
            mu = association_coefficients(scenario, starts, duals, rw, xi, tol, mask);
            const Association assoc = associate_tasks(scenario, starts, duals, rw, xi, tol, mask);
            // Dual iterates are rarely primal feasible; both the repaired
            // iterate and a fixed-start recovery in coefficient order are
            // candidates for the round's incumbent.
            consider(round, recover(scenario, starts, mu, xi, policy));
            consider(round, assoc);

            const Residuals res = compute_residuals(scenario, starts, assoc, xi, !policy.per_task_cap);
            history.push_back(lagrangian(assoc, duals, res, xi.xi, scenario.total_bandwidth));
            if (static_cast<int>(history.size()) > config.dual_window) {
                history.pop_front();
                const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
                if (*hi - *lo <= config.dual_tol * std::max(1.0, std::abs(history.back()))) break;
            }
            duals = update_duals(duals, res, it, config);
        }

        // Admit leftovers wherever the latest-start sweep still finds room.
        std::vector<std::size_t> by_rank(num_tasks);
        std::iota(by_rank.begin(), by_rank.end(), 0);
        std::vector<double> rank(num_tasks, kNegInf);
        for (std::size_t k = 0; k < num_tasks; ++k)
            for (std::size_t n = 0; n < num_batches; ++n) rank[k] = std::max(rank[k], mu[k * num_batches + n]);
        std::stable_sort(by_rank.begin(), by_rank.end(),
                         [&](std::size_t i, std::size_t j) { return rank[i] > rank[j]; });
        const Association dual_pick = round.assoc;
        const Association empty(num_tasks);
        const std::pair<const Association*, const std::vector<std::size_t>*> polishes[] = {
            {&dual_pick, &by_rank}, {&dual_pick, &by_slack}, {&dual_pick, &by_cost}, {&empty, &by_cost}};
        for (const auto& [seed, order] : polishes) {
            auto [assoc, polished] = fill(scenario, *seed, *order, num_batches, xi, policy, tol);
            const std::size_t count = assigned_count(assoc);
            if (count > round.count) round = Incumbent{std::move(assoc), std::move(polished), count};
        }

        // Nothing schedulable at these starts; another round would repeat it.
        if (round.count == 0) break;
        // The round's incumbent, timed by the latest-start sweep, seeds the
        // next linearization.
        starts = round.starts;
        prev_sums = batch_sums(round.assoc, num_batches);
        if (round.count > best.count) best = round;

        const double objective = static_cast<double>(round.count);
        if (!std::isnan(prev_objective) &&
            std::abs(objective - prev_objective) <= config.outer_tol * std::max(1.0, std::abs(prev_objective)))
            break;
        prev_objective = objective;
    }

    return make_schedule(scenario, best.assoc, best.starts, tol);
}

}  // namespace edgebatch::jbas
