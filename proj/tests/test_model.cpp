#include <doctest.h>

#include <cmath>
#include <random>

#include "edgebatch/model.hpp"
#include "support.hpp"

using namespace edgebatch;
using edgebatch::test::make_scenario;
using edgebatch::test::unit_task;

TEST_CASE("spectral efficiency") {
    CHECK(spectral_efficiency(1.0, 1.0, 1.0) == 1.0);
    const double tiny = spectral_efficiency(1e-12, 1.0, 1.0);
    CHECK(tiny > 0.0);
    CHECK(tiny < 1e-11);
    CHECK(spectral_efficiency(100.0, 1.0, 1.0) == doctest::Approx(6.65821).epsilon(1e-6));
    CHECK(spectral_efficiency(100.0, 1.0, 1.0) == doctest::Approx(6.658211482751795).epsilon(1e-15));
    CHECK(spectral_efficiency(1.0, 2.0, 1.0) > spectral_efficiency(1.0, 1.0, 1.0));

    CHECK_THROWS_AS(spectral_efficiency(0.0, 1.0, 1.0), DomainError);
    CHECK_THROWS_AS(spectral_efficiency(1.0, -1.0, 1.0), DomainError);
    CHECK_THROWS_AS(spectral_efficiency(1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("batch delay") {
    const DelayModel m{0.005, 0.020};
    CHECK(batch_delay(0, m) == 0.0);
    CHECK(batch_delay(1, m) == doctest::Approx(0.025).epsilon(1e-15));
    CHECK(batch_delay(10, m) == doctest::Approx(0.070).epsilon(1e-15));

    SUBCASE("increments equal the per-task cost") {
        // Dyadic coefficients make the arithmetic exact.
        const DelayModel exact{0.0078125, 0.03125};
        for (std::size_t size = 2; size < 200; ++size)
            CHECK(batch_delay(size, exact) - batch_delay(size - 1, exact) == exact.per_task);
        for (std::size_t size = 2; size < 200; ++size)
            CHECK(batch_delay(size, m) - batch_delay(size - 1, m) == doctest::Approx(m.per_task).epsilon(1e-12));
    }
    SUBCASE("monotone") {
        for (std::size_t size = 1; size < 200; ++size) CHECK(batch_delay(size, m) >= batch_delay(size - 1, m));
    }
}

TEST_CASE("required bandwidth") {
    Task t{0, 0.0, 2.0, 80'000.0, 100.0, 1.0};
    const double bw = required_bandwidth(t, 0.5, 1.0);
    CHECK(bw == doctest::Approx(24030.5).epsilon(1e-5));
    CHECK(bw == doctest::Approx(24030.477315790074).epsilon(1e-14));
    CHECK(required_bandwidth(t, 1.0, 1.0) == doctest::Approx(bw / 2.0).epsilon(1e-15));
    CHECK_THROWS_AS(required_bandwidth(t, 0.0, 1.0), CausalityError);
    CHECK_THROWS_AS(required_bandwidth(t, 0.5e-9, 1.0), CausalityError);

    SUBCASE("bandwidth times window times rate recovers the payload") {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int i = 0; i < 1000; ++i) {
            Task r{0, u(rng), 5.0, 1e3 + 1e5 * u(rng), 0.1 + 100 * u(rng), 1e-4 + u(rng)};
            const double start = r.arrival + 1e-6 + 2.0 * u(rng);
            const double rate = spectral_efficiency(r, 1.0);
            CHECK(required_bandwidth(r, start, 1.0) * (start - r.arrival) * rate ==
                  doctest::Approx(r.payload_bits).epsilon(1e-12));
        }
    }
    SUBCASE("strictly decreasing in the start") {
        double prev = required_bandwidth(t, 0.01, 1.0);
        for (double s = 0.02; s < 2.0; s += 0.01) {
            const double cur = required_bandwidth(t, s, 1.0);
            CHECK(cur < prev);
            prev = cur;
        }
    }
}

namespace {

Schedule static_schedule(const Scenario& sc, std::vector<double> starts,
                         const std::vector<std::pair<std::size_t, std::size_t>>& assign) {
    Schedule s = Schedule::empty(sc.size());
    s.batch_starts = std::move(starts);
    for (const auto& [k, n] : assign)
        s.tasks[k] = Allocation{n, required_bandwidth(sc.tasks[k], s.batch_starts[n], sc.noise_power), {}};
    return s;
}

}  // namespace

TEST_CASE("check_schedule examples") {
    SUBCASE("empty schedule is feasible") {
        const Scenario sc = make_scenario({unit_task(0, 0.0, 1.0), unit_task(1, 0.2, 1.5)}, 1e6);
        const FeasibilityReport r = check_schedule(sc, Schedule::empty(2));
        CHECK(r.is_feasible());
        CHECK(r.violations.empty());
    }
    SUBCASE("start before arrival is one causality violation") {
        const Scenario sc = make_scenario({unit_task(0, 0.5, 2.0)}, 1e6);
        Schedule s = Schedule::empty(1);
        s.batch_starts = {0.4};
        s.tasks[0] = Allocation{0, 1e5, {}};
        const FeasibilityReport r = check_schedule(sc, s);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].tag == ConstraintTag::causality);
        CHECK(r.violations[0].task == 0u);
        CHECK(r.violations[0].magnitude == doctest::Approx(0.1 + 1e-9));
    }
    SUBCASE("bandwidth 5% over budget") {
        // Unit rate: task 0 needs 700 bits over [0, 1) -> 700 Hz; task 1 needs
        // 700 bits over [0, 2) -> 350 Hz. Sum 1050 Hz against B = 1000 Hz.
        const Scenario sc = make_scenario({unit_task(0, 0.0, 5.0, 700.0), unit_task(1, 0.0, 5.0, 700.0)}, 1000.0);
        const Schedule s = static_schedule(sc, {1.0, 2.0}, {{0, 0}, {1, 1}});
        CHECK(s.tasks[0]->bandwidth == doctest::Approx(700.0));
        CHECK(s.tasks[1]->bandwidth == doctest::Approx(350.0));
        const FeasibilityReport r = check_schedule(sc, s);
        REQUIRE(r.violations.size() == 1);
        CHECK(r.violations[0].tag == ConstraintTag::bandwidth_total);
        CHECK(r.violations[0].magnitude == doctest::Approx(0.05 * sc.total_bandwidth).epsilon(1e-12));
    }
    SUBCASE("deadline and batch order") {
        const Scenario sc = make_scenario({unit_task(0, 0.0, 1.0), unit_task(1, 0.0, 3.0)}, 1e9);
        // Batch 0 finishes at 0.99 + 0.025 > 1.0 and after batch 1 starts.
        const Schedule s = static_schedule(sc, {0.99, 1.0}, {{0, 0}, {1, 1}});
        const FeasibilityReport r = check_schedule(sc, s);
        CHECK(r.count(ConstraintTag::deadline) == 1);
        CHECK(r.count(ConstraintTag::batch_order) == 1);
        CHECK(r.violations.size() == 2);
    }
    SUBCASE("decreasing starts are a batch order violation") {
        const Scenario sc = make_scenario({unit_task(0, 0.0, 3.0)}, 1e9);
        const Schedule s = static_schedule(sc, {1.0, 0.5}, {{0, 0}});
        CHECK(check_schedule(sc, s).count(ConstraintTag::batch_order) == 1);
    }
    SUBCASE("multi-assignment") {
        const Scenario sc = make_scenario({unit_task(0, 0.0, 3.0)}, 1e9);
        Schedule s = static_schedule(sc, {1.0, 2.0}, {{0, 0}});
        s.extra_assignments.push_back({0, 1});
        const FeasibilityReport r = check_schedule(sc, s);
        CHECK(r.count(ConstraintTag::multi_assignment) == 1);
        CHECK_FALSE(r.is_feasible());
    }
    SUBCASE("structural errors are not infeasibility") {
        const Scenario sc = make_scenario({unit_task(0, 0.0, 3.0)}, 1e9);
        Schedule s = Schedule::empty(1);
        s.batch_starts = {1.0};
        s.tasks[0] = Allocation{3, 10.0, {}};
        CHECK_THROWS_AS(check_schedule(sc, s), StructuralError);
        s.tasks[0] = Allocation{0, -1.0, {}};
        CHECK_THROWS_AS(check_schedule(sc, s), StructuralError);
        CHECK_THROWS_AS(check_schedule(sc, Schedule::empty(2)), StructuralError);
    }
    SUBCASE("short upload is flagged") {
        const Scenario sc = make_scenario({unit_task(0, 0.0, 3.0)}, 1e9);
        Schedule s = static_schedule(sc, {1.0}, {{0, 0}});
        s.tasks[0]->bandwidth *= 0.9;
        CHECK(check_schedule(sc, s).count(ConstraintTag::upload) == 1);
    }
    SUBCASE("segments reuse bandwidth over time") {
        // Two uploads back to back each use the whole band.
        const Scenario sc = make_scenario({unit_task(0, 0.0, 3.0, 1000.0), unit_task(1, 0.0, 3.0, 1000.0)}, 1000.0);
        Schedule s = Schedule::empty(2);
        s.batch_starts = {1.0, 2.0};
        s.tasks[0] = Allocation{0, 1000.0, {{0.0, 1.0, 1000.0}}};
        s.tasks[1] = Allocation{1, 1000.0, {{1.0, 2.0, 1000.0}}};
        CHECK(check_schedule(sc, s).is_feasible());
        s.tasks[1]->segments = {{0.5, 1.5, 1000.0}};
        const FeasibilityReport r = check_schedule(sc, s);
        CHECK(r.count(ConstraintTag::bandwidth_total) == 1);
    }
}

TEST_CASE("check_schedule agrees with independent arithmetic on random schedules") {
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const DelayModel delay{0.005, 0.020};
    int feasible_seen = 0;
    for (int trial = 0; trial < 2000; ++trial) {
        const std::size_t num_tasks = 1 + rng() % 6;
        std::vector<Task> tasks;
        for (std::size_t k = 0; k < num_tasks; ++k) {
            const double arrival = u(rng);
            tasks.push_back(Task{k, arrival, arrival + 0.03 + 1.5 * u(rng), 1e3 + 1e4 * u(rng), 1.0, 0.5 + u(rng)});
        }
        const Scenario sc = make_scenario(tasks, 2e4 + 2e5 * u(rng), delay);
        const std::size_t num_batches = 1 + rng() % 4;
        Schedule s = Schedule::empty(num_tasks);
        double t = 0.2 * u(rng);
        for (std::size_t n = 0; n < num_batches; ++n) {
            t += 0.6 * u(rng);
            s.batch_starts.push_back(t);
        }
        if (trial % 7 == 0) std::swap(s.batch_starts.front(), s.batch_starts.back());
        for (std::size_t k = 0; k < num_tasks; ++k) {
            if (u(rng) < 0.3) continue;
            const std::size_t n = rng() % num_batches;
            const double window = s.batch_starts[n] - tasks[k].arrival;
            const double need = window > 0 ? tasks[k].payload_bits / (std::log2(1.0 + tasks[k].tx_power * tasks[k].channel_gain) * window) : 1e3;
            s.tasks[k] = Allocation{n, need * (u(rng) < 0.9 ? 1.0 : 0.5), {}};
        }

        // Independent verdict.
        std::vector<std::size_t> size(num_batches, 0);
        for (const auto& a : s.tasks)
            if (a) ++size[a->batch];
        bool ok = true;
        double sum = 0.0;
        for (std::size_t k = 0; k < num_tasks; ++k) {
            if (!s.tasks[k]) continue;
            const auto& a = *s.tasks[k];
            const double start = s.batch_starts[a.batch];
            const double d = size[a.batch] * delay.per_task + delay.fixed;
            const double window = start - tasks[k].arrival;
            if (!(window > 1e-9)) ok = false;
            if (start + d > tasks[k].deadline * (1 + 1e-12)) ok = false;
            if (window > 0 && a.bandwidth * std::log2(1.0 + tasks[k].tx_power * tasks[k].channel_gain) * window <
                                  tasks[k].payload_bits * (1 - 1e-9))
                ok = false;
            sum += a.bandwidth;
        }
        for (std::size_t n = 0; n + 1 < num_batches; ++n)
            if (s.batch_starts[n + 1] < s.batch_starts[n]) ok = false;
        std::ptrdiff_t prev = -1;
        for (std::size_t n = 0; n < num_batches; ++n) {
            if (size[n] == 0) continue;
            if (prev >= 0) {
                const double fin = s.batch_starts[prev] + size[prev] * delay.per_task + delay.fixed;
                if (fin > s.batch_starts[n] * (1 + 1e-12)) ok = false;
            }
            prev = static_cast<std::ptrdiff_t>(n);
        }
        if (sum > sc.total_bandwidth * (1 + 1e-9)) ok = false;

        const FeasibilityReport r = check_schedule(sc, s);
        CHECK(r.is_feasible() == ok);
        feasible_seen += ok;
    }
    CHECK(feasible_seen > 100);
}

TEST_CASE("throughput") {
    Schedule s = Schedule::empty(5);
    CHECK(throughput(s) == 0);
    s.batch_starts = {1.0};
    for (std::size_t k : {0u, 2u, 4u}) s.tasks[k] = Allocation{0, 1.0, {}};
    CHECK(throughput(s) == 3);
    for (auto& a : s.tasks) a = Allocation{0, 1.0, {}};
    CHECK(throughput(s) == 5);
    CHECK(throughput(s) <= s.tasks.size());
}

TEST_CASE("scenario validation") {
    Scenario sc = make_scenario({unit_task(0, 0.0, 1.0)}, 1e6);
    CHECK_NOTHROW(validate(sc));
    sc.tasks[0].deadline = 0.0;
    CHECK_THROWS_AS(validate(sc), std::invalid_argument);
    sc = make_scenario({unit_task(0, 0.0, 1.0)}, 0.0);
    CHECK_THROWS_AS(validate(sc), std::invalid_argument);
    sc = make_scenario({unit_task(0, 0.0, 1.0), unit_task(1, 0.0, 1.0)}, 1e6);
    sc.tasks[1].id = 0;
    CHECK_THROWS_AS(validate(sc), std::invalid_argument);
}
