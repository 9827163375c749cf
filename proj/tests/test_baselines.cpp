#include <doctest.h>

#include "edgebatch/baselines.hpp"
#include "edgebatch/jbas.hpp"
#include "support.hpp"

using namespace edgebatch;
using namespace edgebatch::baselines;
using edgebatch::test::make_scenario;
using edgebatch::test::unit_task;

namespace {

std::vector<std::optional<std::size_t>> batches_of(const Schedule& s) {
    std::vector<std::optional<std::size_t>> out;
    for (const auto& a : s.tasks) out.push_back(a ? std::optional<std::size_t>(a->batch) : std::nullopt);
    return out;
}

std::size_t nonempty_count(const Schedule& s) {
    std::size_t n = 0;
    for (std::size_t size : s.batch_sizes()) n += size > 0;
    return n;
}

}  // namespace

TEST_CASE("equal bandwidth with one task matches the joint solver") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Scenario sc = test::random_scenario(1, seed);
        const Schedule e = equal_bandwidth(sc);
        const Schedule j = jbas::solve(sc);
        CHECK(batches_of(e) == batches_of(j));
        CHECK(e.batch_starts == j.batch_starts);
    }
}

TEST_CASE("equal bandwidth drops tasks the share cannot carry") {
    // Share 500 Hz: task 0 needs at least 10000 / 0.975 Hz.
    const Scenario sc = make_scenario({unit_task(0, 0.0, 1.0, 10'000.0), unit_task(1, 0.0, 1.0, 100.0)}, 1000.0);
    const Schedule s = equal_bandwidth(sc);
    CHECK_FALSE(s.tasks[0].has_value());
    REQUIRE(s.tasks[1].has_value());
    CHECK(s.tasks[1]->bandwidth == doctest::Approx(500.0));
    CHECK(check_schedule(sc, s).is_feasible());
    CHECK(throughput(equal_bandwidth(Scenario{})) == 0);
}

TEST_CASE("equal bandwidth trails the joint solver on paired seeds") {
    std::size_t equal_total = 0;
    std::size_t joint_total = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Scenario sc = test::random_scenario(40, seed);
        const Schedule e = equal_bandwidth(sc);
        CHECK(check_schedule(sc, e).is_feasible());
        for (const auto& a : e.tasks)
            if (a) CHECK(a->bandwidth <= sc.total_bandwidth / 40.0 * (1 + 1e-12));
        equal_total += throughput(e);
        joint_total += throughput(jbas::solve(sc));
    }
    CHECK(equal_total <= joint_total);
}

TEST_CASE("greedy examples") {
    CHECK(throughput(greedy_batching(Scenario{})) == 0);
    CHECK(greedy_batching(Scenario{}).batch_starts.empty());

    const Scenario one = make_scenario({unit_task(0, 0.2, 2.0, 500.0)}, 1000.0);
    for (GreedyUpload mode : {GreedyUpload::processor_sharing, GreedyUpload::equal_split}) {
        const Schedule s = greedy_batching(one, {mode, {}});
        CHECK(throughput(s) == 1);
        REQUIRE(s.tasks[0].has_value());
        CHECK(s.batch_starts[s.tasks[0]->batch] == doctest::Approx(0.7).epsilon(1e-14));
        CHECK(check_schedule(one, s).is_feasible());
    }
}

TEST_CASE("greedy with processor sharing re-splits the band") {
    // Two equal uploads from time 0 share 1000 Hz: each 500 bits finishes at
    // 1 s. A third, much later task cuts the equal split to B/3 but leaves
    // processor sharing unchanged.
    const Scenario sc = make_scenario({unit_task(0, 0.0, 5.0, 500.0), unit_task(1, 0.0, 5.0, 500.0)}, 1000.0);
    const Schedule s = greedy_batching(sc);
    CHECK(throughput(s) == 2);
    REQUIRE(s.tasks[0].has_value());
    CHECK(s.tasks[0]->batch == s.tasks[1]->batch);
    CHECK(s.batch_starts[s.tasks[0]->batch] == doctest::Approx(1.0).epsilon(1e-14));

    const Scenario three = make_scenario({unit_task(0, 0.0, 5.0, 500.0), unit_task(1, 0.0, 5.0, 500.0),
                                          unit_task(2, 10.0, 12.0, 1.0)},
                                         1000.0);
    const Schedule ps = greedy_batching(three, {GreedyUpload::processor_sharing, {}});
    const Schedule eq = greedy_batching(three, {GreedyUpload::equal_split, {}});
    CHECK(ps.batch_starts[ps.tasks[0]->batch] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(eq.batch_starts[eq.tasks[0]->batch] == doctest::Approx(1.5).epsilon(1e-14));
}

TEST_CASE("greedy batches follow completed uploads") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const Scenario sc = test::random_scenario(10 + seed, seed, 5e6 + 1e6 * (seed % 4));
        for (GreedyUpload mode : {GreedyUpload::processor_sharing, GreedyUpload::equal_split}) {
            const Schedule s = greedy_batching(sc, {mode, {}});
            CHECK(check_schedule(sc, s).is_feasible());
            for (std::size_t n = 1; n < s.num_batches(); ++n) CHECK(s.batch_starts[n] > s.batch_starts[n - 1]);
            for (const auto& a : s.tasks) {
                if (!a) continue;
                REQUIRE_FALSE(a->segments.empty());
                CHECK(a->segments.back().end <= s.batch_starts[a->batch]);
            }
        }
    }
}

TEST_CASE("single batch examples") {
    CHECK(throughput(single_batch(Scenario{})) == 0);

    std::vector<Task> same;
    for (int i = 0; i < 5; ++i) same.push_back(unit_task(0, 0.0, 1.0, 10.0));
    const Scenario sc = make_scenario(same, 1e6);
    const Schedule s = single_batch(sc);
    CHECK(throughput(s) == 5);
    REQUIRE(s.num_batches() == 1);
    CHECK(s.batch_starts[0] == doctest::Approx(1.0 - batch_delay(5, sc.delay_model)).epsilon(1e-14));

    // No single start serves a task that must finish by 0.1 s and one that
    // arrives at 0.5 s.
    const Scenario apart = make_scenario({unit_task(0, 0.0, 0.1), unit_task(1, 0.5, 1.0)}, 1e6);
    CHECK(throughput(single_batch(apart)) == 1);
}

TEST_CASE("single batch uses one batch") {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        const Scenario sc = test::random_scenario(5 + seed, seed);
        const Schedule s = single_batch(sc);
        CHECK(check_schedule(sc, s).is_feasible());
        CHECK(nonempty_count(s) == (throughput(s) > 0 ? 1u : 0u));
        CHECK(throughput(s) <= throughput(jbas::solve(sc)));
    }
}
