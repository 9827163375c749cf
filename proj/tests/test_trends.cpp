#include <doctest.h>

#include <map>

#include "edgebatch/harness.hpp"

using namespace edgebatch;
using namespace edgebatch::harness;

namespace {

// Mean jbas completion rate per sweep value, 20 paired seeds.
std::vector<double> curve(Parameter parameter, std::vector<double> values, std::size_t num_tasks) {
    SweepSpec s;
    s.parameter = parameter;
    s.values = values;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) s.seeds.push_back(seed);
    s.schedulers = {SchedulerKind::jbas};
    s.generator.num_tasks = num_tasks;
    std::map<double, double> sum;
    for (const ResultRow& r : run_sweep(s)) sum[r.value] += r.completion_rate / 20.0;
    std::vector<double> out;
    for (double v : values) out.push_back(sum[v]);
    return out;
}

}  // namespace

TEST_CASE("completion falls as tasks are added") {
    const auto c = curve(Parameter::num_tasks, {20, 40, 60, 80, 100}, 0);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] <= c[i - 1]);
}

TEST_CASE("completion grows with bandwidth") {
    const auto c = curve(Parameter::bandwidth, {5e6, 10e6, 20e6, 40e6, 80e6}, 40);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] >= c[i - 1]);
}

TEST_CASE("completion grows with the minimum deadline") {
    const auto c = curve(Parameter::min_deadline, {0.05, 0.25, 0.5, 1.0}, 40);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] >= c[i - 1]);
}

TEST_CASE("completion grows with the batch cap") {
    const auto c = curve(Parameter::batch_cap, {1, 2, 4, 8, 40}, 40);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c[i] >= c[i - 1]);
}
