#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "edgebatch/baselines.hpp"
#include "edgebatch/jbas.hpp"
#include "edgebatch/model.hpp"
#include "edgebatch/scenario.hpp"

/// Parameter sweeps over seeded scenarios, every scheduler run on the same
/// scenario for a paired comparison.
namespace edgebatch::harness {

enum class Parameter { num_tasks, min_deadline, snr_db, batch_cap, bandwidth };

enum class SchedulerKind { jbas, jbas_holes, equal, greedy, single };

std::string_view to_string(Parameter parameter) noexcept;
std::string_view to_string(SchedulerKind scheduler) noexcept;
/// Throw ConfigError for unknown names.
Parameter parameter_from_string(std::string_view name);
SchedulerKind scheduler_from_string(std::string_view name);

struct SweepSpec {
    Parameter parameter = Parameter::num_tasks;
    std::vector<double> values;
    std::vector<std::uint64_t> seeds;
    std::vector<SchedulerKind> schedulers;
    GenConfig generator;
    jbas::SolverConfig solver;
    baselines::GreedyUpload greedy_upload = baselines::GreedyUpload::equal_split;
};

/// Throws ConfigError if a list is empty or a value does not fit the
/// parameter (task counts and batch caps must be whole numbers).
void validate(const SweepSpec& spec);

/// Spec files are JSON objects with `parameter`, `values`, `seeds`,
/// `schedulers` and an optional `base` holding `generator`, `solver` and
/// `greedy_upload` overrides. Throws ParseError with the field path.
SweepSpec sweep_spec_from_string(const std::string& text);
SweepSpec load_sweep_spec(const std::filesystem::path& path);

/// Generator and solver settings for one sweep point. `min_deadline` moves
/// the deadline window to start at the value, keeping its width.
GenConfig generator_at(const SweepSpec& spec, double value, std::uint64_t seed);
jbas::SolverConfig solver_at(const SweepSpec& spec, double value);

/// Runs one scheduler. `jbas_holes` is the joint solver followed by
/// spectrum-hole augmentation.
Schedule run_scheduler(SchedulerKind scheduler, const Scenario& scenario,
                       const jbas::SolverConfig& solver,
                       baselines::GreedyUpload greedy_upload = baselines::GreedyUpload::equal_split);

struct ResultRow {
    SchedulerKind scheduler = SchedulerKind::jbas;
    Parameter parameter = Parameter::num_tasks;
    double value = 0.0;
    std::uint64_t seed = 0;
    std::size_t completed = 0;
    std::size_t total = 0;
    double completion_rate = 0.0;
    double wall_time_ms = 0.0;
};

/// A scheduler produced a schedule the checker rejects.
class InvalidScheduleError : public std::runtime_error {
public:
    InvalidScheduleError(const std::string& what, FeasibilityReport report)
        : std::runtime_error(what), report_(std::move(report)) {}
    [[nodiscard]] const FeasibilityReport& report() const noexcept { return report_; }

private:
    FeasibilityReport report_;
};

/// Environment variable overriding the worker count.
inline constexpr const char* kThreadsEnv = "EDGEBATCH_THREADS";

struct RunOptions {
    /// Worker threads; 0 reads kThreadsEnv, then falls back to the core count.
    std::size_t threads = 0;
    /// Record wall times. Off by default so that output files are
    /// reproducible byte for byte; rows then carry 0.
    bool timing = false;
};

/// One row per (value, seed, scheduler), in that nesting order and in the
/// order the sweep spec lists them. Every schedule is re-checked before it is
/// counted; throws InvalidScheduleError on the first rejected one.
std::vector<ResultRow> run_sweep(const SweepSpec& spec, const RunOptions& options = {});

/// CSV with `# key=value` comment lines describing the sweep, a header row
/// and one line per result. Doubles are written with 17 significant digits.
std::string rows_to_csv(const SweepSpec& spec, const std::vector<ResultRow>& rows);
void write_csv(const SweepSpec& spec, const std::vector<ResultRow>& rows,
               const std::filesystem::path& path);

}  // namespace edgebatch::harness
