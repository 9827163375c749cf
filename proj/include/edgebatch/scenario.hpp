#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "edgebatch/model.hpp"

namespace edgebatch {

/// Malformed scenario, schedule or spec file. The message names the line or
/// field at fault.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid generator configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Window {
    double lo = 0.0;
    double hi = 1.0;

    friend bool operator==(const Window&, const Window&) = default;
};

/// What a deadline draw is measured from.
enum class DeadlineAnchor {
    arrival,  // deadline = arrival + draw (a per-task delay requirement)
    origin,   // deadline = arrival-window origin + draw, repaired past arrival
};

struct GenConfig {
    std::size_t num_tasks = 100;
    Window arrival_window{0.0, 1.0};
    Window deadline_window{0.05, 2.0};
    DeadlineAnchor deadline_anchor = DeadlineAnchor::origin;
    double payload_bits = 80'000.0;  // 10 KBytes
    double tx_snr_db = 20.0;
    double mean_path_loss = 1e-3;
    double total_bandwidth = 20e6;
    DelayModel delay_model;
    std::uint64_t seed = 1;

    friend bool operator==(const GenConfig&, const GenConfig&) = default;
};

std::string_view to_string(DeadlineAnchor anchor) noexcept;
DeadlineAnchor deadline_anchor_from_string(std::string_view name);

/// Name of the generator recorded in scenario files.
inline constexpr const char* kPrngName = "mt19937_64";

/// Draws a scenario: uniform arrivals, uniform deadlines, exponentially
/// distributed (Rayleigh-faded) power gains and a common transmit SNR with
/// unit noise power. Deterministic for a fixed config.
///
/// Deadlines are always kept at least one single-task service time
/// (per_task + fixed) past arrival; draws that fall short are redrawn
/// uniformly above that floor, or clamped to it when the window lies
/// entirely below.
Scenario generate(const GenConfig& config);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

std::string scenario_to_string(const Scenario& scenario);
Scenario scenario_from_string(const std::string& text);

void save_schedule(const Schedule& schedule, const std::filesystem::path& path);
/// Reads a schedule for a scenario with `num_tasks` tasks. References to
/// unknown tasks raise StructuralError; syntax and type errors raise ParseError.
Schedule load_schedule(const std::filesystem::path& path, std::size_t num_tasks);

std::string schedule_to_string(const Schedule& schedule);
Schedule schedule_from_string(const std::string& text, std::size_t num_tasks);

/// Whole-file read helper shared by the loaders; throws ParseError.
std::string read_text_file(const std::filesystem::path& path);

}  // namespace edgebatch
