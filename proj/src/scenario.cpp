#include "edgebatch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "edgebatch/rng.hpp"

namespace edgebatch {

using nlohmann::json;

namespace {

constexpr int kFormatVersion = 1;

std::string line_context(const std::string& text, std::size_t byte) {
    const auto end = std::min(byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n');
    return "line " + std::to_string(line);
}

json parse_document(const std::string& text, std::string_view what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string(what) + ": " + line_context(text, e.byte) + ": " + e.what());
    }
}

// Typed field access with a dotted path for error messages.
template <typename T>
T field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
    try {
        return it->template get<T>();
    } catch (const json::exception& e) {
        throw ParseError(path + "." + key + ": " + e.what());
    }
}

const json& array_field(const json& obj, const char* key, const std::string& path) {
    if (!obj.is_object()) throw ParseError(path + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(path + "." + key + ": missing field");
    if (!it->is_array()) throw ParseError(path + "." + key + ": expected an array");
    return *it;
}

void check_version(const json& doc, const std::string& what) {
    const int version = field<int>(doc, "version", what);
    if (version != kFormatVersion)
        throw ParseError(what + ".version: unsupported version " + std::to_string(version));
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string_view to_string(DeadlineAnchor anchor) noexcept {
    return anchor == DeadlineAnchor::arrival ? "arrival" : "origin";
}

DeadlineAnchor deadline_anchor_from_string(std::string_view name) {
    if (name == "arrival") return DeadlineAnchor::arrival;
    if (name == "origin") return DeadlineAnchor::origin;
    throw ConfigError("unknown deadline anchor '" + std::string(name) + "'");
}

Scenario generate(const GenConfig& config) {
    if (!(config.arrival_window.hi > config.arrival_window.lo) || config.arrival_window.lo < 0.0)
        throw ConfigError("arrival_window must satisfy 0 <= lo < hi");
    if (!(config.deadline_window.hi > config.deadline_window.lo) || config.deadline_window.lo < 0.0)
        throw ConfigError("deadline_window must satisfy 0 <= lo < hi");
    if (config.deadline_anchor == DeadlineAnchor::origin &&
        config.deadline_window.hi <= config.arrival_window.lo)
        throw ConfigError("deadline_window lies entirely before arrival_window");
    if (!(config.mean_path_loss > 0.0)) throw ConfigError("mean_path_loss must be positive");
    if (!(config.payload_bits > 0.0)) throw ConfigError("payload_bits must be positive");
    if (!(config.total_bandwidth > 0.0)) throw ConfigError("total_bandwidth must be positive");
    if (!std::isfinite(config.tx_snr_db)) throw ConfigError("tx_snr_db must be finite");

    Scenario s;
    s.total_bandwidth = config.total_bandwidth;
    s.noise_power = 1.0;
    s.delay_model = config.delay_model;
    s.seed = config.seed;
    s.prng = kPrngName;

    const double tx_power = s.noise_power * std::pow(10.0, config.tx_snr_db / 10.0);
    const double min_service = batch_delay(1, config.delay_model);
    Rng rng(config.seed);
    s.tasks.reserve(config.num_tasks);
    for (std::size_t k = 0; k < config.num_tasks; ++k) {
        // Four draws per task regardless of branch, so task k's values do not
        // depend on how earlier deadlines were repaired.
        const double u_arrival = rng.uniform01();
        const double u_deadline = rng.uniform01();
        const double u_repair = rng.uniform01();
        const double u_gain = rng.uniform01();

        Task t;
        t.id = k;
        t.arrival = config.arrival_window.lo +
                    (config.arrival_window.hi - config.arrival_window.lo) * u_arrival;
        const double anchor =
            config.deadline_anchor == DeadlineAnchor::arrival ? t.arrival : config.arrival_window.lo;
        const double lo = anchor + config.deadline_window.lo;
        const double hi = anchor + config.deadline_window.hi;
        t.deadline = lo + (hi - lo) * u_deadline;
        const double floor = t.arrival + min_service;
        if (t.deadline < floor) t.deadline = hi > floor ? floor + (hi - floor) * u_repair : floor;
        t.payload_bits = config.payload_bits;
        t.tx_power = tx_power;
        t.channel_gain = -config.mean_path_loss * std::log1p(-u_gain);
        if (!(t.channel_gain > 0.0)) t.channel_gain = config.mean_path_loss * 0x1.0p-53;
        s.tasks.push_back(t);
    }
    return s;
}

std::string scenario_to_string(const Scenario& scenario) {
    json tasks = json::array();
    for (const Task& t : scenario.tasks)
        tasks.push_back({{"id", t.id},
                         {"arrival", t.arrival},
                         {"deadline", t.deadline},
                         {"payload_bits", t.payload_bits},
                         {"tx_power", t.tx_power},
                         {"channel_gain", t.channel_gain}});
    json doc = {{"version", kFormatVersion},
                {"seed", scenario.seed},
                {"prng", scenario.prng},
                {"sigma2", scenario.noise_power},
                {"total_bandwidth", scenario.total_bandwidth},
                {"delay_model", {{"a", scenario.delay_model.per_task}, {"b", scenario.delay_model.fixed}}},
                {"tasks", std::move(tasks)}};
    return doc.dump(2) + "\n";
}

Scenario scenario_from_string(const std::string& text) {
    const json doc = parse_document(text, "scenario");
    const std::string root = "scenario";
    check_version(doc, root);
    Scenario s;
    s.seed = field<std::uint64_t>(doc, "seed", root);
    s.prng = field<std::string>(doc, "prng", root);
    s.noise_power = field<double>(doc, "sigma2", root);
    s.total_bandwidth = field<double>(doc, "total_bandwidth", root);
    if (!doc.contains("delay_model")) throw ParseError(root + ".delay_model: missing field");
    s.delay_model.per_task = field<double>(doc["delay_model"], "a", root + ".delay_model");
    s.delay_model.fixed = field<double>(doc["delay_model"], "b", root + ".delay_model");
    const json& tasks = array_field(doc, "tasks", root);
    s.tasks.reserve(tasks.size());
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        const std::string path = root + ".tasks[" + std::to_string(i) + "]";
        Task t;
        t.id = field<std::size_t>(tasks[i], "id", path);
        t.arrival = field<double>(tasks[i], "arrival", path);
        t.deadline = field<double>(tasks[i], "deadline", path);
        t.payload_bits = field<double>(tasks[i], "payload_bits", path);
        t.tx_power = field<double>(tasks[i], "tx_power", path);
        t.channel_gain = field<double>(tasks[i], "channel_gain", path);
        s.tasks.push_back(t);
    }
    try {
        validate(s);
    } catch (const std::invalid_argument& e) {
        throw ParseError(root + ": " + e.what());
    }
    return s;
}

std::string schedule_to_string(const Schedule& schedule) {
    json assignments = json::array();
    json bandwidths = json::array();
    json segments = json::array();
    for (std::size_t k = 0; k < schedule.tasks.size(); ++k) {
        const auto& a = schedule.tasks[k];
        if (!a) continue;
        assignments.push_back({{"task_id", k}, {"batch", a->batch}});
        bandwidths.push_back({{"task_id", k}, {"hz", a->bandwidth}});
        for (const auto& seg : a->segments)
            segments.push_back({{"task_id", k}, {"begin", seg.begin}, {"end", seg.end}, {"hz", seg.hz}});
    }
    for (const auto& extra : schedule.extra_assignments)
        assignments.push_back({{"task_id", extra.task}, {"batch", extra.batch}});
    json doc = {{"version", kFormatVersion},
                {"batch_starts", schedule.batch_starts},
                {"assignments", std::move(assignments)},
                {"bandwidths", std::move(bandwidths)}};
    if (!segments.empty()) doc["segments"] = std::move(segments);
    return doc.dump(2) + "\n";
}

Schedule schedule_from_string(const std::string& text, std::size_t num_tasks) {
    const json doc = parse_document(text, "schedule");
    const std::string root = "schedule";
    check_version(doc, root);
    Schedule s = Schedule::empty(num_tasks);
    s.batch_starts = field<std::vector<double>>(doc, "batch_starts", root);

    auto task_id = [&](const json& entry, const std::string& path) {
        const auto id = field<std::size_t>(entry, "task_id", path);
        if (id >= num_tasks)
            throw StructuralError(path + ".task_id: unknown task " + std::to_string(id));
        return id;
    };

    const json& assignments = array_field(doc, "assignments", root);
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        const std::string path = root + ".assignments[" + std::to_string(i) + "]";
        const auto k = task_id(assignments[i], path);
        const auto batch = field<std::size_t>(assignments[i], "batch", path);
        if (s.tasks[k])
            s.extra_assignments.push_back({k, batch});
        else
            s.tasks[k] = Allocation{batch, 0.0, {}};
    }

    const json& bandwidths = array_field(doc, "bandwidths", root);
    std::vector<bool> has_bandwidth(num_tasks, false);
    for (std::size_t i = 0; i < bandwidths.size(); ++i) {
        const std::string path = root + ".bandwidths[" + std::to_string(i) + "]";
        const auto k = task_id(bandwidths[i], path);
        if (!s.tasks[k]) throw StructuralError(path + ": bandwidth for unassigned task " + std::to_string(k));
        if (has_bandwidth[k]) throw ParseError(path + ": duplicate bandwidth for task " + std::to_string(k));
        s.tasks[k]->bandwidth = field<double>(bandwidths[i], "hz", path);
        has_bandwidth[k] = true;
    }
    for (std::size_t k = 0; k < num_tasks; ++k)
        if (s.tasks[k] && !has_bandwidth[k])
            throw StructuralError(root + ": task " + std::to_string(k) + " is assigned but has no bandwidth");

    if (doc.contains("segments")) {
        const json& segments = array_field(doc, "segments", root);
        for (std::size_t i = 0; i < segments.size(); ++i) {
            const std::string path = root + ".segments[" + std::to_string(i) + "]";
            const auto k = task_id(segments[i], path);
            if (!s.tasks[k]) throw StructuralError(path + ": segment for unassigned task " + std::to_string(k));
            s.tasks[k]->segments.push_back({field<double>(segments[i], "begin", path),
                                            field<double>(segments[i], "end", path),
                                            field<double>(segments[i], "hz", path)});
        }
    }
    return s;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
    write_text_file(path, scenario_to_string(scenario));
}

Scenario load_scenario(const std::filesystem::path& path) {
    return scenario_from_string(read_text_file(path));
}

void save_schedule(const Schedule& schedule, const std::filesystem::path& path) {
    write_text_file(path, schedule_to_string(schedule));
}

Schedule load_schedule(const std::filesystem::path& path, std::size_t num_tasks) {
    return schedule_from_string(read_text_file(path), num_tasks);
}

}  // namespace edgebatch
