#include "edgebatch/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <atomic>
#include <exception>
#include <fstream>
#include <sstream>
#include <optional>
#include <thread>

#include <json.hpp>

#include "edgebatch/holes.hpp"

namespace edgebatch::harness {

using nlohmann::json;

namespace {

constexpr Parameter kParameters[] = {Parameter::num_tasks, Parameter::min_deadline, Parameter::snr_db,
                                     Parameter::batch_cap, Parameter::bandwidth};
constexpr SchedulerKind kSchedulers[] = {SchedulerKind::jbas, SchedulerKind::jbas_holes,
                                         SchedulerKind::equal, SchedulerKind::greedy,
                                         SchedulerKind::single};

std::string_view upload_name(baselines::GreedyUpload upload) {
    return upload == baselines::GreedyUpload::equal_split ? "equal_split" : "processor_sharing";
}

baselines::GreedyUpload upload_from_string(std::string_view name) {
    if (name == "equal_split") return baselines::GreedyUpload::equal_split;
    if (name == "processor_sharing") return baselines::GreedyUpload::processor_sharing;
    throw ConfigError("unknown greedy upload policy '" + std::string(name) + "'");
}

bool is_whole(double v) { return v >= 0.0 && std::floor(v) == v && v < 1e15; }

// Reads `key` into `out` when present; the error names the field path.
template <typename T>
void read_opt(const json& obj, const char* key, const std::string& path, T& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    try {
        out = it->template get<T>();
    } catch (const json::exception& e) {
        throw ParseError(path + "." + key + ": " + e.what());
    }
}

void read_window(const json& obj, const char* key, const std::string& path, Window& out) {
    const auto it = obj.find(key);
    if (it == obj.end()) return;
    if (!it->is_array() || it->size() != 2)
        throw ParseError(path + "." + key + ": expected [lo, hi]");
    try {
        out = {(*it)[0].get<double>(), (*it)[1].get<double>()};
    } catch (const json::exception& e) {
        throw ParseError(path + "." + key + ": " + e.what());
    }
}

const json& object_at(const json& obj, const char* key, const std::string& path) {
    static const json empty = json::object();
    const auto it = obj.find(key);
    if (it == obj.end()) return empty;
    if (!it->is_object()) throw ParseError(path + "." + key + ": expected an object");
    return *it;
}

void read_generator(const json& g, const std::string& path, GenConfig& out) {
    read_opt(g, "num_tasks", path, out.num_tasks);
    read_window(g, "arrival_window", path, out.arrival_window);
    read_window(g, "deadline_window", path, out.deadline_window);
    std::string anchor(to_string(out.deadline_anchor));
    read_opt(g, "deadline_anchor", path, anchor);
    try {
        out.deadline_anchor = deadline_anchor_from_string(anchor);
    } catch (const ConfigError& e) {
        throw ParseError(path + ".deadline_anchor: " + e.what());
    }
    read_opt(g, "payload_bits", path, out.payload_bits);
    read_opt(g, "tx_snr_db", path, out.tx_snr_db);
    read_opt(g, "mean_path_loss", path, out.mean_path_loss);
    read_opt(g, "total_bandwidth", path, out.total_bandwidth);
    const json& delay = object_at(g, "delay_model", path);
    read_opt(delay, "a", path + ".delay_model", out.delay_model.per_task);
    read_opt(delay, "b", path + ".delay_model", out.delay_model.fixed);
}

void read_solver(const json& s, const std::string& path, jbas::SolverConfig& out) {
    read_opt(s, "delta", path, out.delta);
    read_opt(s, "dual_step0", path, out.dual_step0);
    read_opt(s, "dual_max_iters", path, out.dual_max_iters);
    read_opt(s, "dual_tol", path, out.dual_tol);
    read_opt(s, "dual_window", path, out.dual_window);
    read_opt(s, "outer_max_iters", path, out.outer_max_iters);
    read_opt(s, "outer_tol", path, out.outer_tol);
    read_opt(s, "max_batches", path, out.max_batches);
}

std::string format_double(double v) {
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

std::size_t worker_count(const RunOptions& options, std::size_t jobs) {
    std::size_t n = options.threads;
    if (n == 0)
        if (const char* env = std::getenv(kThreadsEnv)) n = static_cast<std::size_t>(std::strtoull(env, nullptr, 10));
    if (n == 0) n = std::thread::hardware_concurrency();
    return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(jobs, 1));
}

}  // namespace

std::string_view to_string(Parameter parameter) noexcept {
    switch (parameter) {
        case Parameter::num_tasks: return "num_tasks";
        case Parameter::min_deadline: return "min_deadline";
        case Parameter::snr_db: return "snr_db";
        case Parameter::batch_cap: return "batch_cap";
        case Parameter::bandwidth: return "bandwidth";
    }
    return "?";
}

std::string_view to_string(SchedulerKind scheduler) noexcept {
    switch (scheduler) {
        case SchedulerKind::jbas: return "jbas";
        case SchedulerKind::jbas_holes: return "jbas+holes";
        case SchedulerKind::equal: return "equal";
        case SchedulerKind::greedy: return "greedy";
        case SchedulerKind::single: return "single";
    }
    return "?";
}

Parameter parameter_from_string(std::string_view name) {
    for (const Parameter p : kParameters)
        if (to_string(p) == name) return p;
    throw ConfigError("unknown sweep parameter '" + std::string(name) + "'");
}

SchedulerKind scheduler_from_string(std::string_view name) {
    for (const SchedulerKind s : kSchedulers)
        if (to_string(s) == name) return s;
    throw ConfigError("unknown scheduler '" + std::string(name) + "'");
}

void validate(const SweepSpec& spec) {
    if (spec.values.empty()) throw ConfigError("sweep: values must not be empty");
    if (spec.seeds.empty()) throw ConfigError("sweep: seeds must not be empty");
    if (spec.schedulers.empty()) throw ConfigError("sweep: schedulers must not be empty");
    for (const double v : spec.values) {
        if (!std::isfinite(v)) throw ConfigError("sweep: values must be finite");
        if ((spec.parameter == Parameter::num_tasks || spec.parameter == Parameter::batch_cap) && !is_whole(v))
            throw ConfigError("sweep: " + std::string(to_string(spec.parameter)) +
                              " values must be non-negative integers");
        if (spec.parameter == Parameter::batch_cap && v < 1.0)
            throw ConfigError("sweep: batch_cap values must be at least 1");
        if (spec.parameter == Parameter::bandwidth && !(v > 0.0))
            throw ConfigError("sweep: bandwidth values must be positive");
        if (spec.parameter == Parameter::min_deadline && v < 0.0)
            throw ConfigError("sweep: min_deadline values must be non-negative");
    }
    jbas::validate(spec.solver);
}

SweepSpec sweep_spec_from_string(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("sweep spec: ") + e.what());
    }
    const std::string root = "spec";
    if (!doc.is_object()) throw ParseError(root + ": expected an object");
    SweepSpec spec;
    std::string parameter;
    std::vector<std::string> schedulers;
    auto require = [&](const char* key) {
        if (!doc.contains(key)) throw ParseError(root + "." + key + ": missing field");
    };
    for (const char* key : {"parameter", "values", "seeds", "schedulers"}) require(key);
    read_opt(doc, "parameter", root, parameter);
    read_opt(doc, "values", root, spec.values);
    read_opt(doc, "seeds", root, spec.seeds);
    read_opt(doc, "schedulers", root, schedulers);
    try {
        spec.parameter = parameter_from_string(parameter);
        for (const auto& s : schedulers) spec.schedulers.push_back(scheduler_from_string(s));
    } catch (const ConfigError& e) {
        throw ParseError(root + ": " + e.what());
    }

    const json& base = object_at(doc, "base", root);
    read_generator(object_at(base, "generator", root + ".base"), root + ".base.generator", spec.generator);
    read_solver(object_at(base, "solver", root + ".base"), root + ".base.solver", spec.solver);
    std::string upload(upload_name(spec.greedy_upload));
    read_opt(base, "greedy_upload", root + ".base", upload);
    try {
        spec.greedy_upload = upload_from_string(upload);
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw ParseError(root + ": " + e.what());
    }
    return spec;
}

SweepSpec load_sweep_spec(const std::filesystem::path& path) {
    return sweep_spec_from_string(read_text_file(path));
}

GenConfig generator_at(const SweepSpec& spec, double value, std::uint64_t seed) {
    GenConfig g = spec.generator;
    g.seed = seed;
    switch (spec.parameter) {
        case Parameter::num_tasks: g.num_tasks = static_cast<std::size_t>(value); break;
        case Parameter::min_deadline: {
            const double width = g.deadline_window.hi - g.deadline_window.lo;
            g.deadline_window = {value, value + width};
            break;
        }
        case Parameter::snr_db: g.tx_snr_db = value; break;
        case Parameter::bandwidth: g.total_bandwidth = value; break;
        case Parameter::batch_cap: break;
    }
    return g;
}

jbas::SolverConfig solver_at(const SweepSpec& spec, double value) {
    jbas::SolverConfig s = spec.solver;
    if (spec.parameter == Parameter::batch_cap) s.max_batches = static_cast<std::size_t>(value);
    return s;
}

Schedule run_scheduler(SchedulerKind scheduler, const Scenario& scenario,
                       const jbas::SolverConfig& solver, baselines::GreedyUpload greedy_upload) {
    switch (scheduler) {
        case SchedulerKind::jbas: return jbas::solve(scenario, solver);
        case SchedulerKind::jbas_holes:
            return holes::augment(scenario, jbas::solve(scenario, solver), {solver.tol});
        case SchedulerKind::equal: return baselines::equal_bandwidth(scenario, solver);
        case SchedulerKind::greedy: return baselines::greedy_batching(scenario, {greedy_upload, solver.tol});
        case SchedulerKind::single: return baselines::single_batch(scenario, solver.tol);
    }
    throw std::logic_error("run_scheduler: unknown scheduler");
}

std::vector<ResultRow> run_sweep(const SweepSpec& spec, const RunOptions& options) {
    validate(spec);
    const std::size_t per_job = spec.schedulers.size();
    const std::size_t jobs = spec.values.size() * spec.seeds.size();
    std::vector<ResultRow> rows(jobs * per_job);
    std::vector<std::exception_ptr> errors(jobs);

    auto run_job = [&](std::size_t j) {
        const double value = spec.values[j / spec.seeds.size()];
        const std::uint64_t seed = spec.seeds[j % spec.seeds.size()];
        const Scenario scenario = generate(generator_at(spec, value, seed));
        const jbas::SolverConfig solver = solver_at(spec, value);
        // jbas+holes reuses the plain solve when both are requested.
        std::optional<Schedule> plain;
        double plain_ms = 0.0;
        for (std::size_t i = 0; i < per_job; ++i) {
            const SchedulerKind kind = spec.schedulers[i];
            const auto t0 = std::chrono::steady_clock::now();
            auto elapsed = [&] {
                return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            };
            Schedule schedule;
            double ms = 0.0;
            if (kind == SchedulerKind::jbas || kind == SchedulerKind::jbas_holes) {
                if (!plain) {
                    plain = jbas::solve(scenario, solver);
                    plain_ms = elapsed();
                }
                const auto t1 = std::chrono::steady_clock::now();
                schedule = kind == SchedulerKind::jbas ? *plain : holes::augment(scenario, *plain, {solver.tol});
                ms = plain_ms + std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t1).count();
            } else {
                schedule = run_scheduler(kind, scenario, solver, spec.greedy_upload);
                ms = elapsed();
            }
            FeasibilityReport report = check_schedule(scenario, schedule, solver.tol);
            if (!report.is_feasible())
                throw InvalidScheduleError(std::string(to_string(kind)) + " produced an infeasible schedule (" +
                                               std::string(to_string(spec.parameter)) + "=" + format_double(value) +
                                               ", seed " + std::to_string(seed) + ", " +
                                               std::to_string(report.violations.size()) + " violations)",
                                           std::move(report));
            ResultRow& row = rows[j * per_job + i];
            row.scheduler = kind;
            row.parameter = spec.parameter;
            row.value = value;
            row.seed = seed;
            row.completed = throughput(schedule);
            row.total = scenario.size();
            row.completion_rate =
                row.total == 0 ? 0.0 : static_cast<double>(row.completed) / static_cast<double>(row.total);
            row.wall_time_ms = options.timing ? ms : 0.0;
        }
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t j; (j = next.fetch_add(1)) < jobs;) {
            try {
                run_job(j);
            } catch (...) {
                errors[j] = std::current_exception();
            }
        }
    };
    const std::size_t threads = worker_count(options, jobs);
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return rows;
}

std::string rows_to_csv(const SweepSpec& spec, const std::vector<ResultRow>& rows) {
    const GenConfig& g = spec.generator;
    std::ostringstream out;
    out << "# parameter=" << to_string(spec.parameter) << "\n"
        << "# num_tasks=" << g.num_tasks << "\n"
        << "# arrival_window=" << format_double(g.arrival_window.lo) << ":" << format_double(g.arrival_window.hi) << "\n"
        << "# deadline_window=" << format_double(g.deadline_window.lo) << ":" << format_double(g.deadline_window.hi) << "\n"
        << "# deadline_anchor=" << to_string(g.deadline_anchor) << "\n"
        << "# payload_bits=" << format_double(g.payload_bits) << "\n"
        << "# tx_snr_db=" << format_double(g.tx_snr_db) << "\n"
        << "# mean_path_loss=" << format_double(g.mean_path_loss) << "\n"
        << "# total_bandwidth=" << format_double(g.total_bandwidth) << "\n"
        << "# delay_a=" << format_double(g.delay_model.per_task) << "\n"
        << "# delay_b=" << format_double(g.delay_model.fixed) << "\n"
        << "# delta=" << format_double(spec.solver.delta) << "\n"
        << "# greedy_upload=" << upload_name(spec.greedy_upload) << "\n"
        << "# prng=" << kPrngName << "\n";
    out << "scheduler,parameter,value,seed,completed,total,completion_rate,wall_time_ms\n";
    for (const ResultRow& r : rows)
        out << to_string(r.scheduler) << ',' << to_string(r.parameter) << ',' << format_double(r.value) << ','
            << r.seed << ',' << r.completed << ',' << r.total << ',' << format_double(r.completion_rate) << ','
            << format_double(r.wall_time_ms) << '\n';
    return out.str();
}

void write_csv(const SweepSpec& spec, const std::vector<ResultRow>& rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << rows_to_csv(spec, rows);
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace edgebatch::harness
