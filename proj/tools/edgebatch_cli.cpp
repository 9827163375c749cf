#include <cstdio>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edgebatch/baselines.hpp"
#include "edgebatch/harness.hpp"
#include "edgebatch/holes.hpp"
#include "edgebatch/jbas.hpp"
#include "edgebatch/oracle.hpp"
#include "edgebatch/scenario.hpp"

namespace {

using namespace edgebatch;

constexpr int kOk = 0;
constexpr int kViolations = 1;
constexpr int kUsage = 2;

void print_report(const FeasibilityReport& report) {
    for (const Violation& v : report.violations) {
        std::cout << to_string(v.tag);
        if (v.task) std::cout << " task=" << *v.task;
        if (v.batch) std::cout << " batch=" << *v.batch;
        std::cout << " magnitude=" << v.magnitude << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint batching and uplink scheduling for edge inference"};
    app.require_subcommand(1);

    GenConfig gen;
    std::string anchor(to_string(gen.deadline_anchor));
    std::string scenario_out;
    auto* generate_cmd = app.add_subcommand("generate", "Draw a random scenario");
    generate_cmd->add_option("--num-tasks", gen.num_tasks, "Number of tasks")->capture_default_str();
    generate_cmd->add_option("--seed", gen.seed, "Generator seed")->capture_default_str();
    generate_cmd->add_option("--snr-db", gen.tx_snr_db, "Transmit SNR in dB")->capture_default_str();
    generate_cmd->add_option("--bandwidth", gen.total_bandwidth, "Total bandwidth in Hz")->capture_default_str();
    generate_cmd->add_option("--min-deadline", gen.deadline_window.lo, "Deadline window lower end (s)")
        ->capture_default_str();
    generate_cmd->add_option("--max-deadline", gen.deadline_window.hi, "Deadline window upper end (s)")
        ->capture_default_str();
    generate_cmd->add_option("--anchor", anchor, "Deadline anchor: origin or arrival")
        ->check(CLI::IsMember({"origin", "arrival"}))
        ->capture_default_str();
    generate_cmd->add_option("--delay-a", gen.delay_model.per_task, "Per-task inference delay (s)")
        ->capture_default_str();
    generate_cmd->add_option("--delay-b", gen.delay_model.fixed, "Fixed inference delay (s)")->capture_default_str();
    generate_cmd->add_option("--out", scenario_out, "Scenario file to write")->required();

    std::string scenario_in;
    std::string schedule_out;
    std::string scheduler = "jbas";
    bool with_holes = false;
    std::size_t max_batches = 0;
    std::string greedy_upload = "equal_split";
    auto* solve_cmd = app.add_subcommand("solve", "Schedule a scenario");
    solve_cmd->add_option("--scenario", scenario_in, "Scenario file")->required();
    solve_cmd->add_option("--scheduler", scheduler, "jbas, jbas+holes, equal, greedy or single")
        ->check(CLI::IsMember({"jbas", "jbas+holes", "equal", "greedy", "single"}))
        ->capture_default_str();
    solve_cmd->add_flag("--holes", with_holes, "Run spectrum-hole augmentation on the result");
    solve_cmd->add_option("--max-batches", max_batches, "Batch slots for jbas/equal (0: one per task)")
        ->capture_default_str();
    solve_cmd->add_option("--greedy-upload", greedy_upload, "equal_split or processor_sharing")
        ->check(CLI::IsMember({"equal_split", "processor_sharing"}))
        ->capture_default_str();
    solve_cmd->add_option("--out", schedule_out, "Schedule file to write")->required();

    std::string schedule_in;
    auto* check_cmd = app.add_subcommand("check", "Verify a schedule; exit 1 on violations");
    check_cmd->add_option("--scenario", scenario_in, "Scenario file")->required();
    check_cmd->add_option("--schedule", schedule_in, "Schedule file")->required();

    std::size_t max_tasks = oracle::kDefaultMaxTasks;
    auto* oracle_cmd = app.add_subcommand("oracle", "Exact schedule of a tiny scenario");
    oracle_cmd->add_option("--scenario", scenario_in, "Scenario file")->required();
    oracle_cmd->add_option("--max-tasks", max_tasks, "Refuse larger scenarios")->capture_default_str();
    oracle_cmd->add_option("--out", schedule_out, "Schedule file to write")->required();

    std::string spec_in;
    std::string csv_out;
    harness::RunOptions run;
    auto* sweep_cmd = app.add_subcommand("sweep", "Run a parameter sweep and write CSV");
    sweep_cmd->add_option("--spec", spec_in, "Sweep spec (JSON)")->required();
    sweep_cmd->add_option("--out", csv_out, "CSV file to write")->required();
    sweep_cmd->add_option("--threads", run.threads, std::string("Workers (0: ") + harness::kThreadsEnv +
                                                        " or core count)")
        ->capture_default_str();
    sweep_cmd->add_flag("--timing", run.timing, "Record wall times (output is then not reproducible)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*generate_cmd) {
            gen.deadline_anchor = deadline_anchor_from_string(anchor);
            save_scenario(generate(gen), scenario_out);
            return kOk;
        }
        if (*solve_cmd) {
            const Scenario scenario = load_scenario(scenario_in);
            jbas::SolverConfig solver;
            solver.max_batches = max_batches;
            const auto upload = greedy_upload == "equal_split" ? baselines::GreedyUpload::equal_split
                                                               : baselines::GreedyUpload::processor_sharing;
            Schedule schedule =
                harness::run_scheduler(harness::scheduler_from_string(scheduler), scenario, solver, upload);
            if (with_holes) schedule = holes::augment(scenario, schedule, {solver.tol});
            save_schedule(schedule, schedule_out);
            std::cout << "scheduled " << throughput(schedule) << " of " << scenario.size() << "\n";
            return kOk;
        }
        if (*check_cmd) {
            const Scenario scenario = load_scenario(scenario_in);
            const Schedule schedule = load_schedule(schedule_in, scenario.size());
            const FeasibilityReport report = check_schedule(scenario, schedule);
            if (report.is_feasible()) {
                std::cout << "feasible, throughput " << throughput(schedule) << "\n";
                return kOk;
            }
            std::cout << report.violations.size() << " violations\n";
            print_report(report);
            return kViolations;
        }
        if (*oracle_cmd) {
            const Scenario scenario = load_scenario(scenario_in);
            const Schedule schedule = oracle::exact_solve(scenario, max_tasks);
            save_schedule(schedule, schedule_out);
            std::cout << "optimal throughput " << throughput(schedule) << " of " << scenario.size() << "\n";
            return kOk;
        }
        if (*sweep_cmd) {
            const harness::SweepSpec spec = harness::load_sweep_spec(spec_in);
            const auto rows = harness::run_sweep(spec, run);
            harness::write_csv(spec, rows, csv_out);
            return kOk;
        }
    } catch (const oracle::RefusalError& e) {
        std::cerr << "oracle: " << e.what() << "\n";
        return kUsage;
    } catch (const harness::InvalidScheduleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        print_report(e.report());
        return kViolations;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const StructuralError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kViolations;
    }
    return kUsage;
}
