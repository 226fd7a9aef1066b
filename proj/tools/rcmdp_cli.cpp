// Command-line front end: solve | sweep | verify | rollout on a JSON problem
// document. Exit codes are a stable contract:
//   0  success, feasible
//   2  problem infeasible at the requested threshold
//   3  parse or validation failure
//   4  oracle enumeration refused (policy space above the cap)

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rcmdp/rcmdp.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 2;
constexpr int kExitParse = 3;
constexpr int kExitSizeCap = 4;

int log_level() {
    const char* env = std::getenv("RCMDP_LOG");
    if (!env) return 1;  // notices on
    std::string v = env;
    if (v == "off" || v == "quiet" || v == "error") return 0;
    if (v == "debug") return 2;
    return 1;
}

void notice(const std::string& msg) {
    if (log_level() >= 1) std::cerr << "[rcmdp] " << msg << "\n";
}

struct CommonArgs {
    std::string file;
    std::optional<int> grid;
    bool prune = false;
    std::optional<double> r0;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("file", args.file, "problem document (JSON)")->required();
    cmd->add_option("--grid", args.grid, "threshold grid nodes per interval");
    cmd->add_flag("--prune", args.prune, "use the monotone frontier search in the Bellman step");
    cmd->add_option("--r0", args.r0, "override the document's initial threshold");
    cmd->add_option("--out", args.out_dir, "output directory for CSV artifacts");
}

struct Prepared {
    rcmdp::LoadedProblem problem;
    rcmdp::FeasibilityTables tables;
    rcmdp::Solution solution;
};

Prepared prepare(const CommonArgs& args) {
    Prepared p;
    p.problem = rcmdp::load_problem(args.file);
    if (args.grid) p.problem.options.grid_nodes = *args.grid;
    if (args.prune) p.problem.options.prune = true;
    if (args.r0) p.problem.spec.initial_threshold = *args.r0;

    p.tables = rcmdp::build_feasibility(p.problem.spec);
    auto grid = rcmdp::build_grid(p.problem.spec, p.tables, p.problem.options.grid_nodes);
    p.solution = rcmdp::solve(p.problem.spec, grid, p.problem.options);
    if (p.solution.clamped)
        notice("initial threshold " + rcmdp::format_real(p.solution.requested_threshold) +
               " exceeds the stage-0 upper bound; clamped to " +
               rcmdp::format_real(p.solution.used_threshold));
    return p;
}

std::ofstream open_artifact(const std::string& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    notice("wrote " + path.string());
    return out;
}

int grid_node_total(const rcmdp::ThresholdGrid& grid) {
    int total = 0;
    for (const auto& stage : grid.nodes)
        for (const auto& nodes : stage) total += static_cast<int>(nodes.size());
    return total;
}

int cmd_solve(const CommonArgs& args) {
    Prepared p = prepare(args);

    {
        auto os = open_artifact(args.out_dir, "value_table.csv");
        rcmdp::write_value_table_csv(os, p.solution);
    }
    {
        auto os = open_artifact(args.out_dir, "policy_table.csv");
        rcmdp::write_policy_table_csv(os, p.solution);
    }
    {
        auto os = open_artifact(args.out_dir, "feasibility.csv");
        rcmdp::write_feasibility_csv(os, p.tables);
    }

    nlohmann::ordered_json summary;
    summary["initial_state"] = p.solution.initial_state;
    summary["requested_threshold"] = p.solution.requested_threshold;
    summary["used_threshold"] = p.solution.used_threshold;
    summary["clamped"] = p.solution.clamped;
    summary["feasible"] = p.solution.feasible;
    summary["value"] = p.solution.value;
    summary["sentinel"] = p.problem.spec.sentinel;
    summary["grid_nodes_total"] = grid_node_total(p.solution.grid);
    summary["grid_nodes_per_interval"] = p.problem.options.grid_nodes;
    summary["risk_measure"] = p.problem.spec.risk.to_string();
    {
        auto os = open_artifact(args.out_dir, "summary.json");
        os << summary.dump(2) << "\n";
    }
    std::cout << summary.dump(2) << "\n";
    return p.solution.feasible ? kExitOk : kExitInfeasible;
}

int cmd_sweep(const CommonArgs& args, std::optional<double> lo, std::optional<double> hi,
              int steps) {
    Prepared p = prepare(args);
    int x0 = p.solution.initial_state;
    double r_lo = lo ? *lo : p.tables.min_risk[0][x0] - 0.1;
    double r_hi = hi ? *hi : p.tables.upper_bound[0] + 0.1;
    auto points = rcmdp::sweep(p.solution, r_lo, r_hi, steps);
    {
        auto os = open_artifact(args.out_dir, "sweep.csv");
        rcmdp::write_sweep_csv(os, points);
    }
    std::cout << "sweep: " << points.size() << " thresholds in ["
              << rcmdp::format_real(r_lo) << ", " << rcmdp::format_real(r_hi) << "]\n";
    return kExitOk;
}

int cmd_verify(const CommonArgs& args, bool require_oracle, double cap) {
    Prepared p = prepare(args);
    const auto& spec = p.problem.spec;

    auto report = rcmdp::verify_policy(spec, p.solution, spec.initial_state,
                                       p.solution.used_threshold);

    nlohmann::ordered_json out;
    out["start_feasible"] = report.start_feasible;
    out["dp_value"] = report.dp_value;
    if (report.start_feasible) {
        out["expected_cost"] = *report.expected_cost;
        out["nested_risk"] = *report.nested_risk;
        out["risk_within_threshold"] = report.feasible;
        out["cost_matches_value"] = report.matches_value;
    }

    double count = rcmdp::policy_count(spec, 0, spec.initial_state);
    out["oracle_policy_count"] = count;
    bool oracle_ran = false;
    if (count <= cap) {
        rcmdp::BruteForceOptions opts;
        opts.policy_cap = cap;
        auto oracle =
            rcmdp::brute_force_solve(spec, spec.initial_state, p.solution.used_threshold, opts);
        out["oracle_value"] = oracle.value;
        out["dp_minus_oracle"] = p.solution.value - oracle.value;
        oracle_ran = true;
    } else {
        out["oracle_value"] = nullptr;
        notice("oracle skipped: " + rcmdp::format_real(count) + " policies exceed cap " +
               rcmdp::format_real(cap));
    }
    std::cout << out.dump(2) << "\n";

    if (require_oracle && !oracle_ran) return kExitSizeCap;
    if (!report.start_feasible) return kExitInfeasible;
    return (report.feasible && report.matches_value) ? kExitOk : 1;
}

int cmd_rollout(const CommonArgs& args, std::uint64_t seed, int episodes) {
    Prepared p = prepare(args);
    if (!p.solution.feasible) {
        std::cerr << "error: initial threshold is infeasible; nothing to roll out\n";
        return kExitInfeasible;
    }
    std::vector<rcmdp::RolloutRecord> records;
    records.reserve(episodes);
    for (int e = 0; e < episodes; ++e)
        records.push_back(rcmdp::rollout(p.problem.spec, p.solution, seed + e));
    {
        auto os = open_artifact(args.out_dir, "rollouts.csv");
        rcmdp::write_rollout_csv(os, records);
    }
    double mean_cost = 0.0;
    for (const auto& r : records) mean_cost += r.total_stage_cost;
    if (!records.empty()) mean_cost /= static_cast<double>(records.size());
    std::cout << "episodes: " << records.size() << ", mean realized cost: "
              << rcmdp::format_real(mean_cost)
              << ", dp value: " << rcmdp::format_real(p.solution.value) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-horizon MDP solver with nested risk constraints"};
    app.require_subcommand(1);

    CommonArgs solve_args, sweep_args, verify_args, rollout_args;

    auto* solve_cmd = app.add_subcommand("solve", "solve and export value/policy tables");
    add_common(solve_cmd, solve_args);

    auto* sweep_cmd = app.add_subcommand("sweep", "headline value over a threshold range");
    add_common(sweep_cmd, sweep_args);
    std::optional<double> sweep_lo, sweep_hi;
    int sweep_steps = 101;
    sweep_cmd->add_option("--r0-min", sweep_lo, "sweep lower bound (default: min feasible - 0.1)");
    sweep_cmd->add_option("--r0-max", sweep_hi, "sweep upper bound (default: upper bound + 0.1)");
    sweep_cmd->add_option("--steps", sweep_steps, "number of sweep points")
        ->check(CLI::PositiveNumber);

    auto* verify_cmd = app.add_subcommand(
        "verify", "re-evaluate the extracted policy exactly and compare against brute force");
    add_common(verify_cmd, verify_args);
    bool require_oracle = false;
    double oracle_cap = 1e6;
    verify_cmd->add_flag("--oracle", require_oracle,
                         "fail with exit 4 if the brute-force comparison cannot run");
    verify_cmd->add_option("--oracle-cap", oracle_cap, "policy enumeration cap");

    auto* rollout_cmd = app.add_subcommand("rollout", "simulate closed-loop trajectories");
    add_common(rollout_cmd, rollout_args);
    std::uint64_t seed = 0;
    int episodes = 1;
    rollout_cmd->add_option("--seed", seed, "rng seed (episode e uses seed + e)");
    rollout_cmd->add_option("--episodes", episodes, "number of trajectories")
        ->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed()) return cmd_solve(solve_args);
        if (sweep_cmd->parsed()) return cmd_sweep(sweep_args, sweep_lo, sweep_hi, sweep_steps);
        if (verify_cmd->parsed()) return cmd_verify(verify_args, require_oracle, oracle_cap);
        if (rollout_cmd->parsed()) return cmd_rollout(rollout_args, seed, episodes);
    } catch (const rcmdp::parse_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitParse;
    } catch (const rcmdp::size_cap_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSizeCap;
    } catch (const rcmdp::infeasible_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
