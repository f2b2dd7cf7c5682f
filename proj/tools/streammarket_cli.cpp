// Command-line surface: every subcommand loads a JSON scenario, runs one
// analysis, and writes CSV or JSON to --out (stdout with "-"). Diagnostics go
// to stderr only. Exit codes: 0 ok, 1 non-convergence, 2 config error,
// 3 I/O error.
#include "streammarket/scenario.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>

namespace sm = streammarket;

namespace {

struct CommonArgs {
    std::string scenario_path;
    std::string out = "-";
    std::uint64_t seed = 0;
    std::string format;
};

void add_common(CLI::App* cmd, CommonArgs& args, const std::string& default_format = "",
                const std::vector<std::string>& formats = {}) {
    cmd->add_option("--scenario", args.scenario_path, "scenario JSON file")->required();
    cmd->add_option("--out", args.out, "output path, or - for stdout");
    cmd->add_option("--seed", args.seed, "seed for randomized starts");
    if (!formats.empty()) {
        args.format = default_format;
        cmd->add_option("--format", args.format, "output format")
            ->check(CLI::IsMember(formats));
    }
}

void write_output(const std::string& out, const std::function<void(std::ostream&)>& writer) {
    if (out == "-") {
        writer(std::cout);
        std::cout.flush();
        return;
    }
    std::ofstream file(out, std::ios::binary);
    if (!file) throw sm::IoError("cannot open output file: " + out);
    writer(file);
    if (!file) throw sm::IoError("failed writing output file: " + out);
}

sm::EquilibriumReport solve_anchor(const sm::Scenario& scenario) {
    sm::EquilibriumReport eq =
        sm::solve_steady_state(scenario.params, scenario.initial, scenario.equilibrium);
    if (!eq.converged) {
        std::ostringstream os;
        os << "equilibrium did not converge after " << eq.iterations
           << " iterations (residual_n=" << eq.residual_n << ", residual_q=" << eq.residual_q
           << ")";
        throw sm::NotConvergedError(os.str());
    }
    return eq;
}

sm::MarketState anchor_state(const sm::Scenario& scenario, sm::StateAnchor anchor) {
    if (anchor == sm::StateAnchor::Initial) return scenario.initial;
    return solve_anchor(scenario).state;
}

int run_simulate(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    const sm::Trajectory trajectory =
        sm::integrate(scenario.params, scenario.initial, scenario.integrator);
    write_output(args.out, [&](std::ostream& os) { sm::trajectory_to_csv(os, trajectory); });
    return 0;
}

int run_equilibrium(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    sm::EquilibriumReport report =
        sm::solve_steady_state(scenario.params, scenario.initial, scenario.equilibrium);
    if (scenario.probe_starts > 0)
        report.basin_probe =
            sm::basin_probe(scenario.params, scenario.initial.allocation, scenario.probe_starts,
                            args.seed, scenario.equilibrium);
    write_output(args.out,
                 [&](std::ostream& os) { os << sm::to_json(report).dump(2) << "\n"; });
    if (!report.converged) {
        std::cerr << "equilibrium did not converge (residual_n=" << report.residual_n
                  << ", residual_q=" << report.residual_q << ")\n";
        return 1;
    }
    return 0;
}

int run_stability(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    const sm::EquilibriumReport eq = solve_anchor(scenario);
    const sm::StabilityReport report =
        sm::classify_stability(scenario.params, eq.state, scenario.stability);
    if (!report.at_steady_state)
        std::cerr << "warning: classified state is not a converged steady state\n";
    write_output(args.out,
                 [&](std::ostream& os) { os << sm::to_json(report).dump(2) << "\n"; });
    return 0;
}

int run_critical_beta(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    const sm::CriticalBetaReport report =
        sm::critical_beta(scenario.params, scenario.critical_beta);
    write_output(args.out,
                 [&](std::ostream& os) { os << sm::to_json(report).dump(2) << "\n"; });
    return 0;
}

int run_welfare(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    const sm::MarketState state = anchor_state(scenario, scenario.welfare.at);
    const sm::WelfareBreakdown breakdown = sm::welfare_breakdown(scenario.params, state);
    if (args.format == "csv") {
        write_output(args.out, [&](std::ostream& os) { sm::welfare_to_csv(os, breakdown); });
        return 0;
    }
    sm::Json document = sm::to_json(breakdown);
    if (scenario.welfare.head_effect_comparison) {
        const sm::HeadEffectComparison comparison =
            sm::head_effect_comparison(scenario.params, scenario.welfare.comparison);
        document = sm::Json{{"breakdown", std::move(document)},
                            {"head_effect_comparison", sm::to_json(comparison)}};
    }
    write_output(args.out, [&](std::ostream& os) { os << document.dump(2) << "\n"; });
    return 0;
}

int run_allocate(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    const sm::MarketState base = anchor_state(scenario, scenario.allocation.at);
    const int n = scenario.params.n_streamers;
    const sm::Vector start = scenario.allocation.start
                                 ? *scenario.allocation.start
                                 : sm::Vector::Constant(n, 1.0 / n);
    const sm::AllocationSolution solution =
        sm::optimize_allocation(scenario.params, base, start, scenario.allocation.options);

    std::cerr << "  i            theta_i           gradient_i               mu_i\n";
    for (int i = 0; i < n; ++i) {
        char line[128];
        std::snprintf(line, sizeof(line), "%3d %18.12g %20.12g %18.12g\n", i + 1,
                      solution.theta[i], solution.gradient[i], solution.mu[i]);
        std::cerr << line;
    }
    write_output(args.out,
                 [&](std::ostream& os) { os << sm::to_json(solution).dump(2) << "\n"; });
    if (solution.infeasible) {
        std::cerr << "allocation stationarity system infeasible\n";
        return 1;
    }
    if (!solution.converged) {
        std::cerr << "allocation did not converge (foc_residual=" << solution.foc_residual
                  << ")\n";
        return 1;
    }
    return 0;
}

int run_control(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    const sm::ControlSolution solution =
        sm::solve_fbsm(scenario.params, scenario.initial, scenario.control);
    write_output(args.out, [&](std::ostream& os) {
        if (args.format == "json") os << sm::to_json(solution).dump(2) << "\n";
        else sm::control_to_csv(os, solution);
    });
    if (!solution.converged) {
        std::cerr << "control sweep did not converge after " << solution.sweeps << " sweeps\n";
        return 1;
    }
    return 0;
}

int run_sweep_command(const CommonArgs& args) {
    const sm::Scenario scenario = sm::load_scenario(args.scenario_path);
    const sm::SweepResult result = sm::run_sweep(scenario);
    write_output(args.out, [&](std::ostream& os) { sm::sweep_to_csv(os, result); });
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attention-market simulation and optimization toolkit"};
    app.require_subcommand(1);

    CommonArgs simulate_args, equilibrium_args, stability_args, critical_args, welfare_args,
        allocate_args, control_args, sweep_args;

    CLI::App* simulate = app.add_subcommand("simulate", "integrate the market dynamics (CSV)");
    add_common(simulate, simulate_args);
    CLI::App* equilibrium = app.add_subcommand("equilibrium", "solve the steady state (JSON)");
    add_common(equilibrium, equilibrium_args);
    CLI::App* stability =
        app.add_subcommand("stability", "classify local stability at the steady state (JSON)");
    add_common(stability, stability_args);
    CLI::App* critical =
        app.add_subcommand("critical-beta", "locate the critical network effect (JSON)");
    add_common(critical, critical_args);
    CLI::App* welfare = app.add_subcommand("welfare", "welfare decomposition (JSON or CSV)");
    add_common(welfare, welfare_args, "json", {"json", "csv"});
    CLI::App* allocate =
        app.add_subcommand("allocate", "optimal static traffic allocation (JSON)");
    add_common(allocate, allocate_args);
    CLI::App* control =
        app.add_subcommand("control", "optimal dynamic traffic allocation (CSV or JSON)");
    add_common(control, control_args, "csv", {"csv", "json"});
    CLI::App* sweep = app.add_subcommand("sweep", "parameter grid of a scalar metric (CSV)");
    add_common(sweep, sweep_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return run_simulate(simulate_args);
        if (equilibrium->parsed()) return run_equilibrium(equilibrium_args);
        if (stability->parsed()) return run_stability(stability_args);
        if (critical->parsed()) return run_critical_beta(critical_args);
        if (welfare->parsed()) return run_welfare(welfare_args);
        if (allocate->parsed()) return run_allocate(allocate_args);
        if (control->parsed()) return run_control(control_args);
        if (sweep->parsed()) return run_sweep_command(sweep_args);
    } catch (const sm::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const sm::ScenarioError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const sm::NotConvergedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
