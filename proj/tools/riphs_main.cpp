#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "riphs/riphs.hpp"

namespace fs = std::filesystem;
using namespace riphs;

namespace {

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::string state_svg(const ModelSpec& model, const Trajectory& traj, const std::string& title,
                      const Vec* x_tp) {
    LinePlot plot(title, "t", "state");
    for (int i = 0; i < model.n; ++i) {
        std::vector<double> xs(static_cast<size_t>(traj.samples()));
        std::vector<double> ys(xs.size());
        for (int k = 0; k < traj.samples(); ++k) {
            xs[static_cast<size_t>(k)] = traj.times(k);
            ys[static_cast<size_t>(k)] = traj.states(k, i);
        }
        plot.add_series("x_" + std::to_string(i + 1), std::move(xs), std::move(ys));
    }
    if (x_tp) {
        for (int i = 0; i < x_tp->size(); ++i) {
            plot.add_hline("x_" + std::to_string(i + 1) + " steady", (*x_tp)(i));
        }
    }
    return plot.render();
}

void require_ocp(const AppConfig& cfg) {
    if (!cfg.has_ocp) {
        throw ValidationError("missing required section \"ocp\" for this command");
    }
}

int run_simulate(const AppConfig& cfg) {
    require_ocp(cfg);
    const int steps = validate_ocp(cfg.ocp);
    ControlSignal u;
    u.t0 = 0.0;
    u.h = cfg.ocp.h;
    u.values = Mat::Zero(steps, cfg.model.m);
    IntegratorOptions opts;
    opts.method = Integrator::rk45;
    opts.tol = 1e-10;
    const Trajectory traj = integrate(cfg.model, cfg.ocp.x0, u, cfg.ocp.T, opts);
    const BalanceReport report = balance_report(cfg.model, traj);

    write_trajectory_csv(join(cfg.output.directory, "trajectory.csv"), cfg.model, traj);
    write_json(join(cfg.output.directory, "balance.json"), balance_json(report));
    if (cfg.output.emit_svg) {
        detail::write_text_file(join(cfg.output.directory, "trajectory.svg"),
                                state_svg(cfg.model, traj, "uncontrolled trajectory", nullptr));
    }
    std::cout << "simulate: " << traj.samples() << " samples, power residual "
              << report.power_residual << ", entropy slack " << report.entropy_slack << "\n";
    return 0;
}

int run_ocp(const AppConfig& cfg) {
    require_ocp(cfg);
    const OcpSolution sol = solve_ocp(cfg.ocp, Mat(), cfg.solver);

    write_json(join(cfg.output.directory, "solution.json"), solution_json(cfg.ocp, sol));
    write_trajectory_csv(join(cfg.output.directory, "trajectory.csv"), cfg.model,
                         sol.trajectory);
    if (cfg.output.emit_svg) {
        Vec x_tp;
        const Vec* marker = nullptr;
        const std::string tp_path = join(cfg.output.directory, "turnpike.json");
        if (fs::exists(tp_path)) {
            const Json tj = read_json(tp_path);
            if (tj.contains("x_tp")) {
                x_tp = detail::vec_at(tj["x_tp"], "turnpike.json:x_tp");
                marker = &x_tp;
            }
        }
        detail::write_text_file(join(cfg.output.directory, "trajectory.svg"),
                                state_svg(cfg.model, sol.trajectory, "optimal trajectory",
                                          marker));
    }
    std::cout << "ocp: cost " << sol.cost << ", iterations " << sol.iterations << ", "
              << (sol.converged ? "converged" : "not converged") << "\n";
    return 0;
}

int run_turnpike(const AppConfig& cfg) {
    require_ocp(cfg);
    const TurnpikePoint tp = solve_turnpike(cfg.model, cfg.ocp.alpha, cfg.ocp.c_mat,
                                            cfg.ocp.y_ref, cfg.ocp.u_lo, cfg.ocp.u_hi,
                                            cfg.turnpike);
    write_json(join(cfg.output.directory, "turnpike.json"), turnpike_json(tp));
    std::cout << "turnpike: objective " << tp.objective << ", stationarity "
              << tp.stationarity_residual << "\n";
    return 0;
}

int run_mpc(const AppConfig& cfg) {
    require_ocp(cfg);
    MpcConfig mc;
    mc.ocp = cfg.ocp;
    mc.delta = cfg.mpc_delta;
    mc.n_iterations = cfg.mpc_iterations;
    mc.warm_start = cfg.mpc_warm_start;
    mc.settle_window = cfg.settle_window;
    mc.settle_tol = cfg.settle_tol;
    mc.solver = cfg.solver;
    const ClosedLoopResult result = riphs::run_mpc(mc);

    write_trajectory_csv(join(cfg.output.directory, "closed_loop.csv"), cfg.model,
                         result.closed_loop);
    write_json(join(cfg.output.directory, "mpc.json"), mpc_json(result));
    if (cfg.output.emit_svg) {
        detail::write_text_file(join(cfg.output.directory, "closed_loop.svg"),
                                state_svg(cfg.model, result.closed_loop, "closed loop",
                                          result.settled ? &result.settled_state : nullptr));
    }
    std::cout << "mpc: " << result.reports.size() << " solves, "
              << (result.settled ? "settled" : "not settled") << "\n";
    return 0;
}

int run_verify(const AppConfig& cfg) {
    SampleAdjust sample_adjust;
    DirectionAdjust direction_adjust;
    if (cfg.model_kind == "gas_piston") {
        sample_adjust = gas_piston_sample_adjust();
        direction_adjust = gas_piston_direction_adjust();
    }
    const GrowthEstimate est =
        estimate_growth_constant(cfg.model, cfg.verify.p, cfg.verify.radii,
                                 cfg.verify.samples_per_radius, cfg.verify.seed, sample_adjust);
    const RadialProbeReport probe = radial_probe(cfg.model, cfg.verify.n_directions,
                                                 cfg.verify.radii, cfg.verify.seed,
                                                 direction_adjust);
    write_json(join(cfg.output.directory, "verify.json"), growth_json(est));
    write_json(join(cfg.output.directory, "radial_probe.json"), radial_probe_json(probe));
    std::cout << "verify: c_hat " << est.c_hat << ", " << (est.stable ? "stable" : "unstable")
              << ", radial probe " << (probe.passed ? "passed" : "failed") << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"reversible-irreversible port-Hamiltonian toolkit"};
    app.fallthrough();
    std::string config_path;
    std::string out_dir;
    bool dump_effective = false;
    long long seed_override = -1;
    app.add_option("--config", config_path, "JSON configuration file")->required();
    app.add_option("--out", out_dir, "output directory (overrides the config)");
    app.add_flag("--dump-effective-config", dump_effective,
                 "print the fully defaulted configuration and exit");
    app.add_option("--seed", seed_override, "override every section seed");

    CLI::App* cmd_simulate =
        app.add_subcommand("simulate", "integrate the uncontrolled system and audit balances");
    CLI::App* cmd_ocp = app.add_subcommand("ocp", "solve the finite-horizon control problem");
    CLI::App* cmd_turnpike =
        app.add_subcommand("turnpike", "locate the steady optimal operating point");
    CLI::App* cmd_mpc = app.add_subcommand("mpc", "run the receding-horizon loop");
    CLI::App* cmd_verify = app.add_subcommand("verify", "probe growth and coercivity bounds");
    app.require_subcommand(0, 1);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    if (!dump_effective && app.get_subcommands().empty()) {
        std::cerr << "error: a subcommand is required (simulate, ocp, turnpike, mpc, verify)\n";
        return 2;
    }

    try {
        AppConfig cfg = load_config(config_path);
        if (!out_dir.empty()) {
            cfg.output.directory = out_dir;
            cfg.effective["output"]["directory"] = out_dir;
        }
        if (seed_override >= 0) {
            const unsigned seed = static_cast<unsigned>(seed_override);
            cfg.solver.seed = seed;
            cfg.turnpike.seed = seed;
            cfg.verify.seed = seed;
            if (cfg.effective.contains("ocp")) {
                cfg.effective["ocp"]["solver"]["seed"] = seed;
            }
            cfg.effective["turnpike"]["seed"] = seed;
            cfg.effective["verify"]["seed"] = seed;
        }
        if (dump_effective) {
            std::cout << cfg.effective.dump(2) << "\n";
            return 0;
        }
        fs::create_directories(cfg.output.directory);

        if (cmd_simulate->parsed()) {
            return run_simulate(cfg);
        }
        if (cmd_ocp->parsed()) {
            return run_ocp(cfg);
        }
        if (cmd_turnpike->parsed()) {
            return run_turnpike(cfg);
        }
        if (cmd_mpc->parsed()) {
            return run_mpc(cfg);
        }
        if (cmd_verify->parsed()) {
            return run_verify(cfg);
        }
        std::cerr << "error: no command\n";
        return 2;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
