#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "riphs/ocp.hpp"

namespace riphs {

// Receding-horizon loop around solve_ocp: solve on [0, T], apply the first
// delta/h steps to the plant (the model itself, stepped with the same Euler
// grid), shift, repeat. The warm start for iteration k+1 is the previous
// optimal control shifted by the applied steps, padded with its last row and
// projected onto the box.
struct MpcConfig {
    OcpSpec ocp; // ocp.x0 is the initial plant state
    double delta = 0.1;
    int n_iterations = 0;
    bool warm_start = true;
    double settle_window = 5.0;
    double settle_tol = 1e-3;
    SolverOptions solver;
};

struct MpcIterationReport {
    double cost = 0.0;          // direct quadrature cost of the horizon solution
    double merit = 0.0;         // internal objective at the solution
    double merit_initial = 0.0; // internal objective at the solve's first iterate
    int iterations = 0;
    bool converged = false;
    double grad_norm = 0.0;
};

struct ClosedLoopResult {
    Trajectory closed_loop;
    std::vector<MpcIterationReport> reports;
    bool settled = false;
    Vec settled_state; // empty unless settled
};

// Mean of the final `window` seconds when every sample in that window stays
// within `tol` (inf-norm) of the window mean; empty otherwise. Needs at
// least two samples inside the window and a trajectory at least that long.
inline std::optional<Vec> detect_steady_state(const Trajectory& traj, double window,
                                              double tol) {
    validate_trajectory(traj);
    if (!(window > 0.0) || !(tol > 0.0)) {
        throw InvalidParams("detect_steady_state: window and tol must be positive");
    }
    const int ns = traj.samples();
    if (ns < 2) {
        return std::nullopt;
    }
    const double t_end = traj.times(ns - 1);
    const double t_cut = t_end - window;
    if (t_cut < traj.times(0) - 1e-12) {
        return std::nullopt; // trajectory shorter than the window
    }
    int first = ns - 1;
    while (first > 0 && traj.times(first - 1) >= t_cut - 1e-12) {
        --first;
    }
    if (ns - first < 2) {
        return std::nullopt;
    }
    Vec mean = Vec::Zero(traj.states.cols());
    for (int k = first; k < ns; ++k) {
        mean += traj.states.row(k).transpose();
    }
    mean /= static_cast<double>(ns - first);
    for (int k = first; k < ns; ++k) {
        if ((traj.states.row(k).transpose() - mean).cwiseAbs().maxCoeff() > tol) {
            return std::nullopt;
        }
    }
    return mean;
}

inline ClosedLoopResult run_mpc(const MpcConfig& config) {
    const int k_steps = validate_ocp(config.ocp);
    const int m = config.ocp.model.m;
    const double h = config.ocp.h;
    if (!(config.delta > 0.0) || config.delta > config.ocp.T + 1e-12) {
        throw InvalidParams("run_mpc: delta must lie in (0, T]");
    }
    const int apply_steps = static_cast<int>(std::llround(config.delta / h));
    if (apply_steps < 1 ||
        std::abs(config.delta - apply_steps * h) > 1e-9 * std::max(1.0, config.delta)) {
        throw InvalidParams("run_mpc: delta must be an integer multiple of h");
    }
    if (config.n_iterations < 0) {
        throw InvalidParams("run_mpc: n_iterations must be nonnegative");
    }

    const int total_steps = config.n_iterations * apply_steps;
    ClosedLoopResult result;
    result.closed_loop.times.resize(total_steps + 1);
    result.closed_loop.states.resize(total_steps + 1, config.ocp.model.n);
    result.closed_loop.controls.resize(total_steps + 1, m);
    result.reports.reserve(static_cast<size_t>(config.n_iterations));

    Vec x = config.ocp.x0;
    result.closed_loop.times(0) = 0.0;
    result.closed_loop.states.row(0) = x.transpose();

    Mat warm; // empty: solve_ocp starts from projected zero
    int row = 0;
    for (int it = 0; it < config.n_iterations; ++it) {
        OcpSpec horizon = config.ocp;
        horizon.x0 = x;
        const Mat u_init = config.warm_start ? warm : Mat();
        const OcpSolution sol = solve_ocp(horizon, u_init, config.solver);

        MpcIterationReport rep;
        rep.cost = sol.cost;
        rep.merit = sol.merit;
        rep.merit_initial = sol.merit_initial;
        rep.iterations = sol.iterations;
        rep.converged = sol.converged;
        rep.grad_norm = sol.grad_norm_final;
        result.reports.push_back(rep);

        for (int j = 0; j < apply_steps; ++j) {
            const Vec uj = sol.u.row(j).transpose();
            result.closed_loop.controls.row(row) = uj.transpose();
            x = euler_step(config.ocp.model, x, uj, h);
            ++row;
            result.closed_loop.times(row) = row * h;
            result.closed_loop.states.row(row) = x.transpose();
        }

        // Shift by the applied steps, pad with the last row, project.
        warm.resize(k_steps, m);
        for (int k = 0; k < k_steps; ++k) {
            const int src = std::min(k + apply_steps, k_steps - 1);
            warm.row(k) = sol.u.row(src);
        }
        for (int k = 0; k < k_steps; ++k) {
            for (int j = 0; j < m; ++j) {
                warm(k, j) = std::clamp(warm(k, j), config.ocp.u_lo(j), config.ocp.u_hi(j));
            }
        }
    }

    if (total_steps > 0) {
        result.closed_loop.controls.row(total_steps) =
            result.closed_loop.controls.row(total_steps - 1);
    } else {
        result.closed_loop.controls.row(0) = Vec::Zero(m).transpose();
    }
    validate_trajectory(result.closed_loop);

    if (const auto steady =
            detect_steady_state(result.closed_loop, config.settle_window, config.settle_tol);
        steady && config.n_iterations > 0) {
        result.settled = true;
        result.settled_state = *steady;
    }
    return result;
}

} // namespace riphs
