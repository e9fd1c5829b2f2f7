#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "riphs/ocp.hpp"
#include "riphs/threads.hpp"

namespace riphs {

// Steady-state optimization behind the turnpike: among all controlled
// equilibria f(x, u) = 0 with u in the box, minimize the stationary cost
//   a2 * sigma(x) + a3 * |C x - y_ref|^2.
struct TurnpikePoint {
    Vec x_tp;
    Vec u_tp;
    double objective = 0.0;
    double stationarity_residual = 0.0; // |f(x_tp, u_tp)|_inf
};

inline double turnpike_objective(const ModelSpec& model, const Vec& alpha, const Mat& c_mat,
                                 const Vec& y_ref, const Vec& x) {
    if (alpha.size() != 3) {
        throw InvalidParams("turnpike_objective: alpha must have three entries");
    }
    const Vec track = c_mat * x - y_ref;
    return alpha(1) * entropy_production(model, x) + alpha(2) * track.squaredNorm();
}

struct TurnpikeOptions {
    int n_starts = 8;
    unsigned seed = 42;
    double stationarity_tol = 1e-8;
    double x_init_lo = 0.0;
    double x_init_hi = 10.0;
    double penalty_initial = 10.0;
    double penalty_growth = 10.0;
    double penalty_cap = 1e8;
    int max_outer = 40;
    int inner_iterations = 600;
};

struct TurnpikeStartReport {
    int start = 0;
    bool feasible = false;
    double objective = std::numeric_limits<double>::infinity();
    double stationarity = std::numeric_limits<double>::infinity();
    Vec x, u;
};

namespace detail {

// One augmented-Lagrangian run from a given initial point. The equality
// constraint is the full steady-state residual c(x, u) = drift(x) + g u;
// u stays inside its box through the inner projected solver, x is free.
inline TurnpikeStartReport turnpike_single_start(const ModelSpec& model, const Vec& alpha,
                                                 const Mat& c_mat, const Vec& y_ref,
                                                 const Vec& u_lo, const Vec& u_hi,
                                                 const Vec& x_init,
                                                 const TurnpikeOptions& opts, int start_index) {
    const int n = model.n;
    const int m = model.m;
    const double inf = std::numeric_limits<double>::infinity();

    Vec lo(n + m), hi(n + m);
    lo.head(n).setConstant(-inf);
    hi.head(n).setConstant(inf);
    lo.tail(m) = u_lo;
    hi.tail(m) = u_hi;

    Vec z(n + m);
    z.head(n) = x_init;
    z.tail(m) = Vec::Zero(m).cwiseMax(u_lo).cwiseMin(u_hi);

    Vec mu = Vec::Zero(n);
    double rho = opts.penalty_initial;
    double eta = 0.1;   // feasibility target for a multiplier update
    double omega = 1e-4; // inner tolerance, tightened as the run progresses

    const auto residual = [&](const Vec& zz) -> Vec {
        const Vec x = zz.head(n);
        const Vec u = zz.tail(m);
        return eval_rhs(model, x, u);
    };

    TurnpikeStartReport report;
    report.start = start_index;

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        const BoxObjective lagrangian = [&](const Vec& zz, Vec* grad) -> double {
            try {
                const Vec x = zz.head(n);
                const Vec u = zz.tail(m);
                const Vec c = eval_rhs(model, x, u);
                const double obj = turnpike_objective(model, alpha, c_mat, y_ref, x);
                const double value = obj + mu.dot(c) + 0.5 * rho * c.squaredNorm();
                if (grad != nullptr) {
                    const Vec w = mu + rho * c;
                    const Mat dcdx = fd_rhs_jacobian_x(model, x, u);
                    const Mat dcdu = fd_rhs_jacobian_u(model, x, u);
                    const Vec dobj = fd_gradient(
                        [&](const Vec& v) {
                            return turnpike_objective(model, alpha, c_mat, y_ref, v);
                        },
                        x);
                    grad->resize(n + m);
                    grad->head(n) = dobj + dcdx.transpose() * w;
                    grad->tail(m) = dcdu.transpose() * w;
                }
                return std::isfinite(value) ? value : inf;
            } catch (const Error&) {
                return inf;
            }
        };

        BoxSolverOptions inner;
        inner.max_iterations = opts.inner_iterations;
        inner.g_tol = omega;
        inner.f_tol = 1e-14;
        const BoxSolverResult run = minimize_box(lagrangian, z, lo, hi, inner);
        z = run.z;

        Vec c;
        try {
            c = residual(z);
        } catch (const Error&) {
            break; // iterate left the admissible set, abandon this start
        }
        const double cn = c.cwiseAbs().maxCoeff();

        if (cn <= opts.stationarity_tol && omega <= 1e-10 && run.converged) {
            report.feasible = true;
            report.stationarity = cn;
            break;
        }
        if (cn <= std::max(eta, opts.stationarity_tol)) {
            mu += rho * c;
            eta = std::max(0.2 * eta, 0.1 * opts.stationarity_tol);
            omega = std::max(0.2 * omega, 1e-12);
        } else {
            rho = std::min(rho * opts.penalty_growth, opts.penalty_cap);
        }
    }

    report.x = z.head(n);
    report.u = z.tail(m);
    try {
        const Vec c = residual(z);
        report.stationarity = c.cwiseAbs().maxCoeff();
        report.objective = turnpike_objective(model, alpha, c_mat, y_ref, report.x);
        report.feasible = report.stationarity <= opts.stationarity_tol;
    } catch (const Error&) {
        report.feasible = false;
    }
    return report;
}

} // namespace detail

// Multi-start steady-state solve. x initializations are seeded uniform draws
// from [x_init_lo, x_init_hi]^n; the best feasible candidate by objective
// wins. Throws Infeasible when no start reaches the stationarity tolerance.
inline TurnpikePoint solve_turnpike(const ModelSpec& model, const Vec& alpha, const Mat& c_mat,
                                    const Vec& y_ref, const Vec& u_lo, const Vec& u_hi,
                                    const TurnpikeOptions& opts = {},
                                    std::vector<TurnpikeStartReport>* reports = nullptr) {
    validate_model(model);
    if (alpha.size() != 3 || alpha.minCoeff() < 0.0) {
        throw InvalidParams("solve_turnpike: alpha must be three nonnegative weights");
    }
    if (c_mat.cols() != model.n || y_ref.size() != c_mat.rows()) {
        throw DimensionMismatch("solve_turnpike: tracking matrix or reference has wrong shape");
    }
    if (u_lo.size() != model.m || u_hi.size() != model.m || (u_hi - u_lo).minCoeff() < 0.0) {
        throw InvalidParams("solve_turnpike: invalid control box");
    }
    if (opts.n_starts < 1) {
        throw InvalidParams("solve_turnpike: n_starts must be at least 1");
    }

    std::vector<TurnpikeStartReport> all(static_cast<size_t>(opts.n_starts));
    run_indexed(opts.n_starts, [&](int s) {
        std::seed_seq seq{static_cast<unsigned>(opts.seed), static_cast<unsigned>(s)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> dist(opts.x_init_lo, opts.x_init_hi);
        Vec x0(model.n);
        for (int i = 0; i < model.n; ++i) {
            x0(i) = dist(rng);
        }
        all[static_cast<size_t>(s)] = detail::turnpike_single_start(
            model, alpha, c_mat, y_ref, u_lo, u_hi, x0, opts, s);
    });
    if (reports != nullptr) {
        *reports = all;
    }

    const TurnpikeStartReport* best = nullptr;
    for (const auto& r : all) {
        if (!r.feasible) {
            continue;
        }
        if (best == nullptr || r.objective < best->objective) {
            best = &r;
        }
    }
    if (best == nullptr) {
        throw Infeasible("solve_turnpike: no start reached the stationarity tolerance");
    }

    TurnpikePoint point;
    point.x_tp = best->x;
    point.u_tp = best->u;
    point.objective = best->objective;
    point.stationarity_residual = best->stationarity;
    return point;
}

// Euclidean distance of every trajectory sample to a reference point.
inline Vec turnpike_distances(const Trajectory& traj, const Vec& x_tp) {
    validate_trajectory(traj);
    if (traj.states.cols() != x_tp.size()) {
        throw DimensionMismatch("turnpike_distances: state size does not match x_tp");
    }
    Vec d(traj.samples());
    for (int k = 0; k < traj.samples(); ++k) {
        d(k) = (traj.states.row(k).transpose() - x_tp).norm();
    }
    return d;
}

// Least-squares fit of log(min_dist) = intercept + rate * T. With constant
// targets the fit degenerates gracefully: rate 0 and r_squared 1.
struct ExpFit {
    double rate = 0.0;
    double intercept = 0.0;
    double r_squared = 1.0;
};

inline ExpFit exp_fit(const std::vector<double>& horizons, const std::vector<double>& min_dists) {
    if (horizons.size() != min_dists.size()) {
        throw DimensionMismatch("exp_fit: horizon and distance counts differ");
    }
    const int n = static_cast<int>(horizons.size());
    if (n < 2) {
        throw InvalidParams("exp_fit: at least two points are required");
    }
    for (double d : min_dists) {
        if (!(d > 0.0) || !std::isfinite(d)) {
            throw NonPositiveDistance("exp_fit: distances must be strictly positive");
        }
    }

    double mean_t = 0.0, mean_y = 0.0;
    for (int i = 0; i < n; ++i) {
        mean_t += horizons[i];
        mean_y += std::log(min_dists[i]);
    }
    mean_t /= n;
    mean_y /= n;

    double stt = 0.0, sty = 0.0, syy = 0.0;
    for (int i = 0; i < n; ++i) {
        const double dt = horizons[i] - mean_t;
        const double dy = std::log(min_dists[i]) - mean_y;
        stt += dt * dt;
        sty += dt * dy;
        syy += dy * dy;
    }
    if (!(stt > 0.0)) {
        throw InvalidParams("exp_fit: horizons must not all coincide");
    }

    ExpFit fit;
    fit.rate = sty / stt;
    fit.intercept = mean_y - fit.rate * mean_t;
    if (syy <= 1e-30) {
        fit.rate = 0.0;
        fit.intercept = mean_y;
        fit.r_squared = 1.0;
        return fit;
    }
    double ss_res = 0.0;
    for (int i = 0; i < n; ++i) {
        const double pred = fit.intercept + fit.rate * horizons[i];
        const double res = std::log(min_dists[i]) - pred;
        ss_res += res * res;
    }
    fit.r_squared = 1.0 - ss_res / syy;
    return fit;
}

} // namespace riphs
