#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "riphs/ivp.hpp"
#include "riphs/model.hpp"
#include "riphs/solver.hpp"

namespace riphs {

// Finite-horizon energy/entropy-optimal control problem on [0, T]:
//
//   minimize  int_0^T [a1 y_H - a2 t0 y_S]^T u + a3 |C x - y_ref|^2 dt
//   subject to the model dynamics, x(0) = x0, u(t) in the box [u_lo, u_hi],
//
// transcribed by direct single shooting: explicit Euler steps of size h and
// left-rectangle quadrature of the running cost. Channels with
// u_lo == u_hi are fixed at that value and excluded from the decision
// vector.
struct OcpSpec {
    ModelSpec model;
    double T = 1.0;
    double h = 0.1;
    Vec alpha;  // (a1, a2, a3), all nonnegative
    Mat c_mat;  // p x n tracking selector
    Vec y_ref;  // p
    Vec u_lo, u_hi;
    Vec x0;
};

inline int validate_ocp(const OcpSpec& spec) {
    validate_model(spec.model);
    if (!(spec.T > 0.0) || !std::isfinite(spec.T) || !(spec.h > 0.0) || !std::isfinite(spec.h)) {
        throw InvalidParams("OcpSpec: horizon and step must be positive and finite");
    }
    const int k_steps = static_cast<int>(std::llround(spec.T / spec.h));
    if (k_steps < 1 || std::abs(spec.T - k_steps * spec.h) > 1e-9 * std::max(1.0, spec.T)) {
        throw InvalidParams("OcpSpec: T must be an integer multiple of h");
    }
    if (spec.alpha.size() != 3 || spec.alpha.minCoeff() < 0.0 || !spec.alpha.allFinite()) {
        throw InvalidParams("OcpSpec: alpha must be three nonnegative weights");
    }
    if (spec.c_mat.cols() != spec.model.n || spec.y_ref.size() != spec.c_mat.rows()) {
        throw DimensionMismatch("OcpSpec: tracking matrix or reference has wrong shape");
    }
    if (spec.u_lo.size() != spec.model.m || spec.u_hi.size() != spec.model.m) {
        throw DimensionMismatch("OcpSpec: control bounds must have size m");
    }
    if (!spec.u_lo.allFinite() || !spec.u_hi.allFinite()) {
        throw InvalidParams("OcpSpec: control box must be compact (finite bounds)");
    }
    if ((spec.u_hi - spec.u_lo).minCoeff() < 0.0) {
        throw InvalidParams("OcpSpec: u_lo must not exceed u_hi");
    }
    if (spec.x0.size() != spec.model.n || !spec.x0.allFinite()) {
        throw InvalidParams("OcpSpec: x0 must be a finite state of size n");
    }
    if (!spec.model.admissible(spec.x0)) {
        throw DomainViolation("OcpSpec: x0 outside the admissible set");
    }
    return k_steps;
}

// Running cost l(x, u) = [a1 y_H(x) - a2 t0 y_S(x)]^T u + a3 |C x - y_ref|^2.
inline double running_cost(const OcpSpec& spec, const Vec& x, const Vec& u) {
    if (u.size() != spec.model.m) {
        throw DimensionMismatch("running_cost: control size mismatch");
    }
    const Outputs out = eval_outputs(spec.model, x);
    const Vec supply = spec.alpha(0) * out.y_h - spec.alpha(1) * spec.model.t0 * out.y_s;
    const Vec track = spec.c_mat * x - spec.y_ref;
    return supply.dot(u) + spec.alpha(2) * track.squaredNorm();
}

namespace detail {

inline double fd_step(double v) { return 1e-6 * (1.0 + std::abs(v)); }

// Central finite-difference Jacobian of f(x, u) in x.
inline Mat fd_rhs_jacobian_x(const ModelSpec& model, const Vec& x, const Vec& u) {
    Mat jac(model.n, model.n);
    Vec xp = x;
    for (int j = 0; j < model.n; ++j) {
        const double dj = fd_step(x(j));
        xp(j) = x(j) + dj;
        const Vec fp = eval_rhs(model, xp, u);
        xp(j) = x(j) - dj;
        const Vec fm = eval_rhs(model, xp, u);
        xp(j) = x(j);
        jac.col(j) = (fp - fm) / (2.0 * dj);
    }
    return jac;
}

// Central finite-difference Jacobian of f(x, u) in u.
inline Mat fd_rhs_jacobian_u(const ModelSpec& model, const Vec& x, const Vec& u) {
    Mat jac(model.n, model.m);
    Vec up = u;
    for (int j = 0; j < model.m; ++j) {
        const double dj = fd_step(u(j));
        up(j) = u(j) + dj;
        const Vec fp = eval_rhs(model, x, up);
        up(j) = u(j) - dj;
        const Vec fm = eval_rhs(model, x, up);
        up(j) = u(j);
        jac.col(j) = (fp - fm) / (2.0 * dj);
    }
    return jac;
}

template <typename F>
inline Vec fd_gradient(const F& f, const Vec& v) {
    Vec g(v.size());
    Vec vp = v;
    for (int j = 0; j < v.size(); ++j) {
        const double dj = fd_step(v(j));
        vp(j) = v(j) + dj;
        const double fp = f(vp);
        vp(j) = v(j) - dj;
        const double fm = f(vp);
        vp(j) = v(j);
        g(j) = (fp - fm) / (2.0 * dj);
    }
    return g;
}

} // namespace detail

// Euler transcription of the control matrix (one row per step). Uses the
// shared euler_step, so it is bit-identical to integrate(..., euler) on the
// same grid.
inline Trajectory rollout(const OcpSpec& spec, const Mat& u,
                          double blowup_cap = 1e8) {
    const int k_steps = validate_ocp(spec);
    if (u.rows() != k_steps || u.cols() != spec.model.m) {
        throw DimensionMismatch("rollout: control matrix must be K x m");
    }
    if (!u.allFinite()) {
        throw NonFinite("rollout: control matrix has non-finite entries");
    }

    Trajectory traj;
    traj.times.resize(k_steps + 1);
    traj.states.resize(k_steps + 1, spec.model.n);
    traj.controls.resize(k_steps + 1, spec.model.m);

    Vec x = spec.x0;
    traj.times(0) = 0.0;
    traj.states.row(0) = x.transpose();
    for (int k = 0; k < k_steps; ++k) {
        const Vec uk = u.row(k).transpose();
        traj.controls.row(k) = u.row(k);
        x = euler_step(spec.model, x, uk, spec.h);
        detail::check_blowup(x, blowup_cap);
        if (!spec.model.admissible(x)) {
            throw DomainViolation("rollout: state left the admissible set");
        }
        traj.times(k + 1) = (k + 1) * spec.h;
        traj.states.row(k + 1) = x.transpose();
    }
    traj.controls.row(k_steps) = traj.controls.row(k_steps - 1);
    return traj;
}

// Left-rectangle quadrature of the running cost along an Euler rollout.
inline double transcription_cost(const OcpSpec& spec, const Mat& u) {
    const Trajectory traj = rollout(spec, u);
    const int k_steps = static_cast<int>(u.rows());
    double acc = 0.0;
    for (int k = 0; k < k_steps; ++k) {
        acc += spec.h * running_cost(spec, traj.states.row(k).transpose(), u.row(k).transpose());
    }
    return acc;
}

struct CostGradient {
    double cost = 0.0;
    Mat grad; // K x m, d(cost)/d(u_k)
};

// Discrete adjoint of the transcription: with x_{k+1} = x_k + h f(x_k, u_k),
//   lambda_K = 0,
//   lambda_k = (I + h df/dx)^T lambda_{k+1} + h dl/dx,
//   dJ/du_k = h dl/du + h (df/du)^T lambda_{k+1}.
// All Jacobians are central finite differences with step 1e-6 (1 + |entry|),
// so the gradient matches a finite-difference probe of transcription_cost to
// the accuracy those steps allow.
inline CostGradient cost_and_gradient(const OcpSpec& spec, const Mat& u) {
    const int k_steps = validate_ocp(spec);
    if (u.rows() != k_steps || u.cols() != spec.model.m) {
        throw DimensionMismatch("cost_and_gradient: control matrix must be K x m");
    }
    const Trajectory traj = rollout(spec, u);

    CostGradient out;
    out.grad.resize(k_steps, spec.model.m);
    for (int k = 0; k < k_steps; ++k) {
        out.cost += spec.h * running_cost(spec, traj.states.row(k).transpose(),
                                          u.row(k).transpose());
    }

    Vec lambda = Vec::Zero(spec.model.n);
    for (int k = k_steps - 1; k >= 0; --k) {
        const Vec xk = traj.states.row(k).transpose();
        const Vec uk = u.row(k).transpose();
        const Mat dfdu = detail::fd_rhs_jacobian_u(spec.model, xk, uk);
        const Vec dldu = detail::fd_gradient(
            [&](const Vec& v) { return running_cost(spec, xk, v); }, uk);
        out.grad.row(k) = (spec.h * (dldu + dfdu.transpose() * lambda)).transpose();

        const Mat dfdx = detail::fd_rhs_jacobian_x(spec.model, xk, uk);
        const Vec dldx = detail::fd_gradient(
            [&](const Vec& v) { return running_cost(spec, v, uk); }, xk);
        lambda = lambda + spec.h * (dfdx.transpose() * lambda) + spec.h * dldx;
    }
    return out;
}

// Trapezoid quadrature of the running cost on an arbitrary sampled
// trajectory (control held per segment).
inline double quadrature_cost(const OcpSpec& spec, const Trajectory& traj) {
    validate_trajectory(traj);
    double acc = 0.0;
    for (int k = 1; k < traj.samples(); ++k) {
        const double dt = traj.times(k) - traj.times(k - 1);
        const Vec uk = traj.controls.row(k - 1).transpose();
        const double la = running_cost(spec, traj.states.row(k - 1).transpose(), uk);
        const double lb = running_cost(spec, traj.states.row(k).transpose(), uk);
        acc += 0.5 * dt * (la + lb);
    }
    return acc;
}

// The same cost written through the power and entropy balances: boundary
// terms plus nonnegative integrands,
//   I = a1 [H(x(T)) - H(x0)] + a2 t0 [S(x0) - S(x(T))]
//       + int_0^T a2 t0 sigma(x) + a3 |C x - y_ref|^2 dt.
// Along exact trajectories this equals the direct running-cost integral.
inline double reformulated_cost(const OcpSpec& spec, const Trajectory& traj) {
    validate_trajectory(traj);
    const int ns = traj.samples();
    if (ns < 1) {
        throw InconsistentTrajectory("reformulated_cost: empty trajectory");
    }
    const double t0 = spec.model.t0;
    const Vec x_first = traj.states.row(0).transpose();
    const Vec x_last = traj.states.row(ns - 1).transpose();

    const auto integrand = [&](const Vec& x) {
        const Vec track = spec.c_mat * x - spec.y_ref;
        return spec.alpha(1) * t0 * entropy_production(spec.model, x) +
               spec.alpha(2) * track.squaredNorm();
    };
    double acc = 0.0;
    for (int k = 1; k < ns; ++k) {
        const double dt = traj.times(k) - traj.times(k - 1);
        acc += 0.5 * dt *
               (integrand(traj.states.row(k - 1).transpose()) +
                integrand(traj.states.row(k).transpose()));
    }
    return spec.alpha(0) * (spec.model.hamiltonian(x_last) - spec.model.hamiltonian(x_first)) +
           spec.alpha(1) * t0 * (spec.model.entropy(x_first) - spec.model.entropy(x_last)) + acc;
}

struct SolverOptions {
    BoxSolverOptions box;
    int multi_starts = 1;     // > 1 adds seeded perturbed restarts
    unsigned seed = 42;
    double start_spread = 0.1; // perturbation size relative to the box width
    double blowup_cap = 1e8;
};

struct OcpSolution {
    Mat u; // K x m, fixed channels included
    Trajectory trajectory;
    double cost = 0.0;  // direct left-rectangle quadrature at the solution
    double merit = 0.0; // internal objective at the solution (see below)
    double merit_initial = 0.0;
    int iterations = 0;
    bool converged = false;
    double grad_norm_final = 0.0;
    std::vector<double> merit_history;
};

namespace detail {

struct FreeChannels {
    std::vector<int> idx; // channels with u_lo < u_hi
    Vec fixed;            // full-size vector holding the pinned values
};

inline FreeChannels split_channels(const OcpSpec& spec) {
    FreeChannels fc;
    fc.fixed = spec.u_lo;
    for (int j = 0; j < spec.model.m; ++j) {
        if (spec.u_lo(j) < spec.u_hi(j)) {
            fc.idx.push_back(j);
        }
    }
    return fc;
}

inline Mat expand_controls(const FreeChannels& fc, const Vec& z, int k_steps, int m) {
    Mat u(k_steps, m);
    for (int k = 0; k < k_steps; ++k) {
        u.row(k) = fc.fixed.transpose();
        for (size_t i = 0; i < fc.idx.size(); ++i) {
            u(k, fc.idx[i]) = z(k * static_cast<int>(fc.idx.size()) + static_cast<int>(i));
        }
    }
    return u;
}

// Internal solver objective. The direct left-rectangle quadrature of the
// running cost is unbounded below as a function of the discrete controls: a
// raise/dump cycle books a profit proportional to e^{x} from pure
// discretization error, so descent methods escape along it. The
// balance-based form above has exact boundary terms and nonnegative
// integrands, is bounded below on the control box, and has the same
// continuum limit, so the solver minimizes its left-rectangle discretization
// instead. Reported costs remain direct quadratures.
struct MeritEvaluator {
    const OcpSpec& spec;
    int k_steps;
    double blowup_cap;

    double integrand(const Vec& x) const {
        const Vec track = spec.c_mat * x - spec.y_ref;
        return spec.alpha(1) * spec.model.t0 * entropy_production(spec.model, x) +
               spec.alpha(2) * track.squaredNorm();
    }

    // Forward pass; returns false when the rollout leaves the admissible
    // set, blows up, or goes non-finite (the caller maps that to +inf).
    bool forward(const Mat& u, Mat& states, double& value) const {
        const ModelSpec& model = spec.model;
        Vec x = spec.x0;
        double acc = 0.0;
        try {
            for (int k = 0; k < k_steps; ++k) {
                states.row(k) = x.transpose();
                acc += spec.h * integrand(x);
                x = euler_step(model, x, u.row(k).transpose(), spec.h);
                if (!x.allFinite() || x.cwiseAbs().maxCoeff() > blowup_cap) {
                    return false;
                }
                if (!model.admissible(x)) {
                    return false;
                }
            }
            states.row(k_steps) = x.transpose();
            value = spec.alpha(0) * (model.hamiltonian(x) - model.hamiltonian(spec.x0)) +
                    spec.alpha(1) * model.t0 * (model.entropy(spec.x0) - model.entropy(x)) + acc;
        } catch (const Error&) {
            return false;
        }
        return std::isfinite(value);
    }

    // Discrete adjoint of the merit. The boundary terms seed the costate
    // with a1 H_x(x_K) - a2 t0 S_x(x_K); the running integrand has no
    // control dependence, so the control gradient is h g^T lambda alone.
    void gradient(const Mat& u, const Mat& states, Mat& grad) const {
        const ModelSpec& model = spec.model;
        const Vec x_end = states.row(k_steps).transpose();
        Vec lambda = spec.alpha(0) * model.hamiltonian_grad(x_end) -
                     spec.alpha(1) * model.t0 * model.entropy_grad(x_end);
        for (int k = k_steps - 1; k >= 0; --k) {
            const Vec xk = states.row(k).transpose();
            const Vec uk = u.row(k).transpose();
            const Mat dfdu = fd_rhs_jacobian_u(model, xk, uk);
            grad.row(k) = (spec.h * (dfdu.transpose() * lambda)).transpose();
            const Mat dfdx = fd_rhs_jacobian_x(model, xk, uk);
            const Vec dmdx =
                fd_gradient([&](const Vec& v) { return integrand(v); }, xk);
            lambda = lambda + spec.h * (dfdx.transpose() * lambda) + spec.h * dmdx;
        }
    }
};

} // namespace detail

// Solve the transcribed problem by projected L-BFGS over the free control
// channels. `u_init` (K x m) seeds the first start; an empty matrix means
// u = 0 projected onto the box. With multi_starts > 1 the best converged
// run wins; runs that stopped without converging are considered only when
// no run converged.
inline OcpSolution solve_ocp(const OcpSpec& spec, const Mat& u_init = Mat(),
                             const SolverOptions& opts = {}) {
    const int k_steps = validate_ocp(spec);
    const int m = spec.model.m;
    const detail::FreeChannels fc = detail::split_channels(spec);
    const int n_free = static_cast<int>(fc.idx.size());

    Mat u0 = u_init;
    if (u0.size() == 0) {
        u0 = Mat::Zero(k_steps, m);
    }
    if (u0.rows() != k_steps || u0.cols() != m) {
        throw DimensionMismatch("solve_ocp: u_init must be K x m");
    }

    const detail::MeritEvaluator merit{spec, k_steps, opts.blowup_cap};

    // Decision vector bounds, replicated per step.
    Vec lo(k_steps * n_free), hi(k_steps * n_free), z0(k_steps * n_free);
    for (int k = 0; k < k_steps; ++k) {
        for (int i = 0; i < n_free; ++i) {
            lo(k * n_free + i) = spec.u_lo(fc.idx[i]);
            hi(k * n_free + i) = spec.u_hi(fc.idx[i]);
            z0(k * n_free + i) = std::clamp(u0(k, fc.idx[i]), spec.u_lo(fc.idx[i]),
                                            spec.u_hi(fc.idx[i]));
        }
    }

    const BoxObjective objective = [&](const Vec& z, Vec* grad) -> double {
        const Mat u = detail::expand_controls(fc, z, k_steps, m);
        Mat states(k_steps + 1, spec.model.n);
        double value = 0.0;
        if (!merit.forward(u, states, value)) {
            return std::numeric_limits<double>::infinity();
        }
        if (grad != nullptr) {
            Mat gu(k_steps, m);
            merit.gradient(u, states, gu);
            grad->resize(k_steps * n_free);
            for (int k = 0; k < k_steps; ++k) {
                for (int i = 0; i < n_free; ++i) {
                    (*grad)(k * n_free + i) = gu(k, fc.idx[i]);
                }
            }
        }
        return value;
    };

    const int starts = std::max(1, opts.multi_starts);
    BoxSolverResult best;
    bool have_best = false, best_converged = false;
    for (int s = 0; s < starts; ++s) {
        Vec zs = z0;
        if (s > 0) {
            std::mt19937_64 rng(opts.seed + static_cast<unsigned>(s));
            std::uniform_real_distribution<double> unit(-1.0, 1.0);
            for (int i = 0; i < zs.size(); ++i) {
                const double width = hi(i) - lo(i);
                zs(i) = std::clamp(zs(i) + opts.start_spread * width * unit(rng), lo(i), hi(i));
            }
        }
        BoxSolverResult run;
        try {
            run = minimize_box(objective, zs, lo, hi, opts.box);
        } catch (const NonFinite&) {
            // A perturbed start whose very first rollout already fails is
            // simply discarded; the unperturbed start (s = 0) still reports.
            if (s == 0) {
                throw;
            }
            continue;
        }
        const bool better = !have_best ||
                            (run.converged && !best_converged) ||
                            (run.converged == best_converged && run.value < best.value);
        if (better) {
            best = std::move(run);
            best_converged = best.converged;
            have_best = true;
        }
    }

    OcpSolution sol;
    sol.u = detail::expand_controls(fc, best.z, k_steps, m);
    sol.trajectory = rollout(spec, sol.u, opts.blowup_cap);
    sol.cost = 0.0;
    for (int k = 0; k < k_steps; ++k) {
        sol.cost += spec.h * running_cost(spec, sol.trajectory.states.row(k).transpose(),
                                          sol.u.row(k).transpose());
    }
    sol.merit = best.value;
    sol.merit_initial = best.history.empty() ? best.value : best.history.front();
    sol.iterations = best.iterations;
    sol.converged = best.converged;
    sol.grad_norm_final = best.grad_norm;
    sol.merit_history = std::move(best.history);
    return sol;
}

} // namespace riphs
