#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "riphs/model.hpp"

namespace riphs {

// Piecewise-constant control: row k of `values` is applied on
// [t0 + k h, t0 + (k+1) h). Beyond the covered span the last row is held;
// an empty signal means u == 0.
struct ControlSignal {
    double t0 = 0.0;
    double h = 0.0;
    Mat values; // steps x m

    int steps() const { return static_cast<int>(values.rows()); }
    int channels() const { return static_cast<int>(values.cols()); }

    Vec value_at_step(int k) const {
        if (steps() == 0) {
            return Vec::Zero(channels());
        }
        return values.row(std::clamp(k, 0, steps() - 1)).transpose();
    }
};

inline void validate_control(const ControlSignal& u) {
    if (u.steps() > 0 && !(u.h > 0.0)) {
        throw InvalidParams("ControlSignal: grid step must be positive");
    }
    if (!std::isfinite(u.t0) || !std::isfinite(u.h) || !u.values.allFinite()) {
        throw NonFinite("ControlSignal: non-finite entries");
    }
}

// Sampled trajectory on the control grid. Control row k is the value held on
// [t_k, t_{k+1}); the final row repeats the last held value so every sample
// row is complete.
struct Trajectory {
    Vec times;
    Mat states;   // samples x n
    Mat controls; // samples x m

    int samples() const { return static_cast<int>(times.size()); }
};

inline void validate_trajectory(const Trajectory& traj) {
    if (traj.states.rows() != traj.samples() || traj.controls.rows() != traj.samples()) {
        throw InconsistentTrajectory("Trajectory: row counts do not match the time samples");
    }
    for (int k = 1; k < traj.samples(); ++k) {
        if (!(traj.times(k) > traj.times(k - 1))) {
            throw InconsistentTrajectory("Trajectory: times must be strictly increasing");
        }
    }
    if (!traj.times.allFinite() || !traj.states.allFinite() || !traj.controls.allFinite()) {
        throw InconsistentTrajectory("Trajectory: non-finite entries");
    }
}

enum class Integrator { euler, rk4, rk45 };

struct IntegratorOptions {
    Integrator method = Integrator::rk45;
    double tol = 1e-8;          // rk45 absolute and relative tolerance
    double blowup_cap = 1e8;    // BlowUp when any |x_i| exceeds this
    int max_guard_halvings = 40;
};

// One explicit Euler step. The transcription rollout and the euler
// integrator mode both call exactly this function, which is what makes them
// bit-identical.
inline Vec euler_step(const ModelSpec& model, const Vec& x, const Vec& u, double h) {
    Vec next = x;
    next.noalias() += h * eval_rhs(model, x, u);
    return next;
}

namespace detail {

inline void check_blowup(const Vec& x, double cap) {
    if (!x.allFinite()) {
        throw NonFinite("integrate: state became non-finite");
    }
    if (x.cwiseAbs().maxCoeff() > cap) {
        throw BlowUp("integrate: state norm exceeded the blow-up cap");
    }
}

inline Vec rk4_step(const ModelSpec& model, const Vec& x, const Vec& u, double h) {
    const Vec k1 = eval_rhs(model, x, u);
    const Vec k2 = eval_rhs(model, x + 0.5 * h * k1, u);
    const Vec k3 = eval_rhs(model, x + 0.5 * h * k2, u);
    const Vec k4 = eval_rhs(model, x + h * k3, u);
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Dormand-Prince 5(4) pair. The 5th-order solution propagates.
struct Dopri5Tableau {
    static constexpr double a21 = 1.0 / 5.0;
    static constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    static constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    static constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0,
                            a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    static constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0,
                            a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                            a65 = -5103.0 / 18656.0;
    static constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                            b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    static constexpr double e1 = 35.0 / 384.0 - 5179.0 / 57600.0;
    static constexpr double e3 = 500.0 / 1113.0 - 7571.0 / 16695.0;
    static constexpr double e4 = 125.0 / 192.0 - 393.0 / 640.0;
    static constexpr double e5 = -2187.0 / 6784.0 + 92097.0 / 339200.0;
    static constexpr double e6 = 11.0 / 84.0 - 187.0 / 2100.0;
    static constexpr double e7 = -1.0 / 40.0;
};

struct Dopri5Attempt {
    Vec x_new;
    double err = 0.0; // scaled error norm, accept when <= 1
};

inline Dopri5Attempt dopri5_attempt(const ModelSpec& model, const Vec& x, const Vec& u,
                                    double h, double tol) {
    using T = Dopri5Tableau;
    const Vec k1 = eval_rhs(model, x, u);
    const Vec k2 = eval_rhs(model, x + h * (T::a21 * k1), u);
    const Vec k3 = eval_rhs(model, x + h * (T::a31 * k1 + T::a32 * k2), u);
    const Vec k4 = eval_rhs(model, x + h * (T::a41 * k1 + T::a42 * k2 + T::a43 * k3), u);
    const Vec k5 =
        eval_rhs(model, x + h * (T::a51 * k1 + T::a52 * k2 + T::a53 * k3 + T::a54 * k4), u);
    const Vec k6 = eval_rhs(
        model, x + h * (T::a61 * k1 + T::a62 * k2 + T::a63 * k3 + T::a64 * k4 + T::a65 * k5), u);

    Dopri5Attempt out;
    out.x_new = x + h * (T::b1 * k1 + T::b3 * k3 + T::b4 * k4 + T::b5 * k5 + T::b6 * k6);
    const Vec k7 = eval_rhs(model, out.x_new, u);
    const Vec err_vec =
        h * (T::e1 * k1 + T::e3 * k3 + T::e4 * k4 + T::e5 * k5 + T::e6 * k6 + T::e7 * k7);

    double acc = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        const double sc = tol + tol * std::max(std::abs(x(i)), std::abs(out.x_new(i)));
        const double r = err_vec(i) / sc;
        acc += r * r;
    }
    out.err = std::sqrt(acc / static_cast<double>(x.size()));
    return out;
}

// Adaptive integration across one control segment. PI step-size control;
// steps are capped at the segment end, so no step straddles a control
// breakpoint. Guard or overflow failures reject the step and halve it, up
// to opts.max_guard_halvings times.
inline Vec rk45_segment(const ModelSpec& model, Vec x, const Vec& u, double t_begin,
                        double t_end, const IntegratorOptions& opts, double& h_attempt,
                        double& err_prev) {
    double t = t_begin;
    const double span = t_end - t_begin;
    if (!(h_attempt > 0.0) || h_attempt > span) {
        h_attempt = span;
    }
    int guard_halvings = 0;
    while (t < t_end - 1e-14 * std::max(1.0, std::abs(t_end))) {
        const double h = std::min(h_attempt, t_end - t);
        if (h < 1e-14 * std::max(1.0, std::abs(t))) {
            throw Error("rk45: step size underflow");
        }
        bool rejected_by_guard = false;
        Dopri5Attempt attempt;
        try {
            attempt = dopri5_attempt(model, x, u, h, opts.tol);
            if (!attempt.x_new.allFinite() || !model.admissible(attempt.x_new)) {
                rejected_by_guard = true;
            }
        } catch (const DomainViolation&) {
            rejected_by_guard = true;
        } catch (const NonFinite&) {
            rejected_by_guard = true;
        }
        if (rejected_by_guard) {
            if (++guard_halvings > opts.max_guard_halvings) {
                throw DomainViolation("rk45: admissible step not found after repeated halving");
            }
            h_attempt = 0.5 * h;
            continue;
        }
        if (attempt.err <= 1.0) {
            t += h;
            x = attempt.x_new;
            check_blowup(x, opts.blowup_cap);
            const double fac = 0.9 * std::pow(std::max(attempt.err, 1e-10), -0.14) *
                               std::pow(err_prev, 0.08);
            h_attempt = h * std::clamp(fac, 0.2, 5.0);
            err_prev = std::max(attempt.err, 1e-4);
        } else {
            h_attempt = h * std::clamp(0.9 * std::pow(attempt.err, -0.2), 0.1, 0.9);
        }
    }
    return x;
}

} // namespace detail

// Integrate the controlled model from x0 to t_end, sampling on the control
// grid (plus an exact final sample when t_end falls inside a segment).
// euler and rk4 take one fixed step per segment; rk45 adapts inside each
// segment. t_end == u.t0 returns the single-sample trajectory.
inline Trajectory integrate(const ModelSpec& model, const Vec& x0, const ControlSignal& u,
                            double t_end, const IntegratorOptions& opts = {}) {
    validate_control(u);
    detail::require_state_dim(model, x0, "integrate");
    if (u.steps() > 0 && u.channels() != model.m) {
        throw DimensionMismatch("integrate: control channels do not match model.m");
    }
    if (!std::isfinite(t_end) || t_end < u.t0 - 1e-12) {
        throw InvalidParams("integrate: t_end must be finite and >= the control start time");
    }
    detail::require_admissible(model, x0, "integrate");
    detail::check_blowup(x0, opts.blowup_cap);

    const double span = std::max(0.0, t_end - u.t0);
    const double h = (u.steps() > 0) ? u.h : span;
    int segments = 0;
    if (span > 1e-14 * std::max(1.0, std::abs(t_end))) {
        segments = (h > 0.0) ? static_cast<int>(std::ceil(span / h - 1e-9)) : 1;
        segments = std::max(segments, 1);
    }

    Trajectory traj;
    traj.times.resize(segments + 1);
    traj.states.resize(segments + 1, model.n);
    traj.controls.resize(segments + 1, model.m);

    Vec x = x0;
    traj.times(0) = u.t0;
    traj.states.row(0) = x.transpose();

    double h_attempt = 0.0;
    double err_prev = 1e-4;
    for (int k = 0; k < segments; ++k) {
        const double ta = u.t0 + k * h;
        const double tb = (k == segments - 1) ? t_end : u.t0 + (k + 1) * h;
        // Steps on the interior of the grid have length exactly h; the final
        // segment is shortened only when t_end genuinely falls inside it.
        // Reusing h verbatim keeps euler mode bit-identical to the
        // transcription rollout when t_end lies on the grid.
        double step_len = tb - ta;
        if (std::abs(step_len - h) <= 1e-9 * std::max(h, 1.0)) {
            step_len = h;
        }
        const Vec uk = (u.steps() > 0) ? u.value_at_step(k) : Vec::Zero(model.m);
        traj.controls.row(k) = uk.transpose();
        switch (opts.method) {
        case Integrator::euler:
            x = euler_step(model, x, uk, step_len);
            if (!x.allFinite()) {
                throw NonFinite("integrate: euler step produced a non-finite state");
            }
            if (!model.admissible(x)) {
                throw DomainViolation("integrate: euler step left the admissible set");
            }
            break;
        case Integrator::rk4:
            x = detail::rk4_step(model, x, uk, step_len);
            if (!x.allFinite()) {
                throw NonFinite("integrate: rk4 step produced a non-finite state");
            }
            if (!model.admissible(x)) {
                throw DomainViolation("integrate: rk4 step left the admissible set");
            }
            break;
        case Integrator::rk45:
            x = detail::rk45_segment(model, x, uk, ta, ta + step_len, opts, h_attempt, err_prev);
            break;
        }
        detail::check_blowup(x, opts.blowup_cap);
        traj.times(k + 1) = tb;
        traj.states.row(k + 1) = x.transpose();
    }
    if (segments > 0) {
        traj.controls.row(segments) = traj.controls.row(segments - 1);
    } else {
        traj.controls.row(0) = Vec::Zero(model.m).transpose();
    }
    validate_trajectory(traj);
    return traj;
}

// Thermodynamic audit of a sampled trajectory. Integrals use the
// segment-wise trapezoid rule with the control held on each segment:
//   power_residual = max_t | H(x(t)) - H(x0) - int_0^t u^T y_H |
//   entropy_slack  = min_t ( S(x(t)) - S(x0) - int_0^t u^T y_S )
// entropy_slack is the accumulated internal production, so it must never be
// materially negative. When a growth constant and shift are supplied the
// report also checks the comparison-lemma envelope
//   E(x(t)) + D <= (E(x0) + D) exp(c_hat * |u|_inf * t)
// with |u|_inf the running sup over the controls seen so far.
struct BalanceReport {
    double power_residual = 0.0;
    double entropy_slack = 0.0;
    double exergy_bound_margin = std::numeric_limits<double>::quiet_NaN();
};

inline BalanceReport balance_report(const ModelSpec& model, const Trajectory& traj,
                                    double c_hat = std::numeric_limits<double>::quiet_NaN(),
                                    double shift = 0.0) {
    validate_trajectory(traj);
    if (traj.states.cols() != model.n || traj.controls.cols() != model.m) {
        throw DimensionMismatch("balance_report: trajectory does not match model dimensions");
    }
    const int ns = traj.samples();
    if (ns == 0) {
        throw InconsistentTrajectory("balance_report: empty trajectory");
    }

    std::vector<double> h_vals(ns), s_vals(ns), e_vals(ns);
    std::vector<Outputs> outs(ns);
    for (int k = 0; k < ns; ++k) {
        const Vec x = traj.states.row(k).transpose();
        h_vals[k] = model.hamiltonian(x);
        s_vals[k] = model.entropy(x);
        e_vals[k] = h_vals[k] - model.t0 * s_vals[k];
        outs[k] = eval_outputs(model, x);
    }

    BalanceReport report;
    const bool with_bound = std::isfinite(c_hat);
    double margin = 0.0; // envelope meets E exactly at t = 0
    double q_power = 0.0, q_entropy = 0.0, u_inf = 0.0;
    for (int k = 1; k < ns; ++k) {
        const double dt = traj.times(k) - traj.times(k - 1);
        const Vec uk = traj.controls.row(k - 1).transpose();
        q_power += 0.5 * dt * (uk.dot(outs[k - 1].y_h) + uk.dot(outs[k].y_h));
        q_entropy += 0.5 * dt * (uk.dot(outs[k - 1].y_s) + uk.dot(outs[k].y_s));
        u_inf = std::max(u_inf, (uk.size() > 0) ? uk.cwiseAbs().maxCoeff() : 0.0);

        report.power_residual =
            std::max(report.power_residual, std::abs(h_vals[k] - h_vals[0] - q_power));
        report.entropy_slack =
            std::min(report.entropy_slack, s_vals[k] - s_vals[0] - q_entropy);
        if (with_bound) {
            const double t_rel = traj.times(k) - traj.times(0);
            const double envelope = (e_vals[0] + shift) * std::exp(c_hat * u_inf * t_rel) - shift;
            margin = std::min(margin, envelope - e_vals[k]);
        }
    }
    if (with_bound) {
        report.exergy_bound_margin = margin;
    }
    return report;
}

} // namespace riphs
