#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <vector>

#include "riphs/errors.hpp"
#include "riphs/model.hpp"

namespace riphs {

// Objective callback: returns the value at z and, when `grad` is non-null,
// fills the gradient. Returning a non-finite value (or +inf) marks z as
// unacceptable; the line search rejects such steps.
using BoxObjective = std::function<double(const Vec&, Vec* grad)>;

struct BoxSolverOptions {
    int max_iterations = 2000;
    double g_tol = 1e-6;   // stop when |proj grad|_inf <= g_tol * (1 + |f|)
    double f_tol = 1e-10;  // relative-decrease threshold of the stall test
    int stall_iterations = 5;
    int memory = 15;
    double armijo_c1 = 1e-4;
    int max_backtracks = 60;
};

struct BoxSolverResult {
    Vec z;
    double value = std::numeric_limits<double>::quiet_NaN();
    double grad_norm = std::numeric_limits<double>::quiet_NaN(); // projected, inf-norm
    int iterations = 0;
    bool converged = false;
    std::vector<double> history; // objective at every accepted iterate
};

namespace detail {

inline Vec clip_box(const Vec& z, const Vec& lo, const Vec& hi) {
    return z.cwiseMax(lo).cwiseMin(hi);
}

} // namespace detail

// Projected L-BFGS with Armijo backtracking on the projection arc.
//
// The quasi-Newton model is built on the inactive set only: components
// pinned at a bound with the gradient pushing outward take a plain steepest
// descent component, and the pair memory is cleared whenever the active set
// changes so stale curvature never leaks across a face switch. Convergence
// is declared on a small projected gradient or on `stall_iterations`
// consecutive steps with relative decrease below f_tol.
inline BoxSolverResult minimize_box(const BoxObjective& objective, Vec z0, const Vec& lo,
                                    const Vec& hi, const BoxSolverOptions& opts = {}) {
    const int dim = static_cast<int>(z0.size());
    if (lo.size() != dim || hi.size() != dim) {
        throw DimensionMismatch("minimize_box: bound sizes do not match the iterate");
    }
    for (int i = 0; i < dim; ++i) {
        if (lo(i) > hi(i)) {
            throw InvalidParams("minimize_box: lower bound exceeds upper bound");
        }
    }

    Vec z = detail::clip_box(z0, lo, hi);
    Vec g(dim);
    double fv = objective(z, &g);
    if (!std::isfinite(fv)) {
        throw NonFinite("minimize_box: objective non-finite at the initial point");
    }

    BoxSolverResult result;
    result.history.push_back(fv);

    std::deque<Vec> mem_s, mem_y;
    Eigen::Array<bool, Eigen::Dynamic, 1> prev_active(dim);
    bool have_prev_active = false;
    int stall = 0;
    bool first_step = true;

    const auto bound_eps = [&](double b) { return 1e-12 * (1.0 + std::abs(b)); };

    int it = 0;
    for (; it < opts.max_iterations; ++it) {
        const Vec pg = z - detail::clip_box(z - g, lo, hi);
        const double pgn = (dim > 0) ? pg.cwiseAbs().maxCoeff() : 0.0;
        if (pgn <= opts.g_tol * (1.0 + std::abs(fv))) {
            result.converged = true;
            break;
        }

        Eigen::Array<bool, Eigen::Dynamic, 1> active(dim);
        for (int i = 0; i < dim; ++i) {
            const bool at_lo = std::isfinite(lo(i)) && z(i) <= lo(i) + bound_eps(lo(i));
            const bool at_hi = std::isfinite(hi(i)) && z(i) >= hi(i) - bound_eps(hi(i));
            active(i) = (at_lo && g(i) > 0.0) || (at_hi && g(i) < 0.0);
        }
        if (have_prev_active && (active != prev_active).any()) {
            mem_s.clear();
            mem_y.clear();
        }
        prev_active = active;
        have_prev_active = true;

        // Two-loop recursion on the inactive components.
        Vec q = -g;
        for (int i = 0; i < dim; ++i) {
            if (active(i)) q(i) = 0.0;
        }
        Vec d;
        bool steepest = mem_s.empty();
        if (!mem_s.empty()) {
            const int k = static_cast<int>(mem_s.size());
            std::vector<double> alpha(k), rho(k);
            for (int j = k - 1; j >= 0; --j) {
                rho[j] = 1.0 / mem_y[j].dot(mem_s[j]);
                alpha[j] = rho[j] * mem_s[j].dot(q);
                q -= alpha[j] * mem_y[j];
            }
            const double gamma = mem_s.back().dot(mem_y.back()) / mem_y.back().squaredNorm();
            Vec r = gamma * q;
            for (int j = 0; j < k; ++j) {
                const double beta = rho[j] * mem_y[j].dot(r);
                r += (alpha[j] - beta) * mem_s[j];
            }
            d = r;
        } else {
            d = q;
        }
        for (int i = 0; i < dim; ++i) {
            if (active(i)) d(i) = -g(i);
        }
        if (d.dot(g) >= 0.0) {
            d = -g; // quasi-Newton model unusable, fall back to steepest descent
            steepest = true;
        }

        bool accepted = false;
        Vec z_trial;
        double f_trial = 0.0;
        // On a full backtracking failure, retry once along plain steepest
        // descent: the quasi-Newton direction can be poisoned by
        // finite-difference noise while -g still makes progress.
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            if (attempt == 1) {
                if (steepest) break;
                d = -g;
                mem_s.clear();
                mem_y.clear();
            }
            double t = (first_step || attempt == 1)
                           ? 1.0 / std::max(1.0, g.cwiseAbs().maxCoeff())
                           : 1.0;
            for (int bt = 0; bt <= opts.max_backtracks; ++bt) {
                z_trial = detail::clip_box(z + t * d, lo, hi);
                f_trial = objective(z_trial, nullptr);
                const double slope = g.dot(z_trial - z);
                if (std::isfinite(f_trial) && f_trial <= fv + opts.armijo_c1 * slope) {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
        }
        if (!accepted) {
            result.converged = pgn <= opts.g_tol * (1.0 + std::abs(fv));
            break;
        }
        first_step = false;

        Vec g_new(dim);
        const double f_new = objective(z_trial, &g_new);
        if (!std::isfinite(f_new) || !g_new.allFinite()) {
            throw NonFinite("minimize_box: gradient non-finite at an accepted step");
        }

        const Vec s = z_trial - z;
        const Vec y = g_new - g;
        const double sy = s.dot(y);
        if (sy > 1e-10 * s.norm() * y.norm()) {
            mem_s.push_back(s);
            mem_y.push_back(y);
            if (static_cast<int>(mem_s.size()) > opts.memory) {
                mem_s.pop_front();
                mem_y.pop_front();
            }
        }

        const double rel_decrease = (fv - f_new) / std::max(1.0, std::abs(fv));
        stall = (rel_decrease < opts.f_tol) ? stall + 1 : 0;

        z = z_trial;
        fv = f_new;
        g = g_new;
        result.history.push_back(fv);

        if (stall >= opts.stall_iterations) {
            ++it;
            result.converged = true;
            break;
        }
    }

    result.z = z;
    result.value = fv;
    const Vec pg_final = z - detail::clip_box(z - g, lo, hi);
    result.grad_norm = (dim > 0) ? pg_final.cwiseAbs().maxCoeff() : 0.0;
    result.iterations = it;
    return result;
}

} // namespace riphs
