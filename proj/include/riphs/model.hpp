#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "riphs/errors.hpp"

namespace riphs {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Generating data of a reversible-irreversible port-Hamiltonian system
//
//   dx/dt = [ J0(x) + sum_k gamma_k(x, H_x) * {S,H}_{Jk}(x) * Jk ] H_x(x)
//           + g(x, H_x) u,
//
// with conjugate outputs y_H = g^T H_x and y_S = g^T S_x. The J0 part is
// reversible (it conserves both H and S through skew-symmetry and the
// Casimir condition J0 S_x = 0), each Jk coupling is irreversible and
// produces entropy at rate gamma_k {S,H}_{Jk}^2 >= 0.
struct ModelSpec {
    int n = 0; // state dimension
    int m = 0; // input dimension

    // Reversible structure. An empty function means J0 == 0, which also
    // skips the per-evaluation skew and Casimir checks on the hot path.
    std::function<Mat(const Vec&)> j0;

    // Constant skew-symmetric matrices of the irreversible couplings.
    std::vector<Mat> jk;

    std::function<double(const Vec&)> hamiltonian;
    std::function<Vec(const Vec&)> hamiltonian_grad;
    std::function<double(const Vec&)> entropy;
    std::function<Vec(const Vec&)> entropy_grad;

    // gamma_k(x, H_x(x)); must be strictly positive wherever evaluated.
    std::vector<std::function<double(const Vec&, const Vec&)>> gamma;

    // Input map g(x, H_x(x)), n x m.
    std::function<Mat(const Vec&, const Vec&)> input_map;

    // Reference temperature of the exergy E = H - t0 * S.
    double t0 = 1.0;

    // Admissible-set membership test. Empty means all of R^n. The guard is
    // advisory at evaluation time (evaluations throw DomainViolation);
    // integrators enforce it through step rejection.
    std::function<bool(const Vec&)> domain_guard;

    int couplings() const { return static_cast<int>(jk.size()); }

    bool admissible(const Vec& x) const {
        return !domain_guard || domain_guard(x);
    }
};

// Bracket {v,w}_J = v_x^T J w_x evaluated from the two gradients.
inline double poisson_bracket(const Mat& j, const Vec& v_x, const Vec& w_x) {
    if (j.rows() != v_x.size() || j.cols() != w_x.size()) {
        throw DimensionMismatch("poisson_bracket: gradient sizes do not match the structure matrix");
    }
    return v_x.dot(j * w_x);
}

namespace detail {

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_state_dim(const ModelSpec& model, const Vec& x, const char* where) {
    if (x.size() != model.n) {
        throw DimensionMismatch(std::string(where) + ": state has size " + std::to_string(x.size()) +
                                ", model.n = " + std::to_string(model.n));
    }
}

inline void require_admissible(const ModelSpec& model, const Vec& x, const char* where) {
    if (!x.allFinite()) {
        throw NonFinite(std::string(where) + ": state contains a non-finite entry");
    }
    if (!model.admissible(x)) {
        throw DomainViolation(std::string(where) + ": state outside the admissible set");
    }
}

// J0 must be skew-symmetric and must annihilate S_x at every point where it
// is evaluated. Both are checked with scale-relative tolerances.
inline void check_reversible_structure(const Mat& j0, const Vec& s_x) {
    const double scale = j0.cwiseAbs().maxCoeff();
    const double skew = (j0 + j0.transpose()).cwiseAbs().maxCoeff();
    if (skew > 1e-12 * std::max(1.0, scale)) {
        throw InvalidParams("J0 is not skew-symmetric at the evaluated state");
    }
    const double casimir = (j0 * s_x).cwiseAbs().maxCoeff();
    if (casimir > 1e-10 * (1.0 + scale * s_x.cwiseAbs().maxCoeff())) {
        throw InvalidParams("J0 S_x != 0: entropy is not a Casimir of the reversible structure");
    }
}

} // namespace detail

// Gradient of H, with domain and finiteness checks applied.
inline Vec hamiltonian_grad(const ModelSpec& model, const Vec& x) {
    detail::require_state_dim(model, x, "hamiltonian_grad");
    detail::require_admissible(model, x, "hamiltonian_grad");
    Vec e = model.hamiltonian_grad(x);
    if (!detail::all_finite(e)) {
        throw NonFinite("hamiltonian_grad: H_x is non-finite");
    }
    return e;
}

// Uncontrolled right-hand side, assembled from the generating data.
inline Vec eval_drift(const ModelSpec& model, const Vec& x) {
    detail::require_state_dim(model, x, "eval_drift");
    detail::require_admissible(model, x, "eval_drift");

    const Vec e = model.hamiltonian_grad(x);
    const Vec s = model.entropy_grad(x);
    if (!detail::all_finite(e) || !detail::all_finite(s)) {
        throw NonFinite("eval_drift: generating gradients are non-finite");
    }

    Vec d = Vec::Zero(model.n);
    if (model.j0) {
        const Mat j0 = model.j0(x);
        detail::check_reversible_structure(j0, s);
        d.noalias() += j0 * e;
    }
    for (int k = 0; k < model.couplings(); ++k) {
        const Vec je = model.jk[k] * e;
        const double bracket = s.dot(je);
        const double gk = model.gamma[k](x, e);
        if (!(gk > 0.0) || !std::isfinite(gk)) {
            // a conductance that degenerates at this state is a domain edge,
            // same as a guard violation, so adaptive steppers may retreat
            throw DomainViolation("eval_drift: gamma_" + std::to_string(k) +
                                  " is not positive and finite at this state");
        }
        d.noalias() += (gk * bracket) * je;
    }
    if (!detail::all_finite(d)) {
        throw NonFinite("eval_drift: drift is non-finite");
    }
    return d;
}

// Controlled right-hand side f(x, u) = drift(x) + g(x, H_x) u.
inline Vec eval_rhs(const ModelSpec& model, const Vec& x, const Vec& u) {
    if (u.size() != model.m) {
        throw DimensionMismatch("eval_rhs: control has size " + std::to_string(u.size()) +
                                ", model.m = " + std::to_string(model.m));
    }
    Vec d = eval_drift(model, x);
    const Vec e = model.hamiltonian_grad(x);
    d.noalias() += model.input_map(x, e) * u;
    if (!detail::all_finite(d)) {
        throw NonFinite("eval_rhs: right-hand side is non-finite");
    }
    return d;
}

struct Outputs {
    Vec y_h; // power-conjugate output g^T H_x
    Vec y_s; // entropy-conjugate output g^T S_x
};

inline Outputs eval_outputs(const ModelSpec& model, const Vec& x) {
    detail::require_state_dim(model, x, "eval_outputs");
    detail::require_admissible(model, x, "eval_outputs");
    const Vec e = hamiltonian_grad(model, x);
    const Mat g = model.input_map(x, e);
    if (g.rows() != model.n || g.cols() != model.m) {
        throw DimensionMismatch("eval_outputs: input map is not n x m");
    }
    Outputs out;
    out.y_h = g.transpose() * e;
    out.y_s = g.transpose() * model.entropy_grad(x);
    return out;
}

// Internal entropy production sigma(x) = sum_k gamma_k {S,H}_{Jk}^2 >= 0.
inline double entropy_production(const ModelSpec& model, const Vec& x) {
    detail::require_state_dim(model, x, "entropy_production");
    detail::require_admissible(model, x, "entropy_production");
    const Vec e = model.hamiltonian_grad(x);
    const Vec s = model.entropy_grad(x);
    double sigma = 0.0;
    for (int k = 0; k < model.couplings(); ++k) {
        const double bracket = s.dot(model.jk[k] * e);
        const double gk = model.gamma[k](x, e);
        if (!(gk > 0.0) || !std::isfinite(gk)) {
            throw DomainViolation("entropy_production: gamma_" + std::to_string(k) +
                                  " is not positive and finite at this state");
        }
        sigma += gk * bracket * bracket;
    }
    if (!std::isfinite(sigma)) {
        throw NonFinite("entropy_production: sigma is non-finite");
    }
    return sigma;
}

// Exergy E = H - t0 * S, the natural storage function of the model.
inline double exergy(const ModelSpec& model, const Vec& x) {
    detail::require_state_dim(model, x, "exergy");
    detail::require_admissible(model, x, "exergy");
    const double value = model.hamiltonian(x) - model.t0 * model.entropy(x);
    if (!std::isfinite(value)) {
        throw NonFinite("exergy: value is non-finite");
    }
    return value;
}

inline Vec exergy_grad(const ModelSpec& model, const Vec& x) {
    detail::require_state_dim(model, x, "exergy_grad");
    detail::require_admissible(model, x, "exergy_grad");
    Vec g = model.hamiltonian_grad(x) - model.t0 * model.entropy_grad(x);
    if (!detail::all_finite(g)) {
        throw NonFinite("exergy_grad: gradient is non-finite");
    }
    return g;
}

// Availability A(x, x_eq) = H(x) - H(x_eq) - H_x(x_eq)^T (x - x_eq).
// Nonnegative whenever H is convex, zero at x = x_eq.
inline double availability(const ModelSpec& model, const Vec& x, const Vec& x_eq) {
    detail::require_state_dim(model, x, "availability");
    detail::require_state_dim(model, x_eq, "availability");
    detail::require_admissible(model, x, "availability");
    detail::require_admissible(model, x_eq, "availability");
    const double value = model.hamiltonian(x) - model.hamiltonian(x_eq) -
                         model.hamiltonian_grad(x_eq).dot(x - x_eq);
    if (!std::isfinite(value)) {
        throw NonFinite("availability: value is non-finite");
    }
    return value;
}

// Structural sanity applied once at construction: every coupling matrix is
// square of the right size and exactly as skew as floating point allows.
inline void validate_model(const ModelSpec& model) {
    if (model.n <= 0 || model.m < 0) {
        throw InvalidParams("validate_model: dimensions must satisfy n > 0, m >= 0");
    }
    if (model.gamma.size() != model.jk.size()) {
        throw InvalidParams("validate_model: gamma count does not match coupling count");
    }
    if (!model.hamiltonian || !model.hamiltonian_grad || !model.entropy || !model.entropy_grad) {
        throw InvalidParams("validate_model: generating functions H, H_x, S, S_x are all required");
    }
    if (!model.input_map) {
        throw InvalidParams("validate_model: input map g is required");
    }
    if (!(model.t0 > 0.0) || !std::isfinite(model.t0)) {
        throw InvalidParams("validate_model: reference temperature t0 must be positive");
    }
    for (size_t k = 0; k < model.jk.size(); ++k) {
        const Mat& j = model.jk[k];
        if (j.rows() != model.n || j.cols() != model.n) {
            throw InvalidParams("validate_model: J_" + std::to_string(k) + " is not n x n");
        }
        const double scale = std::max(1.0, j.cwiseAbs().maxCoeff());
        if ((j + j.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
            throw InvalidParams("validate_model: J_" + std::to_string(k) + " is not skew-symmetric");
        }
    }
}

} // namespace riphs
