#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "riphs/model.hpp"

namespace riphs {

// Network of n thermal compartments exchanging heat through Fourier
// conduction, with an entropy flow actuator on every compartment. States are
// dimensionless entropies x_i, temperatures are T_i = t_ref * exp(x_i), and
//
//   dx_i/dt = -sum_j Lambda_ij (e^{x_i} - e^{x_j}) / e^{x_i} + u_i.
//
// Generating data: H = t_ref * sum_i e^{x_i}, S = sum_i x_i, g = I_n,
// J0 = 0, one coupling per unordered pair (i, j) with Lambda_ij > 0 whose
// matrix has entry (i, j) = -1 and (j, i) = +1, so {S,H}_{J_ij} = T_i - T_j
// and gamma_ij = Lambda_ij / (H_x,i * H_x,j) recovers the conduction law.
struct HeatExchangerParams {
    Mat lambda;         // symmetric nonnegative conductivities, zero diagonal
    double t_ref = 1.0; // temperature unit
    double t0 = 1.0;    // exergy reference temperature
};

inline ModelSpec make_heat_exchanger(const HeatExchangerParams& params) {
    const Mat& lam = params.lambda;
    const int n = static_cast<int>(lam.rows());
    if (lam.rows() != lam.cols() || n < 2) {
        throw InvalidParams("make_heat_exchanger: lambda must be square with n >= 2");
    }
    if (!lam.allFinite()) {
        throw InvalidParams("make_heat_exchanger: lambda has non-finite entries");
    }
    const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
    if ((lam - lam.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw InvalidParams("make_heat_exchanger: lambda must be symmetric");
    }
    if (lam.diagonal().cwiseAbs().maxCoeff() > 0.0) {
        throw InvalidParams("make_heat_exchanger: lambda diagonal must be zero");
    }
    if (lam.minCoeff() < 0.0) {
        throw InvalidParams("make_heat_exchanger: conductivities must be nonnegative");
    }
    if (!(params.t_ref > 0.0) || !(params.t0 > 0.0)) {
        throw InvalidParams("make_heat_exchanger: t_ref and t0 must be positive");
    }

    const double t_ref = params.t_ref;

    ModelSpec model;
    model.n = n;
    model.m = n;
    model.t0 = params.t0;

    model.hamiltonian = [n, t_ref](const Vec& x) {
        return t_ref * x.array().exp().sum();
    };
    model.hamiltonian_grad = [t_ref](const Vec& x) {
        return Vec(t_ref * x.array().exp());
    };
    model.entropy = [](const Vec& x) { return x.sum(); };
    model.entropy_grad = [n](const Vec&) { return Vec(Vec::Ones(n)); };
    model.input_map = [n](const Vec&, const Vec&) { return Mat(Mat::Identity(n, n)); };

    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double lambda_ij = lam(i, j);
            if (lambda_ij <= 0.0) {
                continue;
            }
            Mat jm = Mat::Zero(n, n);
            jm(i, j) = -1.0;
            jm(j, i) = 1.0;
            model.jk.push_back(std::move(jm));
            // gamma in terms of H_x keeps the t_ref dependence implicit:
            // Lambda_ij / (t_ref^2 e^{x_i} e^{x_j}) = Lambda_ij / (H_x,i H_x,j).
            model.gamma.push_back([i, j, lambda_ij](const Vec&, const Vec& e) {
                return lambda_ij / (e(i) * e(j));
            });
        }
    }

    validate_model(model);
    return model;
}

// Closed-form conduction right-hand side, bypassing the structural assembly.
// eval_drift on the same model must agree with this to rounding error.
inline Vec heat_exchanger_direct_rhs(const HeatExchangerParams& params, const Vec& x) {
    const int n = static_cast<int>(params.lambda.rows());
    if (x.size() != n) {
        throw DimensionMismatch("heat_exchanger_direct_rhs: state size mismatch");
    }
    const Vec ex = x.array().exp();
    Vec d = Vec::Zero(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            d(i) -= params.lambda(i, j) * (ex(i) - ex(j)) / ex(i);
        }
    }
    return d;
}

} // namespace riphs
