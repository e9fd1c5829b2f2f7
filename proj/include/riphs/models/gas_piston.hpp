#pragma once

#include <cmath>

#include "riphs/model.hpp"

namespace riphs {

// Ideal gas in a vertical cylinder under a piston of mass `mass` and face
// area `area`, damped by a viscous friction `damping`, with an entropy flow
// actuator on the gas. State x = (S_gas, V, p_piston).
//
// Internal energy of the monatomic ideal gas (Sackur-Tetrode form):
//   U(x1, x2) = k1 * exp(k2 * x1) / x2^{2/3},   T = k2 * U,   P = (2/3) U / x2,
// total energy H = U + k3 * x3^2 + k4 * x2 where k4 * x2 is the piston's
// gravitational potential (mass * gravity / area per unit volume).
//
// Generating data: S = x1, J0 couples (V, p) through the piston kinematics,
// J1 couples (S_gas, p) with gamma = damping / T, so friction heat re-enters
// the gas and the drift is
//   dx/dt = ( damping * v^2 / T,  A v,  A P - mass * gravity - damping * v ).
struct GasPistonParams {
    double n_mol = 1.0;        // amount of gas
    double gas_constant = 1.0; // R
    double s_ref = 0.0;        // entropy offset of the energy expression
    double t_ref = 1.0;
    double p_ref = 1.0;
    double mass = 1.0;    // piston mass
    double gravity = 1.0; // gravitational acceleration
    double area = 1.0;    // piston face area
    double damping = 1.0; // friction coefficient, > 0
    double t0 = 1.0;      // exergy reference temperature
    // With the flag off, H omits the k4 * x2 potential and the piston feels
    // no weight term in the momentum equation.
    bool include_gravity_potential = true;
};

struct GasPistonCoefficients {
    double k1, k2, k3, k4;
};

inline GasPistonCoefficients gas_piston_coefficients(const GasPistonParams& p) {
    GasPistonCoefficients c;
    c.k1 = 1.5 * std::pow(p.n_mol * p.gas_constant * p.t_ref, 5.0 / 3.0) *
           std::pow(p.p_ref, -2.0 / 3.0) *
           std::exp(-(2.0 / 3.0) * p.s_ref / p.gas_constant);
    c.k2 = 2.0 / (3.0 * p.gas_constant * p.n_mol);
    c.k3 = 1.0 / (2.0 * p.mass);
    c.k4 = p.mass * p.gravity / p.area;
    return c;
}

inline ModelSpec make_gas_piston(const GasPistonParams& params) {
    if (!(params.n_mol > 0.0) || !(params.gas_constant > 0.0) || !(params.t_ref > 0.0) ||
        !(params.p_ref > 0.0) || !(params.mass > 0.0) || !(params.area > 0.0) ||
        !(params.damping > 0.0) || !(params.t0 > 0.0) || !(params.gravity >= 0.0)) {
        throw InvalidParams("make_gas_piston: parameters out of range");
    }
    const GasPistonCoefficients c = gas_piston_coefficients(params);
    const double area = params.area;
    const bool with_weight = params.include_gravity_potential;
    const double k4 = with_weight ? c.k4 : 0.0;
    const double damping = params.damping;

    const auto internal_energy = [c](const Vec& x) {
        return c.k1 * std::exp(c.k2 * x(0)) / std::pow(x(1), 2.0 / 3.0);
    };

    ModelSpec model;
    model.n = 3;
    model.m = 1;
    model.t0 = params.t0;
    model.domain_guard = [](const Vec& x) { return x(1) > 0.0 && x.allFinite(); };

    model.hamiltonian = [c, k4, internal_energy](const Vec& x) {
        return internal_energy(x) + c.k3 * x(2) * x(2) + k4 * x(1);
    };
    model.hamiltonian_grad = [c, k4, internal_energy](const Vec& x) {
        const double u_int = internal_energy(x);
        Vec e(3);
        e(0) = c.k2 * u_int;                          // temperature
        e(1) = -(2.0 / 3.0) * u_int / x(1) + k4;      // -pressure + weight per area
        e(2) = 2.0 * c.k3 * x(2);                     // piston velocity
        return e;
    };
    model.entropy = [](const Vec& x) { return x(0); };
    model.entropy_grad = [](const Vec&) {
        Vec s(3);
        s << 1.0, 0.0, 0.0;
        return s;
    };
    model.input_map = [](const Vec&, const Vec&) {
        Mat g(3, 1);
        g << 1.0, 0.0, 0.0;
        return g;
    };

    Mat j0 = Mat::Zero(3, 3);
    j0(1, 2) = area;
    j0(2, 1) = -area;
    model.j0 = [j0](const Vec&) { return j0; };

    Mat j1 = Mat::Zero(3, 3);
    j1(0, 2) = 1.0;
    j1(2, 0) = -1.0;
    model.jk.push_back(j1);
    // H_x(0) is the gas temperature, so gamma = damping / T stays positive
    // on the admissible set.
    model.gamma.push_back([damping](const Vec&, const Vec& e) { return damping / e(0); });

    validate_model(model);
    return model;
}

// Momentum-balance right-hand side written out directly. The structural
// assembly in eval_drift must reproduce it to rounding error.
inline Vec gas_piston_direct_rhs(const GasPistonParams& params, const Vec& x) {
    if (x.size() != 3) {
        throw DimensionMismatch("gas_piston_direct_rhs: state must have size 3");
    }
    const GasPistonCoefficients c = gas_piston_coefficients(params);
    const double u_int = c.k1 * std::exp(c.k2 * x(0)) / std::pow(x(1), 2.0 / 3.0);
    const double temperature = c.k2 * u_int;
    const double pressure = (2.0 / 3.0) * u_int / x(1);
    const double v = x(2) / params.mass;
    const double weight = params.include_gravity_potential ? params.mass * params.gravity : 0.0;
    Vec d(3);
    d(0) = params.damping * v * v / temperature;
    d(1) = params.area * v;
    d(2) = params.area * pressure - weight - params.damping * v;
    return d;
}

} // namespace riphs
