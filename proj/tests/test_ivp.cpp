#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "riphs/ivp.hpp"
#include "riphs/models/gas_piston.hpp"
#include "riphs/models/heat_exchanger.hpp"
#include "riphs/ocp.hpp"

using namespace riphs;

namespace {

ModelSpec two_compartment() {
    HeatExchangerParams p;
    p.lambda = Mat::Zero(2, 2);
    p.lambda(0, 1) = p.lambda(1, 0) = 1.0;
    return make_heat_exchanger(p);
}

Vec reference_state(const ModelSpec& model, const Vec& x0, const ControlSignal& u,
                    double t_end) {
    IntegratorOptions opts;
    opts.method = Integrator::rk45;
    opts.tol = 1e-13;
    const Trajectory traj = integrate(model, x0, u, t_end, opts);
    return traj.states.row(traj.samples() - 1).transpose();
}

double final_error(const ModelSpec& model, const Vec& x0, double t_end, double h,
                   Integrator method, double tol, const Vec& ref) {
    ControlSignal u;
    u.t0 = 0.0;
    u.h = h;
    u.values = Mat::Zero(static_cast<int>(std::llround(t_end / h)), model.m);
    IntegratorOptions opts;
    opts.method = method;
    opts.tol = tol;
    const Trajectory traj = integrate(model, x0, u, t_end, opts);
    return (traj.states.row(traj.samples() - 1).transpose() - ref).norm();
}

} // namespace

TEST_CASE("euler mode is bit-identical to the transcription rollout") {
    OcpSpec spec;
    spec.model = two_compartment();
    spec.T = 2.0;
    spec.h = 0.1;
    spec.alpha = Vec::Ones(3);
    spec.c_mat = Mat::Identity(2, 2);
    spec.y_ref = Vec::Zero(2);
    spec.u_lo = Vec::Constant(2, -1.0);
    spec.u_hi = Vec::Constant(2, 1.0);
    spec.x0 = Vec::Zero(2);

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    Mat u(20, 2);
    for (int k = 0; k < 20; ++k) {
        u(k, 0) = unif(rng);
        u(k, 1) = unif(rng);
    }

    const Trajectory direct = rollout(spec, u);

    ControlSignal signal;
    signal.t0 = 0.0;
    signal.h = 0.1;
    signal.values = u;
    IntegratorOptions opts;
    opts.method = Integrator::euler;
    const Trajectory integrated = integrate(spec.model, spec.x0, signal, 2.0, opts);

    REQUIRE(integrated.samples() == direct.samples());
    for (int k = 0; k < direct.samples(); ++k) {
        for (int i = 0; i < 2; ++i) {
            CHECK(integrated.states(k, i) == direct.states(k, i));
        }
    }
}

TEST_CASE("fixed-step convergence orders") {
    const ModelSpec model = two_compartment();
    Vec x0(2);
    x0 << std::log(2.0), 0.0;
    ControlSignal no_input;
    const Vec ref = reference_state(model, x0, no_input, 1.0);

    SECTION("euler is first order") {
        const double e1 = final_error(model, x0, 1.0, 0.02, Integrator::euler, 0.0, ref);
        const double e2 = final_error(model, x0, 1.0, 0.01, Integrator::euler, 0.0, ref);
        CHECK(e1 / e2 == Catch::Approx(2.0).margin(0.3));
    }
    SECTION("rk4 is fourth order") {
        const double e1 = final_error(model, x0, 1.0, 0.2, Integrator::rk4, 0.0, ref);
        const double e2 = final_error(model, x0, 1.0, 0.1, Integrator::rk4, 0.0, ref);
        CHECK(e1 / e2 == Catch::Approx(16.0).margin(6.0));
    }
    SECTION("rk45 at loose tolerance reduces to high-order grid steps") {
        // the propagated pair superconverges on smooth flows (observed order
        // ~6); anything clearly above fourth order confirms single grid
        // steps per segment rather than adaptive subdivision
        const double e1 = final_error(model, x0, 1.0, 0.25, Integrator::rk45, 1.0, ref);
        const double e2 = final_error(model, x0, 1.0, 0.125, Integrator::rk45, 1.0, ref);
        CHECK(e1 / e2 >= 20.0);
        CHECK(e1 / e2 <= 150.0);
    }
}

TEST_CASE("rk45 at tight tolerance tracks a fixed-step reference") {
    const ModelSpec model = two_compartment();
    Vec x0(2);
    x0 << std::log(2.0), 0.0;

    ControlSignal u;
    IntegratorOptions tight;
    tight.method = Integrator::rk45;
    tight.tol = 1e-10;
    const Trajectory traj = integrate(model, x0, u, 5.0, tight);

    const double err =
        final_error(model, x0, 5.0, 1e-4, Integrator::rk4, 0.0,
                    traj.states.row(traj.samples() - 1).transpose());
    CHECK(err <= 1e-8);

    // the flow relaxes toward the isothermal equilibrium ln(3/2)
    const double target = std::log(1.5);
    CHECK(std::abs(traj.states(traj.samples() - 1, 0) - target) <= 1e-3);
    CHECK(std::abs(traj.states(traj.samples() - 1, 1) - target) <= 1e-3);
}

TEST_CASE("uncontrolled flow conserves energy and produces entropy") {
    const ModelSpec model = two_compartment();
    Vec x0(2);
    x0 << std::log(2.0), 0.0;

    ControlSignal u;
    u.t0 = 0.0;
    u.h = 0.1;
    u.values = Mat::Zero(100, 2);
    IntegratorOptions opts;
    opts.method = Integrator::rk45;
    opts.tol = 1e-10;
    const Trajectory traj = integrate(model, x0, u, 10.0, opts);

    double s_prev = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < traj.samples(); ++k) {
        const Vec x = traj.states.row(k).transpose();
        CHECK(std::abs(model.hamiltonian(x) - 3.0) <= 1e-8);
        const double s = model.entropy(x);
        CHECK(s >= s_prev - 1e-12);
        s_prev = s;
    }

    const BalanceReport report = balance_report(model, traj);
    CHECK(report.power_residual <= 1e-8);
    CHECK(report.entropy_slack >= 0.0);
    CHECK(std::isnan(report.exergy_bound_margin));
}

TEST_CASE("balance report with controls and a growth envelope") {
    const ModelSpec model = two_compartment();
    Vec x0 = Vec::Zero(2);

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> unif(-0.5, 0.5);
    const int k_steps = 500;
    ControlSignal u;
    u.t0 = 0.0;
    u.h = 0.002;
    u.values.resize(k_steps, 2);
    for (int k = 0; k < k_steps; ++k) {
        // controls held constant over 50-step blocks keep the integrands
        // smooth inside each quadrature segment
        if (k % 50 == 0) {
            u.values(k, 0) = unif(rng);
            u.values(k, 1) = unif(rng);
        } else {
            u.values.row(k) = u.values.row(k - 1);
        }
    }
    IntegratorOptions opts;
    opts.method = Integrator::rk45;
    opts.tol = 1e-10;
    const Trajectory traj = integrate(model, x0, u, 1.0, opts);

    const BalanceReport plain = balance_report(model, traj);
    CHECK(plain.power_residual <= 1e-6);
    CHECK(plain.entropy_slack >= -1e-9);

    // a deliberately generous growth constant must produce a met envelope
    const BalanceReport bounded = balance_report(model, traj, 10.0, 1.0);
    REQUIRE(std::isfinite(bounded.exergy_bound_margin));
    CHECK(bounded.exergy_bound_margin >= -1e-9);
}

TEST_CASE("a final time inside a segment gets an exact final sample") {
    const ModelSpec model = two_compartment();
    ControlSignal u;
    u.t0 = 0.0;
    u.h = 0.25;
    u.values = Mat::Zero(4, 2);
    u.values(3, 0) = 0.5;
    const Trajectory traj = integrate(model, Vec::Zero(2), u, 0.9);

    REQUIRE(traj.samples() == 5);
    CHECK(traj.times(3) == Catch::Approx(0.75).margin(1e-15));
    CHECK(traj.times(4) == Catch::Approx(0.9).margin(1e-15));
    // final row repeats the control held on the last segment
    CHECK(traj.controls(4, 0) == traj.controls(3, 0));
    CHECK(traj.controls(3, 0) == 0.5);
}

TEST_CASE("degenerate spans") {
    const ModelSpec model = two_compartment();
    ControlSignal empty;

    SECTION("t_end equal to the start time yields one sample") {
        const Trajectory traj = integrate(model, Vec::Zero(2), empty, 0.0);
        REQUIRE(traj.samples() == 1);
        CHECK(traj.times(0) == 0.0);
        CHECK(traj.controls.row(0).cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("empty control means autonomous flow") {
        const Trajectory traj = integrate(model, Vec::Zero(2), empty, 1.0);
        REQUIRE(traj.samples() == 2);
        CHECK(traj.states.row(1).isApprox(traj.states.row(0), 1e-12));
    }
    SECTION("t_end before the start time is rejected") {
        CHECK_THROWS_AS(integrate(model, Vec::Zero(2), empty, -1.0), InvalidParams);
    }
}

TEST_CASE("fixed-step integrators refuse to leave the admissible set") {
    const ModelSpec model = make_gas_piston(GasPistonParams{});
    Vec x0(3);
    x0 << 0.0, 0.1, -1.0; // piston crashing into the gas
    ControlSignal u;
    u.t0 = 0.0;
    u.h = 0.2;
    u.values = Mat::Zero(5, 1);

    IntegratorOptions opts;
    opts.method = Integrator::euler;
    CHECK_THROWS_AS(integrate(model, x0, u, 1.0, opts), DomainViolation);
}

TEST_CASE("rk45 halves into a guard and survives when the model pushes back") {
    const ModelSpec model = make_gas_piston(GasPistonParams{});
    Vec x0(3);
    x0 << 0.0, 0.1, -1.0;
    ControlSignal u;
    u.t0 = 0.0;
    u.h = 0.2;
    u.values = Mat::Zero(5, 1);

    IntegratorOptions opts;
    opts.method = Integrator::rk45;
    opts.tol = 1e-8;
    // pressure rises steeply as the volume shrinks, so the adaptive path can
    // thread the compression without leaving the domain
    const Trajectory traj = integrate(model, x0, u, 1.0, opts);
    for (int k = 0; k < traj.samples(); ++k) {
        CHECK(traj.states(k, 1) > 0.0);
    }
}

TEST_CASE("blow-up cap triggers") {
    const ModelSpec model = two_compartment();
    ControlSignal u;
    u.t0 = 0.0;
    u.h = 1.0;
    u.values = Mat::Constant(10, 2, 1.0);
    IntegratorOptions opts;
    opts.method = Integrator::euler;
    opts.blowup_cap = 5.0;
    CHECK_THROWS_AS(integrate(model, Vec::Zero(2), u, 10.0, opts), BlowUp);
}

TEST_CASE("control and trajectory validation") {
    SECTION("control with steps needs a positive grid step") {
        ControlSignal u;
        u.h = 0.0;
        u.values = Mat::Zero(3, 2);
        CHECK_THROWS_AS(validate_control(u), InvalidParams);
    }
    SECTION("non-finite control entries") {
        ControlSignal u;
        u.h = 0.1;
        u.values = Mat::Zero(3, 2);
        u.values(1, 1) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(validate_control(u), NonFinite);
    }
    SECTION("times must strictly increase") {
        Trajectory traj;
        traj.times = Vec::Zero(2);
        traj.states = Mat::Zero(2, 1);
        traj.controls = Mat::Zero(2, 1);
        CHECK_THROWS_AS(validate_trajectory(traj), InconsistentTrajectory);
    }
    SECTION("row counts must match") {
        Trajectory traj;
        traj.times = Vec::LinSpaced(3, 0.0, 1.0);
        traj.states = Mat::Zero(2, 1);
        traj.controls = Mat::Zero(3, 1);
        CHECK_THROWS_AS(validate_trajectory(traj), InconsistentTrajectory);
    }
    SECTION("control channel mismatch") {
        const ModelSpec model = two_compartment();
        ControlSignal u;
        u.h = 0.1;
        u.values = Mat::Zero(3, 1);
        CHECK_THROWS_AS(integrate(model, Vec::Zero(2), u, 0.3), DimensionMismatch);
    }
}
