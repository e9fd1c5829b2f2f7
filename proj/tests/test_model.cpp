#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "riphs/models/gas_piston.hpp"
#include "riphs/models/heat_exchanger.hpp"

using namespace riphs;

namespace {

Mat pair_lambda(int n, std::initializer_list<std::tuple<int, int, double>> entries) {
    Mat lam = Mat::Zero(n, n);
    for (const auto& [i, j, v] : entries) {
        lam(i, j) = v;
        lam(j, i) = v;
    }
    return lam;
}

ModelSpec two_compartment() {
    HeatExchangerParams p;
    p.lambda = pair_lambda(2, {{0, 1, 1.0}});
    return make_heat_exchanger(p);
}

ModelSpec five_compartment_chain() {
    HeatExchangerParams p;
    p.lambda = pair_lambda(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {2, 4, 1.0}});
    return make_heat_exchanger(p);
}

} // namespace

TEST_CASE("two-compartment drift matches the conduction law at a pinned state") {
    const ModelSpec model = two_compartment();
    Vec x(2);
    x << std::log(2.0), 0.0;
    const Vec d = eval_drift(model, x);
    CHECK(d(0) == Catch::Approx(-0.5).margin(1e-14));
    CHECK(d(1) == Catch::Approx(1.0).margin(1e-14));
}

TEST_CASE("pair coupling bracket is the temperature difference") {
    const ModelSpec model = two_compartment();
    Vec x(2);
    x << std::log(2.0), 0.0;
    const Vec h_x = model.hamiltonian_grad(x);
    const Vec s_x = model.entropy_grad(x);
    REQUIRE(model.couplings() == 1);
    CHECK(poisson_bracket(model.jk[0], s_x, h_x) == Catch::Approx(2.0 - 1.0).margin(1e-14));
}

TEST_CASE("structural assembly reproduces the direct conduction law at random states") {
    HeatExchangerParams p;
    p.lambda = pair_lambda(5, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {2, 4, 1.0}});
    const ModelSpec model = make_heat_exchanger(p);

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> unif(-2.0, 6.0);
    for (int trial = 0; trial < 200; ++trial) {
        Vec x(5);
        for (int i = 0; i < 5; ++i) {
            x(i) = unif(rng);
        }
        const Vec structural = eval_drift(model, x);
        const Vec direct = heat_exchanger_direct_rhs(p, x);
        const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
        CHECK((structural - direct).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
}

TEST_CASE("entropy production matches the closed form and stays nonnegative") {
    HeatExchangerParams p;
    p.lambda = pair_lambda(3, {{0, 1, 0.7}, {1, 2, 1.3}});
    const ModelSpec model = make_heat_exchanger(p);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-1.5, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
        Vec x(3);
        for (int i = 0; i < 3; ++i) {
            x(i) = unif(rng);
        }
        const Vec ex = x.array().exp();
        double expected = 0.0;
        expected += 0.7 * (ex(0) - ex(1)) * (ex(0) - ex(1)) / (ex(0) * ex(1));
        expected += 1.3 * (ex(1) - ex(2)) * (ex(1) - ex(2)) / (ex(1) * ex(2));
        const double sigma = entropy_production(model, x);
        CHECK(sigma >= 0.0);
        CHECK(sigma == Catch::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("exergy, exergy gradient, and availability at pinned states") {
    const ModelSpec model = two_compartment();
    Vec origin = Vec::Zero(2);
    CHECK(exergy(model, origin) == Catch::Approx(2.0).margin(1e-14));

    Vec x(2);
    x << 1.0, 0.0;
    CHECK(availability(model, x, origin) ==
          Catch::Approx(std::exp(1.0) - 2.0).margin(1e-12));
    CHECK(availability(model, origin, origin) == Catch::Approx(0.0).margin(1e-14));

    // central finite differences of E against exergy_grad
    const Vec g = exergy_grad(model, x);
    for (int i = 0; i < 2; ++i) {
        Vec xp = x, xm = x;
        const double d = 1e-6 * (1.0 + std::abs(x(i)));
        xp(i) += d;
        xm(i) -= d;
        const double fd = (exergy(model, xp) - exergy(model, xm)) / (2.0 * d);
        CHECK(g(i) == Catch::Approx(fd).margin(1e-6));
    }
}

TEST_CASE("outputs are the port-conjugate pairs") {
    const ModelSpec model = five_compartment_chain();
    Vec x(5);
    x << 0.1, -0.3, 0.7, 0.0, 1.1;
    const Outputs out = eval_outputs(model, x);
    CHECK((out.y_h - model.hamiltonian_grad(x)).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK((out.y_s - Vec::Ones(5)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("heat exchanger parameter validation") {
    HeatExchangerParams p;
    p.lambda = pair_lambda(2, {{0, 1, 1.0}});

    SECTION("nonzero diagonal") {
        p.lambda(0, 0) = 0.5;
        CHECK_THROWS_AS(make_heat_exchanger(p), InvalidParams);
    }
    SECTION("asymmetric") {
        p.lambda(0, 1) = 2.0;
        CHECK_THROWS_AS(make_heat_exchanger(p), InvalidParams);
    }
    SECTION("negative conductivity") {
        p.lambda(0, 1) = p.lambda(1, 0) = -1.0;
        CHECK_THROWS_AS(make_heat_exchanger(p), InvalidParams);
    }
    SECTION("single compartment") {
        p.lambda = Mat::Zero(1, 1);
        CHECK_THROWS_AS(make_heat_exchanger(p), InvalidParams);
    }
    SECTION("nonpositive reference temperature") {
        p.t_ref = 0.0;
        CHECK_THROWS_AS(make_heat_exchanger(p), InvalidParams);
    }
}

TEST_CASE("model validation rejects malformed generating data") {
    ModelSpec model = two_compartment();

    SECTION("coupling matrix not skew") {
        model.jk[0](0, 1) = model.jk[0](1, 0);
        CHECK_THROWS_AS(validate_model(model), InvalidParams);
    }
    SECTION("gamma count mismatch") {
        model.gamma.clear();
        CHECK_THROWS_AS(validate_model(model), InvalidParams);
    }
    SECTION("missing entropy") {
        model.entropy = nullptr;
        CHECK_THROWS_AS(validate_model(model), InvalidParams);
    }
    SECTION("nonpositive t0") {
        model.t0 = -1.0;
        CHECK_THROWS_AS(validate_model(model), InvalidParams);
    }
}

TEST_CASE("reversible structure checks fire at evaluation time") {
    // J0 that does not annihilate S_x: eval_drift must refuse it.
    ModelSpec model = two_compartment();
    Mat j0(2, 2);
    j0 << 0.0, 1.0, -1.0, 0.0;
    model.j0 = [j0](const Vec&) { return j0; };
    Vec x = Vec::Zero(2);
    CHECK_THROWS_AS(eval_drift(model, x), InvalidParams);
}

TEST_CASE("nonpositive gamma is rejected at evaluation time") {
    ModelSpec model = two_compartment();
    model.gamma[0] = [](const Vec&, const Vec&) { return 0.0; };
    Vec x = Vec::Zero(2);
    CHECK_THROWS_AS(eval_drift(model, x), DomainViolation);
}

TEST_CASE("gas piston coefficients at unit parameters") {
    const GasPistonCoefficients c = gas_piston_coefficients(GasPistonParams{});
    CHECK(c.k1 == Catch::Approx(1.5).margin(1e-15));
    CHECK(c.k2 == Catch::Approx(2.0 / 3.0).margin(1e-15));
    CHECK(c.k3 == Catch::Approx(0.5).margin(1e-15));
    CHECK(c.k4 == Catch::Approx(1.0).margin(1e-15));
}

TEST_CASE("gas piston rests at the pinned equilibrium") {
    const ModelSpec model = make_gas_piston(GasPistonParams{});
    Vec x(3);
    x << 0.0, 1.0, 0.0;
    const Vec d = eval_drift(model, x);
    CHECK(d.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("gas piston structural and direct right-hand sides agree") {
    GasPistonParams p;
    p.n_mol = 1.3;
    p.gas_constant = 0.8;
    p.mass = 2.0;
    p.gravity = 9.81;
    p.area = 0.5;
    p.damping = 0.3;
    const ModelSpec model = make_gas_piston(p);

    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u1(-1.0, 2.0), u2(0.2, 3.0), u3(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        Vec x(3);
        x << u1(rng), u2(rng), u3(rng);
        const Vec structural = eval_drift(model, x);
        const Vec direct = gas_piston_direct_rhs(p, x);
        const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
        CHECK((structural - direct).cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
}

TEST_CASE("gas piston irreversible part carries the friction heat") {
    GasPistonParams p;
    const ModelSpec model = make_gas_piston(p);
    const GasPistonCoefficients c = gas_piston_coefficients(p);
    Vec x(3);
    x << 0.3, 1.4, -0.7;

    const Vec h_x = model.hamiltonian_grad(x);
    const double temperature = h_x(0);
    const double v = x(2) / p.mass;

    // subtract the reversible piston kinematics to isolate the J1 coupling
    Mat j0 = Mat::Zero(3, 3);
    j0(1, 2) = p.area;
    j0(2, 1) = -p.area;
    const Vec irrev = eval_drift(model, x) - j0 * h_x;

    CHECK(irrev(0) == Catch::Approx(p.damping * v * v / temperature).epsilon(1e-13));
    CHECK(irrev(1) == Catch::Approx(0.0).margin(1e-15));
    CHECK(irrev(2) == Catch::Approx(-p.damping * v).epsilon(1e-13));

    const double u_int = c.k1 * std::exp(c.k2 * x(0)) / std::pow(x(1), 2.0 / 3.0);
    CHECK(temperature == Catch::Approx(c.k2 * u_int).epsilon(1e-14));
    CHECK(h_x(1) == Catch::Approx(-(2.0 / 3.0) * u_int / x(1) + c.k4).epsilon(1e-13));
    CHECK(h_x(2) == Catch::Approx(v).epsilon(1e-14));
}

TEST_CASE("gas piston ports: heat inflow at gas temperature") {
    const ModelSpec model = make_gas_piston(GasPistonParams{});
    Vec x(3);
    x << 0.2, 0.9, 0.4;
    const Outputs out = eval_outputs(model, x);
    REQUIRE(out.y_h.size() == 1);
    CHECK(out.y_h(0) == Catch::Approx(model.hamiltonian_grad(x)(0)).epsilon(1e-14));
    CHECK(out.y_s(0) == Catch::Approx(1.0).margin(1e-15));

    // exergy at the pinned equilibrium: E = k1 + k4 with unit parameters
    Vec eq(3);
    eq << 0.0, 1.0, 0.0;
    CHECK(exergy(model, eq) == Catch::Approx(2.5).margin(1e-14));
}

TEST_CASE("gas piston domain guard") {
    const ModelSpec model = make_gas_piston(GasPistonParams{});
    Vec bad(3);
    bad << 0.0, -0.5, 0.0;
    CHECK_FALSE(model.admissible(bad));
    CHECK_THROWS_AS(eval_drift(model, bad), DomainViolation);

    Vec nan_state(3);
    nan_state << 0.0, 1.0, std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(eval_drift(model, nan_state), NonFinite);

    CHECK_THROWS_AS(eval_drift(model, Vec::Zero(2)), DimensionMismatch);
}

TEST_CASE("gas piston energy omits the weight term when configured") {
    GasPistonParams p;
    p.include_gravity_potential = false;
    const ModelSpec model = make_gas_piston(p);
    Vec x(3);
    x << 0.0, 1.0, 0.0;
    CHECK(model.hamiltonian(x) == Catch::Approx(1.5).margin(1e-14));
    // without the weight the piston accelerates upward from the unit state
    const Vec d = eval_drift(model, x);
    CHECK(d(2) == Catch::Approx(1.0).epsilon(1e-14));
    const Vec direct = gas_piston_direct_rhs(p, x);
    CHECK((d - direct).cwiseAbs().maxCoeff() <= 1e-14);
}
