#pragma once

#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "riphs/ivp.hpp"
#include "riphs/mpc.hpp"
#include "riphs/model.hpp"
#include "riphs/ocp.hpp"
#include "riphs/turnpike.hpp"
#include "riphs/verify.hpp"

namespace riphs {

using Json = nlohmann::ordered_json;

namespace detail {

// 17 significant digits round-trip a double exactly.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot open for writing: " + path);
    }
    out << body;
    if (!out) {
        throw Error("write failed: " + path);
    }
}

} // namespace detail

inline Json to_json(const Vec& v) {
    Json arr = Json::array();
    for (int i = 0; i < v.size(); ++i) {
        arr.push_back(v(i));
    }
    return arr;
}

inline Json to_json(const Mat& m) {
    Json rows = Json::array();
    for (int i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (int j = 0; j < m.cols(); ++j) {
            row.push_back(m(i, j));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Columns: t, x_1..x_n, u_1..u_m, H, S, E. The final control row repeats the
// last applied control so every row has the same width.
inline std::string trajectory_csv(const ModelSpec& model, const Trajectory& traj) {
    validate_trajectory(traj);
    if (traj.states.cols() != model.n || traj.controls.cols() != model.m) {
        throw DimensionMismatch("trajectory_csv: trajectory does not match model dimensions");
    }
    std::string out = "t";
    for (int i = 0; i < model.n; ++i) {
        out += ",x_" + std::to_string(i + 1);
    }
    for (int i = 0; i < model.m; ++i) {
        out += ",u_" + std::to_string(i + 1);
    }
    out += ",H,S,E\n";
    for (int k = 0; k < traj.samples(); ++k) {
        const Vec x = traj.states.row(k).transpose();
        out += detail::format_double(traj.times(k));
        for (int i = 0; i < model.n; ++i) {
            out += "," + detail::format_double(x(i));
        }
        for (int i = 0; i < model.m; ++i) {
            out += "," + detail::format_double(traj.controls(k, i));
        }
        out += "," + detail::format_double(model.hamiltonian(x));
        out += "," + detail::format_double(model.entropy(x));
        out += "," + detail::format_double(exergy(model, x));
        out += "\n";
    }
    return out;
}

inline void write_trajectory_csv(const std::string& path, const ModelSpec& model,
                                 const Trajectory& traj) {
    detail::write_text_file(path, trajectory_csv(model, traj));
}

inline Json balance_json(const BalanceReport& report) {
    Json j;
    j["power_residual"] = report.power_residual;
    j["entropy_slack"] = report.entropy_slack;
    if (std::isfinite(report.exergy_bound_margin)) {
        j["exergy_bound_margin"] = report.exergy_bound_margin;
    }
    return j;
}

inline Json solution_json(const OcpSpec& spec, const OcpSolution& sol) {
    Json j;
    j["cost"] = sol.cost;
    j["iterations"] = sol.iterations;
    j["converged"] = sol.converged;
    j["grad_norm_final"] = sol.grad_norm_final;
    j["alpha"] = to_json(spec.alpha);
    j["T"] = spec.T;
    j["h"] = spec.h;
    return j;
}

inline Json turnpike_json(const TurnpikePoint& tp) {
    Json j;
    j["x_tp"] = to_json(tp.x_tp);
    j["u_tp"] = to_json(tp.u_tp);
    j["objective"] = tp.objective;
    j["stationarity_residual"] = tp.stationarity_residual;
    return j;
}

inline Json growth_json(const GrowthEstimate& est) {
    Json j;
    j["c_hat"] = est.c_hat;
    j["shift"] = est.shift;
    j["p"] = est.p;
    j["stable"] = est.stable;
    j["failures"] = est.failures;
    return j;
}

inline Json radial_probe_json(const RadialProbeReport& report) {
    Json j;
    j["passed"] = report.passed;
    j["failures"] = report.failures;
    return j;
}

inline Json mpc_json(const ClosedLoopResult& result) {
    Json j;
    j["settled"] = result.settled;
    if (result.settled) {
        j["settled_state"] = to_json(result.settled_state);
    }
    Json iters = Json::array();
    for (const MpcIterationReport& r : result.reports) {
        Json ji;
        ji["cost"] = r.cost;
        ji["merit"] = r.merit;
        ji["merit_initial"] = r.merit_initial;
        ji["iterations"] = r.iterations;
        ji["converged"] = r.converged;
        ji["grad_norm"] = r.grad_norm;
        iters.push_back(std::move(ji));
    }
    j["solves"] = std::move(iters);
    return j;
}

inline void write_json(const std::string& path, const Json& j) {
    detail::write_text_file(path, j.dump(2) + "\n");
}

inline Json read_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open for reading: " + path);
    }
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
}

} // namespace riphs
