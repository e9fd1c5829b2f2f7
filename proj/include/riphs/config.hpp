#pragma once

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riphs/io.hpp"
#include "riphs/models/gas_piston.hpp"
#include "riphs/models/heat_exchanger.hpp"
#include "riphs/mpc.hpp"
#include "riphs/ocp.hpp"
#include "riphs/turnpike.hpp"
#include "riphs/verify.hpp"

namespace riphs {

struct OutputConfig {
    std::string directory = "out";
    bool emit_svg = true;
};

struct VerifyConfig {
    double p = 1.0;
    std::vector<double> radii = {0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    int samples_per_radius = 64;
    int n_directions = 32;
    unsigned seed = 42;
};

// Everything a run needs, parsed from one JSON file. Sections other than
// "model" are optional; commands check for what they require.
struct AppConfig {
    std::string model_kind;
    ModelSpec model;

    bool has_ocp = false;
    OcpSpec ocp;
    SolverOptions solver;

    double mpc_delta = 0.1;
    int mpc_iterations = 0;
    bool mpc_warm_start = true;
    double settle_window = 5.0;
    double settle_tol = 1e-3;

    TurnpikeOptions turnpike;
    VerifyConfig verify;
    OutputConfig output;

    // Fully defaulted view of the parsed configuration.
    Json effective;
};

namespace detail {

inline const Json* find_key(const Json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &it.value();
}

inline void check_keys(const Json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ValidationError("unknown key: " + path + "." + it.key());
        }
    }
}

inline const Json& object_at(const Json& j, const std::string& path) {
    if (!j.is_object()) {
        throw ValidationError(path + ": expected object");
    }
    return j;
}

inline double number_at(const Json& j, const std::string& path) {
    if (!j.is_number()) {
        throw ValidationError(path + ": expected number");
    }
    return j.get<double>();
}

inline double get_number(const Json& obj, const std::string& path, const char* key,
                         double fallback) {
    const Json* j = find_key(obj, key);
    return j ? number_at(*j, path + "." + key) : fallback;
}

inline int get_int(const Json& obj, const std::string& path, const char* key, int fallback) {
    const Json* j = find_key(obj, key);
    if (!j) {
        return fallback;
    }
    if (!j->is_number_integer()) {
        throw ValidationError(path + "." + key + ": expected integer");
    }
    return j->get<int>();
}

inline unsigned get_unsigned(const Json& obj, const std::string& path, const char* key,
                             unsigned fallback) {
    const Json* j = find_key(obj, key);
    if (!j) {
        return fallback;
    }
    if (!j->is_number_unsigned() && !(j->is_number_integer() && j->get<long long>() >= 0)) {
        throw ValidationError(path + "." + key + ": expected nonnegative integer");
    }
    return j->get<unsigned>();
}

inline bool get_bool(const Json& obj, const std::string& path, const char* key, bool fallback) {
    const Json* j = find_key(obj, key);
    if (!j) {
        return fallback;
    }
    if (!j->is_boolean()) {
        throw ValidationError(path + "." + key + ": expected boolean");
    }
    return j->get<bool>();
}

inline std::string get_string(const Json& obj, const std::string& path, const char* key) {
    const Json* j = find_key(obj, key);
    if (!j || !j->is_string()) {
        throw ValidationError(path + "." + key + ": expected string");
    }
    return j->get<std::string>();
}

inline Vec vec_at(const Json& j, const std::string& path) {
    if (!j.is_array()) {
        throw ValidationError(path + ": expected array of numbers");
    }
    Vec v(static_cast<int>(j.size()));
    int i = 0;
    for (const Json& e : j) {
        v(i) = number_at(e, path + "[" + std::to_string(i) + "]");
        ++i;
    }
    return v;
}

inline Mat mat_at(const Json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        throw ValidationError(path + ": expected nonempty array of rows");
    }
    const int rows = static_cast<int>(j.size());
    Mat m;
    int r = 0;
    for (const Json& row : j) {
        const Vec v = vec_at(row, path + "[" + std::to_string(r) + "]");
        if (r == 0) {
            m.resize(rows, v.size());
        } else if (v.size() != m.cols()) {
            throw ValidationError(path + ": rows have unequal lengths");
        }
        m.row(r) = v.transpose();
        ++r;
    }
    return m;
}

// Control bounds accept a scalar (broadcast across channels) or a length-m
// array.
inline Vec get_bound(const Json& obj, const std::string& path, const char* key, int m,
                     double fallback) {
    const Json* j = find_key(obj, key);
    if (!j) {
        return Vec::Constant(m, fallback);
    }
    if (j->is_number()) {
        return Vec::Constant(m, j->get<double>());
    }
    const Vec v = vec_at(*j, path + "." + key);
    if (v.size() != m) {
        throw ValidationError(path + "." + key + ": expected scalar or array of length " +
                              std::to_string(m));
    }
    return v;
}

inline ModelSpec parse_model(const Json& j, std::string& kind_out, Json& effective) {
    object_at(j, "model");
    const std::string kind = get_string(j, "model", "kind");
    kind_out = kind;
    try {
        if (kind == "heat_exchanger") {
            check_keys(j, "model", {"kind", "lambda", "t_ref", "t0"});
            const Json* lj = find_key(j, "lambda");
            if (!lj) {
                throw ValidationError("model.lambda: required for heat_exchanger");
            }
            HeatExchangerParams p;
            p.lambda = mat_at(*lj, "model.lambda");
            p.t_ref = get_number(j, "model", "t_ref", 1.0);
            p.t0 = get_number(j, "model", "t0", 1.0);
            effective["kind"] = kind;
            effective["lambda"] = to_json(p.lambda);
            effective["t_ref"] = p.t_ref;
            effective["t0"] = p.t0;
            return make_heat_exchanger(p);
        }
        if (kind == "gas_piston") {
            check_keys(j, "model",
                       {"kind", "n_mol", "gas_constant", "s_ref", "t_ref", "p_ref", "mass",
                        "gravity", "area", "damping", "t0", "include_gravity_potential"});
            GasPistonParams p;
            p.n_mol = get_number(j, "model", "n_mol", 1.0);
            p.gas_constant = get_number(j, "model", "gas_constant", 1.0);
            p.s_ref = get_number(j, "model", "s_ref", 0.0);
            p.t_ref = get_number(j, "model", "t_ref", 1.0);
            p.p_ref = get_number(j, "model", "p_ref", 1.0);
            p.mass = get_number(j, "model", "mass", 1.0);
            p.gravity = get_number(j, "model", "gravity", 1.0);
            p.area = get_number(j, "model", "area", 1.0);
            p.damping = get_number(j, "model", "damping", 1.0);
            p.t0 = get_number(j, "model", "t0", 1.0);
            p.include_gravity_potential =
                get_bool(j, "model", "include_gravity_potential", true);
            effective["kind"] = kind;
            effective["n_mol"] = p.n_mol;
            effective["gas_constant"] = p.gas_constant;
            effective["s_ref"] = p.s_ref;
            effective["t_ref"] = p.t_ref;
            effective["p_ref"] = p.p_ref;
            effective["mass"] = p.mass;
            effective["gravity"] = p.gravity;
            effective["area"] = p.area;
            effective["damping"] = p.damping;
            effective["t0"] = p.t0;
            effective["include_gravity_potential"] = p.include_gravity_potential;
            return make_gas_piston(p);
        }
    } catch (const InvalidParams& e) {
        throw ValidationError(std::string("model: ") + e.what());
    }
    throw ValidationError("model.kind: unknown kind \"" + kind + "\"");
}

} // namespace detail

inline AppConfig parse_config(const Json& root, const std::string& origin) {
    detail::object_at(root, origin);
    detail::check_keys(root, origin, {"model", "ocp", "mpc", "turnpike", "verify", "output"});

    AppConfig cfg;
    const Json* mj = detail::find_key(root, "model");
    if (!mj) {
        throw ValidationError(origin + ": missing required section \"model\"");
    }
    Json model_eff;
    cfg.model = detail::parse_model(*mj, cfg.model_kind, model_eff);
    cfg.effective["model"] = std::move(model_eff);

    if (const Json* oj = detail::find_key(root, "ocp")) {
        const Json& o = detail::object_at(*oj, "ocp");
        detail::check_keys(o, "ocp",
                           {"T", "h", "alpha", "c_mat", "y_ref", "u_lo", "u_hi", "x0", "solver"});
        cfg.has_ocp = true;
        cfg.ocp.model = cfg.model;
        cfg.ocp.T = detail::get_number(o, "ocp", "T", 1.0);
        cfg.ocp.h = detail::get_number(o, "ocp", "h", 0.1);
        if (const Json* aj = detail::find_key(o, "alpha")) {
            cfg.ocp.alpha = detail::vec_at(*aj, "ocp.alpha");
            if (cfg.ocp.alpha.size() != 3) {
                throw ValidationError("ocp.alpha: expected three weights");
            }
        } else {
            cfg.ocp.alpha = Vec::Ones(3);
        }
        if (const Json* cj = detail::find_key(o, "c_mat")) {
            cfg.ocp.c_mat = detail::mat_at(*cj, "ocp.c_mat");
            if (cfg.ocp.c_mat.cols() != cfg.model.n) {
                throw ValidationError("ocp.c_mat: expected " + std::to_string(cfg.model.n) +
                                      " columns");
            }
        } else {
            cfg.ocp.c_mat = Mat::Identity(cfg.model.n, cfg.model.n);
        }
        if (const Json* yj = detail::find_key(o, "y_ref")) {
            cfg.ocp.y_ref = detail::vec_at(*yj, "ocp.y_ref");
            if (cfg.ocp.y_ref.size() != cfg.ocp.c_mat.rows()) {
                throw ValidationError("ocp.y_ref: expected length " +
                                      std::to_string(cfg.ocp.c_mat.rows()));
            }
        } else {
            cfg.ocp.y_ref = Vec::Zero(cfg.ocp.c_mat.rows());
        }
        cfg.ocp.u_lo = detail::get_bound(o, "ocp", "u_lo", cfg.model.m, 0.0);
        cfg.ocp.u_hi = detail::get_bound(o, "ocp", "u_hi", cfg.model.m, 0.0);
        const Json* xj = detail::find_key(o, "x0");
        if (!xj) {
            throw ValidationError("ocp.x0: required");
        }
        cfg.ocp.x0 = detail::vec_at(*xj, "ocp.x0");
        if (cfg.ocp.x0.size() != cfg.model.n) {
            throw ValidationError("ocp.x0: expected length " + std::to_string(cfg.model.n));
        }
        if (const Json* sj = detail::find_key(o, "solver")) {
            const Json& s = detail::object_at(*sj, "ocp.solver");
            detail::check_keys(s, "ocp.solver",
                               {"multi_starts", "seed", "start_spread", "max_iterations",
                                "g_tol", "f_tol"});
            cfg.solver.multi_starts = detail::get_int(s, "ocp.solver", "multi_starts", 1);
            cfg.solver.seed = detail::get_unsigned(s, "ocp.solver", "seed", 42);
            cfg.solver.start_spread = detail::get_number(s, "ocp.solver", "start_spread", 0.1);
            cfg.solver.box.max_iterations =
                detail::get_int(s, "ocp.solver", "max_iterations", 2000);
            cfg.solver.box.g_tol = detail::get_number(s, "ocp.solver", "g_tol", 1e-6);
            cfg.solver.box.f_tol = detail::get_number(s, "ocp.solver", "f_tol", 1e-10);
        }

        Json oe;
        oe["T"] = cfg.ocp.T;
        oe["h"] = cfg.ocp.h;
        oe["alpha"] = to_json(cfg.ocp.alpha);
        oe["c_mat"] = to_json(cfg.ocp.c_mat);
        oe["y_ref"] = to_json(cfg.ocp.y_ref);
        oe["u_lo"] = to_json(cfg.ocp.u_lo);
        oe["u_hi"] = to_json(cfg.ocp.u_hi);
        oe["x0"] = to_json(cfg.ocp.x0);
        Json se;
        se["multi_starts"] = cfg.solver.multi_starts;
        se["seed"] = cfg.solver.seed;
        se["start_spread"] = cfg.solver.start_spread;
        se["max_iterations"] = cfg.solver.box.max_iterations;
        se["g_tol"] = cfg.solver.box.g_tol;
        se["f_tol"] = cfg.solver.box.f_tol;
        oe["solver"] = std::move(se);
        cfg.effective["ocp"] = std::move(oe);
    }

    if (const Json* mj2 = detail::find_key(root, "mpc")) {
        const Json& m = detail::object_at(*mj2, "mpc");
        detail::check_keys(m, "mpc",
                           {"delta", "n_iterations", "warm_start", "settle_window", "settle_tol"});
        cfg.mpc_delta = detail::get_number(m, "mpc", "delta", 0.1);
        cfg.mpc_iterations = detail::get_int(m, "mpc", "n_iterations", 0);
        cfg.mpc_warm_start = detail::get_bool(m, "mpc", "warm_start", true);
        cfg.settle_window = detail::get_number(m, "mpc", "settle_window", 5.0);
        cfg.settle_tol = detail::get_number(m, "mpc", "settle_tol", 1e-3);
    }
    Json me;
    me["delta"] = cfg.mpc_delta;
    me["n_iterations"] = cfg.mpc_iterations;
    me["warm_start"] = cfg.mpc_warm_start;
    me["settle_window"] = cfg.settle_window;
    me["settle_tol"] = cfg.settle_tol;
    cfg.effective["mpc"] = std::move(me);

    if (const Json* tj = detail::find_key(root, "turnpike")) {
        const Json& t = detail::object_at(*tj, "turnpike");
        detail::check_keys(t, "turnpike",
                           {"n_starts", "seed", "stationarity_tol", "x_init_lo", "x_init_hi"});
        cfg.turnpike.n_starts = detail::get_int(t, "turnpike", "n_starts", 8);
        cfg.turnpike.seed = detail::get_unsigned(t, "turnpike", "seed", 42);
        cfg.turnpike.stationarity_tol =
            detail::get_number(t, "turnpike", "stationarity_tol", 1e-8);
        cfg.turnpike.x_init_lo = detail::get_number(t, "turnpike", "x_init_lo", 0.0);
        cfg.turnpike.x_init_hi = detail::get_number(t, "turnpike", "x_init_hi", 10.0);
    }
    Json te;
    te["n_starts"] = cfg.turnpike.n_starts;
    te["seed"] = cfg.turnpike.seed;
    te["stationarity_tol"] = cfg.turnpike.stationarity_tol;
    te["x_init_lo"] = cfg.turnpike.x_init_lo;
    te["x_init_hi"] = cfg.turnpike.x_init_hi;
    cfg.effective["turnpike"] = std::move(te);

    if (const Json* vj = detail::find_key(root, "verify")) {
        const Json& v = detail::object_at(*vj, "verify");
        detail::check_keys(v, "verify", {"p", "radii", "samples_per_radius", "n_directions", "seed"});
        cfg.verify.p = detail::get_number(v, "verify", "p", 1.0);
        if (const Json* rj = detail::find_key(v, "radii")) {
            const Vec r = detail::vec_at(*rj, "verify.radii");
            cfg.verify.radii.assign(r.data(), r.data() + r.size());
        }
        cfg.verify.samples_per_radius = detail::get_int(v, "verify", "samples_per_radius", 64);
        cfg.verify.n_directions = detail::get_int(v, "verify", "n_directions", 32);
        cfg.verify.seed = detail::get_unsigned(v, "verify", "seed", 42);
    }
    Json ve;
    ve["p"] = cfg.verify.p;
    ve["radii"] = cfg.verify.radii;
    ve["samples_per_radius"] = cfg.verify.samples_per_radius;
    ve["n_directions"] = cfg.verify.n_directions;
    ve["seed"] = cfg.verify.seed;
    cfg.effective["verify"] = std::move(ve);

    if (const Json* oj = detail::find_key(root, "output")) {
        const Json& o = detail::object_at(*oj, "output");
        detail::check_keys(o, "output", {"directory", "emit_svg"});
        if (detail::find_key(o, "directory")) {
            cfg.output.directory = detail::get_string(o, "output", "directory");
        }
        cfg.output.emit_svg = detail::get_bool(o, "output", "emit_svg", true);
    }
    Json oe2;
    oe2["directory"] = cfg.output.directory;
    oe2["emit_svg"] = cfg.output.emit_svg;
    cfg.effective["output"] = std::move(oe2);

    return cfg;
}

inline AppConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open config: " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    Json root;
    try {
        root = Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        size_t line = 1;
        const size_t stop = std::min(text.size(), static_cast<size_t>(e.byte));
        for (size_t i = 0; i < stop; ++i) {
            if (text[i] == '\n') {
                ++line;
            }
        }
        throw ParseError(path + ":" + std::to_string(line) + ": " + e.what());
    }
    return parse_config(root, path);
}

} // namespace riphs
