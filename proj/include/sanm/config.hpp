#pragma once

// Scenario configuration: a strict JSON schema with documented defaults.
// Unknown keys are rejected so typos cannot silently fall back to defaults.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "sanm/errors.hpp"
#include "sanm/gains.hpp"
#include "sanm/rbf.hpp"
#include "sanm/trajectory.hpp"
#include "sanm/vehicle.hpp"

namespace sanm::harness {

using nlohmann::json;

struct InitialSpec {
    std::optional<Vec3> position;     // default: trajectory start (zero for step)
    Vec3 velocity = Vec3::Zero();
    Vec3 attitude = Vec3::Zero();     // rotation vector (axis * angle)
    Vec3 omega = Vec3::Zero();
    double mass_estimate_factor = 0.7;
    double inertia_estimate_factor = 0.5;
};

struct DiagnosticsSpec {
    double psi_bar = 1.0;             // working bound on the attitude error scalar
    bool measure_bounds = true;       // extract eps_u/eps_c/... from the run
    double eps_r = 0.1;               // configured fallbacks when not measuring
    Vec3 eps_x{0.1, 0.1, 0.1};
    double eps_f = 0.01;
    double eps_m = 0.01;
    double eps_u = 1.0;
    double eps_c = 1.0;
    double e_x_cap = 2.0;             // translational clause of the full domain
};

struct ScenarioConfig {
    std::string name = "scenario";
    vehicle::VehicleParams vehicle;
    Gains gains;
    rbf::RbfLayout rbf;
    bool j_known = false;
    TrajectorySpec trajectory;
    HeadingSpec heading;
    vehicle::DisturbanceModel disturbance;
    double duration = 10.0;
    double dt = 1e-3;
    int controller_decimation = 1;
    std::uint64_t seed = 0;
    InitialSpec initial;
    DiagnosticsSpec diagnostics;

    void validate() const {
        vehicle.validate();
        gains.validate();
        rbf.validate();
        trajectory.validate();
        if (!(duration > 0.0)) throw ConfigError("config: duration must be > 0");
        if (!(dt > 0.0) || dt > 0.01) throw ConfigError("config: dt must be in (0, 0.01]");
        if (controller_decimation < 1) {
            throw ConfigError("config: controller_decimation must be >= 1");
        }
        if (!(diagnostics.psi_bar > 0.0) || !(diagnostics.psi_bar < 2.0)) {
            throw ConfigError("config: diagnostics.psi_bar must lie in (0, 2)");
        }
    }
};

namespace detail {

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                           const std::string& ctx) {
    if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
    }
}

inline double num(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("config: '") + key + "' must be a number");
    return j[key].get<double>();
}

inline bool flag(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) throw ConfigError(std::string("config: '") + key + "' must be a bool");
    return j[key].get<bool>();
}

inline Vec3 vec3(const json& j, const char* key, const Vec3& fallback) {
    if (!j.contains(key)) return fallback;
    const auto& a = j[key];
    if (!a.is_array() || a.size() != 3) {
        throw ConfigError(std::string("config: '") + key + "' must be an array of 3 numbers");
    }
    return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>());
}

inline vehicle::DisturbanceTerm parse_term(const json& j, const std::string& ctx) {
    reject_unknown(j, {"kind", "value", "amplitude", "frequency", "phase", "onset", "rise"},
                   ctx);
    vehicle::DisturbanceTerm term;
    const std::string kind = j.value("kind", "constant");
    if (kind == "constant") {
        term.kind = vehicle::DisturbanceTerm::Kind::Constant;
        term.value = num(j, "value", 0.0);
    } else if (kind == "sinusoid") {
        term.kind = vehicle::DisturbanceTerm::Kind::Sinusoid;
        term.value = num(j, "amplitude", 0.0);
        term.frequency = num(j, "frequency", 1.0);
        term.phase = num(j, "phase", 0.0);
    } else if (kind == "gust") {
        term.kind = vehicle::DisturbanceTerm::Kind::Gust;
        term.value = num(j, "amplitude", 0.0);
        term.onset = num(j, "onset", 0.0);
        term.rise = num(j, "rise", 0.0);
    } else {
        throw ConfigError(ctx + ": unknown disturbance kind '" + kind + "'");
    }
    return term;
}

inline void parse_axes(const json& j, std::array<vehicle::AxisDisturbance, 3>& axes,
                       const std::string& ctx) {
    if (!j.is_array() || j.size() != 3) {
        throw ConfigError(ctx + ": expected an array of 3 axis term lists");
    }
    for (int a = 0; a < 3; ++a) {
        if (!j[a].is_array()) throw ConfigError(ctx + ": each axis must be a term list");
        for (const auto& tj : j[a]) {
            axes[a].terms.push_back(parse_term(tj, ctx));
        }
    }
}

}  // namespace detail

inline ScenarioConfig parse_config(const json& j) {
    using namespace detail;
    reject_unknown(j,
                   {"name", "vehicle", "gains", "rbf", "scenario", "trajectory", "heading",
                    "disturbance", "duration", "dt", "controller_decimation", "seed",
                    "initial", "diagnostics"},
                   "config");
    ScenarioConfig cfg;
    if (j.contains("name")) cfg.name = j["name"].get<std::string>();

    if (j.contains("vehicle")) {
        const auto& v = j["vehicle"];
        reject_unknown(v,
                       {"mass", "inertia", "arm_length", "gravity", "c_t", "c_m", "c_t_ref",
                        "c_m_ref", "rotor_thrust_max"},
                       "config.vehicle");
        auto& p = cfg.vehicle;
        p.mass = num(v, "mass", p.mass);
        p.inertia = vec3(v, "inertia", p.inertia);
        p.arm_length = num(v, "arm_length", p.arm_length);
        p.gravity = num(v, "gravity", p.gravity);
        p.c_t = num(v, "c_t", p.c_t);
        p.c_m = num(v, "c_m", p.c_m);
        p.c_t_ref = num(v, "c_t_ref", p.c_t_ref);
        p.c_m_ref = num(v, "c_m_ref", p.c_m_ref);
        p.rotor_thrust_max = num(v, "rotor_thrust_max", p.rotor_thrust_max);
    }

    if (j.contains("gains")) {
        const auto& gj = j["gains"];
        reject_unknown(gj,
                       {"k_p", "k_d", "k_r", "k_omega", "c_r", "eta_m", "eta_j", "gamma_x",
                        "gamma_r", "leak_m", "leak_j", "m_min", "m_max", "j_min", "j_max", "q",
                        "learning_scale", "adapt_model", "thrust_min", "align_tol",
                        "rate_filter_cutoff"},
                       "config.gains");
        auto& g = cfg.gains;
        g.k_p = vec3(gj, "k_p", g.k_p);
        g.k_d = vec3(gj, "k_d", g.k_d);
        g.k_r = num(gj, "k_r", g.k_r);
        g.k_omega = num(gj, "k_omega", g.k_omega);
        g.c_r = num(gj, "c_r", g.c_r);
        g.eta_m = num(gj, "eta_m", g.eta_m);
        g.eta_j = num(gj, "eta_j", g.eta_j);
        g.gamma_x = vec3(gj, "gamma_x", g.gamma_x);
        g.gamma_r = vec3(gj, "gamma_r", g.gamma_r);
        g.leak_m = num(gj, "leak_m", g.leak_m);
        g.leak_j = num(gj, "leak_j", g.leak_j);
        g.m_min = num(gj, "m_min", g.m_min);
        g.m_max = num(gj, "m_max", g.m_max);
        g.j_min = vec3(gj, "j_min", g.j_min);
        g.j_max = vec3(gj, "j_max", g.j_max);
        g.learning_scale = num(gj, "learning_scale", g.learning_scale);
        g.adapt_model = flag(gj, "adapt_model", g.adapt_model);
        g.thrust_min = num(gj, "thrust_min", g.thrust_min);
        g.align_tol = num(gj, "align_tol", g.align_tol);
        g.rate_filter_cutoff = num(gj, "rate_filter_cutoff", g.rate_filter_cutoff);
        if (gj.contains("q")) {
            const auto& qj = gj["q"];
            if (!qj.is_array() || qj.size() != 3) {
                throw ConfigError("config.gains.q: expected 3 entries [q11, q12, q22]");
            }
            for (int a = 0; a < 3; ++a) {
                const auto& e = qj[a];
                if (!e.is_array() || e.size() != 3) {
                    throw ConfigError("config.gains.q: each entry must be [q11, q12, q22]");
                }
                Mat2 q;
                q << e[0].get<double>(), e[1].get<double>(), e[1].get<double>(),
                    e[2].get<double>();
                g.q[a] = q;
            }
        }
    }

    if (j.contains("rbf")) {
        const auto& r = j["rbf"];
        reject_unknown(r,
                       {"neurons", "trans_half_x", "trans_half_y", "rot_half_x", "rot_half_y",
                        "weight_cap", "width_scale"},
                       "config.rbf");
        cfg.rbf.neurons = static_cast<int>(num(r, "neurons", cfg.rbf.neurons));
        cfg.rbf.trans_half_x = num(r, "trans_half_x", cfg.rbf.trans_half_x);
        cfg.rbf.trans_half_y = num(r, "trans_half_y", cfg.rbf.trans_half_y);
        cfg.rbf.rot_half_x = num(r, "rot_half_x", cfg.rbf.rot_half_x);
        cfg.rbf.rot_half_y = num(r, "rot_half_y", cfg.rbf.rot_half_y);
        cfg.rbf.weight_cap = num(r, "weight_cap", cfg.rbf.weight_cap);
        cfg.rbf.width_scale = num(r, "width_scale", cfg.rbf.width_scale);
    }

    if (j.contains("scenario")) {
        const std::string s = j["scenario"].get<std::string>();
        if (s == "known_j") {
            cfg.j_known = true;
        } else if (s == "unknown_j") {
            cfg.j_known = false;
        } else {
            throw ConfigError("config.scenario: expected 'known_j' or 'unknown_j'");
        }
    }

    if (j.contains("trajectory")) {
        const auto& tj = j["trajectory"];
        reject_unknown(tj,
                       {"kind", "point", "radius", "period", "altitude", "center", "amplitude",
                        "frequency", "phase", "offset"},
                       "config.trajectory");
        auto& t = cfg.trajectory;
        const std::string kind = tj.value("kind", "hover");
        if (kind == "hover") {
            t.kind = TrajectorySpec::Kind::Hover;
            t.point = vec3(tj, "point", t.point);
        } else if (kind == "circle") {
            t.kind = TrajectorySpec::Kind::Circle;
            t.radius = num(tj, "radius", t.radius);
            t.period = num(tj, "period", t.period);
            t.altitude = num(tj, "altitude", t.altitude);
            t.circle_center = vec3(tj, "center", t.circle_center);
        } else if (kind == "lissajous") {
            t.kind = TrajectorySpec::Kind::Lissajous;
            t.amplitude = vec3(tj, "amplitude", t.amplitude);
            t.frequency = vec3(tj, "frequency", t.frequency);
            t.phase = vec3(tj, "phase", t.phase);
            t.center = vec3(tj, "center", t.center);
        } else if (kind == "step") {
            t.kind = TrajectorySpec::Kind::Step;
            t.offset = vec3(tj, "offset", t.offset);
        } else {
            throw ConfigError("config.trajectory: unknown kind '" + kind + "'");
        }
    }

    if (j.contains("heading")) {
        const auto& h = j["heading"];
        reject_unknown(h, {"kind", "yaw", "rate"}, "config.heading");
        const std::string kind = h.value("kind", "fixed");
        if (kind == "fixed") {
            cfg.heading.kind = HeadingSpec::Kind::Fixed;
        } else if (kind == "rotating") {
            cfg.heading.kind = HeadingSpec::Kind::Rotating;
        } else {
            throw ConfigError("config.heading: unknown kind '" + kind + "'");
        }
        cfg.heading.yaw = num(h, "yaw", 0.0);
        cfg.heading.rate = num(h, "rate", 0.0);
    }

    if (j.contains("disturbance")) {
        const auto& d = j["disturbance"];
        reject_unknown(d, {"translational", "rotational", "drag_coeff"}, "config.disturbance");
        if (d.contains("translational")) {
            parse_axes(d["translational"], cfg.disturbance.translational,
                       "config.disturbance.translational");
        }
        if (d.contains("rotational")) {
            parse_axes(d["rotational"], cfg.disturbance.rotational,
                       "config.disturbance.rotational");
        }
        cfg.disturbance.drag_coeff = num(d, "drag_coeff", 0.0);
    }

    cfg.duration = num(j, "duration", cfg.duration);
    cfg.dt = num(j, "dt", cfg.dt);
    cfg.controller_decimation =
        static_cast<int>(num(j, "controller_decimation", cfg.controller_decimation));
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();

    if (j.contains("initial")) {
        const auto& i = j["initial"];
        reject_unknown(i,
                       {"position", "velocity", "attitude", "omega", "mass_estimate_factor",
                        "inertia_estimate_factor"},
                       "config.initial");
        if (i.contains("position") && !i["position"].is_null()) {
            cfg.initial.position = detail::vec3(i, "position", Vec3::Zero());
        }
        cfg.initial.velocity = vec3(i, "velocity", cfg.initial.velocity);
        cfg.initial.attitude = vec3(i, "attitude", cfg.initial.attitude);
        cfg.initial.omega = vec3(i, "omega", cfg.initial.omega);
        cfg.initial.mass_estimate_factor =
            num(i, "mass_estimate_factor", cfg.initial.mass_estimate_factor);
        cfg.initial.inertia_estimate_factor =
            num(i, "inertia_estimate_factor", cfg.initial.inertia_estimate_factor);
    }

    if (j.contains("diagnostics")) {
        const auto& d = j["diagnostics"];
        reject_unknown(d,
                       {"psi_bar", "measure_bounds", "eps_r", "eps_x", "eps_f", "eps_m",
                        "eps_u", "eps_c", "e_x_cap"},
                       "config.diagnostics");
        auto& ds = cfg.diagnostics;
        ds.psi_bar = num(d, "psi_bar", ds.psi_bar);
        ds.measure_bounds = flag(d, "measure_bounds", ds.measure_bounds);
        ds.eps_r = num(d, "eps_r", ds.eps_r);
        ds.eps_x = vec3(d, "eps_x", ds.eps_x);
        ds.eps_f = num(d, "eps_f", ds.eps_f);
        ds.eps_m = num(d, "eps_m", ds.eps_m);
        ds.eps_u = num(d, "eps_u", ds.eps_u);
        ds.eps_c = num(d, "eps_c", ds.eps_c);
        ds.e_x_cap = num(d, "e_x_cap", ds.e_x_cap);
    }

    cfg.validate();
    return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ConfigError("config parse error in '" + path + "': " + e.what());
    }
    try {
        return parse_config(j);
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {  // json type errors and the like
        throw ConfigError("config error in '" + path + "': " + e.what());
    }
}

}  // namespace sanm::harness
