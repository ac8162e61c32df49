#pragma once

// Scenario orchestration: the synchronous plant-controller loop, post-run
// candidate evaluation, metrics, and the per-run diagnostics report.

#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sanm/config.hpp"
#include "sanm/controller.hpp"
#include "sanm/lyapunov.hpp"
#include "sanm/telemetry.hpp"
#include "sanm/trajectory.hpp"
#include "sanm/vehicle.hpp"

namespace sanm::harness {

using controller::ControllerOutput;
using controller::ControllerState;
using Eigen::Vector2d;

// Bound constants feeding the stability checks; either configured or
// extracted from the run as trajectory suprema.
struct BoundSet {
    double eps_r = 0.0;          // sup |optimal rotational approximation residual|
    Vec3 eps_x = Vec3::Zero();   // per-axis translational residual sups
    double eps_f = 0.0;          // sup |Delta_f|
    double eps_m = 0.0;          // sup |Delta_M|
    double eps_u = 0.0;          // sup sum_j |K_xj||E_xj|
    double eps_c = 0.0;          // sup sum_j |xddot_d[j] - g d_j3 - phi_x_hat[j]|
    bool measured = false;
};

struct Metrics {
    double settle_time = 0.0;
    double rms_e_x = 0.0, max_e_x = 0.0;
    double rms_e_v = 0.0, max_e_v = 0.0;
    double rms_e_r = 0.0, max_e_r = 0.0;
    double rms_e_omega = 0.0, max_e_omega = 0.0;
    double terminal_rms_e_x = 0.0;   // RMS position error over the last 10%
    double z_terminal_rms = 0.0;     // RMS |z| over the last 10%
    Vec3 m_hat_final = Vec3::Zero();
    Vec3 j_hat_final = Vec3::Zero();
    bool envelope_ok = false;
    lyapunov::NesEnvelope envelope;
    std::string envelope_note;
    bool m_full_pd = false;
    double xi = 0.0, xi_admissible = 0.0;
    Vec3 phi_x_rms_error = Vec3::Zero();
    Vec3 phi_r_rms_error = Vec3::Zero();
    double v_decrease_fraction = 0.0;
    bool any_clamped = false;
};

namespace detail {

// Ridge least-squares fit of one slice's optimal weights onto the logged
// activation features, projected into the admissible ball.
struct SliceFit {
    Eigen::VectorXd w_star;
    double sup_residual = 0.0;
    double rms_residual = 0.0;
};

inline SliceFit fit_optimal_weights(const rbf::RbfSlice& geometry,
                                    const std::vector<Vector2d>& inputs,
                                    const std::vector<double>& targets) {
    const int l = geometry.neuron_count();
    const auto n = static_cast<Eigen::Index>(inputs.size());
    Eigen::MatrixXd h(n, l);
    for (Eigen::Index i = 0; i < n; ++i) {
        h.row(i) = geometry.activations(inputs[static_cast<size_t>(i)]).transpose();
    }
    Eigen::Map<const Eigen::VectorXd> y(targets.data(), n);
    const Eigen::MatrixXd gram =
        h.transpose() * h + 1e-9 * static_cast<double>(n) * Eigen::MatrixXd::Identity(l, l);
    SliceFit fit;
    fit.w_star = gram.ldlt().solve(h.transpose() * y);
    const double norm = fit.w_star.norm();
    if (norm > geometry.weight_cap) fit.w_star *= geometry.weight_cap / norm;
    const Eigen::VectorXd res = y - h * fit.w_star;
    fit.sup_residual = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
    fit.rms_residual = res.size() ? std::sqrt(res.squaredNorm() / static_cast<double>(n)) : 0.0;
    return fit;
}

inline Vec3 coriolis_accel(const Vec3& omega, const Vec3& inertia) {
    return omega.cross(inertia.cwiseProduct(omega)).cwiseQuotient(inertia);
}

inline void measure_wrench_bounds(const SimLog& log, const ScenarioConfig& cfg, BoundSet& b) {
    b.eps_u = 0.0;
    b.eps_c = 0.0;
    b.eps_f = 0.0;
    b.eps_m = 0.0;
    for (const auto& row : log.rows) {
        double u = 0.0, c = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double k_norm = std::hypot(cfg.gains.k_p(j), cfg.gains.k_d(j));
            u += k_norm * std::hypot(row.e_x(j), row.e_v(j));
            const double grav = (j == 2) ? cfg.vehicle.gravity : 0.0;
            c += std::abs(row.xddot_d(j) - grav - row.phi_x_hat(j));
        }
        b.eps_u = std::max(b.eps_u, u);
        b.eps_c = std::max(b.eps_c, c);
        b.eps_f = std::max(b.eps_f, std::abs(row.delta_f));
        b.eps_m = std::max(b.eps_m, row.delta_m.norm());
    }
    b.measured = true;
}

inline BoundSet resolve_bounds(const SimLog& log, const ScenarioConfig& cfg) {
    BoundSet b;
    b.eps_r = cfg.diagnostics.eps_r;
    b.eps_x = cfg.diagnostics.eps_x;
    if (cfg.diagnostics.measure_bounds && !log.rows.empty()) {
        measure_wrench_bounds(log, cfg, b);
    } else {
        b.eps_f = cfg.diagnostics.eps_f;
        b.eps_m = cfg.diagnostics.eps_m;
        b.eps_u = cfg.diagnostics.eps_u;
        b.eps_c = cfg.diagnostics.eps_c;
    }
    return b;
}

}  // namespace detail

inline Metrics compute_metrics(const SimLog& log, const ScenarioConfig& cfg) {
    if (log.rows.size() < 2) throw InvalidSpec("compute_metrics: log too short");
    Metrics m;
    const size_t n = log.rows.size();
    const size_t settle = n / 5;  // exclude the first 20% (transient window)
    m.settle_time = log.rows[settle].t;

    auto window_stats = [&](auto&& value, double& rms, double& mx) {
        double sum = 0.0;
        mx = 0.0;
        for (size_t i = settle; i < n; ++i) {
            const double v = value(log.rows[i]);
            sum += v * v;
            mx = std::max(mx, v);
        }
        rms = std::sqrt(sum / static_cast<double>(n - settle));
    };
    window_stats([](const LogRow& r) { return r.e_x.norm(); }, m.rms_e_x, m.max_e_x);
    window_stats([](const LogRow& r) { return r.e_v.norm(); }, m.rms_e_v, m.max_e_v);
    window_stats([](const LogRow& r) { return r.e_r.norm(); }, m.rms_e_r, m.max_e_r);
    window_stats([](const LogRow& r) { return r.e_omega.norm(); }, m.rms_e_omega,
                 m.max_e_omega);

    const size_t tail = std::max<size_t>(n / 10, 1);
    double ex2 = 0.0, z2 = 0.0;
    for (size_t i = n - tail; i < n; ++i) {
        ex2 += log.rows[i].e_x.squaredNorm();
        z2 += log.rows[i].z_norm * log.rows[i].z_norm;
    }
    m.terminal_rms_e_x = std::sqrt(ex2 / static_cast<double>(tail));
    m.z_terminal_rms = std::sqrt(z2 / static_cast<double>(tail));

    m.m_hat_final = log.rows.back().m_hat;
    m.j_hat_final = log.rows.back().j_hat;
    for (const auto& row : log.rows) m.any_clamped |= row.clamped != 0.0;

    std::vector<double> ts, zs;
    ts.reserve(n);
    zs.reserve(n);
    for (const auto& row : log.rows) {
        ts.push_back(row.t);
        zs.push_back(row.z_norm);
    }
    try {
        m.envelope = lyapunov::fit_nes_envelope(ts, zs);
        m.envelope_ok = true;
    } catch (const Error& e) {
        m.envelope_note = e.what();
    }

    const BoundSet bounds = detail::resolve_bounds(log, cfg);
    const auto data = lyapunov::LyapunovData::make(cfg.gains);
    const auto stab = lyapunov::assemble_m(cfg.gains, data.p, data.q, cfg.diagnostics.psi_bar,
                                           cfg.vehicle.mass, bounds.eps_u, bounds.eps_c);
    m.m_full_pd = stab.pd_by_eigen;
    m.xi = stab.xi;
    m.xi_admissible = stab.xi_admissible;

    Vec3 sx = Vec3::Zero(), sr = Vec3::Zero();
    for (size_t i = settle; i < n; ++i) {
        const auto& row = log.rows[i];
        Vec3 target_r = row.phi_r;
        if (!cfg.j_known) target_r += detail::coriolis_accel(row.omega, cfg.vehicle.inertia);
        for (int j = 0; j < 3; ++j) {
            const double dx = row.phi_x_hat(j) - row.phi_x(j);
            const double dr = row.phi_r_hat(j) - target_r(j);
            sx(j) += dx * dx;
            sr(j) += dr * dr;
        }
    }
    m.phi_x_rms_error = (sx / static_cast<double>(n - settle)).cwiseSqrt();
    m.phi_r_rms_error = (sr / static_cast<double>(n - settle)).cwiseSqrt();

    const double ball = m.envelope_ok ? m.envelope.eps : m.z_terminal_rms;
    size_t outside = 0, decreasing = 0;
    for (size_t i = 0; i + 1 < n; ++i) {
        if (log.rows[i].z_norm > ball) {
            ++outside;
            if (log.rows[i + 1].v_lyap < log.rows[i].v_lyap) ++decreasing;
        }
    }
    m.v_decrease_fraction =
        outside ? static_cast<double>(decreasing) / static_cast<double>(outside) : 1.0;
    return m;
}

// --- diagnostics report -------------------------------------------------------

struct DiagnosticsReport {
    std::string scenario_name;
    bool j_known = false;
    double duration = 0.0, dt = 0.0;
    double v_initial = 0.0, v_final = 0.0;
    double v_e_initial = 0.0, v_e_final = 0.0;
    lyapunov::CrBoundCheck cr;
    lyapunov::StabilityMatrices stab;
    BoundSet bounds;
    double c_r_const = 0.0;  // constant offset in the rotational decrease bound
    double c_const = 0.0;    // constant offset in the full decrease bound
    lyapunov::DomainCheck d_r0, d_0;
    size_t d_0_violation_ticks = 0;  // ticks spent outside the local domain
    size_t total_ticks = 0;
    bool envelope_ok = false;
    lyapunov::NesEnvelope envelope;
    std::string envelope_note;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0, p4 = 0.0;
    double beta_theory = std::numeric_limits<double>::quiet_NaN();
    double eps_theory = std::numeric_limits<double>::quiet_NaN();
    bool sandwich_ok = false;
    double v_decrease_fraction = 0.0;

    std::string render() const {
        std::ostringstream os;
        auto line = [&](const char* fmt, auto... args) {
            char buf[512];
            std::snprintf(buf, sizeof(buf), fmt, args...);
            os << buf << '\n';
        };
        os << "=== diagnostics: " << scenario_name << " ===\n";
        line("run: duration=%g s, dt=%g s, inertia %s", duration, dt,
             j_known ? "known" : "unknown");
        os << "\n[candidates]\n";
        line("  V(0)=%.6g  V(T)=%.6g", v_initial, v_final);
        line("  V_e(0)=%.6g  V_e(T)=%.6g", v_e_initial, v_e_final);
        os << "\n[gain conditions]\n";
        line("  c_R=%g vs bound %.6g (binding: %s): %s (margin %.6g)", cr.bound - cr.margin,
             cr.bound, cr.binding_term, cr.pass ? "PASS" : "FAIL", cr.margin);
        line("  Xi=%.6g vs admissible %.6g: %s", stab.xi, stab.xi_admissible,
             stab.xi < stab.xi_admissible ? "PASS" : "FAIL");
        {
            const auto er = lyapunov::sym2x2_eigenvalues(stab.m_rot);
            line("  M_R eigenvalues: %.6g, %.6g", er(0), er(1));
        }
        line("  M eigenvalues: %.6g, %.6g, %.6g, %.6g, %.6g", stab.m_full_eigenvalues(0),
             stab.m_full_eigenvalues(1), stab.m_full_eigenvalues(2), stab.m_full_eigenvalues(3),
             stab.m_full_eigenvalues(4));
        line("  M positive definite: Schur=%s eigen=%s agree=%s",
             stab.pd_by_schur ? "yes" : "no", stab.pd_by_eigen ? "yes" : "no",
             stab.pd_by_schur == stab.pd_by_eigen ? "yes" : "no");
        line("  C_R=%.6g  C=%.6g", c_r_const, c_const);
        os << "\n[bound constants] (" << (bounds.measured ? "measured" : "configured") << ")\n";
        line("  eps_R=%.6g eps_x=[%.6g, %.6g, %.6g]", bounds.eps_r, bounds.eps_x(0),
             bounds.eps_x(1), bounds.eps_x(2));
        line("  eps_f=%.6g eps_M=%.6g eps_u=%.6g eps_c=%.6g", bounds.eps_f, bounds.eps_m,
             bounds.eps_u, bounds.eps_c);
        os << "\n[attraction domains at t=0]\n";
        line("  D_R0: inside=%s%s (psi=%.6g, |e_O|^2=%.6g < %.6g: %s)",
             d_r0.inside ? "yes" : "no", d_r0.on_psi_boundary ? " (psi boundary)" : "",
             d_r0.psi, d_r0.e_omega_sq, d_r0.omega_budget, d_r0.omega_ok ? "yes" : "no");
        line("  D_0: inside=%s%s (psi=%.6g, omega ok=%s, translational ok=%s)",
             d_0.inside ? "yes" : "no", d_0.on_psi_boundary ? " (psi boundary)" : "", d_0.psi,
             d_0.omega_ok ? "yes" : "no", d_0.translational_ok ? "yes" : "no");
        line("  ticks outside D_0 along the run: %zu / %zu", d_0_violation_ticks, total_ticks);
        os << "\n[near-exponential envelope]\n";
        if (envelope_ok) {
            line("  |z(t)| <= %.6g e^{-%.6g t} + %.6g  (alpha=%.6g, coverage=%.4f)",
                 envelope.amplitude, envelope.beta, envelope.eps, envelope.alpha,
                 envelope.coverage);
        } else {
            os << "  no envelope: " << envelope_note << '\n';
        }
        os << "\n[comparison constants]\n";
        line("  p1=%.6g p2=%.6g p3=%.6g p4=%.6g", p1, p2, p3, p4);
        if (std::isnan(beta_theory)) {
            os << "  theoretical rate lmin(M)/(2 p4 lmax(M2)) = n/a "
                  "(coupled matrix not PD under the supplied bounds)\n";
        } else {
            line("  theoretical rate lmin(M)/(2 p4 lmax(M2)) = %.6g", beta_theory);
            line("  theoretical ball sqrt(C/(2 beta p3 lmin(M1))) = %.6g", eps_theory);
        }
        line("  quadratic sandwich outside the eps ball: %s", sandwich_ok ? "holds" : "VIOLATED");
        line("  V decreasing at %.2f%% of ticks outside the eps ball",
             100.0 * v_decrease_fraction);
        return os.str();
    }
};

inline void write_report(const DiagnosticsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("write_report: cannot open '" + path + "'");
    out << report.render();
    if (!out) throw IoError("write_report: write failure on '" + path + "'");
}

struct RunResult {
    SimLog log;
    Metrics metrics;
    DiagnosticsReport report;
};

// Synchronous loop: controller -> allocation -> RK4 plant step -> log.
// Candidate columns are filled post-run once the optimal weights have been
// regressed from the logged features; metrics and the diagnostics report are
// computed from the completed log. Deterministic for a fixed config.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto& params = cfg.vehicle;
    const Gains& g = cfg.gains;
    const auto traj = make_trajectory(cfg.trajectory, cfg.heading);
    const auto ref0 = traj(0.0);

    vehicle::RigidState state;
    const Vec3 default_pos =
        cfg.trajectory.kind == TrajectorySpec::Kind::Step ? Vec3::Zero() : ref0.x_d;
    state.x = cfg.initial.position.value_or(default_pos);
    state.v = cfg.initial.velocity;
    state.r = geom3::exp_hat(cfg.initial.attitude);
    state.omega = cfg.initial.omega;

    ControllerState cs{
        controller::make_bank(
            g, cfg.rbf, Vec3::Constant(cfg.initial.mass_estimate_factor * params.mass),
            cfg.initial.inertia_estimate_factor * params.inertia),
        {}};
    const auto mode = cfg.j_known ? controller::ScenarioMode::known(params.inertia)
                                  : controller::ScenarioMode::unknown();
    const std::array<Mat2, 3> p = cs.bank.p;

    const int n = static_cast<int>(std::llround(cfg.duration / cfg.dt));
    if (n < 2) throw ConfigError("run_scenario: duration must cover at least two ticks");
    const int decim = cfg.controller_decimation;
    const double dt_ctl = cfg.dt * decim;

    RunResult result;
    auto& log = result.log;
    log.rows.reserve(static_cast<size_t>(n));
    std::vector<std::array<Eigen::VectorXd, 6>> weights;
    weights.reserve(static_cast<size_t>(n));

    ControllerOutput out;
    vehicle::ActuationResult act;

    for (int k = 0; k < n; ++k) {
        const double t = k * cfg.dt;
        const auto ref = traj(t);
        if (k % decim == 0) {
            auto [o, next] =
                controller::controller_step(state, ref, cs, g, mode, params.gravity, dt_ctl);
            out = o;
            cs = std::move(next);
            act = vehicle::allocate(out.force_d, out.moment_d, state.r, params);
        }

        LogRow row;
        row.t = t;
        row.x = state.x;
        row.v = state.v;
        row.r = state.r.matrix();
        row.omega = state.omega;
        row.x_d = ref.x_d;
        row.xddot_d = ref.xddot_d;
        row.e_x = out.e_x;
        row.e_v = out.e_v;
        row.e_r = out.e_r;
        row.e_omega = out.e_omega;
        row.psi = out.psi;
        row.force_d = out.force_d;
        row.moment_d = out.moment_d;
        row.f_d = act.f_d;
        row.f = act.f;
        row.moment = act.moment;
        row.delta_f = act.delta_f;
        row.delta_m = act.delta_m;
        row.m_hat = cs.bank.m_hat;
        row.j_hat = cs.bank.j_hat;
        for (int j = 0; j < 3; ++j) {
            row.w_x_norm(j) = cs.bank.rbf_x[j].weights.norm();
            row.w_r_norm(j) = cs.bank.rbf_r[j].weights.norm();
        }
        row.phi_x_hat = out.phi_x_hat;
        row.phi_r_hat = out.phi_r_hat;
        row.phi_x = cfg.disturbance.phi_x(t, state.v);
        row.phi_r = cfg.disturbance.phi_r(t);
        row.z_norm = std::sqrt(out.e_x.squaredNorm() + out.e_v.squaredNorm() +
                               out.e_r.squaredNorm() + out.e_omega.squaredNorm());
        row.clamped = act.clamped ? 1.0 : 0.0;
        log.rows.push_back(row);
        weights.push_back({cs.bank.rbf_x[0].weights, cs.bank.rbf_x[1].weights,
                           cs.bank.rbf_x[2].weights, cs.bank.rbf_r[0].weights,
                           cs.bank.rbf_r[1].weights, cs.bank.rbf_r[2].weights});

        try {
            state = vehicle::step_rk4(state, act.f, act.moment, cfg.disturbance, t, cfg.dt,
                                      params);
        } catch (const NonFiniteState& e) {
            throw SimDiverged("run_scenario: " + std::string(e.what()) + " at t=" +
                              std::to_string(t));
        }
        if (state.x.norm() > 1e3) {
            throw SimDiverged("run_scenario: position left the 1 km sanity region at t=" +
                              std::to_string(t));
        }
    }

    // Optimal-weight regression per slice over the logged features.
    const size_t rows = log.rows.size();
    std::array<detail::SliceFit, 6> fits;
    {
        std::vector<Vector2d> inputs(rows);
        std::vector<double> targets(rows);
        for (int j = 0; j < 3; ++j) {
            for (size_t i = 0; i < rows; ++i) {
                inputs[i] = Vector2d(log.rows[i].e_x(j), log.rows[i].e_v(j));
                targets[i] = log.rows[i].phi_x(j);
            }
            fits[j] = detail::fit_optimal_weights(cs.bank.rbf_x[j], inputs, targets);
        }
        for (int j = 0; j < 3; ++j) {
            for (size_t i = 0; i < rows; ++i) {
                const auto& row = log.rows[i];
                inputs[i] = Vector2d(row.e_r(j), row.e_omega(j));
                double target = row.phi_r(j);
                if (!cfg.j_known) {
                    target += detail::coriolis_accel(row.omega, params.inertia)(j);
                }
                targets[i] = target;
            }
            fits[3 + j] = detail::fit_optimal_weights(cs.bank.rbf_r[j], inputs, targets);
        }
    }

    // Candidate columns (needs the weight history and the regressed optima).
    std::vector<double> v_re_series(rows);
    for (size_t i = 0; i < rows; ++i) {
        auto& row = log.rows[i];
        lyapunov::CandidateInputs in;
        for (int j = 0; j < 3; ++j) in.e_slices[j] = Vector2d(row.e_x(j), row.e_v(j));
        in.e_r = row.e_r;
        in.e_omega = row.e_omega;
        in.psi = row.psi;
        in.m_hat = row.m_hat;
        in.j_hat = row.j_hat;
        in.m_true = params.mass;
        in.j_true = params.inertia;
        for (int j = 0; j < 3; ++j) {
            in.w_x_err_sq[j] = (fits[j].w_star - weights[i][j]).squaredNorm();
            in.w_r_err_sq[j] = (fits[3 + j].w_star - weights[i][3 + j]).squaredNorm();
        }
        const auto v = lyapunov::candidates(in, g, p);
        row.v_lyap = v.v;
        row.v_rot = v.v_r;
        row.v_trans = v.v_x;
        row.v_est = v.v_e;
        v_re_series[i] = v.v_re;
    }

    result.metrics = compute_metrics(log, cfg);

    // Assemble the report.
    auto& rep = result.report;
    rep.scenario_name = cfg.name;
    rep.j_known = cfg.j_known;
    rep.duration = cfg.duration;
    rep.dt = cfg.dt;
    rep.v_initial = log.rows.front().v_lyap;
    rep.v_final = log.rows.back().v_lyap;
    rep.v_e_initial = log.rows.front().v_est;
    rep.v_e_final = log.rows.back().v_est;
    rep.cr = lyapunov::check_cr_bound(g, cfg.diagnostics.psi_bar);
    rep.bounds = detail::resolve_bounds(log, cfg);
    if (cfg.diagnostics.measure_bounds) {
        // Empirical approximation-error bounds: sup residual of the best
        // static fit onto the visited activation features.
        rep.bounds.eps_r = std::max({fits[3].sup_residual, fits[4].sup_residual,
                                     fits[5].sup_residual});
        rep.bounds.eps_x =
            Vec3(fits[0].sup_residual, fits[1].sup_residual, fits[2].sup_residual);
    }
    const auto data = lyapunov::LyapunovData::make(g);
    rep.stab = lyapunov::assemble_m(g, data.p, data.q, cfg.diagnostics.psi_bar, params.mass,
                                    rep.bounds.eps_u, rep.bounds.eps_c);

    const double j_min_true = params.inertia.minCoeff();
    const double rot_eps = rep.bounds.eps_r + rep.bounds.eps_m / j_min_true;
    rep.c_r_const = (g.k_omega > g.c_r)
                        ? g.c_r * rot_eps * rot_eps / (2.0 * g.k_r) +
                              rot_eps * rot_eps / (2.0 * (g.k_omega - g.c_r))
                        : std::numeric_limits<double>::infinity();
    rep.c_const = rep.c_r_const;
    for (int j = 0; j < 3; ++j) {
        const double lmax_p = lyapunov::sym2x2_eigenvalues(data.p[j])(1);
        const double lmin_q = lyapunov::sym2x2_eigenvalues(data.q[j])(0);
        const double e = rep.bounds.eps_x(j) + rep.bounds.eps_f / params.mass;
        rep.c_const += lmax_p * lmax_p * e * e / lmin_q;
    }

    {
        const auto& first = log.rows.front();
        std::array<Vector2d, 3> slices0;
        for (int j = 0; j < 3; ++j) slices0[j] = Vector2d(first.e_x(j), first.e_v(j));
        rep.d_r0 = lyapunov::domain_membership(first.psi, first.e_omega, slices0, g,
                                               lyapunov::DomainFlavor::AttractionRotational,
                                               cfg.diagnostics.e_x_cap);
        rep.d_0 = lyapunov::domain_membership(first.psi, first.e_omega, slices0, g,
                                              lyapunov::DomainFlavor::AttractionFull,
                                              cfg.diagnostics.e_x_cap);
        rep.total_ticks = rows;
        for (const auto& row : log.rows) {
            std::array<Vector2d, 3> slices;
            for (int j = 0; j < 3; ++j) slices[j] = Vector2d(row.e_x(j), row.e_v(j));
            if (!lyapunov::domain_membership(row.psi, row.e_omega, slices, g,
                                             lyapunov::DomainFlavor::AttractionFull,
                                             cfg.diagnostics.e_x_cap)
                     .inside) {
                ++rep.d_0_violation_ticks;
            }
        }
    }

    rep.envelope_ok = result.metrics.envelope_ok;
    rep.envelope = result.metrics.envelope;
    rep.envelope_note = result.metrics.envelope_note;
    rep.v_decrease_fraction = result.metrics.v_decrease_fraction;

    // Comparison constants outside the fitted eps ball.
    const double ball = rep.envelope_ok ? rep.envelope.eps : result.metrics.z_terminal_rms;
    const double lmin_m1 = rep.stab.lmin_m1;
    const double lmax_m2 = rep.stab.lmax_m2;
    const double lmin_mr1 =
        lyapunov::sym2x2_eigenvalues(rep.stab.m_r1)(0);
    const double lmax_mr2 =
        lyapunov::sym2x2_eigenvalues(rep.stab.m_r2)(1);
    double p1 = std::numeric_limits<double>::infinity(), p2 = 1.0;
    double p3 = std::numeric_limits<double>::infinity(), p4 = 1.0;
    bool sandwich = true;
    size_t outside = 0;
    for (size_t i = 0; i < rows; ++i) {
        const auto& row = log.rows[i];
        const double z2 = row.z_norm * row.z_norm;
        if (!(row.z_norm > ball)) continue;
        ++outside;
        p3 = std::min(p3, 1.0 + row.v_est / (lmin_m1 * z2));
        p4 = std::max(p4, 1.0 + row.v_est / (lmax_m2 * ball * ball));
        const double zr2 = row.e_r.squaredNorm() + row.e_omega.squaredNorm();
        if (zr2 > 0.0) {
            p1 = std::min(p1, 1.0 + v_re_series[i] / (lmin_mr1 * zr2));
            p2 = std::max(p2, 1.0 + v_re_series[i] / (lmax_mr2 * ball * ball));
        }
    }
    if (!outside) {
        p1 = p2 = p3 = p4 = 1.0;
    }
    rep.p1 = p1;
    rep.p2 = p2;
    rep.p3 = p3;
    rep.p4 = p4;
    if (rep.stab.pd_by_eigen) {
        rep.beta_theory = rep.stab.lmin_m_full / (2.0 * p4 * lmax_m2);
        rep.eps_theory =
            std::sqrt(rep.c_const / (2.0 * rep.beta_theory * p3 * lmin_m1));
    }
    for (size_t i = 0; i < rows && sandwich; ++i) {
        const auto& row = log.rows[i];
        if (!(row.z_norm > ball)) continue;
        const double z2 = row.z_norm * row.z_norm;
        const double lo = p3 * lmin_m1 * z2;
        const double hi = p4 * lmax_m2 * z2;
        if (row.v_lyap < lo * (1.0 - 1e-9) - 1e-12 ||
            row.v_lyap > hi * (1.0 + 1e-9) + 1e-12) {
            sandwich = false;
        }
    }
    rep.sandwich_ok = sandwich;
    return result;
}

}  // namespace sanm::harness
