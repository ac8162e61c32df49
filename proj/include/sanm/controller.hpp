#pragma once

// The wrench controller with its 12-slice adaptive-neuro mapping: per-axis
// mass/inertia adaptive laws and per-axis RBF disturbance estimators feeding
// a geometric SE(3) PD law. Every update here is a pure transition on value
// types; controller_step returns the advanced learner state.

#include <array>
#include <functional>
#include <utility>

#include <Eigen/Dense>

#include "sanm/errors.hpp"
#include "sanm/gains.hpp"
#include "sanm/geom3.hpp"
#include "sanm/lyapunov.hpp"
#include "sanm/rbf.hpp"
#include "sanm/vehicle.hpp"

namespace sanm::controller {

using geom3::Mat3;
using geom3::Rotation;
using geom3::Vec3;
using rbf::RbfSlice;
using vehicle::RigidState;
using Eigen::Vector2d;

// --- reference --------------------------------------------------------------

struct ReferenceSample {
    Vec3 x_d = Vec3::Zero();
    Vec3 xdot_d = Vec3::Zero();
    Vec3 xddot_d = Vec3::Zero();
    Vec3 b1_d = Vec3::UnitX();  // unit heading direction
};

struct ReferenceSignal {
    std::function<ReferenceSample(double)> eval;
    ReferenceSample operator()(double t) const { return eval(t); }
};

// --- learner state ----------------------------------------------------------

struct SliceBank {
    Vec3 m_hat = Vec3::Zero();                 // per-axis mass estimates
    Vec3 j_hat = Vec3::Zero();                 // per-axis inertia estimates
    std::array<RbfSlice, 3> rbf_x;             // translational slices, input (e_x, e_v)
    std::array<RbfSlice, 3> rbf_r;             // rotational slices, input (e_R, e_Omega)
    std::array<Mat2, 3> p;                     // Lyapunov matrices P_j

    void clamp_check(const Gains& g) const {
        for (int j = 0; j < 3; ++j) {
            if (!(m_hat(j) >= g.m_min && m_hat(j) <= g.m_max) ||
                !(j_hat(j) >= g.j_min(j) && j_hat(j) <= g.j_max(j))) {
                throw InvalidSpec("SliceBank: estimate outside its clamp interval");
            }
        }
    }
};

inline SliceBank make_bank(const Gains& g, const rbf::RbfLayout& layout, const Vec3& m_hat0,
                           const Vec3& j_hat0) {
    layout.validate();
    SliceBank bank;
    bank.m_hat = m_hat0.cwiseMax(g.m_min).cwiseMin(g.m_max);
    bank.j_hat = j_hat0.cwiseMax(g.j_min).cwiseMin(g.j_max);
    const auto data = lyapunov::LyapunovData::make(g);
    bank.p = data.p;
    for (int j = 0; j < 3; ++j) {
        bank.rbf_x[j] = rbf::make_box_slice(layout.neurons, layout.trans_half_x,
                                            layout.trans_half_y, layout.weight_cap,
                                            layout.width_scale);
        bank.rbf_r[j] = rbf::make_box_slice(layout.neurons, layout.rot_half_x,
                                            layout.rot_half_y, layout.weight_cap,
                                            layout.width_scale);
    }
    return bank;
}

// --- attitude extraction ------------------------------------------------------

// Columns per the desired-attitude construction: b3 = -F_d/|F_d|,
// b2 = (b3 x b1_d)/|b3 x b1_d|, b1 = b2 x b3.
inline Rotation compute_desired_attitude(const Vec3& force_d, const Vec3& b1_d,
                                         double thrust_min = 1e-3, double align_tol = 1e-6) {
    const double f_norm = force_d.norm();
    if (!(f_norm > thrust_min)) {
        throw DegenerateThrust("compute_desired_attitude: |F_d| too small");
    }
    const Vec3 b3 = -force_d / f_norm;
    const Vec3 cross = b3.cross(b1_d);
    const double c_norm = cross.norm();
    if (!(c_norm > align_tol)) {
        throw HeadingAligned("compute_desired_attitude: heading parallel to thrust axis");
    }
    const Vec3 b2 = cross / c_norm;
    const Vec3 b1 = b2.cross(b3);
    Mat3 r;
    r.col(0) = b1;
    r.col(1) = b2;
    r.col(2) = b3;
    return Rotation::unchecked(r);
}

// Desired angular velocity and acceleration from the R_c history:
// Rdot_c via second-order backward difference over three samples,
// Omega_c = vee(antisym(R_c^T Rdot_c)), Omegadot_c via differencing with a
// first-order low-pass. The first two ticks return zeros.
class AttitudeRateTracker {
public:
    std::pair<Vec3, Vec3> push(const Rotation& r_c, double dt, double cutoff) {
        Vec3 omega_c = Vec3::Zero();
        Vec3 alpha = Vec3::Zero();
        if (count_ >= 2) {
            const Mat3 rdot = (3.0 * r_c.matrix() - 4.0 * prev1_ + prev2_) / (2.0 * dt);
            const Mat3 w = r_c.matrix().transpose() * rdot;
            const Mat3 a = 0.5 * (w - w.transpose());
            omega_c = Vec3(a(2, 1), a(0, 2), a(1, 0));
            if (have_omega_) {
                const Vec3 raw = (omega_c - omega_prev_) / dt;
                alpha_filt_ += (1.0 - std::exp(-cutoff * dt)) * (raw - alpha_filt_);
                alpha = alpha_filt_;
            }
            omega_prev_ = omega_c;
            have_omega_ = true;
        }
        prev2_ = prev1_;
        prev1_ = r_c.matrix();
        if (count_ < 2) ++count_;
        return {omega_c, alpha};
    }

private:
    int count_ = 0;
    bool have_omega_ = false;
    Mat3 prev1_ = Mat3::Identity();
    Mat3 prev2_ = Mat3::Identity();
    Vec3 omega_prev_ = Vec3::Zero();
    Vec3 alpha_filt_ = Vec3::Zero();
};

// --- wrench laws --------------------------------------------------------------

// F_d[j] = m_hat[j] (-K_xj^T E_xj + xddot_d[j] - g d_j3 - phi_x_hat[j]).
inline Vec3 translational_wrench(const std::array<Vector2d, 3>& e_slices, const Vec3& xddot_d,
                                 const Vec3& phi_x_hat, const SliceBank& bank, const Gains& g,
                                 double gravity) {
    Vec3 f_d;
    for (int j = 0; j < 3; ++j) {
        const double pd = g.k_p(j) * e_slices[j](0) + g.k_d(j) * e_slices[j](1);
        const double grav = (j == 2) ? gravity : 0.0;
        f_d(j) = bank.m_hat(j) * (-pd + xddot_d(j) - grav - phi_x_hat(j));
    }
    return f_d;
}

// Scenario choice: with a known inertia tensor the gyroscopic term is
// compensated analytically; otherwise the rotational networks absorb it as
// an internal disturbance.
struct ScenarioMode {
    bool j_known = false;
    Vec3 j_true = Vec3::Ones();

    static ScenarioMode known(const Vec3& j) { return ScenarioMode{true, j}; }
    static ScenarioMode unknown() { return ScenarioMode{}; }
};

// M_d[j] = J_hat[j] { -k_R e_R[j] - k_O e_O[j] - (hat(O) R^T Rc Oc)[j]
//                     + (R^T Rc Odot_c)[j] - phi_R_hat[j]
//                     + [J known] (J^-1 hat(O) J O)[j] }.
inline Vec3 rotational_wrench(const Vec3& e_r, const Vec3& e_omega, const Rotation& r,
                              const Rotation& r_c, const Vec3& omega, const Vec3& omega_c,
                              const Vec3& omega_dot_c, const Vec3& phi_r_hat,
                              const SliceBank& bank, const Gains& g, const ScenarioMode& mode) {
    const Mat3 rel = r.matrix().transpose() * r_c.matrix();
    const Vec3 transport = geom3::hat(omega) * (rel * omega_c);
    const Vec3 feedforward = rel * omega_dot_c;
    Vec3 coriolis = Vec3::Zero();
    if (mode.j_known) {
        const Vec3 j_omega = mode.j_true.cwiseProduct(omega);
        coriolis = omega.cross(j_omega).cwiseQuotient(mode.j_true);
    }
    Vec3 m_d;
    for (int j = 0; j < 3; ++j) {
        m_d(j) = bank.j_hat(j) *
                 (-g.k_r * e_r(j) - g.k_omega * e_omega(j) - transport(j) + feedforward(j) -
                  phi_r_hat(j) + coriolis(j));
    }
    return m_d;
}

// --- adaptive laws --------------------------------------------------------------

struct AdaptiveStep {
    double value = 0.0;   // estimate after Euler step and projection
    double rate = 0.0;    // continuous-time law value before integration
    int branch = 0;       // 1 = sigma > 0, 2 = interior, 3 = boundary decay
};

// Mass law. sigma = E_xj^T P_j B F_d[j]; interior branches integrate
// -(m^2/eta) sigma, the boundary branch decays by -s_m m^2/eta; the result is
// projected back into [m_min, m_max].
inline AdaptiveStep update_mass(double m_hat, const Vector2d& e_slice, const Mat2& p,
                                double f_d_j, const Gains& g, double dt) {
    const double sigma = (p * e_slice)(1) * f_d_j;  // E^T P B with B = (0,1)^T
    AdaptiveStep out;
    const double m2 = m_hat * m_hat;
    if (sigma > 0.0) {
        out.rate = -(m2 / g.eta_m) * sigma;
        out.branch = 1;
    } else if (m_hat < g.m_max) {
        out.rate = -(m2 / g.eta_m) * sigma;
        out.branch = 2;
    } else {
        out.rate = -g.leak_m * m2 / g.eta_m;
        out.branch = 3;
    }
    out.value = std::clamp(m_hat + dt * out.rate, g.m_min, g.m_max);
    return out;
}

// Inertia law, mirror of the mass law with sigma_R = (e_O[j] + c_R e_R[j]) M_d[j].
inline AdaptiveStep update_inertia(double j_hat, double e_r_j, double e_omega_j, double m_d_j,
                                   double j_min, double j_max, const Gains& g, double dt) {
    const double sigma = (e_omega_j + g.c_r * e_r_j) * m_d_j;
    AdaptiveStep out;
    const double j2 = j_hat * j_hat;
    if (sigma > 0.0) {
        out.rate = -(j2 / g.eta_j) * sigma;
        out.branch = 1;
    } else if (j_hat < j_max) {
        out.rate = -(j2 / g.eta_j) * sigma;
        out.branch = 2;
    } else {
        out.rate = -g.leak_j * j2 / g.eta_j;
        out.branch = 3;
    }
    out.value = std::clamp(j_hat + dt * out.rate, j_min, j_max);
    return out;
}

// Translational weight law: W += dt gamma (E^T P B) h(E), then norm projection.
inline void update_weights_x(RbfSlice& slice, const Vector2d& e_slice, const Mat2& p,
                             double gamma, double dt) {
    if (gamma == 0.0) return;
    slice.weights += dt * gamma * (p * e_slice)(1) * slice.activations(e_slice);
    slice.project();
}

// Rotational weight law: W += dt gamma (e_O + c_R e_R) h(x), then projection.
inline void update_weights_r(RbfSlice& slice, double e_r_j, double e_omega_j, double c_r,
                             double gamma, double dt) {
    if (gamma == 0.0) return;
    const Vector2d input(e_r_j, e_omega_j);
    slice.weights += dt * gamma * (e_omega_j + c_r * e_r_j) * slice.activations(input);
    slice.project();
}

// --- one controller tick --------------------------------------------------------

struct ControllerState {
    SliceBank bank;
    AttitudeRateTracker rate_tracker;
};

struct ControllerOutput {
    Vec3 force_d = Vec3::Zero();      // F_d, inertial
    Vec3 moment_d = Vec3::Zero();     // M_d, body
    Rotation r_c;
    Vec3 omega_c = Vec3::Zero();
    Vec3 omega_dot_c = Vec3::Zero();
    Vec3 e_x = Vec3::Zero();
    Vec3 e_v = Vec3::Zero();
    Vec3 e_r = Vec3::Zero();
    Vec3 e_omega = Vec3::Zero();
    double psi = 0.0;
    Vec3 phi_x_hat = Vec3::Zero();    // estimates used for this tick's wrench
    Vec3 phi_r_hat = Vec3::Zero();
    Vec3 m_hat_used = Vec3::Zero();
    Vec3 j_hat_used = Vec3::Zero();
    std::array<double, 3> mass_rate{0.0, 0.0, 0.0};       // law rates, for diagnostics
    std::array<double, 3> inertia_rate{0.0, 0.0, 0.0};
};

// Orchestrates one tick: errors -> translational wrench -> desired attitude ->
// desired rates -> attitude errors -> rotational wrench -> all twelve slice
// updates. Pure: the input state is untouched.
inline std::pair<ControllerOutput, ControllerState> controller_step(
    const RigidState& s, const ReferenceSample& ref, const ControllerState& cs, const Gains& g,
    const ScenarioMode& mode, double gravity, double dt) {
    ControllerState next = cs;
    SliceBank& bank = next.bank;
    ControllerOutput out;

    out.e_x = s.x - ref.x_d;
    out.e_v = s.v - ref.xdot_d;
    std::array<Vector2d, 3> e_slices;
    for (int j = 0; j < 3; ++j) e_slices[j] = Vector2d(out.e_x(j), out.e_v(j));

    for (int j = 0; j < 3; ++j) out.phi_x_hat(j) = bank.rbf_x[j].forward(e_slices[j]);
    out.m_hat_used = bank.m_hat;
    out.j_hat_used = bank.j_hat;
    out.force_d =
        translational_wrench(e_slices, ref.xddot_d, out.phi_x_hat, bank, g, gravity);

    out.r_c = compute_desired_attitude(out.force_d, ref.b1_d, g.thrust_min, g.align_tol);
    std::tie(out.omega_c, out.omega_dot_c) =
        next.rate_tracker.push(out.r_c, dt, g.rate_filter_cutoff);

    const auto att = geom3::attitude_errors(s.r, out.r_c, s.omega, out.omega_c);
    out.e_r = att.e_r;
    out.e_omega = att.e_omega;
    out.psi = geom3::psi_r(s.r, out.r_c);

    for (int j = 0; j < 3; ++j) {
        out.phi_r_hat(j) = bank.rbf_r[j].forward(Vector2d(out.e_r(j), out.e_omega(j)));
    }
    out.moment_d = rotational_wrench(out.e_r, out.e_omega, s.r, out.r_c, s.omega, out.omega_c,
                                     out.omega_dot_c, out.phi_r_hat, bank, g, mode);

    for (int j = 0; j < 3; ++j) {
        if (g.adapt_model) {
            const auto m_step =
                update_mass(bank.m_hat(j), e_slices[j], bank.p[j], out.force_d(j), g, dt);
            bank.m_hat(j) = m_step.value;
            out.mass_rate[j] = m_step.rate;
            const auto j_step = update_inertia(bank.j_hat(j), out.e_r(j), out.e_omega(j),
                                               out.moment_d(j), g.j_min(j), g.j_max(j), g, dt);
            bank.j_hat(j) = j_step.value;
            out.inertia_rate[j] = j_step.rate;
        }
        update_weights_x(bank.rbf_x[j], e_slices[j], bank.p[j],
                         g.gamma_x(j) * g.learning_scale, dt);
        update_weights_r(bank.rbf_r[j], out.e_r(j), out.e_omega(j), g.c_r,
                         g.gamma_r(j) * g.learning_scale, dt);
    }
    return {out, next};
}

}  // namespace sanm::controller
