#pragma once

// Ground-truth plant: rigid-body dynamics with injected disturbances, a
// fixed-step RK4 integrator, and the actuation chain taking a desired wrench
// through rotor thrusts and speeds to the realized wrench.
//
// NED conventions: gravity acts along +e3, collective thrust along -R e3.

#include <array>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sanm/errors.hpp"
#include "sanm/geom3.hpp"

namespace sanm::vehicle {

using geom3::Mat3;
using geom3::Rotation;
using geom3::Vec3;
using Vec4 = Eigen::Vector4d;

struct VehicleParams {
    double mass = 1.5;                      // kg
    Vec3 inertia{0.02, 0.02, 0.04};         // diagonal of J, kg m^2
    double arm_length = 0.17;               // d, center-to-rotor distance, m
    double gravity = 9.81;                  // m/s^2, +down
    double c_t = 1.0e-5;                    // true thrust coefficient, N s^2
    double c_m = 1.6e-7;                    // true moment coefficient, N m s^2
    double c_t_ref = 1.0e-5;                // reference c'_T used by allocation
    double c_m_ref = 1.6e-7;                // reference c'_M used by allocation
    double rotor_thrust_max = 0.0;          // per-rotor clamp, N; 0 = 4x hover share

    double hover_thrust() const { return mass * gravity; }

    double thrust_clamp() const {
        return rotor_thrust_max > 0.0 ? rotor_thrust_max : hover_thrust();
    }

    void validate() const {
        if (!(mass > 0.0) || !(inertia.minCoeff() > 0.0) || !(arm_length > 0.0) ||
            !(c_t > 0.0) || !(c_m > 0.0) || !(c_t_ref > 0.0) || !(c_m_ref > 0.0)) {
            throw InvalidSpec("VehicleParams: mass, inertia, arm, coefficients must be positive");
        }
    }
};

struct RigidState {
    Vec3 x = Vec3::Zero();       // position, inertial, m
    Vec3 v = Vec3::Zero();       // velocity, inertial, m/s
    Rotation r;                  // body -> inertial
    Vec3 omega = Vec3::Zero();   // angular velocity, body, rad/s

    bool finite() const {
        return x.allFinite() && v.allFinite() && r.matrix().allFinite() && omega.allFinite();
    }
};

// --- disturbance model ------------------------------------------------------

struct DisturbanceTerm {
    enum class Kind { Constant, Sinusoid, Gust };
    Kind kind = Kind::Constant;
    double value = 0.0;       // constant level or amplitude
    double frequency = 0.0;   // rad/s (sinusoid)
    double phase = 0.0;       // rad (sinusoid)
    double onset = 0.0;       // s (gust)
    double rise = 0.0;        // s (gust ramp length)

    double eval(double t) const {
        switch (kind) {
            case Kind::Constant:
                return value;
            case Kind::Sinusoid:
                return value * std::sin(frequency * t + phase);
            case Kind::Gust: {
                if (t <= onset) return 0.0;
                if (rise <= 0.0 || t >= onset + rise) return value;
                const double s = (t - onset) / rise;
                return value * s * s * (3.0 - 2.0 * s);  // smoothstep ramp
            }
        }
        return 0.0;
    }

    double bound() const { return std::abs(value); }
};

struct AxisDisturbance {
    std::vector<DisturbanceTerm> terms;

    double eval(double t) const {
        double a = 0.0;
        for (const auto& term : terms) a += term.eval(t);
        return a;
    }

    double bound() const {
        double b = 0.0;
        for (const auto& term : terms) b += term.bound();
        return b;
    }
};

struct DisturbanceModel {
    std::array<AxisDisturbance, 3> translational;  // m/s^2, inertial axes
    std::array<AxisDisturbance, 3> rotational;     // rad/s^2, body axes
    double drag_coeff = 0.0;                       // optional -c |v| v term, off by default

    Vec3 phi_x(double t, const Vec3& v = Vec3::Zero()) const {
        Vec3 a(translational[0].eval(t), translational[1].eval(t), translational[2].eval(t));
        if (drag_coeff != 0.0) a -= drag_coeff * v.norm() * v;
        return a;
    }

    Vec3 phi_r(double t) const {
        return Vec3(rotational[0].eval(t), rotational[1].eval(t), rotational[2].eval(t));
    }
};

// --- dynamics ---------------------------------------------------------------

struct StateDerivative {
    Vec3 dx;
    Vec3 dv;
    Mat3 dr;
    Vec3 domega;
};

// xdot = v
// vdot = -(f/m) R e3 + g e3 + phi_x
// Rdot = R hat(Omega)
// Omegadot = J^-1 (M - Omega x J Omega) + phi_R
//
// The Coriolis term is always part of the plant; treating it as an internal
// disturbance is purely a controller-side choice.
inline StateDerivative derivative(const RigidState& s, double f, const Vec3& moment,
                                  const DisturbanceModel& dist, double t,
                                  const VehicleParams& p) {
    const Vec3 e3 = Vec3::UnitZ();
    StateDerivative d;
    d.dx = s.v;
    d.dv = -(f / p.mass) * (s.r.matrix() * e3) + p.gravity * e3 + dist.phi_x(t, s.v);
    d.dr = s.r.matrix() * geom3::hat(s.omega);
    const Vec3 j_omega = p.inertia.cwiseProduct(s.omega);
    d.domega = (moment - s.omega.cross(j_omega)).cwiseQuotient(p.inertia) + dist.phi_r(t);
    return d;
}

// Classical RK4 with zero-order-hold wrench over the step; the rotation is
// re-projected onto SO(3) afterwards to repair integration drift.
inline RigidState step_rk4(const RigidState& s, double f, const Vec3& moment,
                           const DisturbanceModel& dist, double t, double dt,
                           const VehicleParams& p) {
    if (!(dt > 0.0) || dt > 0.01) {
        throw InvalidSpec("step_rk4: dt must be in (0, 0.01]");
    }

    auto advance = [&](const StateDerivative& d, double h) {
        RigidState n;
        n.x = s.x + h * d.dx;
        n.v = s.v + h * d.dv;
        n.r = Rotation::unchecked(s.r.matrix() + h * d.dr);
        n.omega = s.omega + h * d.domega;
        return n;
    };

    const StateDerivative k1 = derivative(s, f, moment, dist, t, p);
    const StateDerivative k2 = derivative(advance(k1, 0.5 * dt), f, moment, dist, t + 0.5 * dt, p);
    const StateDerivative k3 = derivative(advance(k2, 0.5 * dt), f, moment, dist, t + 0.5 * dt, p);
    const StateDerivative k4 = derivative(advance(k3, dt), f, moment, dist, t + dt, p);

    RigidState out;
    out.x = s.x + (dt / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    out.v = s.v + (dt / 6.0) * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv);
    const Mat3 r_raw =
        s.r.matrix() + (dt / 6.0) * (k1.dr + 2.0 * k2.dr + 2.0 * k3.dr + k4.dr);
    out.omega = s.omega + (dt / 6.0) * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega);

    if (!out.x.allFinite() || !out.v.allFinite() || !r_raw.allFinite() || !out.omega.allFinite()) {
        throw NonFiniteState("step_rk4: non-finite state component");
    }
    out.r = geom3::orthonormalize(r_raw);
    return out;
}

// --- actuation chain --------------------------------------------------------

struct ActuationResult {
    double f_d = 0.0;              // desired collective thrust, N
    Vec4 thrust_d = Vec4::Zero();  // per-rotor desired thrust after clamping, N
    Vec4 rotor_speed = Vec4::Zero();  // rad/s
    double f = 0.0;                // realized collective thrust, N
    Vec3 moment = Vec3::Zero();    // realized moment, N m
    double delta_f = 0.0;          // f - f_d
    Vec3 delta_m = Vec3::Zero();   // M - M_d
    bool clamped = false;          // any rotor thrust hit [0, T_max]
};

// X-configuration rotor signs, rotors numbered per the allocation mapping:
// roll (about b1): + - - +, pitch (about b2): + + - -, yaw (about b3): + - + -.
inline constexpr std::array<double, 4> kRollSign{+1.0, -1.0, -1.0, +1.0};
inline constexpr std::array<double, 4> kPitchSign{+1.0, +1.0, -1.0, -1.0};
inline constexpr std::array<double, 4> kYawSign{+1.0, -1.0, +1.0, -1.0};

// Desired wrench -> rotor thrusts -> rotor speeds -> realized wrench.
//
// f_d = -F_d . (R e3); thrusts come from the exact inverse of the reference
// rotor map (arm factor sqrt(2)/d, yaw factor c'_T/c'_M); speeds from the
// reference coefficient; the realized wrench uses the true coefficients and
// the (sqrt(2)/2) d moment arm. Negative/oversized thrusts are clamped and
// flagged, never rejected.
inline ActuationResult allocate(const Vec3& force_d, const Vec3& moment_d,
                                const Rotation& r, const VehicleParams& p) {
    ActuationResult out;
    out.f_d = -force_d.dot(r.matrix() * Vec3::UnitZ());

    const double arm = std::sqrt(2.0) / p.arm_length;
    const double yaw = p.c_t_ref / p.c_m_ref;
    const double t_max = p.thrust_clamp();

    for (int i = 0; i < 4; ++i) {
        double ti = 0.25 * (out.f_d + kRollSign[i] * arm * moment_d.x() +
                            kPitchSign[i] * arm * moment_d.y() +
                            kYawSign[i] * yaw * moment_d.z());
        if (ti < 0.0 || ti > t_max) {
            out.clamped = true;
            ti = std::clamp(ti, 0.0, t_max);
        }
        out.thrust_d(i) = ti;
        out.rotor_speed(i) = std::sqrt(ti / p.c_t_ref);
    }

    const double half_arm = 0.5 * std::sqrt(2.0) * p.arm_length;
    for (int i = 0; i < 4; ++i) {
        const double w2 = out.rotor_speed(i) * out.rotor_speed(i);
        out.f += p.c_t * w2;
        out.moment.x() += kRollSign[i] * half_arm * p.c_t * w2;
        out.moment.y() += kPitchSign[i] * half_arm * p.c_t * w2;
        out.moment.z() += kYawSign[i] * p.c_m * w2;
    }

    out.delta_f = out.f - out.f_d;
    out.delta_m = out.moment - moment_d;
    return out;
}

}  // namespace sanm::vehicle
