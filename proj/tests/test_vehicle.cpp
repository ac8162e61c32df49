#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sanm/vehicle.hpp"

using namespace sanm;
using namespace sanm::geom3;
using namespace sanm::vehicle;

namespace {

std::mt19937 rng(777);

VehicleParams default_params() { return VehicleParams{}; }

DisturbanceModel no_disturbance() { return DisturbanceModel{}; }

}  // namespace

TEST_CASE("hover equilibrium has zero derivative") {
    const VehicleParams p = default_params();
    RigidState s;  // identity attitude, at rest
    const auto d = derivative(s, p.mass * p.gravity, Vec3::Zero(), no_disturbance(), 0.0, p);
    CHECK(d.dx.norm() == 0.0);
    CHECK(d.dv.norm() < 1e-14);
    CHECK(d.dr.norm() == 0.0);
    CHECK(d.domega.norm() == 0.0);
}

TEST_CASE("free fall accelerates downward at g") {
    const VehicleParams p = default_params();
    RigidState s;
    const auto d = derivative(s, 0.0, Vec3::Zero(), no_disturbance(), 0.0, p);
    CHECK((d.dv - Vec3(0, 0, p.gravity)).norm() < 1e-15);
}

TEST_CASE("principal-axis spin has no gyroscopic acceleration") {
    VehicleParams p = default_params();
    p.inertia = Vec3(0.02, 0.02, 0.04);
    RigidState s;
    s.omega = Vec3(1, 0, 0);
    // Oracle: Omega x J Omega = [1,0,0] x [0.02,0,0] = 0.
    const auto d = derivative(s, 0.0, Vec3::Zero(), no_disturbance(), 0.0, p);
    CHECK(d.domega.norm() < 1e-15);
}

TEST_CASE("rk4 leaves an equilibrium state unchanged") {
    const VehicleParams p = default_params();
    RigidState s;
    const RigidState n =
        step_rk4(s, p.mass * p.gravity, Vec3::Zero(), no_disturbance(), 0.0, 1e-3, p);
    CHECK(n.x.norm() < 1e-12);
    CHECK(n.v.norm() < 1e-12);
    CHECK((n.r.matrix() - Mat3::Identity()).norm() < 1e-12);
    CHECK(n.omega.norm() < 1e-12);
}

TEST_CASE("rk4 tracks a constant-rate yaw rotation") {
    VehicleParams p = default_params();
    p.inertia = Vec3(0.03, 0.03, 0.03);  // spherical: no gyroscopic coupling
    const double w0 = 1.7;
    RigidState s;
    s.omega = Vec3(0, 0, w0);
    const double dt = 1e-3;
    double t = 0.0;
    for (int k = 0; k < 1000; ++k, t += dt) {
        s = step_rk4(s, 0.0, Vec3::Zero(), no_disturbance(), t, dt, p);
    }
    CHECK((s.r.matrix() - rot_z(w0 * 1.0).matrix()).norm() < 1e-8);
}

TEST_CASE("rk4 shows fourth-order global error") {
    VehicleParams p = default_params();
    p.inertia = Vec3(0.02, 0.025, 0.04);
    const double f = 1.1 * p.mass * p.gravity;
    const Vec3 m(0.004, -0.006, 0.002);

    auto simulate = [&](double dt) {
        RigidState s;
        s.omega = Vec3(3.0, -2.0, 1.5);
        s.v = Vec3(0.2, 0.1, -0.1);
        double t = 0.0;
        const int n = static_cast<int>(std::round(1.0 / dt));
        for (int k = 0; k < n; ++k, t += dt) {
            s = step_rk4(s, f, m, no_disturbance(), t, dt, p);
        }
        return s;
    };

    const RigidState ref = simulate(1e-5);
    auto err = [&](const RigidState& s) {
        return (s.x - ref.x).norm() + (s.v - ref.v).norm() +
               (s.r.matrix() - ref.r.matrix()).norm() + (s.omega - ref.omega).norm();
    };
    const double e_coarse = err(simulate(4e-3));
    const double e_fine = err(simulate(2e-3));
    const double ratio = e_coarse / e_fine;
    CHECK(ratio > 10.0);
    CHECK(ratio < 25.0);
}

TEST_CASE("rk4 rejects out-of-range dt") {
    const VehicleParams p = default_params();
    RigidState s;
    CHECK_THROWS_AS(step_rk4(s, 0.0, Vec3::Zero(), no_disturbance(), 0.0, 0.02, p), InvalidSpec);
    CHECK_THROWS_AS(step_rk4(s, 0.0, Vec3::Zero(), no_disturbance(), 0.0, 0.0, p), InvalidSpec);
}

TEST_CASE("rk4 flags non-finite states") {
    const VehicleParams p = default_params();
    RigidState s;
    const double bad = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(step_rk4(s, bad, Vec3::Zero(), no_disturbance(), 0.0, 1e-3, p),
                    NonFiniteState);
}

TEST_CASE("velocity grows as g t in free fall") {
    const VehicleParams p = default_params();
    RigidState s;
    const double dt = 1e-3;
    double t = 0.0;
    for (int k = 0; k < 2000; ++k, t += dt) {
        s = step_rk4(s, 0.0, Vec3::Zero(), no_disturbance(), t, dt, p);
    }
    CHECK(s.v.norm() == doctest::Approx(p.gravity * 2.0).epsilon(1e-9));
}

TEST_CASE("rotation stays in SO(3) over many steps") {
    VehicleParams p = default_params();
    RigidState s;
    s.omega = Vec3(2.0, -1.5, 3.0);
    const double dt = 1e-3;
    double t = 0.0;
    for (int k = 0; k < 1000000; ++k, t += dt) {
        s = step_rk4(s, p.hover_thrust(), Vec3(1e-4, -2e-4, 5e-5), no_disturbance(), t, dt, p);
        s.x.setZero();
        s.v.setZero();  // keep translation bounded; only attitude matters here
    }
    CHECK(is_rotation(s.r.matrix(), 1e-9));
}

TEST_CASE("hover allocation splits thrust equally and round-trips") {
    const VehicleParams p = default_params();
    const auto a = allocate(Vec3(0, 0, -14.715), Vec3::Zero(), Rotation::identity(), p);
    CHECK(a.f_d == doctest::Approx(14.715).epsilon(1e-12));
    for (int i = 0; i < 4; ++i) CHECK(a.thrust_d(i) == doctest::Approx(3.67875).epsilon(1e-12));
    CHECK(a.delta_f == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(a.delta_m.norm() < 1e-12);
    CHECK_FALSE(a.clamped);
}

TEST_CASE("thrust coefficient mismatch scales the realized wrench linearly") {
    VehicleParams p = default_params();
    p.c_t = 1.1 * p.c_t_ref;
    const auto a = allocate(Vec3(0, 0, -p.hover_thrust()), Vec3::Zero(), Rotation::identity(), p);
    CHECK(a.f == doctest::Approx(1.1 * a.f_d).epsilon(1e-12));
    CHECK(a.delta_f == doctest::Approx(0.1 * a.f_d).epsilon(1e-10));
}

TEST_CASE("pure yaw command has the alternating sign pattern") {
    VehicleParams p = default_params();
    p.rotor_thrust_max = 1e9;  // keep the clamp out of the way; signs checked pre-clamp
    const double mu = 0.004;
    // Direct matrix multiply: T_i = (1/4) (c'_T/c'_M) (+,-,+,-) mu.
    const double expected = 0.25 * (p.c_t_ref / p.c_m_ref) * mu;
    const Vec3 m_d(0, 0, mu);

    // Raw (unclamped) thrusts via a positive f_d offset large enough to stay positive.
    const double f0 = 4.0 * expected + 1.0;
    const auto a = allocate(Vec3(0, 0, -f0), m_d, Rotation::identity(), p);
    const double base = 0.25 * f0;
    CHECK(a.thrust_d(0) - base == doctest::Approx(+expected).epsilon(1e-10));
    CHECK(a.thrust_d(1) - base == doctest::Approx(-expected).epsilon(1e-10));
    CHECK(a.thrust_d(2) - base == doctest::Approx(+expected).epsilon(1e-10));
    CHECK(a.thrust_d(3) - base == doctest::Approx(-expected).epsilon(1e-10));
}

TEST_CASE("matched coefficients give an exact wrench round trip") {
    const VehicleParams p = default_params();
    std::uniform_real_distribution<double> fmag(6.0, 12.0);
    std::uniform_real_distribution<double> mxy(-0.08, 0.08);
    std::uniform_real_distribution<double> mz(-0.04, 0.04);
    std::normal_distribution<double> n(0.0, 1.0);

    for (int k = 0; k < 2000; ++k) {
        Vec3 axis(n(rng), n(rng), n(rng));
        axis.normalize();
        std::uniform_real_distribution<double> ang(0.0, 0.4);
        const Rotation r = exp_hat(axis * ang(rng));
        // Command thrust along -R e3 so f_d is positive and rotors stay unsaturated.
        const Vec3 f_d = -fmag(rng) * (r.matrix() * Vec3::UnitZ());
        const Vec3 m_d(mxy(rng), mxy(rng), mz(rng));
        const auto a = allocate(f_d, m_d, r, p);
        REQUIRE_FALSE(a.clamped);
        CHECK(std::abs(a.delta_f) < 1e-10);
        CHECK(a.delta_m.norm() < 1e-10);
    }
}

TEST_CASE("negative rotor thrusts are clamped to zero and flagged") {
    const VehicleParams p = default_params();
    const auto a = allocate(Vec3(0, 0, -0.1), Vec3(0.3, 0, 0), Rotation::identity(), p);
    CHECK(a.clamped);
    CHECK(a.thrust_d.minCoeff() >= 0.0);
}

TEST_CASE("disturbance terms evaluate as specified") {
    DisturbanceTerm c{DisturbanceTerm::Kind::Constant, 2.0};
    CHECK(c.eval(13.0) == 2.0);

    DisturbanceTerm s;
    s.kind = DisturbanceTerm::Kind::Sinusoid;
    s.value = 3.0;
    s.frequency = 2.0;
    s.phase = 0.5;
    CHECK(s.eval(1.2) == doctest::Approx(3.0 * std::sin(2.0 * 1.2 + 0.5)));

    DisturbanceTerm g;
    g.kind = DisturbanceTerm::Kind::Gust;
    g.value = 5.0;
    g.onset = 2.0;
    g.rise = 1.0;
    CHECK(g.eval(1.9) == 0.0);
    CHECK(g.eval(2.5) == doctest::Approx(2.5));  // smoothstep midpoint
    CHECK(g.eval(4.0) == 5.0);

    AxisDisturbance axis;
    axis.terms = {c, g};
    CHECK(axis.eval(10.0) == doctest::Approx(7.0));
    CHECK(axis.bound() == doctest::Approx(7.0));
}

TEST_CASE("vehicle params validation") {
    VehicleParams p = default_params();
    CHECK_NOTHROW(p.validate());
    p.mass = -1.0;
    CHECK_THROWS_AS(p.validate(), InvalidSpec);
}
