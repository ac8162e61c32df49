#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sanm/geom3.hpp"

using namespace sanm;
using namespace sanm::geom3;

namespace {

std::mt19937 rng(12345);

Vec3 random_vec(double scale = 1.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    return Vec3(d(rng), d(rng), d(rng));
}

Rotation random_rotation() {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 axis(n(rng), n(rng), n(rng));
    axis.normalize();
    std::uniform_real_distribution<double> a(0.0, M_PI);
    return exp_hat(axis * a(rng));
}

}  // namespace

TEST_CASE("hat matches the componentwise definition") {
    Mat3 expected;
    expected << 0, -3, 2,
                3, 0, -1,
                -2, 1, 0;
    CHECK((hat(Vec3(1, 2, 3)) - expected).norm() == 0.0);
    CHECK(hat(Vec3::Zero()).norm() == 0.0);
}

TEST_CASE("hat(a) b equals the cross product for random pairs") {
    for (int i = 0; i < 100; ++i) {
        const Vec3 a = random_vec(10.0);
        const Vec3 b = random_vec(10.0);
        CHECK((hat(a) * b - a.cross(b)).norm() < 1e-12);
    }
}

TEST_CASE("vee inverts hat exactly") {
    const Vec3 v(1, 2, 3);
    CHECK(vee(hat(v)) == v);
    CHECK(vee(Mat3::Zero()) == Vec3::Zero());
}

TEST_CASE("vee rejects symmetric input") {
    Mat3 sym;
    sym << 1, 2, 3,
           2, 4, 5,
           3, 5, 6;
    CHECK_THROWS_AS(vee(sym), NonSkewInput);
}

TEST_CASE("hat after vee is identity on skew matrices") {
    for (int i = 0; i < 50; ++i) {
        const Mat3 skew = hat(random_vec(5.0));
        CHECK((hat(vee(skew)) - skew).norm() == 0.0);
    }
}

TEST_CASE("psi_r base cases") {
    const Rotation eye = Rotation::identity();
    CHECK(psi_r(eye, eye) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(psi_r(rot_z(M_PI), eye) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("psi_r equals 1 - cos(theta) for axis-angle rotations") {
    // Oracle: tr(R) = 1 + 2 cos(theta) for a rotation by theta about any axis.
    std::uniform_real_distribution<double> a(0.0, M_PI);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vec3 axis(n(rng), n(rng), n(rng));
        axis.normalize();
        const double theta = a(rng);
        CHECK(psi_r(exp_hat(axis * theta), Rotation::identity()) ==
              doctest::Approx(1.0 - std::cos(theta)).epsilon(1e-12));
    }
}

TEST_CASE("attitude errors vanish at coincidence") {
    const Rotation eye = Rotation::identity();
    const auto e = attitude_errors(eye, eye, Vec3::Zero(), Vec3::Zero());
    CHECK(e.e_r.norm() == 0.0);
    CHECK(e.e_omega.norm() == 0.0);
}

TEST_CASE("attitude error about z is [0,0,sin(theta)]") {
    // Symbolic expansion of Rz(theta) - Rz(-theta).
    for (double theta : {0.1, 0.7, 1.5, 2.9}) {
        const auto e = attitude_errors(rot_z(theta), Rotation::identity(),
                                       Vec3::Zero(), Vec3::Zero());
        CHECK((e.e_r - Vec3(0, 0, std::sin(theta))).norm() < 1e-14);
    }
}

TEST_CASE("|e_R| identity against psi_r on random rotation pairs") {
    for (int i = 0; i < 1000; ++i) {
        const Rotation r = random_rotation();
        const Rotation rc = random_rotation();
        const double psi = psi_r(r, rc);
        const auto e = attitude_errors(r, rc, Vec3::Zero(), Vec3::Zero());
        CHECK(e.e_r.norm() == doctest::Approx(std::sqrt(psi * (2.0 - psi))).epsilon(1e-9));
    }
}

TEST_CASE("psi_r quadratic bounds in |e_R| below the psi bar level") {
    const double psi_bar = 1.9;
    int checked = 0;
    while (checked < 500) {
        const Rotation r = random_rotation();
        const Rotation rc = random_rotation();
        const double psi = psi_r(r, rc);
        if (psi > psi_bar) continue;
        const double er2 = attitude_errors(r, rc, Vec3::Zero(), Vec3::Zero()).e_r.squaredNorm();
        CHECK(psi >= 0.5 * er2 - 1e-12);
        CHECK(psi <= er2 / (2.0 - psi_bar) + 1e-12);
        ++checked;
    }
}

TEST_CASE("transport matrix at coincidence is identity") {
    const Mat3 y = transport_matrix(Rotation::identity(), Rotation::identity());
    CHECK((y - Mat3::Identity()).norm() < 1e-15);
}

TEST_CASE("transport matrix spectral norm stays below 1") {
    for (int i = 0; i < 1000; ++i) {
        const Mat3 y = transport_matrix(random_rotation(), random_rotation());
        Eigen::JacobiSVD<Mat3> svd(y);
        CHECK(svd.singularValues()(0) <= 1.0 + 1e-12);
    }
}

TEST_CASE("transport matrix matches finite-differenced e_R along a rotation") {
    // R(t) = R0 exp(hat(Omega) t) with constant body rate; Rc fixed, Omega_c = 0.
    const Rotation r0 = random_rotation();
    const Rotation rc = random_rotation();
    const Vec3 omega(0.4, -0.9, 1.3);
    const double dt = 1e-4;

    auto r_at = [&](double t) {
        return Rotation::unchecked(r0.matrix() * exp_hat(omega * t).matrix());
    };
    for (double t : {0.0, 0.3, 0.8}) {
        const Vec3 e_plus = attitude_errors(r_at(t + dt), rc, omega, Vec3::Zero()).e_r;
        const Vec3 e_minus = attitude_errors(r_at(t - dt), rc, omega, Vec3::Zero()).e_r;
        const Vec3 numeric = (e_plus - e_minus) / (2.0 * dt);
        const auto e = attitude_errors(r_at(t), rc, omega, Vec3::Zero());
        const Vec3 analytic = transport_matrix(r_at(t), rc) * e.e_omega;
        CHECK((numeric - analytic).norm() < 1e-5);
    }
}

TEST_CASE("orthonormalize is idempotent on valid rotations") {
    for (int i = 0; i < 100; ++i) {
        const Rotation r = random_rotation();
        CHECK((orthonormalize(r.matrix()).matrix() - r.matrix()).norm() < 1e-12);
    }
}

TEST_CASE("orthonormalize recovers the rotation from a scaled copy") {
    // 1.001 R = R (1.001 I) has polar factor exactly R.
    for (int i = 0; i < 100; ++i) {
        const Rotation r = random_rotation();
        CHECK((orthonormalize(1.001 * r.matrix()).matrix() - r.matrix()).norm() < 1e-9);
    }
}

TEST_CASE("orthonormalize rejects a rank-1 matrix") {
    const Vec3 u(1, 2, 3);
    const Mat3 rank1 = u * u.transpose();
    CHECK_THROWS_AS(orthonormalize(rank1), DegenerateMatrix);
}

TEST_CASE("operations are deterministic") {
    const Rotation r = random_rotation();
    const Rotation rc = random_rotation();
    const Vec3 w = random_vec(3.0);
    const auto a = attitude_errors(r, rc, w, w);
    const auto b = attitude_errors(r, rc, w, w);
    CHECK(a.e_r == b.e_r);
    CHECK(a.e_omega == b.e_omega);
    CHECK(psi_r(r, rc) == psi_r(r, rc));
    CHECK(transport_matrix(r, rc) == transport_matrix(r, rc));
}

TEST_CASE("rotation validation catches bad matrices") {
    Mat3 off = Mat3::Identity();
    off(0, 0) = 1.01;
    CHECK_THROWS_AS(Rotation::from_matrix(off), DegenerateMatrix);
    CHECK_NOTHROW(Rotation::from_matrix(rot_z(0.5).matrix()));
}
