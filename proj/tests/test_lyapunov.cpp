#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "sanm/geom3.hpp"
#include "sanm/lyapunov.hpp"

using namespace sanm;
using namespace sanm::lyapunov;
using Eigen::Vector2d;

namespace {

std::mt19937 rng(90210);

double urand(double lo, double hi) {
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

geom3::Rotation random_rotation(double max_angle = M_PI) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 axis(n(rng), n(rng), n(rng));
    axis.normalize();
    return geom3::exp_hat(axis * urand(0.0, max_angle));
}

Mat2 random_spd() {
    Mat2 a;
    a << urand(-1, 1), urand(-1, 1), urand(-1, 1), urand(-1, 1);
    return a * a.transpose() + 0.1 * Mat2::Identity();
}

}  // namespace

TEST_CASE("lyapunov solve matches the hand-solved 3x3 system") {
    const Mat2 lambda = companion(1.0, 1.0);
    const Mat2 p = solve_lyapunov_2x2(lambda, Mat2::Identity());
    Mat2 expected;
    expected << 1.5, 0.5, 0.5, 1.0;
    CHECK((p - expected).norm() < 1e-14);
}

TEST_CASE("lyapunov solve is linear in Q") {
    const Mat2 lambda = companion(3.0, 2.0);
    const Mat2 q = random_spd();
    const Mat2 p1 = solve_lyapunov_2x2(lambda, q);
    const Mat2 p2 = solve_lyapunov_2x2(lambda, 2.0 * q);
    CHECK((p2 - 2.0 * p1).norm() < 1e-12);
}

TEST_CASE("lyapunov solve rejects non-Hurwitz companions") {
    CHECK_THROWS_AS(solve_lyapunov_2x2(companion(-1.0, 2.0), Mat2::Identity()), NotHurwitz);
    CHECK_THROWS_AS(solve_lyapunov_2x2(companion(2.0, 0.0), Mat2::Identity()), NotHurwitz);
}

TEST_CASE("lyapunov residual stays below 1e-12 across random gains") {
    for (int i = 0; i < 500; ++i) {
        const double kp = urand(0.1, 80.0), kd = urand(0.1, 40.0);
        const Mat2 lambda = companion(kp, kd);
        const Mat2 q = random_spd();
        const Mat2 p = solve_lyapunov_2x2(lambda, q);
        CHECK((lambda.transpose() * p + p * lambda + q).norm() < 1e-12);
        // P must be symmetric positive definite.
        CHECK(p(0, 1) == p(1, 0));
        CHECK(p(0, 0) > 0.0);
        CHECK(p.determinant() > 0.0);
    }
}

TEST_CASE("LyapunovData solves all axes with tiny residual") {
    Gains g;
    g.q = {random_spd(), random_spd(), random_spd()};
    const auto data = LyapunovData::make(g);
    CHECK(data.residual() < 1e-12);
    CHECK(data.b == Vector2d(0.0, 1.0));
}

TEST_CASE("c_R bound evaluates the four terms and the binding one") {
    Gains g;
    g.k_r = 9.0;
    g.k_omega = 4.0;
    g.c_r = 1.0;
    const auto chk = check_cr_bound(g, 1.0);
    CHECK(chk.terms[0] == doctest::Approx(1.44).epsilon(1e-12));
    CHECK(chk.terms[1] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(chk.terms[2] == doctest::Approx(std::sqrt(18.0)).epsilon(1e-12));
    CHECK(chk.terms[3] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(chk.bound == doctest::Approx(1.44).epsilon(1e-12));
    CHECK(chk.binding_index == 0);
    CHECK(chk.pass);

    g.c_r = chk.bound;  // exactly at the bound: strict inequality fails
    CHECK_FALSE(check_cr_bound(g, 1.0).pass);
}

TEST_CASE("c_R bound collapses for a very stiff damping gain") {
    Gains g;
    g.k_r = 9.0;
    g.k_omega = 1e6;
    g.c_r = 1.0;
    const auto chk = check_cr_bound(g, 1.0);
    CHECK(chk.bound == doctest::Approx(9.0 * 1e6 / (1e12 + 9.0)).epsilon(1e-9));
    CHECK_FALSE(chk.pass);
}

TEST_CASE("rotational decrease matrix is PD exactly when c_R is inside the bound") {
    for (int i = 0; i < 500; ++i) {
        Gains g;
        g.k_r = urand(0.5, 50.0);
        g.k_omega = urand(0.5, 20.0);
        const double psi_bar = urand(0.05, 1.95);
        const double bound = check_cr_bound(g, psi_bar).bound;
        double c = urand(0.05, 2.0) * bound;
        if (std::abs(c - bound) < 1e-9 * bound) continue;
        g.c_r = c;

        Mat2 m_rot;
        m_rot << 0.5 * g.k_r * g.c_r, -0.5 * g.k_omega * g.c_r,
                 -0.5 * g.k_omega * g.c_r, 0.5 * (g.k_omega - g.c_r);
        const bool pd = m_rot(0, 0) > 0.0 && m_rot.determinant() > 0.0;
        CHECK(pd == (g.c_r < bound));
    }
}

TEST_CASE("coupling loss vanishes with zero bound inputs and scales quadratically") {
    Gains g;
    const auto data = LyapunovData::make(g);
    CHECK(coupling_loss_xi(data.p, data.q, g.m_max, g.m_max, 0.0, 0.0) == 0.0);

    const double xi1 = coupling_loss_xi(data.p, data.q, 1.5, 3.0, 0.5, 0.5);
    const double xi2 = coupling_loss_xi(data.p, data.q, 1.5, 3.0, 1.0, 1.0);
    CHECK(xi2 == doctest::Approx(4.0 * xi1).epsilon(1e-12));
}

TEST_CASE("coupling loss single-term hand evaluation") {
    Gains g;
    g.m_max = 1.0;
    std::array<Mat2, 3> p{Mat2::Identity(), Mat2::Identity(), Mat2::Identity()};
    p[0] << 1.5, 0.0, 0.0, 0.5;            // lmax = 1.5
    p[1] = p[2] = 1e-30 * Mat2::Identity();  // silence the other two terms
    std::array<Mat2, 3> q{Mat2::Identity(), Mat2::Identity(), Mat2::Identity()};
    const double xi = coupling_loss_xi(p, q, 1.0, 1.0, 1.0, 0.0);
    CHECK(xi == doctest::Approx(6.75).epsilon(1e-12));
}

TEST_CASE("full-state matrix is PD for zero coupling and feasible c_R") {
    Gains g;  // defaults satisfy the c_R bound
    const auto data = LyapunovData::make(g);
    const auto s = assemble_m(g, data.p, data.q, 1.0, 1.5, 0.0, 0.0);
    CHECK(s.xi == 0.0);
    CHECK(s.pd_by_schur);
    CHECK(s.pd_by_eigen);
    CHECK((s.schur - s.m_rot).norm() < 1e-14);
}

TEST_CASE("full-state matrix goes indefinite when the coupling loss is too large") {
    Gains g;
    const auto data = LyapunovData::make(g);
    // Blow up eps_u until Xi crosses its admissible bound.
    double eps_u = 0.1;
    for (; eps_u < 1e5; eps_u *= 2.0) {
        const auto s = assemble_m(g, data.p, data.q, 1.0, 1.5, eps_u, 0.0);
        if (s.xi > s.xi_admissible) {
            CHECK_FALSE(s.pd_by_schur);
            CHECK_FALSE(s.pd_by_eigen);
            CHECK(s.schur(0, 0) == doctest::Approx(s.m_rot(0, 0) - s.xi).epsilon(1e-9));
            return;
        }
    }
    FAIL("coupling loss never crossed the bound");
}

TEST_CASE("schur verdict agrees with the direct eigenvalue verdict") {
    int agreements = 0;
    for (int i = 0; i < 300; ++i) {
        Gains g;
        g.k_r = urand(1.0, 60.0);
        g.k_omega = urand(1.0, 30.0);
        g.c_r = urand(0.05, 1.2) * check_cr_bound(g, 1.0).bound;
        g.q = {random_spd(), random_spd(), random_spd()};
        const auto data = LyapunovData::make(g);
        const double eps_u = urand(0.0, 2.0), eps_c = urand(0.0, 2.0);
        const auto s = assemble_m(g, data.p, data.q, 1.0, urand(0.8, 2.5), eps_u, eps_c);
        CHECK(s.pd_by_schur == s.pd_by_eigen);
        agreements += (s.pd_by_schur == s.pd_by_eigen);
    }
    CHECK(agreements == 300);
}

TEST_CASE("assembled matrices diagonalize consistently") {
    // Reported eigenvalues must reproduce the matrix: residual check against
    // an independent reconstruction.
    Gains g;
    const auto data = LyapunovData::make(g);
    const auto s = assemble_m(g, data.p, data.q, 1.0, 1.5, 0.3, 0.2);
    Eigen::SelfAdjointEigenSolver<Mat5> es(s.m_full);
    CHECK((es.eigenvalues() - s.m_full_eigenvalues).norm() < 1e-9);
    const Mat5 rebuilt =
        es.eigenvectors() * es.eigenvalues().asDiagonal() * es.eigenvectors().transpose();
    CHECK((rebuilt - s.m_full).norm() < 1e-9);
    // 2x2 closed-form eigenvalues against the generic solver.
    Eigen::SelfAdjointEigenSolver<Mat2> e2(s.m_r1);
    CHECK((sym2x2_eigenvalues(s.m_r1) - e2.eigenvalues()).norm() < 1e-9);
}

TEST_CASE("candidates vanish at zero error and perfect estimates") {
    Gains g;
    const auto data = LyapunovData::make(g);
    CandidateInputs in;
    in.m_hat = Vec3::Constant(1.5);
    in.m_true = 1.5;
    in.j_hat = Vec3(0.02, 0.02, 0.04);
    in.j_true = in.j_hat;
    const auto v = candidates(in, g, data.p);
    CHECK(v.v_rs == 0.0);
    CHECK(v.v_s == 0.0);
    CHECK(v.v_e == 0.0);
    CHECK(v.v == 0.0);
}

TEST_CASE("candidate decomposition: v = v_x + v_r") {
    Gains g;
    const auto data = LyapunovData::make(g);
    for (int i = 0; i < 100; ++i) {
        CandidateInputs in;
        for (auto& e : in.e_slices) e = Vector2d(urand(-1, 1), urand(-2, 2));
        in.e_r = Vec3(urand(-0.5, 0.5), urand(-0.5, 0.5), urand(-0.5, 0.5));
        in.e_omega = Vec3(urand(-2, 2), urand(-2, 2), urand(-2, 2));
        in.psi = urand(0.0, 1.5);
        in.m_hat = Vec3::Constant(urand(0.6, 2.5));
        in.m_true = 1.5;
        in.j_hat = Vec3(urand(0.01, 0.06), urand(0.01, 0.06), urand(0.01, 0.1));
        in.j_true = Vec3(0.02, 0.02, 0.04);
        in.w_x_err_sq = {urand(0, 4), urand(0, 4), urand(0, 4)};
        in.w_r_err_sq = {urand(0, 4), urand(0, 4), urand(0, 4)};
        const auto v = candidates(in, g, data.p);
        CHECK(v.v == doctest::Approx(v.v_x + v.v_r).epsilon(1e-12));
        CHECK(v.v == doctest::Approx(v.v_s + v.v_e).epsilon(1e-12));
        CHECK(v.v_e >= 0.0);
    }
}

TEST_CASE("quadratic sandwich bounds hold for consistent attitude states") {
    Gains g;
    const double psi_bar = 1.0;
    const auto data = LyapunovData::make(g);
    const auto s = assemble_m(g, data.p, data.q, psi_bar, 1.5, 0.0, 0.0);

    int checked = 0;
    while (checked < 500) {
        const auto r = random_rotation();
        const auto rc = random_rotation();
        const double psi = geom3::psi_r(r, rc);
        if (psi > psi_bar) continue;
        CandidateInputs in;
        for (auto& e : in.e_slices) e = Vector2d(urand(-1, 1), urand(-2, 2));
        in.e_omega = Vec3(urand(-2, 2), urand(-2, 2), urand(-2, 2));
        const auto att = geom3::attitude_errors(r, rc, in.e_omega, Vec3::Zero());
        in.e_r = att.e_r;
        in.psi = psi;
        in.m_hat = Vec3::Constant(1.5);
        in.m_true = 1.5;
        in.j_hat = Vec3(0.02, 0.02, 0.04);
        in.j_true = in.j_hat;
        const auto v = candidates(in, g, data.p);

        Vec5 z;
        z << in.e_slices[0].norm(), in.e_slices[1].norm(), in.e_slices[2].norm(),
            in.e_r.norm(), in.e_omega.norm();
        const double lower = z.dot(s.m_1 * z);
        const double upper = z.dot(s.m_2 * z);
        CHECK(v.v_s >= lower - 1e-9);
        CHECK(v.v_s <= upper + 1e-9);
        ++checked;
    }
}

TEST_CASE("domain membership at the converged point is boundary-inside") {
    Gains g;
    std::array<Vector2d, 3> zero{Vector2d::Zero(), Vector2d::Zero(), Vector2d::Zero()};
    for (auto flavor : {DomainFlavor::AttractionRotational, DomainFlavor::AttractionFull}) {
        const auto d = domain_membership(0.0, Vec3::Zero(), zero, g, flavor, 2.0);
        CHECK(d.inside);
        CHECK(d.on_psi_boundary);
    }
}

TEST_CASE("domain membership separates the rotational and full domains") {
    Gains g;
    std::array<Vector2d, 3> zero{Vector2d::Zero(), Vector2d::Zero(), Vector2d::Zero()};
    const auto r0 =
        domain_membership(1.5, Vec3::Zero(), zero, g, DomainFlavor::AttractionRotational, 2.0);
    CHECK(r0.inside);
    const auto full =
        domain_membership(1.5, Vec3::Zero(), zero, g, DomainFlavor::AttractionFull, 2.0);
    CHECK_FALSE(full.inside);
    CHECK_FALSE(full.psi_in_range);
}

TEST_CASE("domain membership omega clause is strict") {
    Gains g;
    g.k_r = 16.0;
    std::array<Vector2d, 3> zero{Vector2d::Zero(), Vector2d::Zero(), Vector2d::Zero()};
    // psi = 0 makes the budget 2 * 16 * 2 = 64 exactly; |e_Omega|^2 = 64 exactly.
    const Vec3 e_omega(8.0, 0.0, 0.0);
    const auto d =
        domain_membership(0.0, e_omega, zero, g, DomainFlavor::AttractionRotational, 2.0);
    CHECK_FALSE(d.inside);
    CHECK_FALSE(d.omega_ok);
    CHECK(d.e_omega_sq == d.omega_budget);
}

TEST_CASE("domain membership translational cap applies to the full domain only") {
    Gains g;
    std::array<Vector2d, 3> big{Vector2d(3.0, 0.0), Vector2d::Zero(), Vector2d::Zero()};
    const auto r0 =
        domain_membership(0.2, Vec3::Zero(), big, g, DomainFlavor::AttractionRotational, 2.0);
    CHECK(r0.inside);
    const auto full =
        domain_membership(0.2, Vec3::Zero(), big, g, DomainFlavor::AttractionFull, 2.0);
    CHECK_FALSE(full.inside);
    CHECK_FALSE(full.translational_ok);
}

TEST_CASE("nes envelope recovers its own model class") {
    std::vector<double> t, z;
    for (int k = 0; k <= 1000; ++k) {
        const double tk = 0.02 * k;
        t.push_back(tk);
        z.push_back(2.0 * std::exp(-0.5 * tk) + 0.01);
    }
    const auto env = fit_nes_envelope(t, z);
    CHECK(env.amplitude == doctest::Approx(2.0).epsilon(0.05));
    CHECK(env.beta == doctest::Approx(0.5).epsilon(0.05));
    CHECK(env.eps == doctest::Approx(0.01).epsilon(0.05));
    CHECK(env.coverage >= 0.99);
}

TEST_CASE("nes envelope rejects a constant series") {
    std::vector<double> t, z;
    for (int k = 0; k < 500; ++k) {
        t.push_back(0.01 * k);
        z.push_back(1.0);
    }
    CHECK_THROWS_AS(fit_nes_envelope(t, z), NotDecaying);
}

TEST_CASE("nes envelope input validation") {
    std::vector<double> t{0.0, 1.0}, z{1.0, 0.5};
    CHECK_THROWS_AS(fit_nes_envelope(t, z), InvalidSpec);
    std::vector<double> t2, z2;
    for (int k = 0; k < 200; ++k) {
        t2.push_back(0.0);  // not increasing
        z2.push_back(1.0);
    }
    CHECK_THROWS_AS(fit_nes_envelope(t2, z2), InvalidSpec);
}

TEST_CASE("nes envelope covers a noisy decay without losing the rate") {
    std::mt19937 local(7);
    std::uniform_real_distribution<double> jitter(-0.05, 0.05);
    std::vector<double> t, z;
    for (int k = 0; k <= 3000; ++k) {
        const double tk = 0.01 * k;
        t.push_back(tk);
        z.push_back(std::max(1.5 * std::exp(-0.8 * tk) * (1.0 + jitter(local)) +
                                 0.02 * std::abs(std::sin(3.0 * tk)),
                             0.0));
    }
    const auto env = fit_nes_envelope(t, z);
    CHECK(env.beta > 0.4);
    CHECK(env.beta < 1.2);
    CHECK(env.coverage >= 0.99);
    CHECK(env.eps < 0.05);
}
