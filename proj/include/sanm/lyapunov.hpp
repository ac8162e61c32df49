#pragma once

// Numerical verification engine for the stability analysis: Lyapunov
// candidate functions, gain-condition checkers, attraction-domain membership
// tests, and near-exponential envelope fitting over logged runs.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sanm/errors.hpp"
#include "sanm/gains.hpp"

namespace sanm::lyapunov {

using Eigen::Vector2d;
using Mat5 = Eigen::Matrix<double, 5, 5>;
using Vec5 = Eigen::Matrix<double, 5, 1>;

inline constexpr double kPsiBoundaryTol = 1e-12;

// Companion matrix of one translational axis: [[0, 1], [-k_p, -k_d]].
inline Mat2 companion(double k_p, double k_d) {
    Mat2 m;
    m << 0.0, 1.0, -k_p, -k_d;
    return m;
}

inline Vector2d sym2x2_eigenvalues(const Mat2& m) {
    const double mean = 0.5 * (m(0, 0) + m(1, 1));
    const double disc = std::sqrt(0.25 * (m(0, 0) - m(1, 1)) * (m(0, 0) - m(1, 1)) +
                                  m(0, 1) * m(1, 0));
    return Vector2d(mean - disc, mean + disc);
}

// Closed-form solve of Lambda^T P + P Lambda = -Q for symmetric P,
// reduced to a 3x3 linear system on (p11, p12, p22).
inline Mat2 solve_lyapunov_2x2(const Mat2& lambda, const Mat2& q) {
    const double tr = lambda.trace();
    const double det = lambda.determinant();
    if (!(tr < 0.0) || !(det > 0.0)) {
        throw NotHurwitz("solve_lyapunov_2x2: companion matrix is not Hurwitz");
    }
    const double a11 = lambda(0, 0), a12 = lambda(0, 1);
    const double a21 = lambda(1, 0), a22 = lambda(1, 1);
    Eigen::Matrix3d sys;
    sys << 2.0 * a11, 2.0 * a21, 0.0,
           a12, a11 + a22, a21,
           0.0, 2.0 * a12, 2.0 * a22;
    const Vec3 rhs(-q(0, 0), -q(0, 1), -q(1, 1));
    const Vec3 p = sys.partialPivLu().solve(rhs);
    Mat2 out;
    out << p(0), p(1), p(1), p(2);
    return out;
}

// Per-axis Lyapunov data derived from the gains: companion matrices, the
// chosen Q set, and the solved P set. B is the input vector (0, 1)^T.
struct LyapunovData {
    std::array<Mat2, 3> lambda;
    std::array<Mat2, 3> q;
    std::array<Mat2, 3> p;
    Vector2d b{0.0, 1.0};

    static LyapunovData make(const Gains& g) {
        LyapunovData d;
        for (int j = 0; j < 3; ++j) {
            d.lambda[j] = companion(g.k_p(j), g.k_d(j));
            d.q[j] = g.q[j];
            d.p[j] = solve_lyapunov_2x2(d.lambda[j], d.q[j]);
        }
        return d;
    }

    double residual() const {
        double r = 0.0;
        for (int j = 0; j < 3; ++j) {
            r = std::max(r, (lambda[j].transpose() * p[j] + p[j] * lambda[j] + q[j]).norm());
        }
        return r;
    }
};

// --- gain conditions ----------------------------------------------------------

// c_R must stay strictly under min{ k_R k_O / (k_O^2 + k_R), sqrt(k_R),
// sqrt(2 k_R / (2 - psi_bar)), k_O }.
struct CrBoundCheck {
    bool pass = false;
    double bound = 0.0;
    double margin = 0.0;                 // bound - c_R
    std::array<double, 4> terms{};       // the four candidate bounds, in order
    int binding_index = 0;
    const char* binding_term = "";
};

inline CrBoundCheck check_cr_bound(const Gains& g, double psi_bar) {
    if (!(psi_bar > 0.0) || !(psi_bar < 2.0)) {
        throw InvalidSpec("check_cr_bound: psi_bar must lie in (0, 2)");
    }
    static constexpr std::array<const char*, 4> kNames{
        "k_R k_O / (k_O^2 + k_R)", "sqrt(k_R)", "sqrt(2 k_R / (2 - psi_bar))", "k_O"};
    CrBoundCheck out;
    out.terms = {g.k_r * g.k_omega / (g.k_omega * g.k_omega + g.k_r),
                 std::sqrt(g.k_r),
                 std::sqrt(2.0 * g.k_r / (2.0 - psi_bar)),
                 g.k_omega};
    out.binding_index = static_cast<int>(
        std::min_element(out.terms.begin(), out.terms.end()) - out.terms.begin());
    out.bound = out.terms[out.binding_index];
    out.binding_term = kNames[out.binding_index];
    out.margin = out.bound - g.c_r;
    out.pass = g.c_r < out.bound;  // strict
    return out;
}

// Stability loss caused by position-attitude coupling:
// Xi = 3 sum_j m_max^2 lmax(P_j)^2 (eps_u + eps_c)^2 / (lmin(Q_j) m^2).
inline double coupling_loss_xi(const std::array<Mat2, 3>& p, const std::array<Mat2, 3>& q,
                               double m_true, double m_max, double eps_u, double eps_c) {
    double xi = 0.0;
    const double e2 = (eps_u + eps_c) * (eps_u + eps_c);
    for (int j = 0; j < 3; ++j) {
        const double lmax_p = sym2x2_eigenvalues(p[j])(1);
        const double lmin_q = sym2x2_eigenvalues(q[j])(0);
        xi += m_max * m_max * lmax_p * lmax_p * e2 / (lmin_q * m_true * m_true);
    }
    return 3.0 * xi;
}

// Admissible coupling loss keeping the full-state matrix positive definite:
// Xi < min{ k_R c_R / 2, (k_R c_R (k_O - c_R) - k_O^2 c_R^2) / (2 (k_O - c_R)) }.
inline double xi_bound(const Gains& g) {
    if (!(g.k_omega > g.c_r)) return -std::numeric_limits<double>::infinity();
    const double t1 = 0.5 * g.k_r * g.c_r;
    const double t2 = (g.k_r * g.c_r * (g.k_omega - g.c_r) - g.k_omega * g.k_omega * g.c_r * g.c_r) /
                      (2.0 * (g.k_omega - g.c_r));
    return std::min(t1, t2);
}

// Sandwich matrices for the candidate functions plus the full-state decrease
// matrix and its Schur test.
//
// Note: the translational blocks of M1/M2 carry the 1/2 from the quadratic
// form (1/2) E^T P E, mirroring the 1/2 already inside the rotational blocks.
struct StabilityMatrices {
    Mat2 m_r1, m_r2;       // attitude sandwich blocks
    Mat5 m_1, m_2;         // full-state sandwich matrices
    Mat2 m_rot;            // rotational decrease block
    Mat5 m_full;           // coupled decrease matrix
    Mat2 schur;            // m_full / m_x
    double xi = 0.0;
    double xi_admissible = 0.0;
    bool m_x_pd = false;
    bool pd_by_schur = false;
    bool pd_by_eigen = false;
    Vec5 m_full_eigenvalues = Vec5::Zero();
    double lmin_m1 = 0.0, lmax_m2 = 0.0, lmin_m_full = 0.0;
};

inline StabilityMatrices assemble_m(const Gains& g, const std::array<Mat2, 3>& p,
                                    const std::array<Mat2, 3>& q, double psi_bar,
                                    double m_true, double eps_u, double eps_c) {
    StabilityMatrices s;
    s.m_r1 << 0.5 * g.k_r, -0.5 * g.c_r, -0.5 * g.c_r, 0.5;
    s.m_r2 << g.k_r / (2.0 - psi_bar), 0.5 * g.c_r, 0.5 * g.c_r, 0.5;

    s.m_1.setZero();
    s.m_2.setZero();
    for (int j = 0; j < 3; ++j) {
        s.m_1(j, j) = 0.5 * sym2x2_eigenvalues(p[j])(0);
        s.m_2(j, j) = 0.5 * sym2x2_eigenvalues(p[j])(1);
    }
    s.m_1.block<2, 2>(3, 3) = s.m_r1;
    s.m_2.block<2, 2>(3, 3) = s.m_r2;

    s.m_rot << 0.5 * g.k_r * g.c_r, -0.5 * g.k_omega * g.c_r,
               -0.5 * g.k_omega * g.c_r, 0.5 * (g.k_omega - g.c_r);

    s.m_full.setZero();
    Eigen::Matrix<double, 3, 2> m_xr = Eigen::Matrix<double, 3, 2>::Zero();
    for (int j = 0; j < 3; ++j) {
        s.m_full(j, j) = 0.25 * sym2x2_eigenvalues(q[j])(0);
        m_xr(j, 0) = -std::sqrt(3.0) * g.m_max * sym2x2_eigenvalues(p[j])(1) *
                     (eps_u + eps_c) / m_true;
    }
    s.m_full.block<3, 2>(0, 3) = 0.5 * m_xr;
    s.m_full.block<2, 3>(3, 0) = 0.5 * m_xr.transpose();
    s.m_full.block<2, 2>(3, 3) = s.m_rot;

    s.xi = coupling_loss_xi(p, q, m_true, g.m_max, eps_u, eps_c);
    s.xi_admissible = xi_bound(g);

    // Schur complement of the translational block.
    Eigen::Matrix3d m_x = s.m_full.block<3, 3>(0, 0);
    s.m_x_pd = m_x.diagonal().minCoeff() > 0.0;
    s.schur = s.m_rot - 0.25 * m_xr.transpose() * m_x.inverse() * m_xr;
    s.pd_by_schur = s.m_x_pd && s.schur(0, 0) > 0.0 && s.schur.determinant() > 0.0;

    Eigen::SelfAdjointEigenSolver<Mat5> es(s.m_full);
    s.m_full_eigenvalues = es.eigenvalues();
    s.pd_by_eigen = s.m_full_eigenvalues.minCoeff() > 0.0;

    Eigen::SelfAdjointEigenSolver<Mat5> es1(s.m_1), es2(s.m_2);
    s.lmin_m1 = es1.eigenvalues().minCoeff();
    s.lmax_m2 = es2.eigenvalues().maxCoeff();
    s.lmin_m_full = s.m_full_eigenvalues.minCoeff();
    return s;
}

// --- candidate functions --------------------------------------------------------

// Inputs for the candidate evaluation. Truth values are simulator privilege;
// weight errors are squared norms |W* - W_bar|^2 per slice (zero when the
// networks are disabled).
struct CandidateInputs {
    std::array<Vector2d, 3> e_slices{Vector2d::Zero(), Vector2d::Zero(), Vector2d::Zero()};
    Vec3 e_r = Vec3::Zero();
    Vec3 e_omega = Vec3::Zero();
    double psi = 0.0;
    Vec3 m_hat = Vec3::Zero();
    Vec3 j_hat = Vec3::Zero();
    double m_true = 1.0;
    Vec3 j_true = Vec3::Ones();
    std::array<double, 3> w_x_err_sq{0.0, 0.0, 0.0};
    std::array<double, 3> w_r_err_sq{0.0, 0.0, 0.0};
};

struct CandidateValues {
    double v_rs = 0.0;   // attitude state candidate
    double v_s = 0.0;    // full-state candidate
    double v_e = 0.0;    // estimation-error candidate
    double v = 0.0;      // complete candidate, = v_x + v_r
    double v_x = 0.0;    // translational share
    double v_r = 0.0;    // rotational share
    double v_re = 0.0;   // rotational estimation share of v_e
};

inline CandidateValues candidates(const CandidateInputs& in, const Gains& g,
                                  const std::array<Mat2, 3>& p) {
    CandidateValues out;
    out.v_rs = g.k_r * in.psi + 0.5 * in.e_omega.squaredNorm() + g.c_r * in.e_r.dot(in.e_omega);

    double trans_quad = 0.0;
    for (int j = 0; j < 3; ++j) {
        trans_quad += 0.5 * in.e_slices[j].dot(p[j] * in.e_slices[j]);
    }
    out.v_s = out.v_rs + trans_quad;

    double v_xe = 0.0, v_re = 0.0;
    for (int j = 0; j < 3; ++j) {
        const double m_tilde = 1.0 / in.m_true - 1.0 / in.m_hat(j);
        const double j_tilde = 1.0 / in.j_true(j) - 1.0 / in.j_hat(j);
        v_xe += 0.5 * g.eta_m * m_tilde * m_tilde;
        v_re += 0.5 * g.eta_j * j_tilde * j_tilde;
        const double gx = g.gamma_x(j) * g.learning_scale;
        const double gr = g.gamma_r(j) * g.learning_scale;
        if (gx > 0.0) v_xe += in.w_x_err_sq[j] / (2.0 * gx);
        if (gr > 0.0) v_re += in.w_r_err_sq[j] / (2.0 * gr);
    }
    out.v_e = v_xe + v_re;
    out.v_re = v_re;
    out.v_x = trans_quad + v_xe;
    out.v_r = out.v_rs + v_re;
    out.v = out.v_x + out.v_r;
    return out;
}

// --- attraction domains -----------------------------------------------------------

enum class DomainFlavor {
    AttractionRotational,  // psi in (0,2), |e_O|^2 < 2 k_R (2 - psi)
    AttractionFull,        // |E_xj| < cap, psi in (0,1), |e_O|^2 < 2 k_R (1 - psi)
};

struct DomainCheck {
    bool inside = false;
    bool on_psi_boundary = false;  // psi == 0 (already converged); counted as inside
    bool psi_in_range = false;
    bool omega_ok = false;
    bool translational_ok = true;
    double psi = 0.0;
    double e_omega_sq = 0.0;
    double omega_budget = 0.0;     // the strict upper bound on |e_Omega|^2
};

inline DomainCheck domain_membership(double psi, const Vec3& e_omega,
                                     const std::array<Vector2d, 3>& e_slices, const Gains& g,
                                     DomainFlavor flavor, double e_x_cap) {
    DomainCheck out;
    out.psi = psi;
    out.e_omega_sq = e_omega.squaredNorm();
    const double psi_max = (flavor == DomainFlavor::AttractionRotational) ? 2.0 : 1.0;
    out.on_psi_boundary = psi <= kPsiBoundaryTol;
    out.psi_in_range = (psi > 0.0 || out.on_psi_boundary) && psi < psi_max;
    out.omega_budget = 2.0 * g.k_r * (psi_max - psi);
    out.omega_ok = out.e_omega_sq < out.omega_budget;
    if (flavor == DomainFlavor::AttractionFull) {
        out.translational_ok = true;
        for (const auto& e : e_slices) {
            if (!(e.norm() < e_x_cap)) out.translational_ok = false;
        }
    }
    out.inside = out.psi_in_range && out.omega_ok && out.translational_ok;
    return out;
}

// --- near-exponential envelope -------------------------------------------------

// Envelope |z(t)| <= alpha |z(0)| e^{-beta t} + eps covering at least 99% of
// samples. amplitude = alpha |z(0)| is reported alongside the normalized
// alpha; for runs starting inside the ball (|z(0)| ~ 0) alpha is normalized
// by eps instead. The fit walks a log-spaced grid of eps candidates upward
// from the final-window RMS and returns the first (tightest-eps) sane
// envelope.
struct NesEnvelope {
    double alpha = 0.0;
    double amplitude = 0.0;
    double beta = 0.0;
    double eps = 0.0;
    double coverage = 0.0;
};

inline NesEnvelope fit_nes_envelope(std::span<const double> t, std::span<const double> z) {
    const size_t n = t.size();
    if (n != z.size() || n < 100) {
        throw InvalidSpec("fit_nes_envelope: need at least 100 (t, |z|) samples");
    }
    for (size_t i = 1; i < n; ++i) {
        if (!(t[i] > t[i - 1])) throw InvalidSpec("fit_nes_envelope: t must be increasing");
    }

    const size_t window = std::max<size_t>(n / 10, 10);
    double rms = 0.0;
    for (size_t i = n - window; i < n; ++i) rms += z[i] * z[i];
    rms = std::max(std::sqrt(rms / static_cast<double>(window)), 1e-12);

    const double z_max = *std::max_element(z.begin(), z.end());
    const size_t i_peak = static_cast<size_t>(
        std::max_element(z.begin(), z.end()) - z.begin());
    const size_t allowed = static_cast<size_t>(0.01 * static_cast<double>(n));

    constexpr int kGrid = 20;
    const double floor_abs = std::max(1e-12, 1e-9 * z_max);

    for (int gi = 0; gi < kGrid; ++gi) {
        const double eps = rms * std::pow(10.0, static_cast<double>(gi) / (kGrid - 1));

        // Initial rate estimate: log-linear LS over the strong part of the
        // decay (residual at least 5% of the peak residual), which keeps the
        // near-asymptote dive out of the slope.
        const double thresh = std::max(floor_abs, 0.05 * (z[i_peak] - eps));
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        size_t count = 0;
        for (size_t i = i_peak; i < n; ++i) {
            const double r = z[i] - eps;
            if (r <= thresh) continue;
            const double y = std::log(r);
            sx += t[i];
            sy += y;
            sxx += t[i] * t[i];
            sxy += t[i] * y;
            ++count;
        }
        if (count < 10) continue;
        const double denom = static_cast<double>(count) * sxx - sx * sx;
        if (std::abs(denom) < 1e-30) continue;
        const double beta0 = -(static_cast<double>(count) * sxy - sx * sy) / denom;
        if (!(beta0 > 0.0)) continue;

        // Refine beta on a small grid around the LS estimate: for each rate
        // the amplitude is the smallest one covering all but `allowed`
        // samples; keep the envelope with the smallest mean value.
        bool have_best = false;
        NesEnvelope best;
        double best_tightness = std::numeric_limits<double>::infinity();
        for (int bk = 0; bk <= 16; ++bk) {
            const double beta = beta0 * (0.6 + 0.05 * bk);
            std::vector<double> log_r;
            log_r.reserve(n);
            for (size_t i = 0; i < n; ++i) {
                const double r = z[i] - eps;
                if (r > 0.0) log_r.push_back(std::min(std::log(r) + beta * t[i], 705.0));
            }
            double a_log;
            if (log_r.empty()) {
                a_log = std::log(floor_abs);
            } else if (log_r.size() <= allowed) {
                a_log = *std::max_element(log_r.begin(), log_r.end());
            } else {
                std::nth_element(log_r.begin(), log_r.begin() + allowed, log_r.end(),
                                 std::greater<double>());
                a_log = log_r[allowed];
            }
            if (a_log > 700.0) continue;
            const double amplitude = std::exp(a_log);
            if (amplitude + eps > 20.0 * z_max) continue;  // meaningless blow-up

            size_t covered = 0;
            double tightness = 0.0;
            for (size_t i = 0; i < n; ++i) {
                const double env = amplitude * std::exp(-beta * t[i]) + eps;
                if (z[i] <= env + 1e-12) ++covered;
                tightness += env;
            }
            const double coverage = static_cast<double>(covered) / static_cast<double>(n);
            if (coverage < 0.99) continue;
            if (tightness < best_tightness) {
                best_tightness = tightness;
                best.amplitude = amplitude;
                best.beta = beta;
                best.eps = eps;
                best.coverage = coverage;
                best.alpha = amplitude / std::max(z[0], eps);
                have_best = true;
            }
        }
        if (have_best) return best;
    }
    throw NotDecaying("fit_nes_envelope: no positive-rate envelope covers the series");
}

}  // namespace sanm::lyapunov
