#pragma once

// SO(3) primitives: skew maps, attitude error quantities, drift repair.
// Frames follow the NED convention used across the library: rotations are
// direction-cosine matrices mapping body coordinates into the inertial frame.

#include <cmath>
#include <utility>

#include <Eigen/Dense>

#include "sanm/errors.hpp"

namespace sanm::geom3 {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kRotationTol = 1e-9;  // orthogonality/determinant tolerance
inline constexpr double kSkewTol = 1e-9;      // accepted antisymmetry defect in vee()

inline bool is_rotation(const Mat3& m, double tol = kRotationTol) {
    return (m.transpose() * m - Mat3::Identity()).norm() < tol &&
           std::abs(m.determinant() - 1.0) < tol;
}

// A validated member of SO(3). Construction via from_matrix() checks the
// orthogonality and determinant invariants; unchecked() is for call sites
// that produce rotations analytically (column assembly, exponentials).
class Rotation {
public:
    Rotation() : m_(Mat3::Identity()) {}

    static Rotation from_matrix(const Mat3& m, double tol = kRotationTol) {
        if (!is_rotation(m, tol)) {
            throw DegenerateMatrix("matrix is not a rotation within tolerance");
        }
        return Rotation(m);
    }

    static Rotation unchecked(const Mat3& m) { return Rotation(m); }

    static Rotation identity() { return Rotation(); }

    const Mat3& matrix() const { return m_; }
    operator const Mat3&() const { return m_; }

    Vec3 col(int i) const { return m_.col(i); }

private:
    explicit Rotation(const Mat3& m) : m_(m) {}
    Mat3 m_;
};

inline Mat3 hat(const Vec3& v) {
    Mat3 m;
    m << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return m;
}

// Inverse of hat(). Mildly non-skew input (roundoff) is antisymmetrized;
// anything beyond kSkewTol is rejected.
inline Vec3 vee(const Mat3& m) {
    if ((m + m.transpose()).norm() >= kSkewTol) {
        throw NonSkewInput("vee(): matrix is not skew-symmetric");
    }
    const Mat3 a = 0.5 * (m - m.transpose());
    return Vec3(a(2, 1), a(0, 2), a(1, 0));
}

// Rotation about a unit axis by angle (Rodrigues).
inline Rotation exp_hat(const Vec3& axis_angle) {
    const double theta = axis_angle.norm();
    if (theta < 1e-12) {
        return Rotation::identity();
    }
    const Mat3 k = hat(axis_angle / theta);
    const Mat3 m = Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * k * k;
    return Rotation::unchecked(m);
}

inline Rotation rot_z(double angle) { return exp_hat(Vec3(0.0, 0.0, angle)); }

// Attitude configuration error scalar, 1/2 tr(I - Rc^T R), range [0, 2].
inline double psi_r(const Rotation& r, const Rotation& rc) {
    return 0.5 * (Mat3::Identity() - rc.matrix().transpose() * r.matrix()).trace();
}

struct AttitudeErrors {
    Vec3 e_r;
    Vec3 e_omega;
};

// e_R = 1/2 vee(Rc^T R - R^T Rc),  e_Omega = Omega - R^T Rc Omega_c.
inline AttitudeErrors attitude_errors(const Rotation& r, const Rotation& rc,
                                      const Vec3& omega, const Vec3& omega_c) {
    const Mat3 rel = rc.matrix().transpose() * r.matrix();
    const Mat3 skew = 0.5 * (rel - rel.transpose());
    return AttitudeErrors{Vec3(skew(2, 1), skew(0, 2), skew(1, 0)),
                          omega - rel.transpose() * omega_c};
}

// Transport factor in d/dt e_R = Y e_Omega:  Y = 1/2 (tr[R^T Rc] I - R^T Rc).
// Its spectral norm never exceeds 1.
inline Mat3 transport_matrix(const Rotation& r, const Rotation& rc) {
    const Mat3 m = r.matrix().transpose() * rc.matrix();
    return 0.5 * (m.trace() * Mat3::Identity() - m);
}

// Nearest rotation in the Frobenius sense (polar factor). Used to repair
// integration drift; idempotent on valid rotations.
inline Rotation orthonormalize(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (sv(2) <= 1e-9 * std::max(sv(0), 1e-300)) {
        throw DegenerateMatrix("orthonormalize(): rank-deficient input");
    }
    Mat3 r = svd.matrixU() * svd.matrixV().transpose();
    if (r.determinant() <= 0.0) {
        throw DegenerateMatrix("orthonormalize(): projection is a reflection");
    }
    return Rotation::unchecked(r);
}

}  // namespace sanm::geom3
