#pragma once

#include <array>

#include <Eigen/Dense>

#include "sanm/errors.hpp"

namespace sanm {

using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;

// Controller and adaptation gains. Translational PD gains are per inertial
// axis; rotational PD gains are scalars shared by the three body axes.
struct Gains {
    Vec3 k_p{6.0, 6.0, 6.0};
    Vec3 k_d{4.5, 4.5, 4.5};
    double k_r = 16.0;
    double k_omega = 5.6;
    double c_r = 0.8;                    // cross term weight, must satisfy the c_R bound

    double eta_m = 2.0;                  // mass adaptation inertia
    double eta_j = 5e-4;                 // inertia adaptation inertia
    Vec3 gamma_x{300.0, 300.0, 500.0};   // translational NN learning rates
    Vec3 gamma_r{100.0, 100.0, 100.0};   // rotational NN learning rates
    double leak_m = 0.01;                // boundary decay scaling (mass law)
    double leak_j = 0.01;                // boundary decay scaling (inertia law)

    double m_min = 0.5, m_max = 3.0;     // kg
    Vec3 j_min{0.004, 0.004, 0.008};     // kg m^2
    Vec3 j_max{0.08, 0.08, 0.16};

    std::array<Mat2, 3> q{Mat2::Identity(), Mat2::Identity(), Mat2::Identity()};

    double learning_scale = 1.0;         // multiplies every gamma; 0 freezes the networks
    bool adapt_model = true;             // false freezes mass/inertia estimates

    double thrust_min = 1e-3;            // N, below which the desired attitude is undefined
    double align_tol = 1e-6;             // heading/thrust-axis alignment threshold
    double rate_filter_cutoff = 50.0;    // rad/s, low-pass on differenced Omega_c

    void validate() const {
        auto positive = [](double v) { return v > 0.0; };
        if (!(k_p.minCoeff() > 0.0) || !(k_d.minCoeff() > 0.0) || !positive(k_r) ||
            !positive(k_omega) || !positive(c_r) || !positive(eta_m) || !positive(eta_j) ||
            !(gamma_x.minCoeff() > 0.0) || !(gamma_r.minCoeff() > 0.0) || !positive(leak_m) ||
            !positive(leak_j) || !positive(thrust_min) || !positive(align_tol) ||
            !positive(rate_filter_cutoff)) {
            throw InvalidSpec("Gains: all gains must be strictly positive");
        }
        if (!(m_min > 0.0) || !(m_min < m_max)) {
            throw InvalidSpec("Gains: need 0 < m_min < m_max");
        }
        if (!(j_min.minCoeff() > 0.0) || !((j_max - j_min).minCoeff() > 0.0)) {
            throw InvalidSpec("Gains: need 0 < j_min < j_max componentwise");
        }
        if (learning_scale < 0.0) {
            throw InvalidSpec("Gains: learning_scale must be non-negative");
        }
        for (const auto& qj : q) {
            if ((qj - qj.transpose()).norm() > 1e-12 || !(qj(0, 0) > 0.0) ||
                !(qj.determinant() > 0.0)) {
                throw InvalidSpec("Gains: Q matrices must be symmetric positive-definite");
            }
        }
    }
};

}  // namespace sanm
