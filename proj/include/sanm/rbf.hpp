#pragma once

// One slice of the disturbance identifier: a 2-input, single-hidden-layer
// Gaussian RBF network with an online weight law and a norm cap.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "sanm/errors.hpp"

namespace sanm::rbf {

using Eigen::Vector2d;

struct RbfSlice {
    std::vector<Vector2d> centers;
    std::vector<double> widths;   // b_k > 0, one per neuron
    Eigen::VectorXd weights;      // l entries
    double weight_cap = 10.0;     // r_w

    int neuron_count() const { return static_cast<int>(centers.size()); }

    // Gaussian activations h_k = exp(-|x - c_k|^2 / (2 b_k^2)), each in (0, 1].
    Eigen::VectorXd activations(const Vector2d& input) const {
        Eigen::VectorXd h(neuron_count());
        for (int k = 0; k < neuron_count(); ++k) {
            const double d2 = (input - centers[k]).squaredNorm();
            h(k) = std::exp(-d2 / (2.0 * widths[k] * widths[k]));
        }
        return h;
    }

    double forward(const Vector2d& input) const { return weights.dot(activations(input)); }

    // Radial projection keeping |W| <= r_w.
    void project() {
        const double n = weights.norm();
        if (n > weight_cap) weights *= weight_cap / n;
    }

    void validate() const {
        if (centers.empty() || centers.size() != widths.size() ||
            weights.size() != static_cast<Eigen::Index>(centers.size())) {
            throw InvalidSpec("RbfSlice: centers/widths/weights sizes disagree");
        }
        for (double b : widths) {
            if (!(b > 0.0)) throw InvalidSpec("RbfSlice: widths must be positive");
        }
        if (!(weight_cap > 0.0)) throw InvalidSpec("RbfSlice: weight cap must be positive");
    }
};

// Geometry of the default slices: l neurons over a centered box
// [-half_x, half_x] x [-half_y, half_y] in the slice's error plane.
struct RbfLayout {
    int neurons = 5;
    double trans_half_x = 0.15;  // e_x extent, m (sized to the steady error orbit)
    double trans_half_y = 0.3;   // e_v extent, m/s
    double rot_half_x = 1.0;     // e_R extent
    double rot_half_y = 4.0;     // e_Omega extent, rad/s
    double weight_cap = 50.0;
    double width_scale = 1.2;    // multiplies the spacing-derived widths

    void validate() const {
        if (neurons < 1) throw InvalidSpec("RbfLayout: need at least one neuron");
        if (!(trans_half_x > 0.0) || !(trans_half_y > 0.0) || !(rot_half_x > 0.0) ||
            !(rot_half_y > 0.0) || !(weight_cap > 0.0) || !(width_scale > 0.0)) {
            throw InvalidSpec("RbfLayout: extents, cap and width scale must be positive");
        }
    }
};

// Fixed grid over the error box: one neuron at the origin, the rest spread
// evenly on the box-inscribed ellipse. Widths are half the mean
// nearest-neighbor spacing (uniform across neurons), times width_scale.
inline RbfSlice make_box_slice(int neurons, double half_x, double half_y, double weight_cap,
                               double width_scale = 1.0) {
    if (neurons < 1) throw InvalidSpec("make_box_slice: need at least one neuron");
    RbfSlice s;
    s.weight_cap = weight_cap;
    s.centers.emplace_back(0.0, 0.0);
    for (int k = 0; k + 1 < neurons; ++k) {
        const double theta = 2.0 * M_PI * k / (neurons - 1);
        s.centers.emplace_back(half_x * std::cos(theta), half_y * std::sin(theta));
    }

    double spacing = std::min(half_x, half_y);
    if (neurons > 1) {
        double total = 0.0;
        for (size_t i = 0; i < s.centers.size(); ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < s.centers.size(); ++j) {
                if (i == j) continue;
                nearest = std::min(nearest, (s.centers[i] - s.centers[j]).norm());
            }
            total += nearest;
        }
        spacing = total / static_cast<double>(s.centers.size());
    }
    s.widths.assign(s.centers.size(), 0.5 * spacing * width_scale);
    s.weights = Eigen::VectorXd::Zero(neurons);
    s.validate();
    return s;
}

}  // namespace sanm::rbf
