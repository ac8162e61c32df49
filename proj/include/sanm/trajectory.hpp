#pragma once

// Analytic reference generators. Every trajectory exposes exact position,
// velocity and acceleration; headings stay in the horizontal plane so the
// attitude extraction never degenerates against gravity.

#include <cmath>

#include "sanm/controller.hpp"
#include "sanm/errors.hpp"

namespace sanm::harness {

using controller::ReferenceSample;
using controller::ReferenceSignal;
using geom3::Vec3;

struct TrajectorySpec {
    enum class Kind { Hover, Circle, Lissajous, Step };
    Kind kind = Kind::Hover;

    Vec3 point{0.0, 0.0, -1.0};        // hover target

    double radius = 1.0;               // circle
    double period = 2.0 * M_PI;
    double altitude = -1.0;            // z level (NED: negative = above ground)
    Vec3 circle_center{0.0, 0.0, 0.0}; // x/y used, z comes from altitude

    Vec3 amplitude{1.0, 1.0, 0.5};     // lissajous
    Vec3 frequency{1.0, 1.0, 1.0};     // rad/s
    Vec3 phase{0.0, 0.0, 0.0};
    Vec3 center{0.0, 0.0, -1.0};

    Vec3 offset{1.0, 0.0, 0.0};        // step target (reference jumps here at t=0)

    void validate() const {
        switch (kind) {
            case Kind::Hover:
            case Kind::Step:
                break;
            case Kind::Circle:
                if (!(radius > 0.0) || !(period > 0.0)) {
                    throw InvalidSpec("trajectory: circle needs radius > 0 and period > 0");
                }
                break;
            case Kind::Lissajous:
                if (frequency.minCoeff() < 0.0) {
                    throw InvalidSpec("trajectory: lissajous frequencies must be >= 0");
                }
                break;
        }
    }
};

struct HeadingSpec {
    enum class Kind { Fixed, Rotating };
    Kind kind = Kind::Fixed;
    double yaw = 0.0;   // rad
    double rate = 0.0;  // rad/s, rotating only
};

inline ReferenceSignal make_trajectory(const TrajectorySpec& spec, const HeadingSpec& heading) {
    spec.validate();
    auto b1_at = [heading](double t) {
        const double yaw =
            heading.kind == HeadingSpec::Kind::Rotating ? heading.yaw + heading.rate * t
                                                        : heading.yaw;
        return Vec3(std::cos(yaw), std::sin(yaw), 0.0);
    };

    switch (spec.kind) {
        case TrajectorySpec::Kind::Hover: {
            const Vec3 p = spec.point;
            return ReferenceSignal{[p, b1_at](double t) {
                ReferenceSample s;
                s.x_d = p;
                s.b1_d = b1_at(t);
                return s;
            }};
        }
        case TrajectorySpec::Kind::Step: {
            const Vec3 p = spec.offset;
            return ReferenceSignal{[p, b1_at](double t) {
                ReferenceSample s;
                s.x_d = p;
                s.b1_d = b1_at(t);
                return s;
            }};
        }
        case TrajectorySpec::Kind::Circle: {
            const double w = 2.0 * M_PI / spec.period;
            const double r = spec.radius;
            const Vec3 c(spec.circle_center.x(), spec.circle_center.y(), spec.altitude);
            return ReferenceSignal{[w, r, c, b1_at](double t) {
                ReferenceSample s;
                const double ct = std::cos(w * t), st = std::sin(w * t);
                s.x_d = c + Vec3(r * ct, r * st, 0.0);
                s.xdot_d = Vec3(-r * w * st, r * w * ct, 0.0);
                s.xddot_d = Vec3(-r * w * w * ct, -r * w * w * st, 0.0);
                s.b1_d = b1_at(t);
                return s;
            }};
        }
        case TrajectorySpec::Kind::Lissajous: {
            const Vec3 a = spec.amplitude, w = spec.frequency, ph = spec.phase, c = spec.center;
            return ReferenceSignal{[a, w, ph, c, b1_at](double t) {
                ReferenceSample s;
                for (int j = 0; j < 3; ++j) {
                    const double arg = w(j) * t + ph(j);
                    s.x_d(j) = c(j) + a(j) * std::sin(arg);
                    s.xdot_d(j) = a(j) * w(j) * std::cos(arg);
                    s.xddot_d(j) = -a(j) * w(j) * w(j) * std::sin(arg);
                }
                s.b1_d = b1_at(t);
                return s;
            }};
        }
    }
    throw InvalidSpec("trajectory: unknown kind");
}

}  // namespace sanm::harness
