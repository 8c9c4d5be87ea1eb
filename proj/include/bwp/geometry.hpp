#pragma once

#include <cmath>
#include <stdexcept>

namespace bwp {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

/// Square torus of a given side length, together with the fixed
/// receiver-transmitter distance r of the dipole model. Coordinates live in
/// [0, side) on each axis.
class TorusDomain {
public:
    TorusDomain(double side, double r = 0.0) : side_(side), r_(r) {
        if (!(side > 0.0))
            throw std::invalid_argument("TorusDomain: side must be > 0");
        if (!(r >= 0.0) || !(r < side / 2.0))
            throw std::invalid_argument("TorusDomain: need 0 <= r < side/2");
    }

    double side() const { return side_; }
    double r() const { return r_; }
    double area() const { return side_ * side_; }

    /// Wraps an arbitrary coordinate into [0, side).
    double wrap(double v) const {
        double w = std::fmod(v, side_);
        if (w < 0.0) w += side_;
        // fmod can return side_ after the negative fixup when v is a tiny
        // negative number.
        if (w >= side_) w = 0.0;
        return w;
    }

    Point wrap(Point p) const { return {wrap(p.x), wrap(p.y)}; }

    bool contains(Point p) const {
        return p.x >= 0.0 && p.x < side_ && p.y >= 0.0 && p.y < side_;
    }

private:
    double side_;
    double r_;
};

/// Shortest per-axis displacement from a to b on the torus, in [-side/2, side/2].
inline double torus_delta(double a, double b, double side) {
    double d = b - a;
    if (d > side / 2.0) d -= side;
    else if (d < -side / 2.0) d += side;
    return d;
}

/// Euclidean distance to the nearest periodic image. Throws std::domain_error
/// when a coordinate lies outside [0, side).
inline double torus_distance(Point p, Point q, const TorusDomain& dom) {
    if (!dom.contains(p) || !dom.contains(q))
        throw std::domain_error("torus_distance: point outside [0, side)^2");
    double dx = torus_delta(p.x, q.x, dom.side());
    double dy = torus_delta(p.y, q.y, dom.side());
    return std::sqrt(dx * dx + dy * dy);
}

/// Distance variant that skips the range check; callers must pass wrapped
/// coordinates. This is the hot path of the simulator.
inline double torus_distance_unchecked(Point p, Point q, double side) {
    double dx = p.x - q.x;
    if (dx > side * 0.5) dx -= side;
    else if (dx < -side * 0.5) dx += side;
    double dy = p.y - q.y;
    if (dy > side * 0.5) dy -= side;
    else if (dy < -side * 0.5) dy += side;
    return std::sqrt(dx * dx + dy * dy);
}

} // namespace bwp
