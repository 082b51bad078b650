#pragma once

#include "smto/common.hpp"

#include <limits>
#include <variant>
#include <vector>

namespace smto {

struct Circle {
    Vec2 center{0.0, 0.0};
    double radius = 1.0;
};

/// Axis-aligned rectangle given by min/max corners.
struct Rect {
    Vec2 min{0.0, 0.0};
    Vec2 max{1.0, 1.0};

    bool contains(const Vec2& p) const {
        return p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y();
    }
};

struct Capsule {
    Vec2 a{0.0, 0.0};
    Vec2 b{1.0, 0.0};
    double radius = 0.5;
};

struct Obstacle {
    std::variant<Circle, Rect, Capsule> shape;

    void validate() const {
        if (const auto* c = std::get_if<Circle>(&shape)) {
            require(c->radius > 0.0, "circle radius must be positive");
        } else if (const auto* r = std::get_if<Rect>(&shape)) {
            require(r->min.x() < r->max.x() && r->min.y() < r->max.y(),
                    "rectangle min corner must be strictly below max corner");
        } else if (const auto* cap = std::get_if<Capsule>(&shape)) {
            require(cap->radius > 0.0, "capsule radius must be positive");
        }
    }

    Rect bounding_box() const {
        if (const auto* c = std::get_if<Circle>(&shape)) {
            Vec2 r(c->radius, c->radius);
            return {c->center - r, c->center + r};
        }
        if (const auto* r = std::get_if<Rect>(&shape)) return *r;
        const auto& cap = std::get<Capsule>(shape);
        Vec2 lo = cap.a.cwiseMin(cap.b).array() - cap.radius;
        Vec2 hi = cap.a.cwiseMax(cap.b).array() + cap.radius;
        return {lo, hi};
    }

    /// Exact signed distance: negative inside, zero on the boundary.
    double signed_distance(const Vec2& x) const {
        if (const auto* c = std::get_if<Circle>(&shape)) {
            return (x - c->center).norm() - c->radius;
        }
        if (const auto* r = std::get_if<Rect>(&shape)) {
            Vec2 nearest = x.cwiseMax(r->min).cwiseMin(r->max);
            if ((x - nearest).squaredNorm() > 0.0) return (x - nearest).norm();
            double dx = std::min(x.x() - r->min.x(), r->max.x() - x.x());
            double dy = std::min(x.y() - r->min.y(), r->max.y() - x.y());
            return -std::min(dx, dy);
        }
        const auto& cap = std::get<Capsule>(shape);
        Vec2 ab = cap.b - cap.a;
        double denom = ab.squaredNorm();
        double t = denom > 0.0 ? std::clamp((x - cap.a).dot(ab) / denom, 0.0, 1.0) : 0.0;
        return (x - (cap.a + t * ab)).norm() - cap.radius;
    }

    /// Unit gradient of the signed distance (away from the surface).
    Vec2 distance_gradient(const Vec2& x) const {
        if (const auto* c = std::get_if<Circle>(&shape)) {
            Vec2 d = x - c->center;
            double n = d.norm();
            return n > 1e-15 ? Vec2(d / n) : Vec2(1.0, 0.0);
        }
        if (const auto* r = std::get_if<Rect>(&shape)) {
            Vec2 nearest = x.cwiseMax(r->min).cwiseMin(r->max);
            Vec2 d = x - nearest;
            double n = d.norm();
            if (n > 1e-15) return d / n;
            // inside: point toward the nearest face
            double dxl = x.x() - r->min.x(), dxr = r->max.x() - x.x();
            double dyl = x.y() - r->min.y(), dyr = r->max.y() - x.y();
            double m = std::min(std::min(dxl, dxr), std::min(dyl, dyr));
            if (m == dxl) return Vec2(-1.0, 0.0);
            if (m == dxr) return Vec2(1.0, 0.0);
            if (m == dyl) return Vec2(0.0, -1.0);
            return Vec2(0.0, 1.0);
        }
        const auto& cap = std::get<Capsule>(shape);
        Vec2 ab = cap.b - cap.a;
        double denom = ab.squaredNorm();
        double t = denom > 0.0 ? std::clamp((x - cap.a).dot(ab) / denom, 0.0, 1.0) : 0.0;
        Vec2 d = x - (cap.a + t * ab);
        double n = d.norm();
        if (n > 1e-15) return d / n;
        Vec2 axis = denom > 0.0 ? Vec2(ab / std::sqrt(denom)) : Vec2(1.0, 0.0);
        return perp_unit(axis);
    }

private:
    static Vec2 perp_unit(const Vec2& v) { return Vec2(-v.y(), v.x()); }
};

/// Obstacle set with exact signed-distance queries plus optional unit-cost
/// polygon regions for the flat path-planning tasks.
struct Scene {
    std::vector<Obstacle> obstacles;
    Rect workspace{{0.0, 0.0}, {1.0, 1.0}};
    double margin_epsilon = 0.2;
    std::vector<std::vector<Vec2>> unit_cost_regions;

    void validate() const {
        require(margin_epsilon > 0.0, "scene.margin_epsilon must be positive");
        require(workspace.min.x() < workspace.max.x() && workspace.min.y() < workspace.max.y(),
                "scene.workspace must have positive extent");
        for (std::size_t i = 0; i < obstacles.size(); ++i) {
            obstacles[i].validate();
            Rect bb = obstacles[i].bounding_box();
            require(workspace.contains(bb.min) && workspace.contains(bb.max),
                    "scene.obstacles[" + std::to_string(i) + "] extends outside the workspace");
        }
        for (const auto& poly : unit_cost_regions)
            require(poly.size() >= 3, "scene.regions polygons need at least 3 vertices");
    }

    bool has_obstacles() const { return !obstacles.empty(); }

    /// Minimum over obstacles of the per-shape signed distance. +inf for an
    /// empty obstacle set.
    double signed_distance(const Vec2& x) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& ob : obstacles) best = std::min(best, ob.signed_distance(x));
        return best;
    }

    /// Index of the nearest obstacle; ties (within 1e-12) go to the lowest
    /// index so gradients are deterministic on the medial axis.
    int nearest_obstacle(const Vec2& x) const {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < static_cast<int>(obstacles.size()); ++i) {
            double d = obstacles[i].signed_distance(x);
            if (d < best_d - 1e-12) {
                best_d = d;
                best = i;
            }
        }
        return best;
    }

    /// Piecewise local collision cost driven by the signed distance d:
    ///   d >= eps        -> 0
    ///   0 < d < eps     -> (d - eps)^2 / (2 eps)
    ///   d <= 0          -> -d + eps/2
    double local_collision_cost(const Vec2& x) const {
        return collision_cost_of_distance(signed_distance(x), margin_epsilon);
    }

    static double collision_cost_of_distance(double d, double eps) {
        if (d >= eps) return 0.0;
        if (d > 0.0) return sqr(d - eps) / (2.0 * eps);
        return -d + 0.5 * eps;
    }

    /// d/dd of the local collision cost. Continuous at both branch joints.
    static double collision_cost_slope(double d, double eps) {
        if (d >= eps) return 0.0;
        if (d > 0.0) return (d - eps) / eps;
        return -1.0;
    }

    Vec2 local_collision_gradient(const Vec2& x) const {
        int idx = nearest_obstacle(x);
        if (idx < 0) return Vec2::Zero();
        double d = obstacles[idx].signed_distance(x);
        double slope = collision_cost_slope(d, margin_epsilon);
        if (slope == 0.0) return Vec2::Zero();
        return slope * obstacles[idx].distance_gradient(x);
    }

    /// 1 when x lies inside (or on the boundary of) any unit-cost polygon.
    int region_cost(const Vec2& x) const {
        require(!unit_cost_regions.empty(), "region_cost called with no regions configured");
        for (const auto& poly : unit_cost_regions)
            if (point_in_polygon(poly, x)) return 1;
        return 0;
    }

    static bool point_in_polygon(const std::vector<Vec2>& poly, const Vec2& p) {
        int n = static_cast<int>(poly.size());
        bool inside = false;
        for (int i = 0, j = n - 1; i < n; j = i++) {
            const Vec2& a = poly[j];
            const Vec2& b = poly[i];
            if (on_segment(a, b, p)) return true;  // boundary counts as inside
            bool crosses = (b.y() > p.y()) != (a.y() > p.y());
            if (crosses) {
                double t = (p.y() - b.y()) / (a.y() - b.y());
                double x_int = b.x() + t * (a.x() - b.x());
                if (p.x() < x_int) inside = !inside;
            }
        }
        return inside;
    }

private:
    static bool on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
        Vec2 ab = b - a, ap = p - a;
        double cross = ab.x() * ap.y() - ab.y() * ap.x();
        double scale = std::max(1.0, ab.norm());
        if (std::abs(cross) > 1e-12 * scale) return false;
        double dot = ap.dot(ab);
        return dot >= -1e-12 && dot <= ab.squaredNorm() + 1e-12;
    }
};

}  // namespace smto
