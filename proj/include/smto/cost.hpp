#pragma once

#include "smto/arm.hpp"
#include "smto/scene.hpp"
#include "smto/trajectory.hpp"

#include <vector>

namespace smto {

struct CostParams {
    /// Weight on the acceleration-energy term of the total cost.
    double smoothness_weight = 1e-3;
    /// Exponential scaling of costs when mapping a batch to weights.
    double cost_scale_alpha = 20.0;

    void validate() const {
        require(smoothness_weight >= 0.0, "smoothness_weight must be >= 0");
        require(cost_scale_alpha > 0.0, "cost_scale_alpha must be > 0");
    }
};

/// Sum over interior waypoints of the squared second difference
/// || (q_{t+1} - 2 q_t + q_{t-1}) / dt^2 ||^2.
inline double smoothness_cost(const Trajectory& traj) {
    traj.validate();
    double inv_dt2 = 1.0 / (traj.dt * traj.dt);
    double total = 0.0;
    for (int t = 1; t < traj.steps(); ++t) {
        VecX sd = (traj.waypoints.row(t + 1) - 2.0 * traj.waypoints.row(t) +
                   traj.waypoints.row(t - 1))
                      .transpose() *
                  inv_dt2;
        total += sd.squaredNorm();
    }
    return total;
}

namespace detail {

/// Per-waypoint kinematic and collision data reused by the obstacle cost and
/// its gradient.
struct BodySweep {
    std::vector<std::vector<Vec2>> origins;   // per t: joint origins
    std::vector<std::vector<Vec2>> points;    // per t: body points
    std::vector<int> point_links;             // link index per body point
    std::vector<std::vector<double>> cost;    // c(x_u(q_t))
    std::vector<std::vector<Vec2>> cost_grad; // grad_x c
    std::vector<std::vector<double>> speed;   // ||d/dt x_u||
    std::vector<std::vector<Vec2>> direction; // unit velocity (zero if degenerate)
};

inline BodySweep sweep_body_points(const Trajectory& traj, const PlanarArm& arm,
                                   const Scene& scene, bool with_gradient) {
    int T = traj.steps();
    int per_link = arm.body_points_per_link;
    int P = arm.dof() * per_link;
    BodySweep s;
    s.origins.resize(T + 1);
    s.points.resize(T + 1);
    s.cost.assign(T + 1, std::vector<double>(P, 0.0));
    if (with_gradient) s.cost_grad.assign(T + 1, std::vector<Vec2>(P, Vec2::Zero()));
    s.speed.assign(T + 1, std::vector<double>(P, 0.0));
    s.direction.assign(T + 1, std::vector<Vec2>(P, Vec2::Zero()));
    s.point_links.resize(P);
    for (int u = 0; u < P; ++u) s.point_links[u] = u / per_link;

    for (int t = 0; t <= T; ++t) {
        s.origins[t] = joint_origins(arm, traj.waypoints.row(t).transpose());
        s.points[t] = body_points(arm, traj.waypoints.row(t).transpose());
        for (int u = 0; u < P; ++u) {
            s.cost[t][u] = scene.local_collision_cost(s.points[t][u]);
            if (with_gradient) s.cost_grad[t][u] = scene.local_collision_gradient(s.points[t][u]);
        }
    }
    for (int t = 0; t <= T; ++t) {
        for (int u = 0; u < P; ++u) {
            Vec2 vel;
            if (t == 0) {
                vel = (s.points[1][u] - s.points[0][u]) / traj.dt;
            } else if (t == T) {
                vel = (s.points[T][u] - s.points[T - 1][u]) / traj.dt;
            } else {
                vel = (s.points[t + 1][u] - s.points[t - 1][u]) / (2.0 * traj.dt);
            }
            double n = vel.norm();
            s.speed[t][u] = n;
            if (n > 1e-12) s.direction[t][u] = vel / n;
        }
    }
    return s;
}

}  // namespace detail

/// Arc-length-weighted collision cost
///   1/2 sum_t sum_u c(x_u(q_t)) ||d/dt x_u(q_t)||
/// with temporal central differences (one-sided at the ends).
inline double obstacle_cost(const Trajectory& traj, const PlanarArm& arm, const Scene& scene) {
    traj.validate();
    require(traj.dims() == arm.dof(), "trajectory dimension does not match arm");
    if (!scene.has_obstacles()) return 0.0;
    auto sweep = detail::sweep_body_points(traj, arm, scene, false);
    double total = 0.0;
    for (int t = 0; t <= traj.steps(); ++t)
        for (std::size_t u = 0; u < sweep.points[t].size(); ++u)
            total += sweep.cost[t][u] * sweep.speed[t][u];
    return 0.5 * total;
}

inline double total_cost(const Trajectory& traj, const PlanarArm& arm, const Scene& scene,
                         const CostParams& params) {
    return obstacle_cost(traj, arm, scene) + params.smoothness_weight * smoothness_cost(traj);
}

/// Analytic gradient of total_cost with respect to the free waypoints
/// (n_free x D). The obstacle term differentiates both the local cost and the
/// finite-difference speed factor, so it matches central finite differences
/// of total_cost away from the piecewise-cost branch boundaries.
inline MatX cost_gradient(const Trajectory& traj, const PlanarArm& arm, const Scene& scene,
                          const CostParams& params, const SmoothnessOperators& ops) {
    traj.validate();
    require(traj.dims() == arm.dof(), "trajectory dimension does not match arm");
    require(ops.steps == traj.steps(), "operators built for a different trajectory length");
    int T = traj.steps();
    int D = traj.dims();
    int n = ops.free();
    MatX grad = MatX::Zero(n, D);

    // smoothness: d/dq_s of sum ||sd_t||^2 with sd_t the second difference
    double inv_dt2 = 1.0 / (traj.dt * traj.dt);
    MatX sd = MatX::Zero(T + 1, D);  // rows 1..T-1 used
    for (int t = 1; t < T; ++t)
        sd.row(t) = (traj.waypoints.row(t + 1) - 2.0 * traj.waypoints.row(t) +
                     traj.waypoints.row(t - 1)) *
                    inv_dt2;
    for (int i = 0; i < n; ++i) {
        int s_wp = i + 1;
        Eigen::RowVectorXd g = Eigen::RowVectorXd::Zero(D);
        if (s_wp - 1 >= 1) g += sd.row(s_wp - 1);
        if (s_wp <= T - 1) g -= 2.0 * sd.row(s_wp);
        if (s_wp + 1 <= T - 1) g += sd.row(s_wp + 1);
        grad.row(i) = params.smoothness_weight * 2.0 * inv_dt2 * g;
    }

    if (!scene.has_obstacles()) return grad;
    auto sweep = detail::sweep_body_points(traj, arm, scene, true);
    int P = static_cast<int>(sweep.point_links.size());

    for (int i = 0; i < n; ++i) {
        int s_wp = i + 1;
        VecX acc = VecX::Zero(D);
        for (int u = 0; u < P; ++u) {
            int link = sweep.point_links[u];
            MatX J = point_jacobian(sweep.origins[s_wp], sweep.points[s_wp][u], link);
            // local term: speed-weighted chain rule through the body point
            acc += sweep.speed[s_wp][u] * (J.transpose() * sweep.cost_grad[s_wp][u]);
            // speed terms: q_s enters the finite-difference velocities of the
            // neighbouring waypoints (and its own at the one-sided end)
            auto add_speed_term = [&](int t, double coeff) {
                if (sweep.speed[t][u] <= 1e-12) return;
                acc += (coeff * sweep.cost[t][u]) * (J.transpose() * sweep.direction[t][u]);
            };
            if (s_wp - 1 == 0) {
                add_speed_term(0, 1.0 / traj.dt);
            } else if (s_wp - 1 >= 1) {
                add_speed_term(s_wp - 1, 1.0 / (2.0 * traj.dt));
            }
            if (s_wp + 1 == T) {
                add_speed_term(T, -1.0 / traj.dt);
            } else if (s_wp + 1 <= T - 1) {
                add_speed_term(s_wp + 1, -1.0 / (2.0 * traj.dt));
            }
            if (s_wp == T) add_speed_term(T, 1.0 / traj.dt);
        }
        grad.row(i) += 0.5 * acc.transpose();
    }
    return grad;
}

/// Exponential cost-to-weight map over a batch's [c_min, c_max] range:
///   f(c) = exp(-alpha (c - c_max) / (c_max - c_min)),
/// so f(c_max) = 1 and f(c_min) = exp(alpha). Degenerate batches (all costs
/// equal) map to 1.
inline double log_cost_weight(double c, double c_min, double c_max, double alpha) {
    require(c_max >= c_min, "cost range is inverted");
    double slack = 1e-12 * std::max(1.0, std::abs(c_max) + std::abs(c_min));
    require(c >= c_min - slack && c <= c_max + slack,
            "cost lies outside the batch [c_min, c_max] range");
    if (c_max == c_min) return 0.0;
    return alpha * (c_max - c) / (c_max - c_min);
}

inline double cost_to_weight(double c, double c_min, double c_max, double alpha) {
    return std::exp(log_cost_weight(c, c_min, c_max, alpha));
}

}  // namespace smto
