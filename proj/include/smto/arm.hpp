#pragma once

#include "smto/common.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace smto {

/// Planar N-link revolute chain. Joint angles are relative to the previous
/// link; link i points along base_orientation + q_1 + ... + q_i.
struct PlanarArm {
    std::vector<double> link_lengths;
    Vec2 base_position{0.0, 0.0};
    double base_orientation = 0.0;
    /// Per-joint closed intervals [lo, hi], when the arm declares limits.
    std::optional<std::vector<std::pair<double, double>>> joint_limits;
    /// Evenly spaced collision sample points per link, endpoints included.
    int body_points_per_link = 4;

    int dof() const { return static_cast<int>(link_lengths.size()); }

    void validate() const {
        require(!link_lengths.empty(), "arm needs at least one link");
        for (double l : link_lengths)
            require(is_finite(l) && l > 0.0, "link lengths must be strictly positive");
        require(body_points_per_link >= 2, "body_points_per_link must be >= 2");
        if (joint_limits) {
            require(static_cast<int>(joint_limits->size()) == dof(),
                    "joint_limits size must match number of links");
            for (const auto& [lo, hi] : *joint_limits)
                require(lo < hi, "joint limit lower bound must be below upper bound");
        }
    }
};

struct EndEffectorPose {
    Vec2 position{0.0, 0.0};
    double orientation = 0.0;  // wrapped to (-pi, pi]
};

inline void check_dims(const PlanarArm& arm, const VecX& q) {
    require(q.size() == arm.dof(), "configuration dimension does not match arm");
    for (int i = 0; i < q.size(); ++i)
        require(is_finite(q[i]), "configuration entries must be finite");
}

/// Positions of the base and every joint/link tip: dof()+1 points.
inline std::vector<Vec2> joint_origins(const PlanarArm& arm, const VecX& q) {
    check_dims(arm, q);
    std::vector<Vec2> pts(arm.dof() + 1);
    pts[0] = arm.base_position;
    double heading = arm.base_orientation;
    for (int i = 0; i < arm.dof(); ++i) {
        heading += q[i];
        pts[i + 1] = pts[i] + arm.link_lengths[i] * Vec2(std::cos(heading), std::sin(heading));
    }
    return pts;
}

inline EndEffectorPose forward_kinematics(const PlanarArm& arm, const VecX& q) {
    auto origins = joint_origins(arm, q);
    EndEffectorPose pose;
    pose.position = origins.back();
    pose.orientation = wrap_angle(arm.base_orientation + q.sum());
    return pose;
}

/// All collision sample points: body_points_per_link evenly spaced points per
/// link including both endpoints, so shared joints appear twice.
inline std::vector<Vec2> body_points(const PlanarArm& arm, const VecX& q) {
    auto origins = joint_origins(arm, q);
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(arm.dof()) * arm.body_points_per_link);
    for (int link = 0; link < arm.dof(); ++link) {
        for (int k = 0; k < arm.body_points_per_link; ++k) {
            double s = static_cast<double>(k) / (arm.body_points_per_link - 1);
            pts.push_back(origins[link] + s * (origins[link + 1] - origins[link]));
        }
    }
    return pts;
}

inline Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

/// Analytic Jacobian of (x, y, orientation) with respect to the joints, 3 x D.
inline MatX jacobian(const PlanarArm& arm, const VecX& q) {
    auto origins = joint_origins(arm, q);
    MatX J = MatX::Zero(3, arm.dof());
    const Vec2& tip = origins.back();
    for (int j = 0; j < arm.dof(); ++j) {
        Vec2 r = perp(tip - origins[j]);
        J(0, j) = r.x();
        J(1, j) = r.y();
        J(2, j) = 1.0;  // planar revolute chain
    }
    return J;
}

/// Jacobian of a point that rides on link `link` at a fixed offset, 2 x D.
/// `origins` must come from joint_origins at the same q.
inline MatX point_jacobian(const std::vector<Vec2>& origins, const Vec2& point, int link) {
    int dof = static_cast<int>(origins.size()) - 1;
    MatX J = MatX::Zero(2, dof);
    for (int j = 0; j <= link; ++j) {
        Vec2 r = perp(point - origins[j]);
        J(0, j) = r.x();
        J(1, j) = r.y();
    }
    return J;
}

/// Which task-space rows (x, y, orientation) a constraint acts on.
struct TaskRows {
    bool x = true;
    bool y = true;
    bool orientation = false;

    static TaskRows position() { return {true, true, false}; }
    static TaskRows full_pose() { return {true, true, true}; }

    int count() const { return (x ? 1 : 0) + (y ? 1 : 0) + (orientation ? 1 : 0); }
};

inline MatX task_submatrix(const MatX& J, const TaskRows& rows) {
    MatX Jt(rows.count(), J.cols());
    int r = 0;
    if (rows.x) Jt.row(r++) = J.row(0);
    if (rows.y) Jt.row(r++) = J.row(1);
    if (rows.orientation) Jt.row(r++) = J.row(2);
    return Jt;
}

/// Orthonormal basis of the null space of the selected Jacobian rows.
/// Empty when the task matrix has full column rank.
inline std::vector<VecX> null_space_basis(const PlanarArm& arm, const VecX& q,
                                          const TaskRows& rows = TaskRows::position()) {
    require(rows.count() > 0, "task_rows must be non-empty");
    MatX Jt = task_submatrix(jacobian(arm, q), rows);
    Eigen::JacobiSVD<MatX> svd(Jt, Eigen::ComputeFullV);
    double tol = 1e-10 * std::max(1.0, svd.singularValues().size() > 0
                                           ? svd.singularValues()[0]
                                           : 1.0);
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()[i] > tol) ++rank;
    std::vector<VecX> basis;
    for (int i = rank; i < arm.dof(); ++i) {
        VecX e = svd.matrixV().col(i);
        // deterministic sign: largest-magnitude entry positive
        int imax = 0;
        for (int k = 1; k < e.size(); ++k)
            if (std::abs(e[k]) > std::abs(e[imax])) imax = k;
        if (e[imax] < 0.0) e = -e;
        basis.push_back(e);
    }
    return basis;
}

struct IkFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline bool within_joint_limits(const PlanarArm& arm, const VecX& q, double slack = 1e-9) {
    if (!arm.joint_limits) return true;
    for (int j = 0; j < arm.dof(); ++j) {
        const auto& [lo, hi] = (*arm.joint_limits)[j];
        if (q[j] < lo - slack || q[j] > hi + slack) return false;
    }
    return true;
}

/// Damped-least-squares IK on the full planar pose (position + orientation).
/// Local solver: converges to the branch nearest the seed. Returns nullopt on
/// non-convergence or a joint-limit violation in the solution.
inline std::optional<VecX> try_goal_rotation_ik(const PlanarArm& arm, const VecX& q_seed,
                                                const Vec2& target_position,
                                                double target_orientation) {
    check_dims(arm, q_seed);
    constexpr double kDamping = 1e-3;
    constexpr double kStepCap = 0.2;  // rad per joint per iteration
    constexpr int kMaxIters = 200;
    constexpr double kTol = 1e-10;

    VecX q = q_seed;
    for (int it = 0; it <= kMaxIters; ++it) {
        EndEffectorPose pose = forward_kinematics(arm, q);
        Eigen::Vector3d err(target_position.x() - pose.position.x(),
                            target_position.y() - pose.position.y(),
                            wrap_angle(target_orientation - pose.orientation));
        if (err.head<2>().norm() < kTol && std::abs(err[2]) < kTol) {
            if (!within_joint_limits(arm, q)) return std::nullopt;
            return q;
        }
        if (it == kMaxIters) break;
        MatX J = jacobian(arm, q);
        MatX H = J.transpose() * J;
        H.diagonal().array() += kDamping * kDamping;
        VecX step = H.ldlt().solve(J.transpose() * err);
        for (int j = 0; j < step.size(); ++j)
            step[j] = std::clamp(step[j], -kStepCap, kStepCap);
        q += step;
    }
    return std::nullopt;
}

/// Throwing variant of try_goal_rotation_ik.
inline VecX goal_rotation_ik(const PlanarArm& arm, const VecX& q_seed,
                             const Vec2& target_position, double target_orientation) {
    auto q = try_goal_rotation_ik(arm, q_seed, target_position, target_orientation);
    if (!q)
        throw IkFailure("goal_rotation_ik did not converge (unreachable or singular target, "
                        "or solution violates joint limits)");
    return *q;
}

}  // namespace smto
