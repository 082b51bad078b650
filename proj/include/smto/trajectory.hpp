#pragma once

#include "smto/common.hpp"

#include <Eigen/Cholesky>

namespace smto {

/// Discrete trajectory q_0..q_T. Row t of `waypoints` is the configuration at
/// step t, so column j is joint j's time series.
struct Trajectory {
    MatX waypoints;  // (T+1) x D
    double dt = 1.0;

    Trajectory() = default;
    Trajectory(MatX w, double step) : waypoints(std::move(w)), dt(step) {}

    int steps() const { return static_cast<int>(waypoints.rows()) - 1; }  // T
    int dims() const { return static_cast<int>(waypoints.cols()); }

    void validate() const {
        require(steps() >= 2, "trajectory needs T >= 2");
        require(dt > 0.0, "trajectory dt must be positive");
        require(waypoints.allFinite(), "trajectory waypoints must be finite");
    }
};

inline Trajectory linear_trajectory(const VecX& q_start, const VecX& q_goal, int steps,
                                    double dt = 1.0) {
    require(q_start.size() == q_goal.size(), "start and goal dimensions differ");
    require(steps >= 2, "trajectory needs T >= 2");
    MatX w(steps + 1, q_start.size());
    for (int t = 0; t <= steps; ++t) {
        double s = static_cast<double>(t) / steps;
        w.row(t) = ((1.0 - s) * q_start + s * q_goal).transpose();
    }
    return Trajectory(std::move(w), dt);
}

/// Which waypoints the operators act on. Both-ends clamping frees waypoints
/// 1..T-1; start-only clamping frees 1..T (the goal moves).
enum class ClampMode { BothEndsFixed, StartFixedOnly };

inline int free_count(ClampMode mode, int steps) {
    return mode == ClampMode::BothEndsFixed ? steps - 1 : steps;
}

/// First free waypoint index is always 1.
inline int last_free(ClampMode mode, int steps) {
    return mode == ClampMode::BothEndsFixed ? steps - 1 : steps;
}

/// Finite-differencing operators shared by sampling, preconditioning and
/// constraint propagation. A is the second-difference stencil over the free
/// waypoints, M = A^T A the smoothness metric, B = M^-1 the sampling
/// covariance. Per-joint block structure: the same scalar operator applies to
/// every joint independently.
struct SmoothnessOperators {
    int steps = 0;  // T
    int dims = 0;
    ClampMode clamp_mode = ClampMode::BothEndsFixed;

    MatX diff_matrix_A;
    MatX metric_M;
    MatX sampling_cov_B;
    Eigen::LLT<MatX> metric_llt;
    MatX noise_chol_L;   // lower Cholesky factor of B
    double log_det_B = 0.0;

    /// Correction-propagation profiles (first-difference metric Green's
    /// function): goal_profile[i] scales a goal change at free waypoint i
    /// (linear ramp, exactly 1 at the end); tent_profile(t) peaks at t with 1.
    VecX goal_profile;

    int free() const { return free_count(clamp_mode, steps); }

    /// Column profile for smoothing a correction applied at free index t
    /// (0-based within the free block): a tent that is 1 at t, linear to zero
    /// at the clamped boundaries.
    VecX tent_profile(int t) const {
        int n = free();
        VecX p(n);
        bool end_clamped = clamp_mode == ClampMode::BothEndsFixed;
        for (int i = 0; i < n; ++i) {
            if (i <= t) {
                p[i] = static_cast<double>(i + 1) / (t + 1);
            } else if (end_clamped) {
                p[i] = static_cast<double>(n - i) / (n - t);
            } else {
                p[i] = 1.0;  // free tail follows the correction
            }
        }
        return p;
    }
};

inline SmoothnessOperators build_operators(int steps, int dims, ClampMode mode) {
    require(steps >= 2, "build_operators needs T >= 2");
    require(dims >= 1, "build_operators needs at least one joint");
    SmoothnessOperators ops;
    ops.steps = steps;
    ops.dims = dims;
    ops.clamp_mode = mode;

    int n = free_count(mode, steps);
    MatX A = MatX::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        A(i, i) = 2.0;
        if (i > 0) A(i, i - 1) = -1.0;
        if (i + 1 < n) A(i, i + 1) = -1.0;
    }
    ops.diff_matrix_A = A;
    ops.metric_M = A.transpose() * A;
    ops.metric_llt.compute(ops.metric_M);
    require(ops.metric_llt.info() == Eigen::Success, "smoothness metric is not positive definite");
    ops.sampling_cov_B = ops.metric_llt.solve(MatX::Identity(n, n));

    Eigen::LLT<MatX> bllt(ops.sampling_cov_B);
    require(bllt.info() == Eigen::Success, "sampling covariance is not positive definite");
    ops.noise_chol_L = bllt.matrixL();

    // log det B = -log det M, from the metric factorization
    double log_det_M = 0.0;
    MatX Lm = ops.metric_llt.matrixL();
    for (int i = 0; i < n; ++i) log_det_M += 2.0 * std::log(Lm(i, i));
    ops.log_det_B = -log_det_M;

    ops.goal_profile = VecX(n);
    for (int i = 0; i < n; ++i) ops.goal_profile[i] = static_cast<double>(i + 1) / n;
    return ops;
}

/// Free-waypoint block of a trajectory, waypoint-major: (t_1 joints..., t_2
/// joints..., ...).
inline VecX flatten_free(const Trajectory& traj, ClampMode mode) {
    int n = free_count(mode, traj.steps());
    VecX v(n * traj.dims());
    for (int i = 0; i < n; ++i)
        v.segment(i * traj.dims(), traj.dims()) = traj.waypoints.row(i + 1).transpose();
    return v;
}

inline void set_free(Trajectory& traj, ClampMode mode, const VecX& flat) {
    int n = free_count(mode, traj.steps());
    require(flat.size() == n * traj.dims(), "flattened free block has wrong size");
    for (int i = 0; i < n; ++i)
        traj.waypoints.row(i + 1) = flat.segment(i * traj.dims(), traj.dims()).transpose();
}

/// Free block as an n_free x D matrix view copy (row i = free waypoint i).
inline MatX free_block(const Trajectory& traj, ClampMode mode) {
    int n = free_count(mode, traj.steps());
    return traj.waypoints.middleRows(1, n);
}

inline void add_to_free(Trajectory& traj, ClampMode mode, const MatX& delta) {
    int n = free_count(mode, traj.steps());
    require(delta.rows() == n && delta.cols() == traj.dims(),
            "free-block delta has wrong shape");
    traj.waypoints.middleRows(1, n) += delta;
}

}  // namespace smto
