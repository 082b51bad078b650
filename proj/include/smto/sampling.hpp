#pragma once

#include "smto/arm.hpp"
#include "smto/parallel.hpp"
#include "smto/rng.hpp"
#include "smto/trajectory.hpp"

#include <vector>

namespace smto {

enum class GeneratorKind {
    FixedGoalMixture,  // mode center + smooth noise, both endpoints clamped
    GoalRotation,      // rotated/null-perturbed goal propagated along the ramp
    TrajectoryNoise    // rotated goal + smooth noise, start clamped only
};

struct GeneratorTag {
    GeneratorKind kind = GeneratorKind::FixedGoalMixture;
    int mode_index = 0;
};

struct ProposalParams {
    /// Scale a of the smoothness-shaped noise covariance a*B.
    double scale_a = 1e-4;
    std::pair<double, double> rotation_range{0.0, 0.0};
    std::pair<double, double> null_range{0.0, 0.0};
    /// Share of a goal-exploration batch drawn by pure goal perturbation.
    double end_sample_fraction = 0.5;
    std::uint64_t seed = 0;

    void validate() const {
        require(scale_a >= 0.0, "scale_a must be >= 0");
        require(rotation_range.first <= rotation_range.second, "rotation_range is inverted");
        require(null_range.first <= null_range.second, "null_range is inverted");
        require(end_sample_fraction >= 0.0 && end_sample_fraction <= 1.0,
                "end_sample_fraction must lie in [0, 1]");
    }
};

struct SampleBatch {
    std::vector<Trajectory> trajectories;
    VecX log_proposal_density;
    std::vector<GeneratorTag> tags;

    int size() const { return static_cast<int>(trajectories.size()); }
};

inline double proposal_log_density(const SampleBatch& batch, int index) {
    require(index >= 0 && index < batch.size(), "sample index out of range");
    return batch.log_proposal_density[index];
}

namespace detail {

/// log N(delta_free; 0, a*B) for the per-joint block covariance, evaluated on
/// a free-block difference (n_free x D).
inline double gaussian_log_density(const MatX& delta, const SmoothnessOperators& ops,
                                   double scale_a) {
    int n = ops.free();
    int D = static_cast<int>(delta.cols());
    double quad = 0.0;
    for (int j = 0; j < D; ++j)
        quad += delta.col(j).dot(ops.metric_M * delta.col(j));
    return -0.5 * (D * n * std::log(2.0 * kPi) + D * (n * std::log(scale_a) + ops.log_det_B) +
                   quad / scale_a);
}

/// Per-joint smooth perturbation sqrt(a) * L * z drawn from the stream.
inline MatX smooth_noise(const SmoothnessOperators& ops, double scale_a, RandomStream& rng) {
    int n = ops.free();
    MatX delta(n, ops.dims);
    double s = std::sqrt(scale_a);
    for (int j = 0; j < ops.dims; ++j)
        delta.col(j) = s * (ops.noise_chol_L * rng.normal_vector(n));
    return delta;
}

}  // namespace detail

/// Log-density of a trajectory's free block under the uniform mixture of
/// mode-centered Gaussians N(xi_l, a*B).
inline double fixed_goal_mixture_log_density(const std::vector<Trajectory>& modes,
                                             const SmoothnessOperators& ops, double scale_a,
                                             const Trajectory& sample) {
    require(!modes.empty(), "mode list is empty");
    if (scale_a <= 0.0) return 0.0;  // degenerate point-mass proposal
    int L = static_cast<int>(modes.size());
    VecX comps(L);
    for (int l = 0; l < L; ++l) {
        MatX delta = free_block(sample, ops.clamp_mode) - free_block(modes[l], ops.clamp_mode);
        comps[l] = detail::gaussian_log_density(delta, ops, scale_a);
    }
    double m = comps.maxCoeff();
    return m + std::log((comps.array() - m).exp().sum()) - std::log(static_cast<double>(L));
}

/// STOMP-style batch around the current modes with both endpoints clamped:
/// sample = (uniformly chosen mode) + N(0, a*B) per joint on the free block.
inline SampleBatch sample_fixed_goal(const std::vector<Trajectory>& modes,
                                     const SmoothnessOperators& ops,
                                     const ProposalParams& params, int n,
                                     std::uint64_t batch_tag = 0) {
    require(!modes.empty(), "sample_fixed_goal requires at least one mode");
    require(ops.clamp_mode == ClampMode::BothEndsFixed,
            "fixed-goal sampling requires both-ends clamping");
    params.validate();
    int L = static_cast<int>(modes.size());
    SampleBatch batch;
    batch.trajectories.resize(n);
    batch.log_proposal_density.resize(n);
    batch.tags.resize(n);

    parallel_for(n, [&](int i) {
        RandomStream rng = RandomStream::for_index(params.seed, 2 * batch_tag, i);
        int l = rng.uniform_index(L);
        Trajectory traj = modes[l];
        if (params.scale_a > 0.0)
            add_to_free(traj, ops.clamp_mode, detail::smooth_noise(ops, params.scale_a, rng));
        batch.tags[i] = {GeneratorKind::FixedGoalMixture, l};
        batch.trajectories[i] = std::move(traj);
    });
    parallel_for(n, [&](int i) {
        batch.log_proposal_density[i] =
            fixed_goal_mixture_log_density(modes, ops, params.scale_a, batch.trajectories[i]);
    });
    return batch;
}

/// Goal-exploration batch with the start clamped only. An end_sample_fraction
/// share perturbs the goal: a rotation angle drawn uniformly is resolved to a
/// configuration by IK holding the goal position, an optional null-space
/// deviation is added, and the goal change rides the linear ramp to deform the
/// whole trajectory. The remaining share composes the same rotation sub-draw
/// with smooth N(0, a*B) trajectory noise. Each sample records the log-density
/// of its perturbation under its own generator; self-normalized weighting
/// tolerates the per-generator constants.
inline SampleBatch sample_goal_exploration(const std::vector<Trajectory>& modes,
                                           const PlanarArm& arm, const SmoothnessOperators& ops,
                                           const ProposalParams& params, int n,
                                           std::uint64_t batch_tag = 0,
                                           bool enable_null_exploration = true) {
    require(!modes.empty(), "sample_goal_exploration requires at least one mode");
    require(ops.clamp_mode == ClampMode::StartFixedOnly,
            "goal exploration requires start-only clamping");
    params.validate();
    int L = static_cast<int>(modes.size());
    int T = modes[0].steps();
    int n_end = static_cast<int>(std::floor(params.end_sample_fraction * n + 0.5));

    double rot_width = params.rotation_range.second - params.rotation_range.first;
    double null_width = params.null_range.second - params.null_range.first;
    double log_rot = rot_width > 0.0 ? -std::log(rot_width) : 0.0;

    SampleBatch batch;
    batch.trajectories.resize(n);
    batch.log_proposal_density.resize(n);
    batch.tags.resize(n);

    parallel_for(n, [&](int i) {
        RandomStream rng = RandomStream::for_index(params.seed, 2 * batch_tag + 1, i);
        int l = rng.uniform_index(L);
        const Trajectory& mode = modes[l];
        VecX q_goal = mode.waypoints.row(T).transpose();
        EndEffectorPose goal_pose = forward_kinematics(arm, q_goal);

        // rotation sub-draw, redrawn on IK failure (capped), then skipped
        VecX q_rot = q_goal;
        for (int attempt = 0; attempt < 6; ++attempt) {
            double phi = rot_width > 0.0
                             ? rng.uniform(params.rotation_range.first, params.rotation_range.second)
                             : params.rotation_range.first;
            if (phi == 0.0) break;
            auto solved = try_goal_rotation_ik(arm, q_goal, goal_pose.position,
                                               goal_pose.orientation + phi);
            if (solved) {
                q_rot = *solved;
                break;
            }
        }

        bool end_sample = i < n_end;
        double log_null = 0.0;
        if (end_sample && enable_null_exploration && null_width > 0.0) {
            auto basis = null_space_basis(arm, q_rot, TaskRows::position());
            for (const VecX& e : basis) {
                double eps = rng.uniform(params.null_range.first, params.null_range.second);
                q_rot += eps * e;
                log_null -= std::log(null_width);
            }
        }

        Trajectory traj = mode;
        VecX dq = q_rot - q_goal;
        if (dq.squaredNorm() > 0.0) {
            for (int k = 0; k < ops.free(); ++k)
                traj.waypoints.row(k + 1) += ops.goal_profile[k] * dq.transpose();
        }
        if (end_sample) {
            batch.tags[i] = {GeneratorKind::GoalRotation, l};
            batch.log_proposal_density[i] = log_rot + log_null;
        } else {
            batch.tags[i] = {GeneratorKind::TrajectoryNoise, l};
            double log_noise = 0.0;
            if (params.scale_a > 0.0) {
                MatX noise = detail::smooth_noise(ops, params.scale_a, rng);
                add_to_free(traj, ops.clamp_mode, noise);
                log_noise = detail::gaussian_log_density(noise, ops, params.scale_a);
            }
            batch.log_proposal_density[i] = log_rot + log_noise;
        }
        batch.trajectories[i] = std::move(traj);
    });
    return batch;
}

}  // namespace smto
