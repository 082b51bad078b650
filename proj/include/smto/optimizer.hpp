#pragma once

#include "smto/cost.hpp"
#include "smto/modes.hpp"
#include "smto/sampling.hpp"
#include "smto/vbem.hpp"

#include <chrono>
#include <optional>

namespace smto {

enum class GoalMode { Fixed, Rotational };

struct SmtoConfig {
    int max_solutions = 10;   // O
    int batch_size = 500;     // N
    int outer_iterations = 3; // K
    int steps = 50;           // T
    int embed_dim = 10;
    int k_neighbors = 15;
    int refine_iterations = 100;
    double step_inverse_eta = 1.0;  // eta: update is -(1/eta) M^-1 g
    double null_step_scale = 0.2;   // a_i
    double null_fd_step = 1e-4;     // finite-difference probe along null directions
    double collision_accept_threshold = 1e-4;
    double projection_tolerance = 1e-6;
    std::uint64_t seed = 0;
    bool enable_null_exploration = true;
    bool enable_null_update = true;
    bool refine_only = false;  // covariant-descent baseline, no sampling
    int vbem_max_iters = 200;
    double vbem_tol = 1e-9;

    void validate() const {
        require(max_solutions >= 1, "smto.O must be >= 1");
        require(batch_size >= max_solutions && batch_size >= 2, "smto.N must be >= O and >= 2");
        require(outer_iterations >= 1, "smto.K must be >= 1");
        require(steps >= 2, "smto.T must be >= 2");
        require(embed_dim >= 1, "smto.d_embed must be >= 1");
        require(k_neighbors >= 2, "smto.k_neighbors must be >= 2");
        require(refine_iterations >= 1, "smto.refine_iterations must be >= 1");
        require(step_inverse_eta > 0.0, "smto.step_inverse_eta must be positive");
        require(collision_accept_threshold > 0.0, "smto.collision_accept_threshold must be positive");
        require(projection_tolerance > 0.0, "smto.projection_tolerance must be positive");
        require(null_fd_step > 0.0, "smto.null_fd_step must be positive");
    }
};

/// Planning problem. `arm` empty means a 2D point robot (identity kinematics),
/// used by the flat binary-region tasks.
struct Problem {
    std::optional<PlanarArm> arm;
    Scene scene;
    VecX q_start;
    VecX q_goal;
    GoalMode goal_mode = GoalMode::Fixed;
    ProposalParams proposal;
    CostParams cost;
    SmtoConfig config;
};

struct Solution {
    Trajectory trajectory;
    double final_cost = 0.0;
    double collision_cost = 0.0;
    double smoothness = 0.0;
    int cluster_id = 0;
};

struct Diagnostics {
    std::vector<int> mode_counts;                 // per outer iteration
    std::vector<std::vector<double>> elbo_traces; // per outer iteration
    std::vector<double> projection_residuals;
    int dedup_merges = 0;
    int dropped_projection_failures = 0;
    double runtime_seconds = 0.0;
};

struct SolutionSet {
    std::vector<Solution> solutions;
    bool infeasible = false;
    Diagnostics diagnostics;
};

/// One covariant step: free waypoints move by -(1/eta) M^-1 g per joint,
/// clamped waypoints stay untouched. Equivalent to the M-norm trust-region
/// minimizer of the linearized cost.
inline Trajectory covariant_update(const Trajectory& traj, const MatX& gradient,
                                   const SmoothnessOperators& ops, double eta) {
    require(gradient.rows() == ops.free() && gradient.cols() == traj.dims(),
            "gradient shape does not match the free block");
    require(eta > 0.0, "eta must be positive");
    Trajectory out = traj;
    MatX step = ops.metric_llt.solve(gradient);
    add_to_free(out, ops.clamp_mode, (-1.0 / eta) * step);
    return out;
}

struct ProjectionResult {
    Trajectory trajectory;
    bool converged = false;
    double residual = 0.0;
    int iterations = 0;
};

/// Newton-style restoration of the goal end-effector position: the damped
/// position-row pseudo-inverse update at q_T rides the linear ramp so earlier
/// waypoints deform smoothly and q_0 stays fixed.
inline ProjectionResult project_goal_constraint(const Trajectory& traj, const PlanarArm& arm,
                                                const Vec2& target_position,
                                                const SmoothnessOperators& ops,
                                                double tolerance = 1e-6, int max_iters = 20) {
    require(ops.clamp_mode == ClampMode::StartFixedOnly,
            "goal projection requires start-only clamping");
    constexpr double kDamping = 1e-4;
    ProjectionResult res;
    res.trajectory = traj;
    int T = traj.steps();
    for (int it = 0; it <= max_iters; ++it) {
        VecX q_goal = res.trajectory.waypoints.row(T).transpose();
        Vec2 r = target_position - forward_kinematics(arm, q_goal).position;
        res.residual = r.norm();
        res.iterations = it;
        if (res.residual < tolerance) {
            res.converged = true;
            return res;
        }
        if (it == max_iters) break;
        MatX J = jacobian(arm, q_goal).topRows(2);
        Eigen::Matrix2d JJt = (J * J.transpose()).eval();
        JJt.diagonal().array() += kDamping * kDamping;
        VecX dq = J.transpose() * JJt.ldlt().solve(r);
        for (int k = 0; k < ops.free(); ++k)
            res.trajectory.waypoints.row(k + 1) += ops.goal_profile[k] * dq.transpose();
    }
    return res;
}

/// Collision cost of a single configuration (no arc-length factor).
inline double configuration_collision_cost(const PlanarArm& arm, const Scene& scene,
                                           const VecX& q) {
    double c = 0.0;
    for (const Vec2& p : body_points(arm, q)) c += scene.local_collision_cost(p);
    return c;
}

/// Finite-difference descent along the position-null-space directions of the
/// goal configuration, propagated along the ramp. Returns the input unchanged
/// (applied = false) when the arm is not redundant at q_T.
inline Trajectory null_space_update(const Trajectory& traj, const PlanarArm& arm,
                                    const Scene& scene, const SmoothnessOperators& ops,
                                    double null_step_scale, double null_fd_step, double eta,
                                    bool* applied = nullptr) {
    require(ops.clamp_mode == ClampMode::StartFixedOnly,
            "null-space update requires start-only clamping");
    if (applied) *applied = false;
    int T = traj.steps();
    VecX q_goal = traj.waypoints.row(T).transpose();
    auto basis = null_space_basis(arm, q_goal, TaskRows::position());
    if (basis.empty()) return traj;

    double c0 = configuration_collision_cost(arm, scene, q_goal);
    VecX dq = VecX::Zero(traj.dims());
    for (const VecX& e : basis) {
        double c1 = configuration_collision_cost(arm, scene, q_goal + null_fd_step * e);
        dq += null_step_scale * ((c1 - c0) / null_fd_step) * e;
    }
    if (dq.squaredNorm() == 0.0) return traj;
    Trajectory out = traj;
    VecX step = (-1.0 / eta) * dq;
    for (int k = 0; k < ops.free(); ++k)
        out.waypoints.row(k + 1) += ops.goal_profile[k] * step.transpose();
    if (applied) *applied = true;
    return out;
}

/// Clamps free waypoints into the arm's joint limits, smoothing each
/// correction into the neighbours with a tent profile, then snapping any
/// residual violation. Errors out when a clamped endpoint itself violates.
inline Trajectory clamp_joint_limits(const Trajectory& traj, const PlanarArm& arm,
                                     const SmoothnessOperators& ops) {
    if (!arm.joint_limits) return traj;
    const auto& limits = *arm.joint_limits;
    int T = traj.steps();
    require(within_joint_limits(arm, traj.waypoints.row(0).transpose()),
            "start configuration violates joint limits");
    if (ops.clamp_mode == ClampMode::BothEndsFixed)
        require(within_joint_limits(arm, traj.waypoints.row(T).transpose()),
                "goal configuration violates joint limits");

    Trajectory out = traj;
    int n = ops.free();
    MatX delta = MatX::Zero(n, traj.dims());
    bool any = false;
    for (int k = 0; k < n; ++k) {
        for (int j = 0; j < traj.dims(); ++j) {
            double v = out.waypoints(k + 1, j);
            double clamped = std::clamp(v, limits[j].first, limits[j].second);
            if (clamped != v) {
                delta(k, j) = clamped - v;
                any = true;
            }
        }
    }
    if (!any) return out;
    for (int k = 0; k < n; ++k) {
        if (delta.row(k).isZero(0.0)) continue;
        VecX profile = ops.tent_profile(k);
        for (int i = 0; i < n; ++i)
            out.waypoints.row(i + 1) += profile[i] * delta.row(k);
    }
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < traj.dims(); ++j)
            out.waypoints(k + 1, j) =
                std::clamp(out.waypoints(k + 1, j), limits[j].first, limits[j].second);
    return out;
}

namespace detail {

struct RefineOutcome {
    Trajectory trajectory;
    double final_cost = 0.0;
    bool projection_failed = false;
    double projection_residual = 0.0;
};

/// Trust-region refinement loop: covariant step, goal projection, optional
/// null-space descent and limit clamping each iteration. Steps that raise the
/// cost are rejected and shrink the trust region (eta doubles); five
/// consecutive decreases grow it (eta halves).
inline RefineOutcome covariant_refine(Trajectory traj, const PlanarArm& arm, const Scene& scene,
                                      const CostParams& cost_params,
                                      const SmoothnessOperators& ops, const SmtoConfig& config,
                                      GoalMode goal_mode, const Vec2& goal_position) {
    constexpr double kEtaFloor = 1e-2;
    constexpr double kEtaCeil = 1e6;
    RefineOutcome out;
    bool rotational = goal_mode == GoalMode::Rotational;

    if (rotational) {
        auto proj = project_goal_constraint(traj, arm, goal_position, ops,
                                            config.projection_tolerance);
        out.projection_residual = proj.residual;
        if (!proj.converged) {
            out.projection_failed = true;
            out.trajectory = std::move(traj);
            out.final_cost = total_cost(out.trajectory, arm, scene, cost_params);
            return out;
        }
        traj = std::move(proj.trajectory);
    }
    if (arm.joint_limits) traj = clamp_joint_limits(traj, arm, ops);

    constexpr double kStepCap = 0.25;  // rad per joint per iteration
    double eta = config.step_inverse_eta;
    double current = total_cost(traj, arm, scene, cost_params);
    int stalled = 0;
    for (int it = 0; it < config.refine_iterations; ++it) {
        MatX g = cost_gradient(traj, arm, scene, cost_params, ops);
        // the preconditioner amplifies smooth directions by O(T^3): bound the
        // per-joint step, then backtrack eta until the step is accepted so a
        // wall contact cannot permanently throttle the smooth directions
        double raw_norm = ops.metric_llt.solve(g).cwiseAbs().maxCoeff();
        double eta_try = std::max(eta, raw_norm / kStepCap);
        bool accepted = false;
        for (int trial = 0; trial < 10 && eta_try <= kEtaCeil; ++trial) {
            Trajectory cand = covariant_update(traj, g, ops, eta_try);
            if (rotational) {
                auto proj = project_goal_constraint(cand, arm, goal_position, ops,
                                                    config.projection_tolerance);
                if (!proj.converged) {  // failed restoration counts as a bad step
                    eta_try *= 2.0;
                    continue;
                }
                out.projection_residual = proj.residual;
                cand = std::move(proj.trajectory);
                if (config.enable_null_update)
                    cand = null_space_update(cand, arm, scene, ops, config.null_step_scale,
                                             config.null_fd_step, eta_try);
            }
            if (arm.joint_limits) cand = clamp_joint_limits(cand, arm, ops);

            double c_new = total_cost(cand, arm, scene, cost_params);
            if (c_new <= current) {
                double drop = current - c_new;
                traj = std::move(cand);
                current = c_new;
                accepted = true;
                // optimistic reset: retry larger steps next iteration
                eta = std::max(eta_try / 2.0, kEtaFloor);
                stalled = drop < 1e-14 * std::max(1.0, current) ? stalled + 1 : 0;
                break;
            }
            eta_try *= 2.0;
        }
        if (!accepted) {
            eta = std::min(eta_try, kEtaCeil);
            ++stalled;
        }
        if (stalled >= 15) break;
    }
    out.trajectory = std::move(traj);
    out.final_cost = current;
    return out;
}

inline MatX flatten_batch(const SampleBatch& batch, ClampMode mode) {
    int N = batch.size();
    VecX first = flatten_free(batch.trajectories[0], mode);
    MatX flat(N, first.size());
    flat.row(0) = first.transpose();
    for (int i = 1; i < N; ++i)
        flat.row(i) = flatten_free(batch.trajectories[i], mode).transpose();
    return flat;
}

/// Merge near-duplicate modes (flat free-waypoint distance below
/// 0.05 * sqrt(free dims)), keeping the lower cost.
template <typename CostOf>
inline int deduplicate(std::vector<Trajectory>& modes, std::vector<int>& cluster_ids,
                       ClampMode clamp_mode, CostOf&& cost_of) {
    int merges = 0;
    double dims = static_cast<double>(flatten_free(modes[0], clamp_mode).size());
    double threshold = 0.05 * std::sqrt(dims);
    std::vector<Trajectory> kept;
    std::vector<int> kept_ids;
    std::vector<double> kept_costs;
    for (std::size_t i = 0; i < modes.size(); ++i) {
        double ci = cost_of(modes[i]);
        bool merged = false;
        for (std::size_t k = 0; k < kept.size(); ++k) {
            double d = (flatten_free(modes[i], clamp_mode) - flatten_free(kept[k], clamp_mode))
                           .norm();
            if (d < threshold) {
                if (ci < kept_costs[k]) {
                    kept[k] = modes[i];
                    kept_costs[k] = ci;
                    kept_ids[k] = cluster_ids[i];
                }
                merged = true;
                ++merges;
                break;
            }
        }
        if (!merged) {
            kept.push_back(modes[i]);
            kept_ids.push_back(cluster_ids[i]);
            kept_costs.push_back(ci);
        }
    }
    modes = std::move(kept);
    cluster_ids = std::move(kept_ids);
    return merges;
}

}  // namespace detail

/// Covariant-descent baseline: refines the straight-line initialization with
/// no sampling or density estimation.
inline SolutionSet refine_only_plan(const Problem& problem) {
    require(problem.arm.has_value(), "refine_only_plan requires an arm");
    const PlanarArm& arm = *problem.arm;
    arm.validate();
    problem.config.validate();
    problem.cost.validate();
    auto t0 = std::chrono::steady_clock::now();

    ClampMode clamp = problem.goal_mode == GoalMode::Fixed ? ClampMode::BothEndsFixed
                                                           : ClampMode::StartFixedOnly;
    auto ops = build_operators(problem.config.steps, arm.dof(), clamp);
    Trajectory initial = linear_trajectory(problem.q_start, problem.q_goal, problem.config.steps);
    Vec2 goal_position = forward_kinematics(arm, problem.q_goal).position;

    SmtoConfig cfg = problem.config;
    cfg.refine_iterations = cfg.refine_iterations * cfg.outer_iterations;
    auto outcome = detail::covariant_refine(initial, arm, problem.scene, problem.cost, ops, cfg,
                                            problem.goal_mode, goal_position);

    SolutionSet out;
    Solution sol;
    sol.trajectory = outcome.trajectory;
    sol.collision_cost = obstacle_cost(sol.trajectory, arm, problem.scene);
    sol.smoothness = smoothness_cost(sol.trajectory);
    sol.final_cost = outcome.final_cost;
    sol.cluster_id = 0;
    out.solutions.push_back(std::move(sol));
    out.infeasible = outcome.projection_failed ||
                     out.solutions[0].collision_cost >= problem.config.collision_accept_threshold;
    out.diagnostics.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

/// Full planning loop: alternates cost-weighted density estimation over
/// sampled trajectories (importance weights, spectral embedding, weighted
/// VBEM, per-cluster weighted means) with covariant refinement and constraint
/// projection of the extracted modes.
inline SolutionSet smto_plan(const Problem& problem) {
    require(problem.arm.has_value(), "smto_plan requires an arm (see plan_binary_region)");
    const PlanarArm& arm = *problem.arm;
    arm.validate();
    problem.scene.validate();
    problem.config.validate();
    problem.cost.validate();
    problem.proposal.validate();
    require(problem.q_start.size() == arm.dof() && problem.q_goal.size() == arm.dof(),
            "problem.q_start / q_goal dimension does not match the arm");
    require(within_joint_limits(arm, problem.q_start),
            "problem.q_start violates the arm's joint limits");
    if (problem.goal_mode == GoalMode::Fixed)
        require(within_joint_limits(arm, problem.q_goal),
                "problem.q_goal violates the arm's joint limits");
    if (problem.config.refine_only) return refine_only_plan(problem);

    auto t0 = std::chrono::steady_clock::now();
    const SmtoConfig& cfg = problem.config;
    bool rotational = problem.goal_mode == GoalMode::Rotational;
    ClampMode clamp = rotational ? ClampMode::StartFixedOnly : ClampMode::BothEndsFixed;
    auto ops = build_operators(cfg.steps, arm.dof(), clamp);

    ProposalParams proposal = problem.proposal;
    proposal.seed = cfg.seed;
    Vec2 goal_position = forward_kinematics(arm, problem.q_goal).position;

    auto pin_endpoints = [&](Trajectory& traj) {
        traj.waypoints.row(0) = problem.q_start.transpose();
        if (!rotational) traj.waypoints.row(cfg.steps) = problem.q_goal.transpose();
    };

    std::vector<Trajectory> modes{linear_trajectory(problem.q_start, problem.q_goal, cfg.steps)};
    std::vector<int> cluster_ids{0};
    SolutionSet out;

    for (int k = 1; k <= cfg.outer_iterations; ++k) {
        SampleBatch batch =
            rotational ? sample_goal_exploration(modes, arm, ops, proposal, cfg.batch_size, k,
                                                 cfg.enable_null_exploration)
                       : sample_fixed_goal(modes, ops, proposal, cfg.batch_size, k);

        VecX costs(batch.size());
        parallel_for(batch.size(), [&](int i) {
            costs[i] = total_cost(batch.trajectories[i], arm, problem.scene, problem.cost);
        });
        ImportanceWeights weights =
            importance_weights(costs, batch.log_proposal_density, problem.cost.cost_scale_alpha,
                               1.0 / std::sqrt(static_cast<double>(batch.size())));

        MatX flat = detail::flatten_batch(batch, clamp);
        int d_embed = std::min(cfg.embed_dim, batch.size() - 1);
        EmbeddedBatch embedding = laplacian_eigenmap(flat, cfg.k_neighbors, d_embed);
        WeightedGmmPosterior posterior =
            vbem_fit(embedding, weights, cfg.max_solutions, {}, cfg.vbem_max_iters, cfg.vbem_tol,
                     mix_seed(cfg.seed, 0x76626d, k));
        out.diagnostics.elbo_traces.push_back(posterior.elbo_trace);

        std::vector<int> assignments = assign_clusters(posterior, embedding);
        ModeSet mode_set = mode_trajectories(batch, weights, assignments, costs);

        // refine every extracted mode (independent, deterministic order)
        int L = mode_set.count();
        std::vector<detail::RefineOutcome> refined(L);
        parallel_for(L, [&](int i) {
            Trajectory t = mode_set.modes[i].trajectory;
            pin_endpoints(t);
            refined[i] = detail::covariant_refine(t, arm, problem.scene, problem.cost, ops, cfg,
                                                  problem.goal_mode, goal_position);
        });

        modes.clear();
        cluster_ids.clear();
        for (int i = 0; i < L; ++i) {
            if (refined[i].projection_failed) {
                ++out.diagnostics.dropped_projection_failures;
                continue;
            }
            out.diagnostics.projection_residuals.push_back(refined[i].projection_residual);
            modes.push_back(refined[i].trajectory);
            cluster_ids.push_back(mode_set.modes[i].cluster_id);
        }
        if (modes.empty()) {  // keep the best sample so the loop can continue
            int best = 0;
            for (int i = 1; i < batch.size(); ++i)
                if (costs[i] < costs[best]) best = i;
            Trajectory t = batch.trajectories[best];
            pin_endpoints(t);
            modes.push_back(std::move(t));
            cluster_ids.push_back(0);
        }

        out.diagnostics.dedup_merges += detail::deduplicate(
            modes, cluster_ids, clamp, [&](const Trajectory& t) {
                return total_cost(t, arm, problem.scene, problem.cost);
            });
        out.diagnostics.mode_counts.push_back(static_cast<int>(modes.size()));

        bool all_clean = true;
        for (const auto& mode : modes)
            if (obstacle_cost(mode, arm, problem.scene) >= cfg.collision_accept_threshold)
                all_clean = false;
        if (all_clean && (static_cast<int>(modes.size()) >= 2 || cfg.max_solutions == 1)) break;
    }

    for (std::size_t i = 0; i < modes.size(); ++i) {
        Solution sol;
        sol.trajectory = modes[i];
        sol.collision_cost = obstacle_cost(modes[i], arm, problem.scene);
        sol.smoothness = smoothness_cost(modes[i]);
        sol.final_cost = sol.collision_cost + problem.cost.smoothness_weight * sol.smoothness;
        sol.cluster_id = cluster_ids[i];
        out.solutions.push_back(std::move(sol));
    }
    std::stable_sort(out.solutions.begin(), out.solutions.end(),
                     [](const Solution& a, const Solution& b) { return a.final_cost < b.final_cost; });
    out.infeasible = true;
    for (const auto& sol : out.solutions)
        if (sol.collision_cost < cfg.collision_accept_threshold) out.infeasible = false;
    out.diagnostics.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

/// Density-estimation-only planner for flat binary-region tasks with a 2D
/// point robot: two sampling + density iterations at T = 50, no gradient
/// refinement; solutions are the per-cluster weighted mean paths.
inline SolutionSet plan_binary_region(const Problem& problem) {
    require(!problem.arm.has_value(), "plan_binary_region expects a point robot");
    require(!problem.scene.unit_cost_regions.empty(),
            "plan_binary_region requires scene regions");
    require(problem.q_start.size() == 2 && problem.q_goal.size() == 2,
            "point-robot configurations must be 2D");
    problem.scene.validate();
    problem.config.validate();
    problem.proposal.validate();

    auto t0 = std::chrono::steady_clock::now();
    SmtoConfig cfg = problem.config;
    cfg.steps = 50;          // pinned for this task family
    cfg.outer_iterations = 2;
    auto ops = build_operators(cfg.steps, 2, ClampMode::BothEndsFixed);
    ProposalParams proposal = problem.proposal;
    proposal.seed = cfg.seed;

    auto region_path_cost = [&](const Trajectory& t) {
        double c = 0.0;
        for (int s = 0; s <= t.steps(); ++s)
            c += problem.scene.region_cost(t.waypoints.row(s).transpose());
        return c;
    };

    std::vector<Trajectory> modes{linear_trajectory(problem.q_start, problem.q_goal, cfg.steps)};
    std::vector<int> cluster_ids{0};
    SolutionSet out;

    for (int k = 1; k <= cfg.outer_iterations; ++k) {
        SampleBatch batch = sample_fixed_goal(modes, ops, proposal, cfg.batch_size, k);
        VecX costs(batch.size());
        parallel_for(batch.size(), [&](int i) { costs[i] = region_path_cost(batch.trajectories[i]); });
        ImportanceWeights weights =
            importance_weights(costs, batch.log_proposal_density, problem.cost.cost_scale_alpha,
                               1.0 / std::sqrt(static_cast<double>(batch.size())));
        MatX flat = detail::flatten_batch(batch, ClampMode::BothEndsFixed);
        int d_embed = std::min(cfg.embed_dim, batch.size() - 1);
        EmbeddedBatch embedding = laplacian_eigenmap(flat, cfg.k_neighbors, d_embed);
        WeightedGmmPosterior posterior =
            vbem_fit(embedding, weights, cfg.max_solutions, {}, cfg.vbem_max_iters, cfg.vbem_tol,
                     mix_seed(cfg.seed, 0x76626d, k));
        out.diagnostics.elbo_traces.push_back(posterior.elbo_trace);

        std::vector<int> assignments = assign_clusters(posterior, embedding);
        ModeSet mode_set = mode_trajectories(batch, weights, assignments, costs);
        // no gradient phase collapses within-basin duplicates here, so rejoin
        // clusters that the mixture split across one basin
        out.diagnostics.dedup_merges +=
            merge_same_basin_modes(mode_set, batch, weights, region_path_cost);
        modes.clear();
        cluster_ids.clear();
        for (auto& mode : mode_set.modes) {
            Trajectory t = mode.trajectory;
            t.waypoints.row(0) = problem.q_start.transpose();
            t.waypoints.row(cfg.steps) = problem.q_goal.transpose();
            modes.push_back(std::move(t));
            cluster_ids.push_back(mode.cluster_id);
        }
        out.diagnostics.mode_counts.push_back(static_cast<int>(modes.size()));
    }

    for (std::size_t i = 0; i < modes.size(); ++i) {
        Solution sol;
        sol.trajectory = modes[i];
        sol.collision_cost = region_path_cost(modes[i]);
        sol.smoothness = smoothness_cost(modes[i]);
        sol.final_cost = sol.collision_cost;
        sol.cluster_id = cluster_ids[i];
        out.solutions.push_back(std::move(sol));
    }
    std::stable_sort(out.solutions.begin(), out.solutions.end(),
                     [](const Solution& a, const Solution& b) { return a.final_cost < b.final_cost; });
    out.infeasible = true;
    for (const auto& sol : out.solutions)
        if (sol.collision_cost < cfg.collision_accept_threshold) out.infeasible = false;
    out.diagnostics.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

}  // namespace smto
