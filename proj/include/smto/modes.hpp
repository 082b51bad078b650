#pragma once

#include "smto/sampling.hpp"
#include "smto/weights.hpp"

#include <algorithm>
#include <map>
#include <vector>

namespace smto {

struct Mode {
    Trajectory trajectory;
    std::vector<int> member_indices;
    double total_weight = 0.0;
    double mean_cost = 0.0;
    int cluster_id = 0;
};

struct ModeSet {
    std::vector<Mode> modes;

    int count() const { return static_cast<int>(modes.size()); }
};

/// Per-cluster importance-weighted trajectory means, sorted by ascending
/// weighted mean cost. Clusters whose total weight vanishes are dropped.
inline ModeSet mode_trajectories(const SampleBatch& batch, const ImportanceWeights& weights,
                                 const std::vector<int>& assignments, const VecX& costs) {
    int N = batch.size();
    require(N >= 1, "mode_trajectories needs a nonempty batch");
    require(weights.size() == N && static_cast<int>(assignments.size()) == N &&
                costs.size() == N,
            "batch, weights, assignments and costs must align");

    std::map<int, std::vector<int>> clusters;
    for (int i = 0; i < N; ++i) clusters[assignments[i]].push_back(i);

    ModeSet out;
    for (const auto& [cluster_id, members] : clusters) {
        double total_w = 0.0;
        for (int i : members) total_w += weights.w[i];
        if (total_w <= 0.0) continue;

        MatX mean = MatX::Zero(batch.trajectories[0].waypoints.rows(),
                               batch.trajectories[0].waypoints.cols());
        double mean_cost = 0.0;
        for (int i : members) {
            mean += (weights.w[i] / total_w) * batch.trajectories[i].waypoints;
            mean_cost += (weights.w[i] / total_w) * costs[i];
        }
        Mode mode;
        mode.trajectory = Trajectory(std::move(mean), batch.trajectories[0].dt);
        mode.member_indices = members;
        mode.total_weight = total_w;
        mode.mean_cost = mean_cost;
        mode.cluster_id = cluster_id;
        out.modes.push_back(std::move(mode));
    }
    require(!out.modes.empty(), "all clusters carry zero weight");
    std::stable_sort(out.modes.begin(), out.modes.end(),
                     [](const Mode& a, const Mode& b) { return a.mean_cost < b.mean_cost; });
    return out;
}

/// Hill-valley basin test: two modes share a basin when no interpolated
/// trajectory between them costs more than the worse of the two.
template <typename CostFn>
inline bool same_basin(const Trajectory& a, const Trajectory& b, CostFn&& cost_of,
                       double cost_a, double cost_b, int probes = 5, double slack = 1e-9) {
    double ceiling = std::max(cost_a, cost_b) + slack;
    for (int k = 1; k <= probes; ++k) {
        double s = static_cast<double>(k) / (probes + 1);
        Trajectory mid = a;
        mid.waypoints = (1.0 - s) * a.waypoints + s * b.waypoints;
        if (cost_of(mid) > ceiling) return false;
    }
    return true;
}

/// Merges same-basin modes of a gradient-free fit. Each merge re-applies the
/// weighted-mean extraction over the united member set, so one consolidated
/// trajectory represents the basin. Returns the number of merges.
template <typename CostFn>
inline int merge_same_basin_modes(ModeSet& set, const SampleBatch& batch,
                                  const ImportanceWeights& weights, CostFn&& cost_of) {
    int merges = 0;
    bool changed = true;
    while (changed && set.count() > 1) {
        changed = false;
        for (std::size_t i = 0; i < set.modes.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < set.modes.size() && !changed; ++j) {
                Mode& a = set.modes[i];
                Mode& b = set.modes[j];
                double cost_a = cost_of(a.trajectory);
                double cost_b = cost_of(b.trajectory);
                if (!same_basin(a.trajectory, b.trajectory, cost_of, cost_a, cost_b)) continue;

                std::vector<int> members = a.member_indices;
                members.insert(members.end(), b.member_indices.begin(), b.member_indices.end());
                double total_w = 0.0;
                for (int idx : members) total_w += weights.w[idx];
                MatX mean = MatX::Zero(a.trajectory.waypoints.rows(),
                                       a.trajectory.waypoints.cols());
                for (int idx : members)
                    mean += (weights.w[idx] / total_w) * batch.trajectories[idx].waypoints;

                // keep the cheapest representative of the joined basin
                Trajectory joined = a.trajectory;
                joined.waypoints = std::move(mean);
                double cost_joined = cost_of(joined);
                Trajectory* best = &joined;
                double best_cost = cost_joined;
                if (cost_a < best_cost) {
                    best = &a.trajectory;
                    best_cost = cost_a;
                }
                if (cost_b < best_cost) {
                    best = &b.trajectory;
                    best_cost = cost_b;
                }
                a.cluster_id = cost_a <= cost_b ? a.cluster_id : b.cluster_id;
                a.trajectory = *best;
                a.member_indices = std::move(members);
                a.total_weight = total_w;
                a.mean_cost = std::min(a.mean_cost, b.mean_cost);
                set.modes.erase(set.modes.begin() + j);
                ++merges;
                changed = true;
            }
        }
    }
    std::stable_sort(set.modes.begin(), set.modes.end(),
                     [](const Mode& x, const Mode& y) { return x.mean_cost < y.mean_cost; });
    return merges;
}

}  // namespace smto
