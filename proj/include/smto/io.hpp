#pragma once

#include "smto/optimizer.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace smto {

using nlohmann::json;

namespace detail {

inline const json& member(const json& j, const std::string& path, const std::string& key) {
    require(j.is_object(), path.empty() ? "document must be a JSON object"
                                        : path + " must be a JSON object");
    auto it = j.find(key);
    std::string full = path.empty() ? key : path + "." + key;
    require(it != j.end(), "missing field: " + full);
    return *it;
}

inline double number_at(const json& j, const std::string& path, const std::string& key) {
    const json& v = member(j, path, key);
    require(v.is_number(), (path.empty() ? key : path + "." + key) + ": expected a number");
    return v.get<double>();
}

inline double number_or(const json& j, const std::string& path, const std::string& key,
                        double fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    return number_at(j, path, key);
}

inline bool bool_or(const json& j, const std::string& path, const std::string& key,
                    bool fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    require(v.is_boolean(), (path.empty() ? key : path + "." + key) + ": expected a boolean");
    return v.get<bool>();
}

inline Vec2 vec2_at(const json& j, const std::string& path, const std::string& key) {
    const json& v = member(j, path, key);
    std::string full = path.empty() ? key : path + "." + key;
    require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(),
            full + ": expected [x, y]");
    return Vec2(v[0].get<double>(), v[1].get<double>());
}

inline VecX vector_at(const json& j, const std::string& path, const std::string& key) {
    const json& v = member(j, path, key);
    std::string full = path.empty() ? key : path + "." + key;
    require(v.is_array() && !v.empty(), full + ": expected a nonempty array of numbers");
    VecX out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(v[i].is_number(), full + "[" + std::to_string(i) + "]: expected a number");
        out[static_cast<int>(i)] = v[i].get<double>();
    }
    return out;
}

inline std::pair<double, double> interval_at(const json& j, const std::string& path,
                                             const std::string& key,
                                             std::pair<double, double> fallback) {
    if (!j.is_object() || !j.contains(key)) return fallback;
    const json& v = j.at(key);
    std::string full = path.empty() ? key : path + "." + key;
    require(v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number(),
            full + ": expected [lo, hi]");
    return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace detail

inline Scene scene_from_json(const json& sj) {
    Scene scene;
    scene.margin_epsilon = detail::number_at(sj, "scene", "margin_epsilon");
    const json& ws = detail::member(sj, "scene", "workspace");
    scene.workspace.min = detail::vec2_at(ws, "scene.workspace", "min");
    scene.workspace.max = detail::vec2_at(ws, "scene.workspace", "max");
    if (sj.contains("obstacles")) {
        const json& obs = sj.at("obstacles");
        require(obs.is_array(), "scene.obstacles: expected an array");
        for (std::size_t i = 0; i < obs.size(); ++i) {
            std::string path = "scene.obstacles[" + std::to_string(i) + "]";
            const json& o = obs[i];
            require(o.is_object() && o.contains("type") && o.at("type").is_string(),
                    path + ": expected an object with a \"type\"");
            std::string type = o.at("type").get<std::string>();
            Obstacle ob;
            if (type == "circle") {
                ob.shape = Circle{detail::vec2_at(o, path, "center"),
                                  detail::number_at(o, path, "radius")};
            } else if (type == "rect") {
                ob.shape = Rect{detail::vec2_at(o, path, "min"), detail::vec2_at(o, path, "max")};
            } else if (type == "capsule") {
                ob.shape = Capsule{detail::vec2_at(o, path, "a"), detail::vec2_at(o, path, "b"),
                                   detail::number_at(o, path, "radius")};
            } else {
                throw std::invalid_argument(path + ".type: unknown obstacle type \"" + type +
                                            "\" (circle | rect | capsule)");
            }
            scene.obstacles.push_back(std::move(ob));
        }
    }
    if (sj.contains("regions")) {
        const json& regions = sj.at("regions");
        require(regions.is_array(), "scene.regions: expected an array of polygons");
        for (std::size_t r = 0; r < regions.size(); ++r) {
            std::string path = "scene.regions[" + std::to_string(r) + "]";
            const json& poly = regions[r];
            require(poly.is_array() && poly.size() >= 3, path + ": expected >= 3 vertices");
            std::vector<Vec2> vertices;
            for (std::size_t v = 0; v < poly.size(); ++v) {
                const json& p = poly[v];
                require(p.is_array() && p.size() == 2 && p[0].is_number() && p[1].is_number(),
                        path + "[" + std::to_string(v) + "]: expected [x, y]");
                vertices.emplace_back(p[0].get<double>(), p[1].get<double>());
            }
            scene.unit_cost_regions.push_back(std::move(vertices));
        }
    }
    scene.validate();
    return scene;
}

/// Parses and validates a problem document; every failure names the offending
/// field path.
inline Problem problem_from_json(const json& root) {
    Problem p;
    const json& aj = detail::member(root, "", "arm");
    const json& sj = detail::member(root, "", "scene");
    const json& pj = detail::member(root, "", "problem");
    const json& mj = detail::member(root, "", "smto");

    std::string arm_type = "links";
    if (aj.contains("type")) {
        require(aj.at("type").is_string(), "arm.type: expected a string");
        arm_type = aj.at("type").get<std::string>();
    }
    if (arm_type == "links") {
        PlanarArm arm;
        VecX lengths = detail::vector_at(aj, "arm", "link_lengths");
        arm.link_lengths.assign(lengths.data(), lengths.data() + lengths.size());
        if (aj.contains("base")) arm.base_position = detail::vec2_at(aj, "arm", "base");
        arm.base_orientation = detail::number_or(aj, "arm", "base_orientation", 0.0);
        arm.body_points_per_link =
            static_cast<int>(detail::number_or(aj, "arm", "body_points_per_link", 4));
        if (aj.contains("joint_limits") && !aj.at("joint_limits").is_null()) {
            const json& jl = aj.at("joint_limits");
            require(jl.is_array() && jl.size() == arm.link_lengths.size(),
                    "arm.joint_limits: expected one [lo, hi] pair per joint");
            std::vector<std::pair<double, double>> limits;
            for (std::size_t i = 0; i < jl.size(); ++i) {
                std::string path = "arm.joint_limits[" + std::to_string(i) + "]";
                require(jl[i].is_array() && jl[i].size() == 2 && jl[i][0].is_number() &&
                            jl[i][1].is_number(),
                        path + ": expected [lo, hi]");
                limits.emplace_back(jl[i][0].get<double>(), jl[i][1].get<double>());
            }
            arm.joint_limits = std::move(limits);
        }
        try {
            arm.validate();
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("arm: " + std::string(e.what()));
        }
        p.arm = std::move(arm);
    } else if (arm_type == "point") {
        p.arm.reset();
    } else {
        throw std::invalid_argument("arm.type: unknown robot type \"" + arm_type +
                                    "\" (links | point)");
    }

    p.scene = scene_from_json(sj);

    p.q_start = detail::vector_at(pj, "problem", "q_start");
    p.q_goal = detail::vector_at(pj, "problem", "q_goal");
    require(p.q_start.size() == p.q_goal.size(),
            "problem.q_goal: dimension differs from problem.q_start");
    std::string mode = detail::member(pj, "problem", "goal_mode").get<std::string>();
    if (mode == "fixed") {
        p.goal_mode = GoalMode::Fixed;
    } else if (mode == "rotational") {
        p.goal_mode = GoalMode::Rotational;
    } else {
        throw std::invalid_argument("problem.goal_mode: expected \"fixed\" or \"rotational\"");
    }
    p.proposal.rotation_range = detail::interval_at(pj, "problem", "rotation_range", {0.0, 0.0});
    p.proposal.null_range = detail::interval_at(pj, "problem", "null_range", {0.0, 0.0});
    p.proposal.end_sample_fraction =
        detail::number_or(pj, "problem", "end_sample_fraction", 0.5);

    SmtoConfig& c = p.config;
    c.max_solutions = static_cast<int>(detail::number_at(mj, "smto", "O"));
    c.batch_size = static_cast<int>(detail::number_at(mj, "smto", "N"));
    c.outer_iterations = static_cast<int>(detail::number_at(mj, "smto", "K"));
    c.steps = static_cast<int>(detail::number_at(mj, "smto", "T"));
    c.embed_dim = static_cast<int>(detail::number_at(mj, "smto", "d_embed"));
    p.cost.cost_scale_alpha = detail::number_at(mj, "smto", "cost_scale_alpha");
    p.cost.smoothness_weight = detail::number_at(mj, "smto", "smoothness_weight");
    p.proposal.scale_a = detail::number_at(mj, "smto", "scale_a");
    c.seed = static_cast<std::uint64_t>(detail::number_at(mj, "smto", "seed"));
    c.k_neighbors = static_cast<int>(detail::number_or(mj, "smto", "k_neighbors", 15));
    c.refine_iterations =
        static_cast<int>(detail::number_or(mj, "smto", "refine_iterations", 100));
    c.step_inverse_eta = detail::number_or(mj, "smto", "step_inverse_eta", 1.0);
    c.null_step_scale = detail::number_or(mj, "smto", "null_step_scale", 0.2);
    c.null_fd_step = detail::number_or(mj, "smto", "null_fd_step", 1e-4);
    if (mj.contains("thresholds")) {
        const json& th = mj.at("thresholds");
        c.collision_accept_threshold =
            detail::number_or(th, "smto.thresholds", "collision_accept", 1e-4);
        c.projection_tolerance = detail::number_or(th, "smto.thresholds", "projection", 1e-6);
    }
    c.enable_null_exploration = detail::bool_or(mj, "smto", "enable_null_exploration", true);
    c.enable_null_update = detail::bool_or(mj, "smto", "enable_null_update", true);
    c.refine_only = detail::bool_or(mj, "smto", "refine_only", false);
    p.proposal.seed = c.seed;

    try {
        c.validate();
        p.cost.validate();
        p.proposal.validate();
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string(e.what()));
    }

    if (p.arm) {
        require(p.q_start.size() == p.arm->dof(),
                "problem.q_start: dimension does not match arm.link_lengths");
    } else {
        require(p.q_start.size() == 2, "problem.q_start: point robots are 2D");
        require(!p.scene.unit_cost_regions.empty(),
                "scene.regions: point-robot problems need at least one region");
        require(p.goal_mode == GoalMode::Fixed,
                "problem.goal_mode: point-robot problems use fixed goals");
    }
    return p;
}

inline bool is_binary_region_problem(const Problem& p) { return !p.arm.has_value(); }

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
    return j;
}

/// Applies a "dot.path=value" override; the value is parsed as JSON when
/// possible and kept as a string otherwise.
inline void apply_override(json& root, const std::string& spec) {
    auto eq = spec.find('=');
    require(eq != std::string::npos && eq > 0, "override must look like section.key=value: " + spec);
    std::string path = spec.substr(0, eq);
    std::string value = spec.substr(eq + 1);
    json parsed;
    try {
        parsed = json::parse(value);
    } catch (const json::parse_error&) {
        parsed = value;
    }
    json* node = &root;
    std::size_t start = 0;
    while (true) {
        auto dot = path.find('.', start);
        std::string key = path.substr(start, dot == std::string::npos ? dot : dot - start);
        require(!key.empty(), "override has an empty path segment: " + spec);
        if (dot == std::string::npos) {
            (*node)[key] = parsed;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

inline json result_to_json(const SolutionSet& result, const json& resolved_config) {
    json out;
    out["solutions"] = json::array();
    for (const auto& sol : result.solutions) {
        json s;
        json rows = json::array();
        for (int t = 0; t < sol.trajectory.waypoints.rows(); ++t) {
            json row = json::array();
            for (int j = 0; j < sol.trajectory.waypoints.cols(); ++j)
                row.push_back(sol.trajectory.waypoints(t, j));
            rows.push_back(std::move(row));
        }
        s["waypoints"] = std::move(rows);
        s["final_cost"] = sol.final_cost;
        s["collision_cost"] = sol.collision_cost;
        s["smoothness"] = sol.smoothness;
        s["cluster_id"] = sol.cluster_id;
        out["solutions"].push_back(std::move(s));
    }
    json diag;
    diag["mode_counts"] = result.diagnostics.mode_counts;
    diag["elbo_trace"] = result.diagnostics.elbo_traces;
    diag["projection_residuals"] = result.diagnostics.projection_residuals;
    diag["dedup_merges"] = result.diagnostics.dedup_merges;
    diag["dropped_projection_failures"] = result.diagnostics.dropped_projection_failures;
    diag["runtime_seconds"] = result.diagnostics.runtime_seconds;
    out["diagnostics"] = std::move(diag);
    out["infeasible"] = result.infeasible;
    out["config"] = resolved_config;
    return out;
}

inline Trajectory trajectory_from_json(const json& waypoints, double dt = 1.0) {
    require(waypoints.is_array() && waypoints.size() >= 3, "waypoints: expected >= 3 rows");
    int T = static_cast<int>(waypoints.size()) - 1;
    int D = static_cast<int>(waypoints[0].size());
    MatX w(T + 1, D);
    for (int t = 0; t <= T; ++t)
        for (int j = 0; j < D; ++j) w(t, j) = waypoints[t][j].get<double>();
    return Trajectory(std::move(w), dt);
}

inline void write_text_atomic(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp);
        require(out.good(), "cannot write file: " + path);
        out << content;
    }
    fs::rename(tmp, target);
}

}  // namespace smto
