#include "smto/cost.hpp"
#include "smto/weights.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace smto;
using Catch::Approx;

namespace {

PlanarArm simple_arm(int links) {
    PlanarArm arm;
    for (int i = 0; i < links; ++i) arm.link_lengths.push_back(1.0);
    arm.body_points_per_link = 4;
    return arm;
}

Scene circle_scene(Vec2 c, double r, double eps = 0.2) {
    Scene s;
    s.workspace = Rect{{-10, -10}, {10, 10}};
    s.margin_epsilon = eps;
    s.obstacles.push_back({Circle{c, r}});
    return s;
}

Trajectory random_trajectory(std::mt19937& gen, int T, int D, double amplitude = 0.6) {
    std::uniform_real_distribution<double> a(-amplitude, amplitude);
    VecX q0(D), qT(D);
    for (int j = 0; j < D; ++j) {
        q0[j] = a(gen);
        qT[j] = a(gen);
    }
    Trajectory traj = linear_trajectory(q0, qT, T);
    for (int t = 1; t < T; ++t)
        for (int j = 0; j < D; ++j) traj.waypoints(t, j) += 0.3 * a(gen);
    return traj;
}

// independent oracle: central finite differences of total_cost over the free block
MatX fd_gradient(const Trajectory& traj, const PlanarArm& arm, const Scene& scene,
                 const CostParams& params, ClampMode mode, double h = 1e-6) {
    int n = free_count(mode, traj.steps());
    MatX g(n, traj.dims());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < traj.dims(); ++j) {
            Trajectory tp = traj, tm = traj;
            tp.waypoints(i + 1, j) += h;
            tm.waypoints(i + 1, j) -= h;
            g(i, j) = (total_cost(tp, arm, scene, params) - total_cost(tm, arm, scene, params)) /
                      (2 * h);
        }
    }
    return g;
}

// independent oracle: direct re-implementation of the arc-length-weighted
// collision sum with its own forward kinematics
double quadrature_obstacle_cost(const Trajectory& traj, const PlanarArm& arm,
                                const Scene& scene) {
    int T = traj.steps();
    auto point_at = [&](int t, int link, double s) {
        Vec2 p = arm.base_position;
        double heading = arm.base_orientation;
        for (int i = 0; i < link; ++i) {
            heading += traj.waypoints(t, i);
            p += arm.link_lengths[i] * Vec2(std::cos(heading), std::sin(heading));
        }
        heading += traj.waypoints(t, link);
        return Vec2(p + s * arm.link_lengths[link] * Vec2(std::cos(heading), std::sin(heading)));
    };
    double total = 0.0;
    for (int link = 0; link < arm.dof(); ++link) {
        for (int k = 0; k < arm.body_points_per_link; ++k) {
            double s = static_cast<double>(k) / (arm.body_points_per_link - 1);
            for (int t = 0; t <= T; ++t) {
                Vec2 now = point_at(t, link, s);
                Vec2 vel;
                if (t == 0) vel = (point_at(1, link, s) - now) / traj.dt;
                else if (t == T) vel = (now - point_at(T - 1, link, s)) / traj.dt;
                else vel = (point_at(t + 1, link, s) - point_at(t - 1, link, s)) / (2 * traj.dt);
                total += scene.local_collision_cost(now) * vel.norm();
            }
        }
    }
    return 0.5 * total;
}

}  // namespace

TEST_CASE("operator matrices carry the tridiagonal stencil") {
    auto both = build_operators(4, 1, ClampMode::BothEndsFixed);  // 3 free waypoints
    MatX expected(3, 3);
    expected << 2, -1, 0, -1, 2, -1, 0, -1, 2;
    CHECK(both.diff_matrix_A.isApprox(expected, 1e-15));

    auto start_only = build_operators(3, 1, ClampMode::StartFixedOnly);
    REQUIRE(start_only.diff_matrix_A.rows() == 3);
    CHECK(start_only.diff_matrix_A(2, 1) == -1.0);
    CHECK(start_only.diff_matrix_A(2, 2) == 2.0);

    // inverse contract
    auto ops = build_operators(12, 2, ClampMode::BothEndsFixed);
    MatX prod = ops.sampling_cov_B * (ops.diff_matrix_A.transpose() * ops.diff_matrix_A);
    CHECK((prod - MatX::Identity(prod.rows(), prod.cols())).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("metric norm is positive definite") {
    auto ops = build_operators(10, 1, ClampMode::BothEndsFixed);
    std::mt19937 gen(13);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 200; ++trial) {
        VecX v(ops.free());
        for (int i = 0; i < v.size(); ++i) v[i] = z(gen);
        if (v.norm() == 0.0) continue;
        CHECK(v.dot(ops.metric_M * v) > 0.0);
    }
}

TEST_CASE("smoothness cost of a straight line is zero") {
    VecX a(2), b(2);
    a << 0, 0;
    b << 1, -2;
    CHECK(smoothness_cost(linear_trajectory(a, b, 10)) == Approx(0.0).margin(1e-24));
}

TEST_CASE("smoothness cost matches the hand-worked case and scales quadratically") {
    MatX w(4, 1);
    w << 0, 0, 1, 1;
    Trajectory traj(w, 1.0);
    CHECK(smoothness_cost(traj) == Approx(2.0));

    Trajectory scaled(3.0 * w, 1.0);
    CHECK(smoothness_cost(scaled) == Approx(9.0 * 2.0));
}

TEST_CASE("obstacle cost vanishes beyond the margin and for static trajectories") {
    PlanarArm arm = simple_arm(2);
    Scene s = circle_scene(Vec2(5, 5), 0.5);
    VecX a(2), b(2);
    a << 0, 0;
    b << 0.3, 0.2;
    CHECK(obstacle_cost(linear_trajectory(a, b, 8), arm, s) == 0.0);

    // static trajectory inside an obstacle: the arc-length factor vanishes
    Scene deep = circle_scene(Vec2(1.0, 0.0), 0.8);
    MatX w = MatX::Zero(6, 2);
    Trajectory still(w, 1.0);
    CHECK(obstacle_cost(still, arm, deep) == Approx(0.0).margin(1e-18));
}

TEST_CASE("obstacle cost agrees with an independent quadrature oracle") {
    PlanarArm arm = simple_arm(1);
    arm.body_points_per_link = 6;
    Scene s = circle_scene(Vec2(0.9, 0.35), 0.25);
    VecX a(1), b(1);
    a << -0.4;
    b << 1.0;
    Trajectory sweep = linear_trajectory(a, b, 20);
    double ours = obstacle_cost(sweep, arm, s);
    double oracle = quadrature_obstacle_cost(sweep, arm, s);
    REQUIRE(ours > 0.0);
    CHECK(ours == Approx(oracle).epsilon(1e-12));

    std::mt19937 gen(4);
    for (int trial = 0; trial < 20; ++trial) {
        PlanarArm arm2 = simple_arm(3);
        Trajectory traj = random_trajectory(gen, 12, 3, 1.2);
        Scene s2 = circle_scene(Vec2(1.2, 0.4), 0.5);
        CHECK(obstacle_cost(traj, arm2, s2) == Approx(quadrature_obstacle_cost(traj, arm2, s2))
                                                   .epsilon(1e-12)
                                                   .margin(1e-15));
    }
}

TEST_CASE("total cost composes the two terms and stays nonnegative") {
    PlanarArm arm = simple_arm(2);
    Scene s = circle_scene(Vec2(1.2, 0.6), 0.4);
    CostParams params;
    params.smoothness_weight = 0.0;

    std::mt19937 gen(8);
    for (int trial = 0; trial < 30; ++trial) {
        Trajectory traj = random_trajectory(gen, 10, 2, 1.0);
        CHECK(total_cost(traj, arm, s, params) == obstacle_cost(traj, arm, s));
        params.smoothness_weight = 0.7;
        CHECK(total_cost(traj, arm, s, params) ==
              Approx(obstacle_cost(traj, arm, s) + 0.7 * smoothness_cost(traj)));
        CHECK(total_cost(traj, arm, s, params) >= 0.0);
        params.smoothness_weight = 0.0;
    }

    VecX a(2), b(2);
    a << 0.1, 0.1;
    b << 0.2, 0.15;
    CostParams weighted;
    weighted.smoothness_weight = 1.0;
    Scene far = circle_scene(Vec2(6, 6), 0.5);
    CHECK(total_cost(linear_trajectory(a, b, 8), arm, far, weighted) ==
          Approx(0.0).margin(1e-20));
}

TEST_CASE("gradient is zero at the smoothness-only optimum") {
    PlanarArm arm = simple_arm(2);
    Scene empty;
    empty.workspace = Rect{{-10, -10}, {10, 10}};
    CostParams params;
    params.smoothness_weight = 1.0;
    auto ops = build_operators(10, 2, ClampMode::BothEndsFixed);
    VecX a(2), b(2);
    a << -0.5, 0.2;
    b << 0.8, -0.3;
    MatX g = cost_gradient(linear_trajectory(a, b, 10), arm, empty, params, ops);
    CHECK(g.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("pure smoothness gradient equals the quadratic-form derivative") {
    PlanarArm arm = simple_arm(1);
    Scene empty;
    empty.workspace = Rect{{-10, -10}, {10, 10}};
    CostParams params;
    params.smoothness_weight = 0.4;
    int T = 8;
    auto ops = build_operators(T, 1, ClampMode::BothEndsFixed);

    // zero boundary so the cross terms vanish and the gradient reduces to
    // 2 w (A^T A) xi_free / dt^4
    std::mt19937 gen(21);
    std::normal_distribution<double> z;
    MatX w = MatX::Zero(T + 1, 1);
    for (int t = 1; t < T; ++t) w(t, 0) = z(gen);
    Trajectory traj(w, 1.0);

    MatX g = cost_gradient(traj, arm, empty, params, ops);
    VecX xi = traj.waypoints.col(0).segment(1, T - 1);
    VecX expected = 2.0 * params.smoothness_weight * (ops.metric_M * xi);
    CHECK((g.col(0) - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gradient matches finite differences over random scenes") {
    std::mt19937 gen(55);
    CostParams params;
    params.smoothness_weight = 0.05;
    int checked_band = 0;
    for (int trial = 0; trial < 120; ++trial) {
        PlanarArm arm = simple_arm(3);
        auto ops = build_operators(10, 3, ClampMode::BothEndsFixed);
        std::uniform_real_distribution<double> pos(-1.5, 1.5);
        Scene s = circle_scene(Vec2(pos(gen), pos(gen)), 0.5);
        Trajectory traj = random_trajectory(gen, 10, 3, 1.1);

        MatX ga = cost_gradient(traj, arm, s, params, ops);
        MatX gn = fd_gradient(traj, arm, s, params, ClampMode::BothEndsFixed);
        double denom = std::max(gn.norm(), 1e-12);
        double rel = (ga - gn).norm() / denom;
        double cosine = (ga.cwiseProduct(gn)).sum() / std::max(ga.norm() * gn.norm(), 1e-300);
        if (obstacle_cost(traj, arm, s) > 0.0) {
            CHECK(rel < 5e-3);
            ++checked_band;
        } else {
            CHECK(rel < 1e-5);
        }
        CHECK(cosine > 0.99);
    }
    REQUIRE(checked_band >= 20);
}

TEST_CASE("obstacle cost is invariant under rigid rotation of scene and base") {
    std::mt19937 gen(61);
    std::uniform_real_distribution<double> angle(-kPi, kPi);
    for (int trial = 0; trial < 25; ++trial) {
        PlanarArm arm = simple_arm(2);
        arm.base_position = Vec2(0.3, -0.2);
        Scene s = circle_scene(Vec2(1.1, 0.5), 0.45);
        Trajectory traj = random_trajectory(gen, 8, 2, 1.0);
        double before = obstacle_cost(traj, arm, s);

        double theta = angle(gen);
        Eigen::Rotation2D<double> R(theta);
        PlanarArm rotated_arm = arm;
        rotated_arm.base_position = R * arm.base_position;
        rotated_arm.base_orientation = arm.base_orientation + theta;
        Scene rotated_scene = s;
        rotated_scene.obstacles[0].shape =
            Circle{R * std::get<Circle>(s.obstacles[0].shape).center, 0.45};
        CHECK(obstacle_cost(traj, rotated_arm, rotated_scene) == Approx(before).epsilon(1e-10));
    }
}

TEST_CASE("cost_to_weight implements the exponential batch scaling") {
    CHECK(cost_to_weight(3.0, 1.0, 3.0, 5.0) == Approx(1.0));
    CHECK(cost_to_weight(1.0, 1.0, 3.0, 5.0) == Approx(std::exp(5.0)));
    CHECK(cost_to_weight(2.0, 1.0, 3.0, 20.0) == Approx(std::exp(10.0)));
    // degenerate batch: all costs equal
    CHECK(cost_to_weight(4.0, 4.0, 4.0, 20.0) == 1.0);
    CHECK_THROWS_AS(cost_to_weight(3.5, 1.0, 3.0, 5.0), std::invalid_argument);
    CHECK_THROWS_AS(cost_to_weight(0.5, 1.0, 3.0, 5.0), std::invalid_argument);
}

TEST_CASE("cost_to_weight is monotone decreasing and strictly positive") {
    std::mt19937 gen(2);
    std::uniform_real_distribution<double> c(0.0, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        double c1 = c(gen), c2 = c(gen);
        if (c1 > c2) std::swap(c1, c2);
        double f1 = cost_to_weight(c1, 0.0, 10.0, 17.0);
        double f2 = cost_to_weight(c2, 0.0, 10.0, 17.0);
        CHECK(f1 >= f2);
        CHECK(f2 > 0.0);
    }
}
