#include "smto/scene.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace smto;
using Catch::Approx;

namespace {

Scene unit_circle_scene(double eps = 0.2) {
    Scene s;
    s.workspace = Rect{{-5, -5}, {5, 5}};
    s.margin_epsilon = eps;
    s.obstacles.push_back({Circle{{0, 0}, 1.0}});
    return s;
}

Scene random_scene(std::mt19937& gen, int max_obstacles = 4) {
    std::uniform_real_distribution<double> pos(-2.0, 2.0);
    std::uniform_real_distribution<double> rad(0.2, 0.8);
    std::uniform_int_distribution<int> count(1, max_obstacles);
    std::uniform_int_distribution<int> kind(0, 2);
    Scene s;
    s.workspace = Rect{{-8, -8}, {8, 8}};
    s.margin_epsilon = 0.2;
    int n = count(gen);
    for (int i = 0; i < n; ++i) {
        Obstacle ob;
        switch (kind(gen)) {
        case 0:
            ob.shape = Circle{{pos(gen), pos(gen)}, rad(gen)};
            break;
        case 1: {
            Vec2 c(pos(gen), pos(gen));
            ob.shape = Rect{c - Vec2(rad(gen), rad(gen)), c + Vec2(rad(gen), rad(gen))};
            break;
        }
        default:
            ob.shape = Capsule{{pos(gen), pos(gen)}, {pos(gen), pos(gen)}, rad(gen)};
        }
        s.obstacles.push_back(std::move(ob));
    }
    return s;
}

// dense boundary-sampling oracle for a single obstacle's distance magnitude
double sampled_boundary_distance(const Obstacle& ob, const Vec2& x) {
    double best = std::numeric_limits<double>::infinity();
    const int steps = 20000;
    if (const auto* c = std::get_if<Circle>(&ob.shape)) {
        for (int i = 0; i < steps; ++i) {
            double a = 2.0 * kPi * i / steps;
            best = std::min(best, (x - (c->center + c->radius * Vec2(std::cos(a), std::sin(a)))).norm());
        }
    } else if (const auto* r = std::get_if<Rect>(&ob.shape)) {
        for (int i = 0; i <= steps; ++i) {
            double t = static_cast<double>(i) / steps;
            best = std::min({best,
                             (x - Vec2(r->min.x() + t * (r->max.x() - r->min.x()), r->min.y())).norm(),
                             (x - Vec2(r->min.x() + t * (r->max.x() - r->min.x()), r->max.y())).norm(),
                             (x - Vec2(r->min.x(), r->min.y() + t * (r->max.y() - r->min.y()))).norm(),
                             (x - Vec2(r->max.x(), r->min.y() + t * (r->max.y() - r->min.y()))).norm()});
        }
    } else {
        const auto& cap = std::get<Capsule>(ob.shape);
        double axis_dist = std::numeric_limits<double>::infinity();
        for (int i = 0; i <= steps; ++i) {
            double t = static_cast<double>(i) / steps;
            axis_dist = std::min(axis_dist, (x - (cap.a + t * (cap.b - cap.a))).norm());
        }
        best = std::abs(axis_dist - cap.radius);
    }
    return best;
}

}  // namespace

TEST_CASE("signed distance of a circle is radial") {
    Scene s = unit_circle_scene();
    CHECK(s.signed_distance(Vec2(2, 0)) == Approx(1.0));
    CHECK(s.signed_distance(Vec2(0, 0)) == Approx(-1.0));
    CHECK(s.signed_distance(Vec2(0.5, 0)) == Approx(-0.5));
}

TEST_CASE("per-shape signed distances match a boundary-sampling oracle") {
    std::mt19937 gen(31);
    std::uniform_real_distribution<double> pos(-3.0, 3.0);
    std::vector<Obstacle> shapes = {
        {Circle{{0.5, -0.25}, 0.75}},
        {Rect{{-1.0, -0.5}, {0.5, 1.0}}},
        {Capsule{{-1.0, 0.0}, {1.0, 0.5}, 0.4}},
    };
    for (const auto& ob : shapes) {
        for (int trial = 0; trial < 60; ++trial) {
            Vec2 x(pos(gen), pos(gen));
            double d = ob.signed_distance(x);
            CHECK(std::abs(std::abs(d) - sampled_boundary_distance(ob, x)) < 2e-4);
        }
    }
}

TEST_CASE("union signed distance equals a pairwise brute-force minimum") {
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> pos(-4.0, 4.0);
    for (int trial = 0; trial < 50; ++trial) {
        Scene s = random_scene(gen);
        for (int k = 0; k < 40; ++k) {
            Vec2 x(pos(gen), pos(gen));
            double brute = std::numeric_limits<double>::infinity();
            for (const auto& ob : s.obstacles) brute = std::min(brute, ob.signed_distance(x));
            CHECK(s.signed_distance(x) == brute);
        }
    }
}

TEST_CASE("local collision cost follows the piecewise definition") {
    double eps = 0.2;
    CHECK(Scene::collision_cost_of_distance(2 * eps, eps) == 0.0);
    // both adjacent branches meet at eps/2 when d = 0
    CHECK(Scene::collision_cost_of_distance(0.0, eps) == Approx(eps / 2));
    CHECK(Scene::collision_cost_of_distance(1e-14, eps) == Approx(eps / 2).margin(1e-10));
    CHECK(Scene::collision_cost_of_distance(-1e-14, eps) == Approx(eps / 2).margin(1e-10));
    // (1/(2*0.2)) * (0.1 - 0.2)^2 = 0.025
    CHECK(Scene::collision_cost_of_distance(0.1, eps) == Approx(0.025));
}

TEST_CASE("local collision cost is monotone and vanishes exactly beyond the margin") {
    double eps = 0.25;
    std::mt19937 gen(3);
    std::uniform_real_distribution<double> dd(-1.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        double d1 = dd(gen), d2 = dd(gen);
        if (d1 > d2) std::swap(d1, d2);
        CHECK(Scene::collision_cost_of_distance(d1, eps) >=
              Scene::collision_cost_of_distance(d2, eps));
    }
    for (int i = 0; i < 2000; ++i) {
        double d = dd(gen);
        bool zero = Scene::collision_cost_of_distance(d, eps) == 0.0;
        CHECK(zero == (d >= eps));
    }
}

TEST_CASE("local collision cost is Lipschitz in the distance") {
    double eps = 0.2;
    double lipschitz = 1.0 + 0.5;  // global bound for this piecewise form, eps <= 1
    std::mt19937 gen(9);
    std::uniform_real_distribution<double> dd(-1.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
        double d = dd(gen);
        double h = 1e-7;
        double delta = std::abs(Scene::collision_cost_of_distance(d + h, eps) -
                                Scene::collision_cost_of_distance(d, eps));
        CHECK(delta <= lipschitz * h + 1e-15);
    }
}

TEST_CASE("collision gradient is zero outside the margin") {
    Scene s = unit_circle_scene(0.2);
    CHECK(s.local_collision_gradient(Vec2(3.0, 0.0)) == Vec2::Zero());
}

TEST_CASE("collision gradient in the margin band points away with slope (d-eps)/eps") {
    double eps = 0.2;
    Scene s = unit_circle_scene(eps);
    Vec2 x(1.1, 0.0);  // d = 0.1, inside the band
    Vec2 g = s.local_collision_gradient(x);
    // hand differentiation of the middle branch: c'(d) = (d - eps)/eps, so the
    // gradient points toward the obstacle with magnitude (eps - d)/eps
    CHECK(g.x() == Approx((0.1 - eps) / eps));
    CHECK(g.y() == Approx(0.0).margin(1e-14));
    CHECK(g.norm() == Approx((eps - 0.1) / eps));
}

TEST_CASE("collision gradient matches finite differences away from branch boundaries") {
    std::mt19937 gen(77);
    std::uniform_real_distribution<double> pos(-4.0, 4.0);
    int checked = 0;
    for (int trial = 0; trial < 400 || checked < 100; ++trial) {
        Scene s = random_scene(gen);
        Vec2 x(pos(gen), pos(gen));
        double d = s.signed_distance(x);
        // skip branch boundaries and medial-axis neighbourhoods
        if (std::abs(d) < 1e-3 || std::abs(d - s.margin_epsilon) < 1e-3) continue;
        int nearest = s.nearest_obstacle(x);
        bool ambiguous = false;
        for (int i = 0; i < static_cast<int>(s.obstacles.size()); ++i)
            if (i != nearest &&
                std::abs(s.obstacles[i].signed_distance(x) - d) < 1e-2)
                ambiguous = true;
        if (ambiguous) continue;
        if (d > s.margin_epsilon) continue;  // flat region, gradient identically zero

        double h = 1e-6;
        Vec2 fd((s.local_collision_cost(x + Vec2(h, 0)) - s.local_collision_cost(x - Vec2(h, 0))) /
                    (2 * h),
                (s.local_collision_cost(x + Vec2(0, h)) - s.local_collision_cost(x - Vec2(0, h))) /
                    (2 * h));
        Vec2 g = s.local_collision_gradient(x);
        CHECK((g - fd).norm() / std::max(1.0, fd.norm()) < 1e-5);
        ++checked;
        if (trial > 4000) break;
    }
    REQUIRE(checked >= 100);
}

TEST_CASE("region cost is 1 inside, 0 outside and 1 on edges") {
    Scene s;
    s.workspace = Rect{{0, 0}, {10, 10}};
    s.unit_cost_regions.push_back({{2, 2}, {5, 2}, {5, 6}, {2, 6}});
    CHECK(s.region_cost(Vec2(3, 4)) == 1);
    CHECK(s.region_cost(Vec2(8, 8)) == 0);
    CHECK(s.region_cost(Vec2(5, 4)) == 1);    // on a vertical edge
    CHECK(s.region_cost(Vec2(3.5, 2)) == 1);  // on a horizontal edge
    CHECK(s.region_cost(Vec2(2, 2)) == 1);    // on a vertex

    Scene empty;
    CHECK_THROWS_AS(empty.region_cost(Vec2(0, 0)), std::invalid_argument);
}

TEST_CASE("scene validation enforces workspace containment and shape invariants") {
    Scene s;
    s.workspace = Rect{{0, 0}, {1, 1}};
    s.obstacles.push_back({Circle{{0.5, 0.5}, 2.0}});
    CHECK_THROWS_AS(s.validate(), std::invalid_argument);

    Obstacle bad_rect{Rect{{1, 1}, {0, 0}}};
    CHECK_THROWS_AS(bad_rect.validate(), std::invalid_argument);
    Obstacle bad_circle{Circle{{0, 0}, -1.0}};
    CHECK_THROWS_AS(bad_circle.validate(), std::invalid_argument);
}
