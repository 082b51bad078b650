#include "smto/weights.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace smto;
using Catch::Approx;

TEST_CASE("uniform batches give exactly 1/N") {
    int n = 16;
    VecX costs = VecX::Constant(n, 3.7);
    VecX log_beta = VecX::Constant(n, -2.0);
    auto w = importance_weights(costs, log_beta, 20.0);
    for (int i = 0; i < n; ++i) CHECK(w.w[i] == 1.0 / n);
}

TEST_CASE("a single sample carries weight one") {
    VecX costs(1), log_beta(1);
    costs << 5.0;
    log_beta << 0.3;
    auto w = importance_weights(costs, log_beta, 20.0);
    CHECK(w.w[0] == 1.0);
}

TEST_CASE("hand-normalized two-sample case") {
    // equal proposal densities, f-values 3 and 1 -> weights 0.75 / 0.25
    VecX f(2), log_beta(2);
    f << 3.0, 1.0;
    log_beta << -1.0, -1.0;
    auto w = weights_from_f(f, log_beta);
    CHECK(w.w[0] == Approx(0.75));
    CHECK(w.w[1] == Approx(0.25));
}

TEST_CASE("weights sum to one over random batches") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> cost(0.0, 30.0);
    std::uniform_real_distribution<double> beta(-400.0, 50.0);
    std::uniform_int_distribution<int> size(1, 200);
    for (int trial = 0; trial < 1000; ++trial) {
        int n = size(gen);
        VecX costs(n), log_beta(n);
        for (int i = 0; i < n; ++i) {
            costs[i] = cost(gen);
            log_beta[i] = beta(gen);
        }
        auto w = importance_weights(costs, log_beta, 50.0);
        CHECK(std::abs(w.w.sum() - 1.0) < 1e-12);
        CHECK(w.w.minCoeff() >= 0.0);
    }
}

TEST_CASE("positive rescaling of f leaves weights bitwise unchanged") {
    std::mt19937 gen(123);
    std::uniform_real_distribution<double> logf(0.0, 50.0);
    std::uniform_real_distribution<double> beta(-300.0, 20.0);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 50;
        VecX f(n), log_beta(n);
        for (int i = 0; i < n; ++i) {
            f[i] = std::exp(logf(gen));
            log_beta[i] = beta(gen);
        }
        auto base = weights_from_f(f, log_beta);
        for (double s : {0.125, 8.0, 1048576.0, 0x1.0p-40}) {
            auto scaled = weights_from_f(s * f, log_beta);
            for (int i = 0; i < n; ++i) {
                REQUIRE(scaled.w[i] == base.w[i]);  // bitwise
            }
        }
    }
}

TEST_CASE("batch extremes map through the exponential scaling") {
    VecX costs(3), log_beta(3);
    costs << 1.0, 2.0, 3.0;
    log_beta.setZero();
    auto w = importance_weights(costs, log_beta, 20.0);
    // ratios follow f: exp(20), exp(10), 1
    CHECK(w.w[0] / w.w[2] == Approx(std::exp(20.0)).epsilon(1e-9));
    CHECK(w.w[1] / w.w[2] == Approx(std::exp(10.0)).epsilon(1e-9));
}

TEST_CASE("non-finite inputs are rejected") {
    VecX costs(2), log_beta(2);
    costs << 1.0, std::numeric_limits<double>::quiet_NaN();
    log_beta.setZero();
    CHECK_THROWS_AS(importance_weights(costs, log_beta, 20.0), std::invalid_argument);

    costs << 1.0, 2.0;
    log_beta << 0.0, std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(importance_weights(costs, log_beta, 20.0), std::invalid_argument);
}

TEST_CASE("cost_scale_alpha up to 50 stays overflow-free") {
    int n = 100;
    VecX costs(n), log_beta(n);
    for (int i = 0; i < n; ++i) {
        costs[i] = static_cast<double>(i);
        log_beta[i] = -200.0 + 3.0 * i;
    }
    auto w = importance_weights(costs, log_beta, 50.0);
    CHECK(w.w.allFinite());
    CHECK(std::abs(w.w.sum() - 1.0) < 1e-12);
}
