#pragma once

#include "smto/cost.hpp"

#include <numeric>
#include <vector>

namespace smto {

/// Self-normalized importance weights over a sample batch; always sums to 1.
struct ImportanceWeights {
    VecX w;
    double c_min = 0.0;
    double c_max = 0.0;

    int size() const { return static_cast<int>(w.size()); }
};

/// Caps normalized weights at `cap` and redistributes the excess by
/// waterfilling, keeping the sum at exactly one. Deterministic and invariant
/// under positive rescaling of the underlying f (it sees only normalized
/// weights). Truncated self-normalized importance weighting bounds the
/// estimator variance when the proposal has heavy density tails relative to
/// the target.
inline void truncate_weights(VecX& w, double cap) {
    int n = static_cast<int>(w.size());
    if (!(cap > 0.0) || !std::isfinite(cap) || cap * n <= 1.0) return;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return w[a] > w[b]; });

    int nonzero = 0;
    for (int i = 0; i < n; ++i)
        if (w[i] > 0.0) ++nonzero;
    if (nonzero == 0 || nonzero * cap <= 1.0) {
        // cap infeasible on this support: fall back to the min-max solution
        for (int i = 0; i < n; ++i) w[i] = w[i] > 0.0 ? 1.0 / nonzero : 0.0;
        return;
    }

    // exact suffix sums (small-to-large) avoid cancellation for spiky inputs
    std::vector<double> suffix(n + 1, 0.0);
    for (int i = n - 1; i >= 0; --i) suffix[i] = suffix[i + 1] + w[order[i]];
    int capped = n;
    double lambda = 0.0;
    for (int k = 0; k < n; ++k) {
        if (suffix[k] <= 0.0) break;
        double lam = (1.0 - k * cap) / suffix[k];
        if (lam * w[order[k]] <= cap) {
            capped = k;
            lambda = lam;
            break;
        }
    }
    if (capped == n) {  // ran off the end: everything at the cap is infeasible
        for (int i = 0; i < n; ++i) w[i] = w[i] > 0.0 ? 1.0 / nonzero : 0.0;
        return;
    }
    for (int k = 0; k < n; ++k)
        w[order[k]] = k < capped ? cap : lambda * w[order[k]];
}

/// Combines linear-domain f values with log-domain proposal densities:
///   w_i  proportional to  f_i / beta_i.
/// The proposal maximum is subtracted in the log domain, so only density
/// differences matter and positive rescaling of f cancels exactly. A finite
/// weight_cap truncates the normalized weights (see truncate_weights).
inline ImportanceWeights weights_from_f(const VecX& f, const VecX& log_proposal,
                                        double weight_cap =
                                            std::numeric_limits<double>::infinity()) {
    require(f.size() == log_proposal.size() && f.size() >= 1,
            "f values and proposal densities must have equal nonzero length");
    for (int i = 0; i < f.size(); ++i) {
        require(is_finite(f[i]) && f[i] > 0.0, "f values must be finite and positive");
        require(is_finite(log_proposal[i]), "proposal log-densities must be finite");
    }
    double max_neg_beta = -log_proposal.minCoeff();
    VecX y(f.size());
    for (int i = 0; i < f.size(); ++i)
        y[i] = f[i] * std::exp(-log_proposal[i] - max_neg_beta);
    ImportanceWeights out;
    out.w = y / y.sum();
    truncate_weights(out.w, weight_cap);
    return out;
}

/// Normalized importance weights w_i ~ f(C_i) / beta_i with f the exponential
/// batch scaling of cost_to_weight.
inline ImportanceWeights importance_weights(const VecX& costs, const VecX& log_proposal,
                                            double cost_scale_alpha,
                                            double weight_cap =
                                                std::numeric_limits<double>::infinity()) {
    require(costs.size() == log_proposal.size() && costs.size() >= 1,
            "costs and proposal densities must have equal nonzero length");
    require(cost_scale_alpha > 0.0, "cost_scale_alpha must be positive");
    for (int i = 0; i < costs.size(); ++i)
        require(is_finite(costs[i]), "costs must be finite");
    double c_min = costs.minCoeff();
    double c_max = costs.maxCoeff();
    VecX f(costs.size());
    for (int i = 0; i < costs.size(); ++i)
        f[i] = std::exp(log_cost_weight(costs[i], c_min, c_max, cost_scale_alpha));
    ImportanceWeights out = weights_from_f(f, log_proposal, weight_cap);
    out.c_min = c_min;
    out.c_max = c_max;
    return out;
}

/// Effective sample size 1 / sum(w^2) of a normalized weight vector.
inline double effective_sample_size(const ImportanceWeights& w) {
    return 1.0 / w.w.squaredNorm();
}

}  // namespace smto
