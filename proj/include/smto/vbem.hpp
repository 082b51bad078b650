#pragma once

#include "smto/eigenmap.hpp"
#include "smto/rng.hpp"
#include "smto/weights.hpp"

#include <Eigen/Cholesky>

#include <vector>

namespace smto {

/// Digamma via upward recurrence plus the asymptotic series.
inline double digamma(double x) {
    require(x > 0.0, "digamma requires a positive argument");
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    double inv = 1.0 / x;
    double inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 -
                      inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0)))));
    return result;
}

/// Gaussian-Wishart / Dirichlet hyperparameters. nu0 <= 0 resolves to d+2 and
/// an empty K0 resolves to (d / (nu0 * tr(weighted data covariance))) * I, so
/// the prior mean precision matches the average data precision.
struct GmmPriors {
    double alpha0 = 1e-3;  // sparse symmetric Dirichlet
    double beta0 = 1.0;
    double nu0 = 0.0;
    MatX wishart_scale_K0;
};

struct WeightedGmmPosterior {
    VecX dirichlet_alpha;            // alpha_hat per component
    VecX precision_scale;            // beta_hat
    VecX wishart_dof;                // nu_hat
    MatX means;                      // m x d, h_hat rows
    std::vector<MatX> wishart_scale; // K_hat
    std::vector<double> log_det_scale;
    MatX responsibilities;           // N x m
    VecX effective_mass;             // gamma_hat
    GmmPriors priors;                // resolved
    std::vector<int> surviving;
    std::vector<double> elbo_trace;
    int iterations = 0;
    bool jitter_applied = false;

    int components() const { return static_cast<int>(dirichlet_alpha.size()); }
    int dim() const { return static_cast<int>(means.cols()); }
};

namespace detail {

inline double log_wishart_b(double log_det_K, double nu, int d) {
    double v = -0.5 * nu * log_det_K - 0.5 * nu * d * std::log(2.0) -
               0.25 * d * (d - 1) * std::log(kPi);
    for (int j = 1; j <= d; ++j) v -= std::lgamma(0.5 * (nu + 1.0 - j));
    return v;
}

inline double expected_log_det_precision(double log_det_K, double nu, int d) {
    double v = d * std::log(2.0) + log_det_K;
    for (int j = 1; j <= d; ++j) v += digamma(0.5 * (nu + 1.0 - j));
    return v;
}

/// Weighted k-means++ seeding followed by hard nearest-center assignment.
inline MatX kmeanspp_responsibilities(const MatX& X, const VecX& w, int m, std::uint64_t seed) {
    int N = static_cast<int>(X.rows());
    RandomStream rng = RandomStream::for_index(seed, 0x6b6d7070ULL, 0);
    auto draw_categorical = [&](const VecX& p) {
        double total = p.sum();
        if (total <= 0.0) return rng.uniform_index(N);
        double u = rng.uniform() * total;
        double acc = 0.0;
        for (int i = 0; i < N; ++i) {
            acc += p[i];
            if (u <= acc) return i;
        }
        return N - 1;
    };

    std::vector<int> centers;
    centers.push_back(draw_categorical(w));
    VecX d2(N);
    for (int i = 0; i < N; ++i) d2[i] = (X.row(i) - X.row(centers[0])).squaredNorm();
    while (static_cast<int>(centers.size()) < m) {
        VecX p = w.array() * d2.array();
        centers.push_back(draw_categorical(p));
        for (int i = 0; i < N; ++i)
            d2[i] = std::min(d2[i], (X.row(i) - X.row(centers.back())).squaredNorm());
    }

    MatX eta = MatX::Zero(N, m);
    for (int i = 0; i < N; ++i) {
        int best = 0;
        double best_d = (X.row(i) - X.row(centers[0])).squaredNorm();
        for (int l = 1; l < m; ++l) {
            double d = (X.row(i) - X.row(centers[l])).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = l;
            }
        }
        eta(i, best) = 1.0;
    }
    return eta;
}

struct VbState {
    VecX alpha, beta, nu, gamma;
    MatX means;                      // h_hat
    MatX cluster_means;              // c_hat (weighted data means)
    std::vector<MatX> K;             // K_hat
    std::vector<double> log_det_K;
    bool jitter_applied = false;
};

/// VB-M: conjugate Gaussian-Wishart / Dirichlet updates from weighted
/// responsibilities (prior mean at the origin).
inline VbState vb_m_step(const MatX& X, const VecX& wv, const MatX& eta, const GmmPriors& priors,
                         const MatX& K0_inv) {
    int N = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    int m = static_cast<int>(eta.cols());
    VbState s;
    s.alpha.resize(m);
    s.beta.resize(m);
    s.nu.resize(m);
    s.gamma.resize(m);
    s.means.resize(m, d);
    s.cluster_means.resize(m, d);
    s.K.resize(m);
    s.log_det_K.resize(m);

    for (int l = 0; l < m; ++l) {
        double gamma = 0.0;
        VecX cbar = VecX::Zero(d);
        for (int i = 0; i < N; ++i) {
            double g = wv[i] * eta(i, l);
            gamma += g;
            cbar += g * X.row(i).transpose();
        }
        if (gamma > 1e-300) cbar /= gamma;
        else cbar.setZero();

        s.gamma[l] = gamma;
        s.alpha[l] = priors.alpha0 + gamma;
        s.beta[l] = priors.beta0 + gamma;
        s.nu[l] = priors.nu0 + gamma;
        s.cluster_means.row(l) = cbar.transpose();
        s.means.row(l) = (gamma / s.beta[l]) * cbar.transpose();

        MatX scatter = MatX::Zero(d, d);
        for (int i = 0; i < N; ++i) {
            double g = wv[i] * eta(i, l);
            if (g == 0.0) continue;
            VecX diff = X.row(i).transpose() - cbar;
            scatter.noalias() += g * (diff * diff.transpose());
        }
        MatX K_inv = K0_inv + scatter +
                     (priors.beta0 * gamma / (priors.beta0 + gamma)) * (cbar * cbar.transpose());

        Eigen::LLT<MatX> llt(K_inv);
        if (llt.info() != Eigen::Success) {
            K_inv.diagonal().array() += 1e-8;
            llt.compute(K_inv);
            s.jitter_applied = true;
            require(llt.info() == Eigen::Success, "wishart scale update is singular");
        }
        s.K[l] = llt.solve(MatX::Identity(d, d));
        double log_det_K_inv = 0.0;
        MatX L = llt.matrixL();
        for (int i = 0; i < d; ++i) log_det_K_inv += 2.0 * std::log(L(i, i));
        s.log_det_K[l] = -log_det_K_inv;
    }
    return s;
}

/// VB-E responsibilities: softmax over the digamma/log-det/Mahalanobis score.
/// Constants shared by all components cancel in the normalization.
inline MatX vb_e_step(const MatX& X, const VbState& s) {
    int N = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    int m = static_cast<int>(s.alpha.size());
    double psi_alpha_sum = digamma(s.alpha.sum());
    VecX comp_const(m);
    for (int l = 0; l < m; ++l) {
        double half_log_lambda = 0.0;
        for (int j = 1; j <= d; ++j) half_log_lambda += digamma(0.5 * (s.nu[l] + 1.0 - j));
        half_log_lambda = 0.5 * (half_log_lambda + s.log_det_K[l]);
        comp_const[l] = digamma(s.alpha[l]) - psi_alpha_sum + half_log_lambda -
                        0.5 * d / s.beta[l];
    }
    MatX eta(N, m);
    parallel_for(N, [&](int i) {
        VecX log_rho(m);
        for (int l = 0; l < m; ++l) {
            VecX diff = X.row(i).transpose() - s.means.row(l).transpose();
            double maha = diff.dot(s.K[l] * diff);
            log_rho[l] = comp_const[l] - 0.5 * s.nu[l] * maha;
        }
        double mx = log_rho.maxCoeff();
        VecX r = (log_rho.array() - mx).exp();
        eta.row(i) = (r / r.sum()).transpose();
    });
    return eta;
}

/// Variational lower bound with every data term weighted; exact coordinate
/// ascent on this quantity is what makes the monotonicity tests meaningful.
inline double weighted_elbo_impl(const MatX& X, const VecX& wv, const MatX& eta,
                                 const VbState& s, const GmmPriors& priors, const MatX& K0_inv,
                                 double log_det_K0) {
    int N = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    int m = static_cast<int>(s.alpha.size());
    double alpha_sum = s.alpha.sum();
    double psi_alpha_sum = digamma(alpha_sum);

    VecX log_pi(m), log_lambda(m), gamma(m);
    MatX cbar(m, d);
    std::vector<MatX> S(m);
    for (int l = 0; l < m; ++l) {
        log_pi[l] = digamma(s.alpha[l]) - psi_alpha_sum;
        log_lambda[l] = expected_log_det_precision(s.log_det_K[l], s.nu[l], d);
        double g = 0.0;
        VecX c = VecX::Zero(d);
        for (int i = 0; i < N; ++i) {
            double wi = wv[i] * eta(i, l);
            g += wi;
            c += wi * X.row(i).transpose();
        }
        if (g > 1e-300) c /= g;
        else c.setZero();
        gamma[l] = g;
        cbar.row(l) = c.transpose();
        MatX scatter = MatX::Zero(d, d);
        if (g > 1e-300) {
            for (int i = 0; i < N; ++i) {
                double wi = wv[i] * eta(i, l);
                if (wi == 0.0) continue;
                VecX diff = X.row(i).transpose() - c;
                scatter.noalias() += wi * (diff * diff.transpose());
            }
            scatter /= g;
        }
        S[l] = scatter;
    }

    double t1 = 0.0;
    for (int l = 0; l < m; ++l) {
        VecX dm = cbar.row(l).transpose() - s.means.row(l).transpose();
        t1 += 0.5 * gamma[l] *
              (log_lambda[l] - d / s.beta[l] - s.nu[l] * (S[l] * s.K[l]).trace() -
               s.nu[l] * dm.dot(s.K[l] * dm) - d * std::log(2.0 * kPi));
    }
    double t2 = gamma.dot(log_pi);
    double t3 = std::lgamma(m * priors.alpha0) - m * std::lgamma(priors.alpha0) +
                (priors.alpha0 - 1.0) * log_pi.sum();
    double t4 = 0.0;
    for (int l = 0; l < m; ++l) {
        VecX h = s.means.row(l).transpose();
        t4 += 0.5 * (d * std::log(priors.beta0 / (2.0 * kPi)) + log_lambda[l] -
                     d * priors.beta0 / s.beta[l] -
                     priors.beta0 * s.nu[l] * h.dot(s.K[l] * h));
        t4 += -0.5 * s.nu[l] * (K0_inv * s.K[l]).trace();
    }
    t4 += m * log_wishart_b(log_det_K0, priors.nu0, d) +
          0.5 * (priors.nu0 - d - 1.0) * log_lambda.sum();

    double t5 = 0.0;
    for (int i = 0; i < N; ++i)
        for (int l = 0; l < m; ++l) {
            double e = eta(i, l);
            if (e > 0.0) t5 += wv[i] * e * std::log(e);
        }
    double t6 = std::lgamma(alpha_sum);
    for (int l = 0; l < m; ++l)
        t6 += (s.alpha[l] - 1.0) * log_pi[l] - std::lgamma(s.alpha[l]);
    double t7 = 0.0;
    for (int l = 0; l < m; ++l) {
        double entropy_w = -log_wishart_b(s.log_det_K[l], s.nu[l], d) -
                           0.5 * (s.nu[l] - d - 1.0) * log_lambda[l] + 0.5 * s.nu[l] * d;
        t7 += 0.5 * log_lambda[l] + 0.5 * d * std::log(s.beta[l] / (2.0 * kPi)) - 0.5 * d -
              entropy_w;
    }
    return t1 + t2 + t3 + t4 - t5 - t6 - t7;
}

inline void resolve_priors(GmmPriors& priors, const MatX& X, const VecX& wv, int d) {
    require(priors.alpha0 > 0.0 && priors.beta0 > 0.0, "alpha0 and beta0 must be positive");
    if (priors.nu0 <= 0.0) priors.nu0 = d + 2.0;
    require(priors.nu0 > d - 1.0, "nu0 must exceed d - 1");
    if (priors.wishart_scale_K0.size() == 0) {
        double total = wv.sum();
        VecX mean = VecX::Zero(d);
        for (int i = 0; i < X.rows(); ++i) mean += wv[i] * X.row(i).transpose();
        mean /= total;
        double tr = 0.0;
        for (int i = 0; i < X.rows(); ++i)
            tr += wv[i] * (X.row(i).transpose() - mean).squaredNorm();
        tr /= total;
        if (tr <= 1e-30) tr = 1.0;
        priors.wishart_scale_K0 = (d / (priors.nu0 * tr)) * MatX::Identity(d, d);
    }
    require(priors.wishart_scale_K0.rows() == d && priors.wishart_scale_K0.cols() == d,
            "K0 has the wrong shape");
}

}  // namespace detail

/// Importance-weighted variational-Bayes GMM fit. Normalized weights are
/// scaled to effective counts (sum N) so that uniform weights reduce exactly
/// to the unweighted algorithm and the Gaussian-Wishart priors stay weakly
/// informative; the sparse Dirichlet prior starves redundant components,
/// which are reported through `surviving` (mass floor 1.5/N of the total).
inline WeightedGmmPosterior vbem_fit(const EmbeddedBatch& points, const ImportanceWeights& weights,
                                     int max_components, GmmPriors priors = {},
                                     int max_iters = 200, double tol = 1e-9,
                                     std::uint64_t seed = 0,
                                     const MatX* initial_responsibilities = nullptr) {
    const MatX& X = points.points;
    int N = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    require(N >= 1 && d >= 1, "vbem_fit needs a nonempty embedded batch");
    require(max_components >= 1, "max_components must be >= 1");
    require(weights.size() == N, "weights length does not match the batch");
    require(std::abs(weights.w.sum() - 1.0) < 1e-9, "weights must be normalized");

    VecX wv = weights.w * static_cast<double>(N);
    detail::resolve_priors(priors, X, wv, d);
    Eigen::LLT<MatX> k0llt(priors.wishart_scale_K0);
    require(k0llt.info() == Eigen::Success, "K0 must be positive definite");
    MatX K0_inv = k0llt.solve(MatX::Identity(d, d));
    double log_det_K0 = 0.0;
    {
        MatX L = k0llt.matrixL();
        for (int i = 0; i < d; ++i) log_det_K0 += 2.0 * std::log(L(i, i));
    }

    int m = max_components;
    MatX eta;
    if (initial_responsibilities) {
        require(initial_responsibilities->rows() == N && initial_responsibilities->cols() == m,
                "initial responsibilities have the wrong shape");
        eta = *initial_responsibilities;
    } else {
        eta = detail::kmeanspp_responsibilities(X, weights.w, m, seed);
    }

    WeightedGmmPosterior post;
    detail::VbState state;
    double prev_elbo = -std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < max_iters; ++it) {
        state = detail::vb_m_step(X, wv, eta, priors, K0_inv);
        eta = detail::vb_e_step(X, state);
        double elbo = detail::weighted_elbo_impl(X, wv, eta, state, priors, K0_inv, log_det_K0);
        post.elbo_trace.push_back(elbo);
        if (it > 0 && std::abs(elbo - prev_elbo) < tol) {
            ++it;
            break;
        }
        prev_elbo = elbo;
    }

    post.dirichlet_alpha = state.alpha;
    post.precision_scale = state.beta;
    post.wishart_dof = state.nu;
    post.means = state.means;
    post.wishart_scale = state.K;
    post.log_det_scale = state.log_det_K;
    post.responsibilities = eta;
    post.effective_mass = state.gamma;
    post.priors = priors;
    post.iterations = it;
    post.jitter_applied = state.jitter_applied;

    double mass_floor = 1.5 / N * state.gamma.sum();
    int largest = 0;
    for (int l = 1; l < m; ++l)
        if (state.gamma[l] > state.gamma[largest]) largest = l;
    for (int l = 0; l < m; ++l)
        if (state.gamma[l] >= mass_floor || l == largest) post.surviving.push_back(l);
    return post;
}

/// Diagnostic surrogate of the weighted log-likelihood: the variational bound
/// evaluated at the posterior's stored responsibilities.
inline double weighted_elbo(const WeightedGmmPosterior& post, const EmbeddedBatch& points,
                            const ImportanceWeights& weights) {
    const MatX& X = points.points;
    int N = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    require(post.responsibilities.rows() == N, "posterior does not match the batch");
    require(post.dim() == d, "posterior dimension does not match the batch");
    require(weights.size() == N, "weights length does not match the batch");
    VecX wv = weights.w * static_cast<double>(N);
    detail::VbState s;
    s.alpha = post.dirichlet_alpha;
    s.beta = post.precision_scale;
    s.nu = post.wishart_dof;
    s.gamma = post.effective_mass;
    s.means = post.means;
    s.K = post.wishart_scale;
    s.log_det_K = post.log_det_scale;
    Eigen::LLT<MatX> k0llt(post.priors.wishart_scale_K0);
    MatX K0_inv = k0llt.solve(MatX::Identity(d, d));
    double log_det_K0 = 0.0;
    MatX L = k0llt.matrixL();
    for (int i = 0; i < d; ++i) log_det_K0 += 2.0 * std::log(L(i, i));
    return detail::weighted_elbo_impl(X, wv, post.responsibilities, s, post.priors, K0_inv,
                                      log_det_K0);
}

/// Hard cluster assignment: argmax responsibility over surviving components,
/// ties to the lowest component index.
inline std::vector<int> assign_clusters(const WeightedGmmPosterior& post,
                                        const EmbeddedBatch& points) {
    const MatX& X = points.points;
    int N = static_cast<int>(X.rows());
    int d = static_cast<int>(X.cols());
    require(post.dim() == d, "posterior dimension does not match the batch");
    require(!post.surviving.empty(), "posterior has no surviving components");

    double psi_alpha_sum = digamma(post.dirichlet_alpha.sum());
    std::vector<double> comp_const;
    for (int l : post.surviving) {
        double half_log_lambda = 0.0;
        for (int j = 1; j <= d; ++j)
            half_log_lambda += digamma(0.5 * (post.wishart_dof[l] + 1.0 - j));
        half_log_lambda = 0.5 * (half_log_lambda + post.log_det_scale[l]);
        comp_const.push_back(digamma(post.dirichlet_alpha[l]) - psi_alpha_sum + half_log_lambda -
                             0.5 * d / post.precision_scale[l]);
    }
    std::vector<int> out(N);
    parallel_for(N, [&](int i) {
        int best = post.surviving[0];
        double best_score = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < post.surviving.size(); ++k) {
            int l = post.surviving[k];
            VecX diff = X.row(i).transpose() - post.means.row(l).transpose();
            double score = comp_const[k] - 0.5 * post.wishart_dof[l] *
                                               diff.dot(post.wishart_scale[l] * diff);
            if (score > best_score) {  // strict: ties keep the lower index
                best_score = score;
                best = l;
            }
        }
        out[i] = best;
    });
    return out;
}

}  // namespace smto
