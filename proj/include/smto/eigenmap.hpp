#pragma once

#include "smto/common.hpp"
#include "smto/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <numeric>
#include <vector>

namespace smto {

struct EmbeddedBatch {
    MatX points;                     // N x d_out
    std::vector<int> source_indices;

    int size() const { return static_cast<int>(points.rows()); }
    int dim() const { return static_cast<int>(points.cols()); }
};

namespace detail {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    bool unite(int a, int b) {
        a = find(a);
        b = find(b);
        if (a == b) return false;
        parent[b] = a;
        return true;
    }
};

}  // namespace detail

/// Spectral embedding of row vectors: symmetric k-NN graph with Gaussian
/// heat-kernel weights (bandwidth = median neighbor distance), random-walk
/// normalized Laplacian, eigenvectors 2..d_embed+1. Disconnected graphs are
/// stitched through their nearest inter-component pairs.
inline EmbeddedBatch laplacian_eigenmap(const MatX& X, int k_neighbors, int d_embed) {
    int N = static_cast<int>(X.rows());
    require(N > d_embed, "laplacian_eigenmap needs more points than embedding dimensions");
    require(k_neighbors >= 2, "laplacian_eigenmap needs k_neighbors >= 2");
    require(d_embed >= 1, "laplacian_eigenmap needs d_embed >= 1");
    require(X.allFinite(), "laplacian_eigenmap input must be finite");

    MatX dist(N, N);
    parallel_for(N, [&](int i) {
        for (int j = 0; j < N; ++j) dist(i, j) = (X.row(i) - X.row(j)).norm();
    });

    // k nearest neighbors per point; exact distance ties are all included so
    // duplicate points get identical neighborhoods
    int k = std::min(k_neighbors, N - 1);
    std::vector<std::vector<int>> nbrs(N);
    parallel_for(N, [&](int i) {
        std::vector<int> idx;
        idx.reserve(N - 1);
        for (int j = 0; j < N; ++j)
            if (j != i) idx.push_back(j);
        std::nth_element(idx.begin(), idx.begin() + (k - 1), idx.end(),
                         [&](int a, int b) { return dist(i, a) < dist(i, b); });
        double cutoff = dist(i, idx[k - 1]);
        std::vector<int> keep;
        for (int j = 0; j < N; ++j)
            if (j != i && dist(i, j) <= cutoff) keep.push_back(j);
        nbrs[i] = std::move(keep);
    });

    std::vector<double> edge_lengths;
    MatX W = MatX::Zero(N, N);
    for (int i = 0; i < N; ++i) {
        for (int j : nbrs[i]) {
            if (W(i, j) == 0.0 && W(j, i) == 0.0) edge_lengths.push_back(dist(i, j));
            W(i, j) = 1.0;  // mark; kernel applied below
            W(j, i) = 1.0;
        }
    }
    std::nth_element(edge_lengths.begin(), edge_lengths.begin() + edge_lengths.size() / 2,
                     edge_lengths.end());
    double bandwidth = edge_lengths[edge_lengths.size() / 2];
    if (bandwidth <= 0.0) bandwidth = 1.0;
    double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            if (W(i, j) != 0.0) W(i, j) = std::exp(-dist(i, j) * dist(i, j) * inv_two_h2);

    // stitch disconnected components through their nearest cross pairs
    detail::UnionFind uf(N);
    for (int i = 0; i < N; ++i)
        for (int j : nbrs[i]) uf.unite(i, j);
    while (true) {
        int best_i = -1, best_j = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int i = 0; i < N; ++i)
            for (int j = i + 1; j < N; ++j)
                if (uf.find(i) != uf.find(j) && dist(i, j) < best_d) {
                    best_d = dist(i, j);
                    best_i = i;
                    best_j = j;
                }
        if (best_i < 0) break;
        double w = std::max(std::exp(-best_d * best_d * inv_two_h2), 1e-6);
        W(best_i, best_j) = W(best_j, best_i) = w;
        uf.unite(best_i, best_j);
    }

    VecX deg = W.rowwise().sum();
    VecX dinv_sqrt = deg.array().sqrt().inverse();
    MatX Lsym = dinv_sqrt.asDiagonal() * W * dinv_sqrt.asDiagonal();
    Lsym = -Lsym;
    Lsym.diagonal().array() += 1.0;

    Eigen::SelfAdjointEigenSolver<MatX> eig(Lsym);
    require(eig.info() == Eigen::Success, "laplacian eigendecomposition failed");

    int d_out = std::min(d_embed, N - 1);
    EmbeddedBatch out;
    out.points.resize(N, d_out);
    out.source_indices.resize(N);
    std::iota(out.source_indices.begin(), out.source_indices.end(), 0);
    for (int c = 0; c < d_out; ++c) {
        // skip the constant eigenvector at eigenvalue 0
        VecX v = dinv_sqrt.asDiagonal() * eig.eigenvectors().col(c + 1);
        int imax = 0;
        for (int i = 1; i < N; ++i)
            if (std::abs(v[i]) > std::abs(v[imax])) imax = i;
        if (v[imax] < 0.0) v = -v;
        out.points.col(c) = v;
    }
    return out;
}

}  // namespace smto
