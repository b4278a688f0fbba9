#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "netquant/rng.hpp"

namespace netquant {

/// Directed 0/1 adjacency; out[i] lists the nodes i follows. No self-loops.
struct AdjacencyMatrix {
    int n = 0;
    std::vector<std::vector<int>> out;

    long long edge_count() const {
        long long total = 0;
        for (const auto& row : out) total += static_cast<long long>(row.size());
        return total;
    }
};

/// Row-normalized weights w_ij = 1/outdegree(i); isolated nodes keep zero rows.
struct NetworkWeights {
    int n = 0;
    std::vector<std::vector<std::pair<int, double>>> rows;
    int isolated_count = 0;

    double inf_norm() const {
        double best = 0.0;
        for (const auto& row : rows) {
            double sum = 0.0;
            for (const auto& [j, w] : row) sum += w;
            best = std::max(best, sum);
        }
        return best;
    }
};

NetworkWeights row_normalize(const AdjacencyMatrix& a);

/// Dyad-independence graph: each unordered pair is mutual w.p. 2/n and
/// one-directional (either way) w.p. 0.5 n^{-0.8}. Requires the four dyad
/// probabilities to sum to at most one (n >= 4).
AdjacencyMatrix gen_dyad(int n, Rng& rng);

/// Stochastic block model: uniform labels in {1..blocks}, edge probability
/// 0.3 n^{-0.3} within a block and 0.3/n across blocks.
AdjacencyMatrix gen_sbm(int n, int blocks, Rng& rng);

/// In-degrees from the discrete power law P(d=k) ~ k^{-exponent} truncated to
/// {1..n-1}; each node's followers drawn uniformly without replacement.
AdjacencyMatrix gen_powerlaw(int n, double exponent, Rng& rng);

/// W^power * y by repeated sparse row sums; never forms a dense power.
Eigen::VectorXd apply_weights(const NetworkWeights& w, const Eigen::VectorXd& y, int power = 1);

double density(const AdjacencyMatrix& a);

/// Edge-list CSV with header "src,dst" and 0-based ids.
AdjacencyMatrix load_edge_csv(const std::string& path, int n);
void save_edge_csv(const AdjacencyMatrix& a, const std::string& path);

}  // namespace netquant
