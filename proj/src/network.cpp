#include "netquant/network.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "netquant/common.hpp"

namespace netquant {

NetworkWeights row_normalize(const AdjacencyMatrix& a) {
    NetworkWeights w;
    w.n = a.n;
    w.rows.resize(static_cast<std::size_t>(a.n));
    for (int i = 0; i < a.n; ++i) {
        const auto& targets = a.out[static_cast<std::size_t>(i)];
        if (targets.empty()) {
            ++w.isolated_count;
            continue;
        }
        double weight = 1.0 / static_cast<double>(targets.size());
        auto& row = w.rows[static_cast<std::size_t>(i)];
        row.reserve(targets.size());
        for (int j : targets) row.emplace_back(j, weight);
    }
    return w;
}

AdjacencyMatrix gen_dyad(int n, Rng& rng) {
    if (n < 2) throw std::domain_error("gen_dyad requires n >= 2");
    double p_mutual = 2.0 / n;
    double p_single = 0.5 * std::pow(static_cast<double>(n), -0.8);
    if (p_mutual + 2.0 * p_single > 1.0) {
        throw std::domain_error("gen_dyad: dyad probabilities exceed 1 at n = " + std::to_string(n));
    }
    AdjacencyMatrix a;
    a.n = n;
    a.out.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double u = rng.uniform01();
            if (u < p_mutual) {
                a.out[static_cast<std::size_t>(i)].push_back(j);
                a.out[static_cast<std::size_t>(j)].push_back(i);
            } else if (u < p_mutual + p_single) {
                a.out[static_cast<std::size_t>(i)].push_back(j);
            } else if (u < p_mutual + 2.0 * p_single) {
                a.out[static_cast<std::size_t>(j)].push_back(i);
            }
        }
    }
    return a;
}

AdjacencyMatrix gen_sbm(int n, int blocks, Rng& rng) {
    if (n < 2) throw std::domain_error("gen_sbm requires n >= 2");
    if (blocks < 1 || blocks > n) throw std::domain_error("gen_sbm requires 1 <= blocks <= n");
    std::vector<int> label(static_cast<std::size_t>(n));
    for (auto& l : label) l = static_cast<int>(rng.bounded(static_cast<std::uint64_t>(blocks)));
    double p_same = 0.3 * std::pow(static_cast<double>(n), -0.3);
    double p_diff = 0.3 / n;
    AdjacencyMatrix a;
    a.n = n;
    a.out.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            double p = label[static_cast<std::size_t>(i)] == label[static_cast<std::size_t>(j)]
                           ? p_same
                           : p_diff;
            if (rng.uniform01() < p) a.out[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    return a;
}

AdjacencyMatrix gen_powerlaw(int n, double exponent, Rng& rng) {
    if (n < 2) throw std::domain_error("gen_powerlaw requires n >= 2");
    if (!(exponent > 1.0)) throw std::domain_error("gen_powerlaw requires exponent > 1");
    // Cumulative weights of the truncated discrete power law on {1..n-1}.
    std::vector<double> cum(static_cast<std::size_t>(n - 1));
    double total = 0.0;
    for (int k = 1; k < n; ++k) {
        total += std::pow(static_cast<double>(k), -exponent);
        cum[static_cast<std::size_t>(k - 1)] = total;
    }
    AdjacencyMatrix a;
    a.n = n;
    a.out.resize(static_cast<std::size_t>(n));
    std::vector<int> candidates(static_cast<std::size_t>(n - 1));
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform01() * total;
        auto it = std::lower_bound(cum.begin(), cum.end(), u);
        int degree = static_cast<int>(it - cum.begin()) + 1;
        // Partial Fisher-Yates: the first `degree` entries become i's followers.
        int m = 0;
        for (int v = 0; v < n; ++v) {
            if (v != i) candidates[static_cast<std::size_t>(m++)] = v;
        }
        for (int k = 0; k < degree; ++k) {
            int pick = k + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(m - k)));
            std::swap(candidates[static_cast<std::size_t>(k)], candidates[static_cast<std::size_t>(pick)]);
            a.out[static_cast<std::size_t>(candidates[static_cast<std::size_t>(k)])].push_back(i);
        }
    }
    for (auto& row : a.out) std::sort(row.begin(), row.end());
    return a;
}

Eigen::VectorXd apply_weights(const NetworkWeights& w, const Eigen::VectorXd& y, int power) {
    if (y.size() != w.n) throw std::invalid_argument("apply_weights: vector length != node count");
    if (power < 1) throw std::invalid_argument("apply_weights: power must be >= 1");
    Eigen::VectorXd cur = y;
    Eigen::VectorXd next(w.n);
    for (int step = 0; step < power; ++step) {
        for (int i = 0; i < w.n; ++i) {
            double acc = 0.0;
            for (const auto& [j, weight] : w.rows[static_cast<std::size_t>(i)]) {
                acc += weight * cur[j];
            }
            next[i] = acc;
        }
        cur.swap(next);
    }
    return cur;
}

double density(const AdjacencyMatrix& a) {
    if (a.n < 2) throw std::domain_error("density requires n >= 2");
    return static_cast<double>(a.edge_count()) /
           (static_cast<double>(a.n) * static_cast<double>(a.n - 1));
}

AdjacencyMatrix load_edge_csv(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw DataError(path, 0, 0, "cannot open file");
    std::string line;
    if (!std::getline(in, line)) throw DataError(path, 1, 1, "missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "src,dst") throw DataError(path, 1, 1, "expected header 'src,dst'");
    AdjacencyMatrix a;
    a.n = n;
    a.out.resize(static_cast<std::size_t>(n));
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos) throw DataError(path, row, 1, "expected 'src,dst' pair");
        long src = 0, dst = 0;
        try {
            src = std::stol(line.substr(0, comma));
            dst = std::stol(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw DataError(path, row, 1, "unparsable node id");
        }
        if (src < 0 || src >= n) throw DataError(path, row, 1, "node id out of range");
        if (dst < 0 || dst >= n) throw DataError(path, row, 2, "node id out of range");
        if (src == dst) throw DataError(path, row, 1, "self-loop is not allowed");
        a.out[static_cast<std::size_t>(src)].push_back(static_cast<int>(dst));
    }
    for (auto& targets : a.out) std::sort(targets.begin(), targets.end());
    return a;
}

void save_edge_csv(const AdjacencyMatrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError(path, 0, 0, "cannot open file for writing");
    out << "src,dst\n";
    for (int i = 0; i < a.n; ++i) {
        for (int j : a.out[static_cast<std::size_t>(i)]) {
            out << i << ',' << j << '\n';
        }
    }
    if (!out) throw DataError(path, 0, 0, "write failure");
}

}  // namespace netquant
