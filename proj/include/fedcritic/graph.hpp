// SPDX-License-Identifier: Apache-2.0

#ifndef FEDCRITIC_GRAPH_HPP
#define FEDCRITIC_GRAPH_HPP

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace fedcritic {

/// Undirected interference graph between base stations. Edge (n,j) means BS j
/// is a dominant interferer to cell n; neighbor summaries and gossip exchange
/// run over these edges only.
class InterferenceGraph {
public:
    InterferenceGraph() : n_(0) {}

    explicit InterferenceGraph(std::vector<std::vector<std::uint8_t>> adjacency)
        : n_(static_cast<int>(adjacency.size())), adj_(std::move(adjacency)) {
        for (int i = 0; i < n_; ++i) {
            if (static_cast<int>(adj_[i].size()) != n_)
                throw std::invalid_argument("adjacency matrix must be square");
            if (adj_[i][i]) throw std::invalid_argument("adjacency must have no self-loops");
            for (int j = 0; j < n_; ++j)
                if (adj_[i][j] != adj_[j][i])
                    throw std::invalid_argument("adjacency must be symmetric");
        }
        rebuild_neighbor_sets();
    }

    /// Line topology: BSs i and j are neighbors iff 0 < |i-j| <= radius.
    static InterferenceGraph path(int n_bs, int radius = 1) {
        if (n_bs < 1) throw std::invalid_argument("n_bs must be >= 1");
        if (radius < 0) throw std::invalid_argument("radius must be >= 0");
        std::vector<std::vector<std::uint8_t>> adj(
            n_bs, std::vector<std::uint8_t>(n_bs, 0));
        for (int i = 0; i < n_bs; ++i)
            for (int j = 0; j < n_bs; ++j)
                if (i != j && std::abs(i - j) <= radius) adj[i][j] = 1;
        return InterferenceGraph(std::move(adj));
    }

    static InterferenceGraph complete(int n_bs) {
        return path(n_bs, n_bs);
    }

    static InterferenceGraph edgeless(int n_bs) {
        return path(n_bs, 0);
    }

    int n_bs() const { return n_; }
    bool has_edge(int i, int j) const { return i != j && adj_[i][j] != 0; }
    const std::vector<int>& neighbors(int n) const { return nbrs_[n]; }
    int degree(int n) const { return static_cast<int>(nbrs_[n].size()); }

    bool connected() const {
        if (n_ == 0) return true;
        std::vector<std::uint8_t> seen(n_, 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int count = 1;
        while (!stack.empty()) {
            int v = stack.back();
            stack.pop_back();
            for (int u : nbrs_[v])
                if (!seen[u]) {
                    seen[u] = 1;
                    ++count;
                    stack.push_back(u);
                }
        }
        return count == n_;
    }

private:
    void rebuild_neighbor_sets() {
        nbrs_.assign(n_, {});
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j)
                if (adj_[i][j]) nbrs_[i].push_back(j);
    }

    int n_;
    std::vector<std::vector<std::uint8_t>> adj_;
    std::vector<std::vector<int>> nbrs_;
};

}  // namespace fedcritic

#endif
