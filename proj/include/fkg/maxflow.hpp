#pragma once

#include <cstdint>
#include <vector>

namespace fkg {

/// Dinic max flow with real capacities.
class MaxFlow {
public:
    explicit MaxFlow(int nodes);

    void add_edge(int from, int to, double capacity);
    /// Capacities below `eps` are treated as saturated.
    double solve(int source, int sink, double eps = 1e-15);

private:
    struct Arc {
        int to;
        int rev;
        double cap;
    };
    bool bfs(int source, int sink, double eps);
    double dfs(int v, int sink, double pushed, double eps);

    std::vector<std::vector<Arc>> adj_;
    std::vector<int> level_;
    std::vector<std::size_t> next_;
};

} // namespace fkg
