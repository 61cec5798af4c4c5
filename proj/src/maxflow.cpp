#include "fkg/maxflow.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace fkg {

MaxFlow::MaxFlow(int nodes) : adj_(static_cast<std::size_t>(nodes)) {}

void MaxFlow::add_edge(int from, int to, double capacity) {
    auto& a = adj_[static_cast<std::size_t>(from)];
    auto& b = adj_[static_cast<std::size_t>(to)];
    a.push_back({to, static_cast<int>(b.size()), capacity});
    b.push_back({from, static_cast<int>(a.size()) - 1, 0.0});
}

bool MaxFlow::bfs(int source, int sink, double eps) {
    level_.assign(adj_.size(), -1);
    std::queue<int> queue;
    level_[static_cast<std::size_t>(source)] = 0;
    queue.push(source);
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop();
        for (const Arc& e : adj_[static_cast<std::size_t>(v)]) {
            if (e.cap > eps && level_[static_cast<std::size_t>(e.to)] < 0) {
                level_[static_cast<std::size_t>(e.to)] = level_[static_cast<std::size_t>(v)] + 1;
                queue.push(e.to);
            }
        }
    }
    return level_[static_cast<std::size_t>(sink)] >= 0;
}

double MaxFlow::dfs(int v, int sink, double pushed, double eps) {
    if (v == sink) return pushed;
    auto& arcs = adj_[static_cast<std::size_t>(v)];
    for (auto& i = next_[static_cast<std::size_t>(v)]; i < arcs.size(); ++i) {
        Arc& e = arcs[i];
        if (e.cap <= eps || level_[static_cast<std::size_t>(e.to)] != level_[static_cast<std::size_t>(v)] + 1) continue;
        const double got = dfs(e.to, sink, std::min(pushed, e.cap), eps);
        if (got > 0) {
            e.cap -= got;
            adj_[static_cast<std::size_t>(e.to)][static_cast<std::size_t>(e.rev)].cap += got;
            return got;
        }
    }
    return 0.0;
}

double MaxFlow::solve(int source, int sink, double eps) {
    double flow = 0.0;
    while (bfs(source, sink, eps)) {
        next_.assign(adj_.size(), 0);
        while (true) {
            const double f = dfs(source, sink, std::numeric_limits<double>::infinity(), eps);
            if (f <= 0) break;
            flow += f;
        }
    }
    return flow;
}

} // namespace fkg
