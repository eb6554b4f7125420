#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace testing_oracle {

// Transport cost between two atomic measures by successive shortest paths
// on the bipartite residual graph, with Bellman-Ford for negative residual
// costs. Capacities are real masses, so each augmentation saturates a source,
// a sink or a reverse edge.
inline double min_cost_flow(const std::vector<double>& a, const std::vector<double>& b,
                     const std::function<double(std::size_t, std::size_t)>& cost) {
  const std::size_t m = a.size(), n = b.size(), src = m + n, dst = m + n + 1, nodes = m + n + 2;
  struct Edge {
    std::size_t to;
    double cap, cost;
    std::size_t rev;
  };
  std::vector<std::vector<Edge>> g(nodes);
  auto add = [&](std::size_t u, std::size_t v, double cap, double c) {
    g[u].push_back({v, cap, c, g[v].size()});
    g[v].push_back({u, 0.0, -c, g[u].size() - 1});
  };
  for (std::size_t i = 0; i < m; ++i) add(src, i, a[i], 0.0);
  for (std::size_t j = 0; j < n; ++j) add(m + j, dst, b[j], 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) add(i, m + j, 1e9, cost(i, j));

  double total = 0.0, sent = 0.0;
  while (sent < 1.0 - 1e-12) {
    std::vector<double> dist(nodes, std::numeric_limits<double>::infinity());
    std::vector<std::pair<std::size_t, std::size_t>> prev(nodes, {nodes, 0});
    dist[src] = 0.0;
    for (std::size_t it = 0; it + 1 < nodes; ++it) {
      bool changed = false;
      for (std::size_t u = 0; u < nodes; ++u) {
        if (std::isinf(dist[u])) continue;
        for (std::size_t e = 0; e < g[u].size(); ++e) {
          const auto& ed = g[u][e];
          if (ed.cap > 1e-15 && dist[u] + ed.cost < dist[ed.to] - 1e-15) {
            dist[ed.to] = dist[u] + ed.cost;
            prev[ed.to] = {u, e};
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    if (std::isinf(dist[dst])) break;
    double push = 1.0 - sent;
    for (std::size_t v = dst; v != src; v = prev[v].first) push = std::min(push, g[prev[v].first][prev[v].second].cap);
    for (std::size_t v = dst; v != src; v = prev[v].first) {
      auto& ed = g[prev[v].first][prev[v].second];
      ed.cap -= push;
      g[v][ed.rev].cap += push;
    }
    sent += push;
    total += push * dist[dst];
  }
  return total;
}

}  // namespace testing_oracle
