#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace infcost::detail {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Residual network with real capacities. Residuals at or below `eps` count
// as saturated so rounding dust never drives augmentation.
class FlowNetwork {
 public:
  FlowNetwork(std::size_t nodes, double eps) : adj_(nodes), eps_(eps) {}

  std::size_t add_edge(std::size_t from, std::size_t to, double capacity, double cost = 0.0);

  double max_flow(std::size_t s, std::size_t t);
  // Successive shortest paths with reduced costs. Sends up to `limit`; returns flow sent.
  double min_cost_flow(std::size_t s, std::size_t t, double limit);

  double flow(std::size_t edge) const { return edges_[edge].flow; }
  std::size_t node_count() const { return adj_.size(); }
  // Nodes reachable from the given seeds through edges with residual > eps.
  std::vector<bool> residual_reachable(const std::vector<std::size_t>& seeds) const;

 private:
  struct Edge {
    std::size_t to;
    double cap;
    double flow;
    double cost;
  };
  double residual(const Edge& e) const { return e.cap - e.flow; }
  bool bfs_levels(std::size_t s, std::size_t t);
  double push(std::size_t v, std::size_t t, double f);

  std::vector<Edge> edges_;  // edge 2k forward, 2k+1 reverse
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<int> level_;
  std::vector<std::size_t> iter_;
  double eps_;
};

}  // namespace infcost::detail
