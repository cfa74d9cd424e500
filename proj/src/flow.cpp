#include "flow.hpp"

#include <algorithm>
#include <functional>
#include <queue>
#include <stdexcept>
#include <utility>

namespace infcost::detail {

std::size_t FlowNetwork::add_edge(std::size_t from, std::size_t to, double capacity, double cost) {
  if (from >= adj_.size() || to >= adj_.size()) throw std::out_of_range("flow edge endpoint");
  const std::size_t id = edges_.size();
  edges_.push_back({to, capacity, 0.0, cost});
  edges_.push_back({from, 0.0, 0.0, -cost});
  adj_[from].push_back(id);
  adj_[to].push_back(id + 1);
  return id;
}

bool FlowNetwork::bfs_levels(std::size_t s, std::size_t t) {
  level_.assign(adj_.size(), -1);
  std::queue<std::size_t> q;
  level_[s] = 0;
  q.push(s);
  while (!q.empty()) {
    const std::size_t v = q.front();
    q.pop();
    for (std::size_t id : adj_[v]) {
      const Edge& e = edges_[id];
      if (level_[e.to] < 0 && residual(e) > eps_) {
        level_[e.to] = level_[v] + 1;
        q.push(e.to);
      }
    }
  }
  return level_[t] >= 0;
}

double FlowNetwork::push(std::size_t v, std::size_t t, double f) {
  if (v == t) return f;
  for (std::size_t& i = iter_[v]; i < adj_[v].size(); ++i) {
    const std::size_t id = adj_[v][i];
    Edge& e = edges_[id];
    if (residual(e) <= eps_ || level_[e.to] != level_[v] + 1) continue;
    const double got = push(e.to, t, std::min(f, residual(e)));
    if (got > 0.0) {
      e.flow += got;
      edges_[id ^ 1].flow -= got;
      return got;
    }
  }
  return 0.0;
}

double FlowNetwork::max_flow(std::size_t s, std::size_t t) {
  double total = 0.0;
  while (bfs_levels(s, t)) {
    iter_.assign(adj_.size(), 0);
    while (true) {
      const double f = push(s, t, kUnbounded);
      total += f;
      if (!(f > eps_)) break;
    }
  }
  return total;
}

double FlowNetwork::min_cost_flow(std::size_t s, std::size_t t, double limit) {
  const std::size_t n = adj_.size();
  // Initial potentials by Bellman-Ford; costs may be negative.
  std::vector<double> pot(n, kUnbounded);
  pot[s] = 0.0;
  for (std::size_t round = 0; round < n; ++round) {
    bool changed = false;
    for (std::size_t v = 0; v < n; ++v) {
      if (pot[v] == kUnbounded) continue;
      for (std::size_t id : adj_[v]) {
        const Edge& e = edges_[id];
        if (residual(e) > eps_ && pot[v] + e.cost < pot[e.to]) {
          pot[e.to] = pot[v] + e.cost;
          changed = true;
        }
      }
    }
    if (!changed) break;
  }
  for (double& p : pot) {
    if (p == kUnbounded) p = 0.0;
  }

  double sent = 0.0;
  std::vector<double> dist(n);
  std::vector<std::size_t> via(n);
  using Item = std::pair<double, std::size_t>;
  while (sent < limit - eps_) {
    std::fill(dist.begin(), dist.end(), kUnbounded);
    std::fill(via.begin(), via.end(), static_cast<std::size_t>(-1));
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[s] = 0.0;
    pq.emplace(0.0, s);
    while (!pq.empty()) {
      auto [dv, v] = pq.top();
      pq.pop();
      if (dv > dist[v]) continue;
      for (std::size_t id : adj_[v]) {
        const Edge& e = edges_[id];
        if (residual(e) <= eps_) continue;
        // Reduced costs are >= 0 up to rounding.
        const double rc = std::max(0.0, e.cost + pot[v] - pot[e.to]);
        if (dv + rc < dist[e.to]) {
          dist[e.to] = dv + rc;
          via[e.to] = id;
          pq.emplace(dist[e.to], e.to);
        }
      }
    }
    if (dist[t] == kUnbounded) break;
    for (std::size_t v = 0; v < n; ++v) {
      if (dist[v] < kUnbounded) pot[v] += dist[v];
    }
    double f = limit - sent;
    for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) f = std::min(f, residual(edges_[via[v]]));
    for (std::size_t v = t; v != s; v = edges_[via[v] ^ 1].to) {
      edges_[via[v]].flow += f;
      edges_[via[v] ^ 1].flow -= f;
    }
    sent += f;
  }
  return sent;
}

std::vector<bool> FlowNetwork::residual_reachable(const std::vector<std::size_t>& seeds) const {
  std::vector<bool> seen(adj_.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t s : seeds) {
    if (!seen[s]) {
      seen[s] = true;
      stack.push_back(s);
    }
  }
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (std::size_t id : adj_[v]) {
      const Edge& e = edges_[id];
      if (!seen[e.to] && residual(e) > eps_) {
        seen[e.to] = true;
        stack.push_back(e.to);
      }
    }
  }
  return seen;
}

}  // namespace infcost::detail
