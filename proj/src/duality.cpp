#include "infcost/duality.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <functional>
#include <optional>

namespace infcost {

Potential::Potential(std::vector<Point> supports, std::vector<XReal> shifts, CostFunction cost)
    : supports_(std::move(supports)), shifts_(std::move(shifts)), cost_(std::move(cost)) {
  if (supports_.empty()) throw std::invalid_argument("potential needs at least one support");
  if (supports_.size() != shifts_.size()) throw std::invalid_argument("supports/shifts size mismatch");
  bool any_finite = false;
  for (const XReal& s : shifts_) {
    if (s.is_neg_inf()) throw std::invalid_argument("potential shifts must be > -inf");
    any_finite = any_finite || s.finite();
  }
  if (!any_finite) throw std::invalid_argument("potential needs a finite shift");
}

XReal Potential::operator()(const Point& x) const {
  XReal best = XReal::inf();
  for (std::size_t i = 0; i < supports_.size(); ++i) {
    const XReal v = xreal_add(cost_(x, supports_[i]), shifts_[i], InfRule::PlusWins);
    if (v < best) best = v;
  }
  return best;
}

XReal eval_potential(const Potential& phi, const Point& x) { return phi(x); }

std::vector<XReal> c_transform(std::span<const XReal> psi, std::span<const Point> domain,
                               const CostFunction& c, std::span<const Point> target) {
  if (domain.empty()) throw std::invalid_argument("c_transform: empty domain");
  if (psi.size() != domain.size()) throw std::invalid_argument("c_transform: psi/domain size mismatch");
  std::vector<XReal> out;
  out.reserve(target.size());
  for (const Point& x : target) {
    XReal best = XReal::inf();
    for (std::size_t j = 0; j < domain.size(); ++j) {
      const XReal v = xreal_add(c(x, domain[j]), -psi[j], InfRule::PlusWins);
      if (v < best) best = v;
    }
    out.push_back(best);
  }
  return out;
}

PairSet::PairSet(std::vector<std::pair<Point, Point>> pairs, CostFunction cost)
    : pairs_(std::move(pairs)), cost_(std::move(cost)) {
  for (const auto& [x, y] : pairs_) {
    if (!cost_.finite(x, y)) throw std::invalid_argument("pair " + to_string(x) + "," + to_string(y) + " has infinite cost");
  }
}

PairSet subgradient_pairs(const Potential& phi, std::span<const Point> xs, double tol) {
  if (tol < 0.0) throw std::invalid_argument("subgradient_pairs: tol must be >= 0");
  std::vector<std::pair<Point, Point>> out;
  const CostFunction& c = phi.cost();
  for (const Point& x : xs) {
    const XReal fx = phi(x);
    if (!fx.finite()) continue;
    for (std::size_t i = 0; i < phi.size(); ++i) {
      const XReal cx = c(x, phi.supports()[i]);
      if (!cx.finite() || !phi.shifts()[i].finite()) continue;
      if (cx.value() + phi.shifts()[i].value() <= fx.value() + tol) out.emplace_back(x, phi.supports()[i]);
    }
  }
  return PairSet(std::move(out), c);
}

bool check_admissible(std::span<const XReal> phi, std::span<const Point> xs,
                      std::span<const XReal> psi, std::span<const Point> ys, const CostFunction& c,
                      double tol) {
  if (phi.size() != xs.size() || psi.size() != ys.size()) {
    throw std::invalid_argument("check_admissible: value/point size mismatch");
  }
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const XReal lhs = xreal_add(phi[i], psi[j], InfRule::MinusWins);
      const XReal rhs = xreal_add(c(xs[i], ys[j]), XReal(tol), InfRule::MinusWins);
      if (lhs > rhs) return false;
    }
  }
  return true;
}

const char* to_string(Certificate::Verdict v) {
  switch (v) {
    case Certificate::Verdict::CyclicallyMonotone: return "CyclicallyMonotone";
    case Certificate::Verdict::NegativeCycle: return "NegativeCycle";
    case Certificate::Verdict::PathBounded: return "PathBounded";
    case Certificate::Verdict::Unbounded: return "Unbounded";
  }
  return "?";
}

namespace {

// Exact edge weights: doubles are dyadic rationals, so differences and walk
// sums are computed without rounding.
struct WeightGraph {
  std::size_t n = 0;
  std::vector<std::vector<std::pair<std::size_t, mpq_class>>> out;  // a -> (b, w)

  explicit WeightGraph(const PairSet& g) : n(g.size()), out(g.size()) {
    const CostFunction& c = g.cost();
    std::vector<mpq_class> diag(n);
    for (std::size_t a = 0; a < n; ++a) diag[a] = mpq_class(c(g.x(a), g.y(a)).value());
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (a == b) continue;
        const XReal cab = c(g.x(b), g.y(a));
        if (!cab.finite()) continue;
        mpq_class w(cab.value());
        w -= diag[a];
        out[a].emplace_back(b, std::move(w));
      }
    }
  }
};

std::vector<std::size_t> canonical_cycle(std::vector<std::size_t> cyc) {
  auto it = std::min_element(cyc.begin(), cyc.end());
  std::rotate(cyc.begin(), it, cyc.end());
  return cyc;
}

// Bellman-Ford from a virtual source joined to every node with weight 0.
std::optional<std::vector<std::size_t>> find_negative_cycle(const WeightGraph& wg) {
  const std::size_t n = wg.n;
  std::vector<mpq_class> d(n, mpq_class(0));
  std::vector<std::size_t> pred(n, n);
  std::size_t last = n;
  for (std::size_t round = 0; round <= n; ++round) {
    last = n;
    for (std::size_t a = 0; a < n; ++a) {
      for (const auto& [b, w] : wg.out[a]) {
        mpq_class cand = d[a] + w;
        if (cand < d[b]) {
          d[b] = std::move(cand);
          pred[b] = a;
          last = b;
        }
      }
    }
    if (last == n) return std::nullopt;
  }
  std::size_t v = last;
  for (std::size_t i = 0; i < n; ++i) v = pred[v];
  std::vector<std::size_t> cyc;
  std::size_t u = v;
  do {
    cyc.push_back(u);
    u = pred[u];
  } while (u != v);
  std::reverse(cyc.begin(), cyc.end());
  return canonical_cycle(std::move(cyc));
}

}  // namespace

Certificate check_cyclic_monotone(const PairSet& g) {
  if (g.size() == 0) throw std::invalid_argument("check_cyclic_monotone: empty pair set");
  Certificate cert;
  if (auto cyc = find_negative_cycle(WeightGraph(g))) {
    cert.verdict = Certificate::Verdict::NegativeCycle;
    cert.cycle = std::move(*cyc);
  }
  return cert;
}

Certificate check_path_bounded(const PairSet& g) {
  if (g.size() == 0) throw std::invalid_argument("check_path_bounded: empty pair set");
  const WeightGraph wg(g);
  Certificate cert;
  if (auto cyc = find_negative_cycle(wg)) {
    cert.verdict = Certificate::Verdict::Unbounded;
    cert.cycle = std::move(*cyc);
    return cert;
  }
  const std::size_t n = wg.n;
  std::vector<std::vector<std::optional<mpq_class>>> dist(n, std::vector<std::optional<mpq_class>>(n));
  for (std::size_t a = 0; a < n; ++a) {
    dist[a][a] = mpq_class(0);
    for (const auto& [b, w] : wg.out[a]) {
      if (!dist[a][b] || w < *dist[a][b]) dist[a][b] = w;
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t a = 0; a < n; ++a) {
      if (!dist[a][k]) continue;
      for (std::size_t b = 0; b < n; ++b) {
        if (!dist[k][b]) continue;
        mpq_class via = *dist[a][k] + *dist[k][b];
        if (!dist[a][b] || via < *dist[a][b]) dist[a][b] = std::move(via);
      }
    }
  }
  cert.verdict = Certificate::Verdict::PathBounded;
  cert.bound.assign(n, std::vector<XReal>(n, XReal::neg_inf()));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (dist[a][b]) cert.bound[a][b] = XReal(-dist[a][b]->get_d());
    }
  }
  return cert;
}

CycleReplay replay_cycle(const PairSet& g, std::span<const std::size_t> cycle) {
  CycleReplay r{0.0, 0.0};
  const CostFunction& c = g.cost();
  for (std::size_t i = 0; i < cycle.size(); ++i) {
    const std::size_t a = cycle[i];
    const std::size_t b = cycle[(i + 1) % cycle.size()];
    r.identity += c(g.x(a), g.y(a)).value();
    r.rerouted += c(g.x(b), g.y(a)).to_double();
  }
  return r;
}

std::vector<std::vector<std::size_t>> equivalence_classes(const PairSet& g) {
  const std::size_t n = g.size();
  const CostFunction& c = g.cost();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a != b && c.finite(g.x(b), g.y(a))) adj[a].push_back(b);
    }
  }
  // Iterative Tarjan.
  constexpr std::size_t kUnset = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index(n, kUnset), low(n, 0), stack;
  std::vector<bool> on_stack(n, false);
  std::vector<std::vector<std::size_t>> classes;
  std::size_t counter = 0;
  for (std::size_t root = 0; root < n; ++root) {
    if (index[root] != kUnset) continue;
    std::vector<std::pair<std::size_t, std::size_t>> frames{{root, 0}};
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = true;
    while (!frames.empty()) {
      auto& [v, next] = frames.back();
      if (next < adj[v].size()) {
        const std::size_t w = adj[v][next++];
        if (index[w] == kUnset) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = true;
          frames.emplace_back(w, 0);
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      const std::size_t done = v;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().first] = std::min(low[frames.back().first], low[done]);
      if (low[done] == index[done]) {
        std::vector<std::size_t> cls;
        std::size_t w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = false;
          cls.push_back(w);
        } while (w != done);
        std::sort(cls.begin(), cls.end());
        classes.push_back(std::move(cls));
      }
    }
  }
  std::sort(classes.begin(), classes.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return classes;
}

NotPathBounded::NotPathBounded(std::vector<std::size_t> cyc)
    : std::runtime_error("pair set is not c-path-bounded (negative cycle)"), cycle(std::move(cyc)) {}

Potential reconstruct_potential(const PairSet& g) {
  if (g.size() == 0) throw std::invalid_argument("reconstruct_potential: empty pair set");
  const WeightGraph wg(g);
  if (auto cyc = find_negative_cycle(wg)) throw NotPathBounded(std::move(*cyc));
  const std::size_t n = wg.n;
  std::vector<std::optional<mpq_class>> d(n);
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (d[seed]) continue;
    d[seed] = mpq_class(0);
    // No negative cycles, so relaxation reaches a fixpoint.
    for (bool changed = true; changed;) {
      changed = false;
      for (std::size_t a = 0; a < n; ++a) {
        if (!d[a]) continue;
        for (const auto& [b, w] : wg.out[a]) {
          mpq_class cand = *d[a] + w;
          if (!d[b] || cand < *d[b]) {
            d[b] = std::move(cand);
            changed = true;
          }
        }
      }
    }
  }
  std::vector<Point> supports;
  std::vector<XReal> shifts;
  for (std::size_t k = 0; k < n; ++k) {
    mpq_class s = *d[k] - mpq_class(g.cost()(g.x(k), g.y(k)).value());
    supports.push_back(g.y(k));
    shifts.emplace_back(s.get_d());
  }
  return Potential(std::move(supports), std::move(shifts), g.cost());
}

}  // namespace infcost
