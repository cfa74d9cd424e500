#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "infcost/core.hpp"

namespace infcost {

// phi(x) = min_i ( c(x, supports[i]) + shifts[i] ).
class Potential {
 public:
  // Throws if supports are empty, sizes differ, or every shift is infinite
  // or any shift is -inf.
  Potential(std::vector<Point> supports, std::vector<XReal> shifts, CostFunction cost);

  const std::vector<Point>& supports() const { return supports_; }
  const std::vector<XReal>& shifts() const { return shifts_; }
  const CostFunction& cost() const { return cost_; }
  std::size_t size() const { return supports_.size(); }

  XReal operator()(const Point& x) const;

 private:
  std::vector<Point> supports_;
  std::vector<XReal> shifts_;
  CostFunction cost_;
};

XReal eval_potential(const Potential& phi, const Point& x);

// result[k] = inf_j ( c(target[k], domain[j]) - psi[j] ), +inf - +inf read as +inf.
std::vector<XReal> c_transform(std::span<const XReal> psi, std::span<const Point> domain,
                               const CostFunction& c, std::span<const Point> target);

// Finite set of pairs, each with finite cost.
class PairSet {
 public:
  PairSet(std::vector<std::pair<Point, Point>> pairs, CostFunction cost);

  const std::vector<std::pair<Point, Point>>& pairs() const { return pairs_; }
  const CostFunction& cost() const { return cost_; }
  std::size_t size() const { return pairs_.size(); }
  const Point& x(std::size_t k) const { return pairs_[k].first; }
  const Point& y(std::size_t k) const { return pairs_[k].second; }

 private:
  std::vector<std::pair<Point, Point>> pairs_;
  CostFunction cost_;
};

// (x, u_i) with c(x,u_i) finite and c(x,u_i) + s_i <= phi(x) + tol.
PairSet subgradient_pairs(const Potential& phi, std::span<const Point> xs, double tol);

// phi(x) + psi(y) <= c(x,y) + tol on all grid pairs, -inf + +inf read as -inf.
// A transform computed in floating point can overshoot by an ulp, hence tol.
bool check_admissible(std::span<const XReal> phi, std::span<const Point> xs,
                      std::span<const XReal> psi, std::span<const Point> ys, const CostFunction& c,
                      double tol = 0.0);

struct Certificate {
  enum class Verdict { CyclicallyMonotone, NegativeCycle, PathBounded, Unbounded };
  Verdict verdict = Verdict::CyclicallyMonotone;
  // Witness for NegativeCycle / Unbounded: indices a0 -> a1 -> ... -> a0,
  // rotated to start at its smallest index.
  std::vector<std::size_t> cycle;
  // PathBounded only: bound[a][b] = -(shortest walk weight a -> b); -inf
  // when no walk exists.
  std::vector<std::vector<XReal>> bound;
};

const char* to_string(Certificate::Verdict v);

// Edge a -> b weighs c(x_b, y_a) - c(x_a, y_a); absent when c(x_b, y_a) is infinite.
Certificate check_cyclic_monotone(const PairSet& g);
Certificate check_path_bounded(const PairSet& g);

// Costs of a witness cycle: sum c(x_a, y_a) and the rerouted sum c(x_next, y_a).
struct CycleReplay {
  double identity;
  double rerouted;
};
CycleReplay replay_cycle(const PairSet& g, std::span<const std::size_t> cycle);

// Strongly connected components of a -> b iff c(x_b, y_a) < inf. Classes are
// sorted internally and ordered by smallest member.
std::vector<std::vector<std::size_t>> equivalence_classes(const PairSet& g);

struct NotPathBounded : std::runtime_error {
  explicit NotPathBounded(std::vector<std::size_t> cyc);
  std::vector<std::size_t> cycle;
};

// Supports y_k, shifts d(k) - c(x_k, y_k), where d are shortest-walk labels
// seeded at index 0 and at the smallest index still unlabeled after each
// pass. Throws NotPathBounded on a negative cycle.
Potential reconstruct_potential(const PairSet& g);

}  // namespace infcost
