#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "infcost/core.hpp"
#include "infcost/measures.hpp"

namespace infcost {

// Two discrete measures and the cost matrix between their atoms.
class BipartiteInstance {
 public:
  // Throws if some entry is -inf (the cost function already forbids it).
  BipartiteInstance(DiscreteMeasure mu, DiscreteMeasure nu, CostFunction c);

  const DiscreteMeasure& mu() const { return mu_; }
  const DiscreteMeasure& nu() const { return nu_; }
  const CostFunction& cost() const { return cost_; }
  std::size_t rows() const { return mu_.size(); }
  std::size_t cols() const { return nu_.size(); }
  const XReal& at(std::size_t i, std::size_t j) const { return matrix_[i * cols() + j]; }

 private:
  DiscreteMeasure mu_;
  DiscreteMeasure nu_;
  CostFunction cost_;
  std::vector<XReal> matrix_;
};

// Feasible iff the network source -> mu_i -> (finite edges) -> nu_j -> sink
// carries flow 1. On failure `witness` is an inclusion-minimal set A of mu
// atoms with mu(A) + nu(blocked) > 1, `blocked` being the nu atoms that every
// member of A reaches only at infinite cost.
struct HallReport {
  bool feasible = true;
  double flow = 0.0;
  std::vector<std::size_t> witness;
  std::vector<std::size_t> blocked;
  double excess = 0.0;  // mu(A) + nu(blocked) - 1
};

HallReport hall_feasible(const BipartiteInstance& inst, double tol = 1e-12);

struct Infeasible : std::runtime_error {
  explicit Infeasible(HallReport r);
  HallReport report;
};

struct DiscretePlan {
  TransportPlan plan;
  double cost = 0.0;
};

// Min-cost flow by successive shortest paths. Throws Infeasible.
DiscretePlan optimal_plan(const BipartiteInstance& inst);

double plan_cost(const BipartiteInstance& inst, const TransportPlan& plan);

struct DualPair {
  std::vector<XReal> phi;  // on mu atoms
  std::vector<XReal> psi;  // on nu atoms
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;  // primal - dual
  bool admissible = false;
};

// phi from reconstruct_potential on the plan's support, psi its c-transform
// over the mu atoms carrying mass. Throws NotPathBounded when the support
// admits a negative cycle.
DualPair dual_potentials(const BipartiteInstance& inst, const TransportPlan& plan,
                         double admissible_tol = 1e-9);

// A set of mu atoms and the nu atoms it reaches, with equal masses strictly
// between 0 and 1.
struct Split {
  std::vector<std::size_t> mu_atoms;
  std::vector<std::size_t> nu_atoms;
  double mass = 0.0;
};

// All inclusion-minimal tight sets, read off residual closures of a maximum
// flow. Empty for strongly compatible instances. Throws Infeasible.
std::vector<Split> detect_decomposition(const BipartiteInstance& inst, double tol = 1e-12);

struct SubInstance {
  BipartiteInstance inst;
  std::vector<std::size_t> mu_ids;
  std::vector<std::size_t> nu_ids;
  double weight;
};

// The split and its complement, each renormalized.
std::pair<SubInstance, SubInstance> split_instance(const BipartiteInstance& inst, const Split& s);

// Solves each part of a split independently and maps the plans back with
// weights mu(A) and 1 - mu(A).
struct DecomposedPlan {
  Split split;
  DiscretePlan inner;
  DiscretePlan outer;
  DiscretePlan combined;
};
DecomposedPlan solve_split(const BipartiteInstance& inst, const Split& s);

}  // namespace infcost
