#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "infcost/core.hpp"
#include "infcost/duality.hpp"
#include "infcost/hall.hpp"
#include "infcost/measures.hpp"

namespace infcost {

// Two scores closer than this (relative to max(1, |score|)) are a tie.
inline constexpr double kTieTolerance = 1e-12;

// Node k goes to argmin_i c(x_k,u_i) - ln t_i; ties go to the lowest index
// and are flagged. With some t_i = 0, nodes that see only zero-weight atoms
// go to argmin over those atoms of c(x,u_i), which is the limit of tiny
// equal weights.
struct CellPartition {
  std::vector<std::size_t> assignment;
  std::vector<bool> tie;
  double tie_mass = 0.0;
};

CellPartition cell_partition(const QuadratureMeasure& mu, std::span<const Point> us,
                             const CostFunction& c, std::span<const double> t);
std::vector<double> weight_map_H(const QuadratureMeasure& mu, std::span<const Point> us,
                                 const CostFunction& c, std::span<const double> t);
// Mass of nodes whose two best scores differ by at most 1e-12.
double tie_mass_diagnostic(const QuadratureMeasure& mu, std::span<const Point> us,
                           const CostFunction& c, std::span<const double> t);

struct SolveOptions {
  std::size_t max_iter = 5000;
  double tol = 1e-6;
  double initial_step = 0.5;
  double min_step = 1e-12;
  double classify_tol = 1e-9;
  // Used only when mu is degenerate for the atoms.
  std::vector<Disk> disks;
  std::vector<double> perturbation_levels{1e2, 1e3, 1e4};
};

struct IterationRecord {
  std::size_t iter;
  double residual;
  double step;
  double dual;
};

struct SolveReport {
  std::vector<double> t;
  double residual = 0.0;  // max |H(t) - alpha| on the problem actually solved
  std::size_t iterations = 0;
  std::vector<IterationRecord> log;
  // Set when the perturbed fallback ran; t then comes from the largest level.
  bool perturbed = false;
  std::vector<std::pair<double, std::vector<double>>> level_path;
  double original_residual = 0.0;  // max |H_mu(t) - alpha| on the unperturbed mu
};

struct NotInterior : std::runtime_error {
  explicit NotInterior(Classification cls);
  Classification classification;
};

struct MaxIterExceeded : std::runtime_error {
  explicit MaxIterExceeded(SolveReport best);
  SolveReport best;
};

// Dual ascent on F(s) = sum_k w_k min_i(c(x_k,u_i) + s_i) - sum_i alpha_i s_i
// with s_i = -ln t_i. Step s += eta (H - alpha), renormalized so t sums to 1.
// A step that lowers F is rejected and eta halves; eta also halves when the
// residual grows.
SolveReport solve_weights(const QuadratureMeasure& mu, std::span<const Point> us,
                          const CostFunction& c, std::span<const double> alpha,
                          const SolveOptions& opts = {});

struct SemiSolution {
  TransportPlan plan;
  Potential potential;
  CellPartition partition;
};

// Plan sends each node to its cell; shifts are -ln t_i. When alpha is given,
// tie nodes are split across their tied atoms to match alpha as closely as
// a max-flow allows.
SemiSolution extract_plan(const QuadratureMeasure& mu, std::span<const Point> us,
                          const CostFunction& c, std::span<const double> t,
                          std::span<const double> alpha = {});

struct SemiProblem {
  QuadratureMeasure mu;
  std::vector<Point> atoms;
  std::vector<double> alpha;
  std::vector<std::size_t> node_ids;  // into the parent's nodes
  std::vector<std::size_t> atom_ids;  // into the parent's atoms
};

struct Decomposition {
  Subset set = 0;
  double inner_weight = 0.0;  // mu(A_I)
  SemiProblem inner;          // A_I against the atoms in I
  SemiProblem outer;          // complement against the remaining atoms
};

// Requires alpha(I) = mu(A_I) within tol and 0 < mu(A_I) < 1.
Decomposition decompose(const QuadratureMeasure& mu, std::span<const Point> us, const CostFunction& c,
                        std::span<const double> alpha, Subset active, double tol = 1e-9);

struct SemiPart {
  std::vector<std::size_t> node_ids;
  std::vector<std::size_t> atom_ids;
  double weight = 1.0;
  SolveReport report;
  Potential potential;
};

struct SemiResult {
  TransportPlan plan;  // in the caller's node and atom indices
  std::vector<SemiPart> parts;
  bool decomposed() const { return parts.size() > 1; }
};

// Solves directly when alpha is interior; with allow_decompose, boundary
// alphas are split on a minimal active set and the halves solved
// recursively. Zero-weight atoms are dropped first.
SemiResult solve_semidiscrete(const QuadratureMeasure& mu, std::span<const Point> us,
                              const CostFunction& c, std::span<const double> alpha,
                              const SolveOptions& opts = {}, bool allow_decompose = false);

double plan_cost(const TransportPlan& plan, std::span<const Point> sources, std::span<const Point> targets,
                 const CostFunction& c);

}  // namespace infcost
