#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infcost/core.hpp"
#include "infcost/measures.hpp"

namespace infcost {

// Bit i set <=> atom i in the set.
using Subset = std::uint32_t;
inline constexpr std::size_t kMaxAtoms = 20;

std::vector<std::size_t> members(Subset s);
Subset make_subset(std::span<const std::size_t> idx);
std::string subset_to_string(Subset s);

// Per node: which atoms it reaches with finite cost.
std::vector<Subset> finiteness_masks(const QuadratureMeasure& mu, std::span<const Point> us,
                                     const CostFunction& c);

// masses[I] = mu(A_I), A_I = {x : some i in I has c(x,u_i) < inf}.
// Feasible set: {alpha in simplex : sum_{i in I} alpha_i <= masses[I] for all I}.
class HallPolytope {
 public:
  // From a bare mass table. Checks size 2^m, the empty/full values and monotonicity.
  HallPolytope(std::size_t m, std::vector<double> masses);

  std::size_t m() const { return m_; }
  Subset full() const { return static_cast<Subset>((std::uint64_t{1} << m_) - 1); }
  double mass(Subset s) const { return masses_.at(s); }
  const std::vector<double>& masses() const { return masses_; }

  bool has_source() const { return source_ != nullptr; }
  // Throw when the polytope was built from a bare table.
  const QuadratureMeasure& source() const;
  const std::vector<Point>& supports() const { return supports_; }
  const CostFunction& cost() const;

 private:
  friend HallPolytope build_polytope(const QuadratureMeasure&, std::span<const Point>,
                                     const CostFunction&);
  std::size_t m_;
  std::vector<double> masses_;
  std::shared_ptr<const QuadratureMeasure> source_;
  std::vector<Point> supports_;
  std::optional<CostFunction> cost_;
};

// Throws if m > kMaxAtoms or a node with positive weight reaches no atom.
HallPolytope build_polytope(const QuadratureMeasure& mu, std::span<const Point> us,
                            const CostFunction& c);

struct Classification {
  enum class Kind { Interior, Boundary, Exterior };
  Kind kind = Kind::Interior;
  // Boundary: the active sets. Exterior: the violated sets. Ascending bitmask order.
  std::vector<Subset> sets;
};

const char* to_string(Classification::Kind k);

// Throws when alpha is not a probability vector within tol.
Classification classify(const HallPolytope& p, std::span<const double> alpha, double tol = 1e-9);

// Sets with no proper subset in the list.
std::vector<Subset> minimal_sets(std::span<const Subset> sets);

// Face {alpha in P : alpha(I) = masses[I]} as a product of two scaled polytopes.
struct FaceDescriptor {
  Subset set = 0;
  double inner_scale = 0.0;  // mu(A_I)
  double outer_scale = 0.0;  // mu(X \ A_I)
  std::vector<std::size_t> inner_atoms;  // members of I
  std::vector<std::size_t> outer_atoms;  // members of the complement
  std::optional<HallPolytope> inner;     // empty optional stands for {0}
  std::optional<HallPolytope> outer;
};

// Needs a polytope built from a measure. Throws for the empty or full set.
FaceDescriptor split_face(const HallPolytope& p, Subset set);

struct NondegeneracyReport {
  bool ok = true;
  std::optional<std::pair<std::size_t, std::size_t>> witness;  // first pair with null overlap
};
NondegeneracyReport check_nondegenerate(const QuadratureMeasure& mu, std::span<const Point> us,
                                        const CostFunction& c);

// The polytope is the base polytope of the coverage function I -> mu(A_I),
// so maximizing a lexicographic objective is a greedy pass. Every vertex
// arises from some order; m <= 9 for full enumeration.
std::vector<double> greedy_vertex(const HallPolytope& p, std::span<const std::size_t> order);
std::vector<std::vector<double>> vertices(const HallPolytope& p);
std::vector<std::vector<double>> face_vertices(const HallPolytope& p, Subset set, double tol = 1e-9);
// Vertices of inner_scale*inner x outer_scale*outer placed back into R^m.
std::vector<std::vector<double>> product_vertices(const FaceDescriptor& f, std::size_t m);

// Affine dimension. Uses every order for m <= 8, else seeded random objectives.
int polytope_dimension(const HallPolytope& p, std::uint64_t seed = 0);

// Euclidean distance from a point to the convex hull of finitely many points
// (minimum-norm-point iteration).
double hull_distance(std::span<const double> point, const std::vector<std::vector<double>>& hull);
double hausdorff_distance(const HallPolytope& a, const HallPolytope& b);

// {j : c(xs[i], ys[j]) = inf for every i in k}.
std::vector<std::size_t> c_dual_set(std::span<const std::size_t> k, std::span<const Point> xs,
                                    const CostFunction& c, std::span<const Point> ys);

// Largest nu(A) - mu(proj_X((A x X) cap S)) over nu-cell prefix and suffix
// intervals A, for 1D grid measures. A mu cell counts toward the projection
// when some corner pair of the two cells has finite cost.
struct IntervalCompat {
  double worst_gap = 0.0;
  std::size_t sets_checked = 0;
};
IntervalCompat interval_compat_gap(const QuadratureMeasure& mu, const QuadratureMeasure& nu,
                                   const CostFunction& c);

}  // namespace infcost
