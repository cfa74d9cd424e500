#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "infcost/core.hpp"

namespace infcost {

inline constexpr double kMassTolerance = 1e-12;

// Finitely many weighted atoms; weights sum to 1.
class DiscreteMeasure {
 public:
  // Throws on negative weights, bad total, duplicate atoms or mixed dimensions.
  DiscreteMeasure(std::vector<Point> atoms, std::vector<double> weights);

  const std::vector<Point>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  std::size_t size() const { return atoms_.size(); }

 private:
  std::vector<Point> atoms_;
  std::vector<double> weights_;
};

// Axis-aligned box split into resolution[k] equal cells along axis k.
struct GridProvenance {
  Point lo;
  Point hi;
  std::vector<std::size_t> resolution;

  Point cell_width() const;
};
struct SampleProvenance {};
using Provenance = std::variant<GridProvenance, SampleProvenance>;

// Weighted node cloud standing in for an absolutely continuous measure.
class QuadratureMeasure {
 public:
  QuadratureMeasure(std::vector<Point> nodes, std::vector<double> weights,
                    Provenance provenance = SampleProvenance{});

  const std::vector<Point>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return nodes_.size(); }
  std::size_t dim() const { return nodes_.empty() ? 0 : nodes_.front().size(); }

 private:
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  Provenance provenance_;
};

using Density = std::function<double(const Point&)>;
using PointPredicate = std::function<bool(const Point&)>;

// Midpoint rule: one node per cell, weight proportional to density at the
// node. Zero-weight cells are dropped.
QuadratureMeasure grid_measure(const GridProvenance& grid, const Density& density);
QuadratureMeasure uniform_grid(const GridProvenance& grid);
// Equal weights when `weights` is empty.
QuadratureMeasure sample_measure(std::vector<Point> points, std::vector<double> weights = {});
QuadratureMeasure as_quadrature(const DiscreteMeasure& m);

double mass(const QuadratureMeasure& m, const PointPredicate& pred);
QuadratureMeasure restrict_normalize(const QuadratureMeasure& m, const PointPredicate& pred);

// Uniform measure on a ball inside the finiteness intersection of atoms
// `pair.first` and `pair.second`.
struct Disk {
  Point center;
  double radius;
  std::pair<std::size_t, std::size_t> pair;
};

// Nodes of one disk: cube grid with `per_axis` cells per axis, kept inside the ball.
std::vector<Point> disk_nodes(const Disk& d, std::size_t per_axis);

// (1/k) * sum of disk measures (each carrying 1/#disks) + (1 - 1/k) * m.
QuadratureMeasure perturb_mix(const QuadratureMeasure& m, std::span<const Disk> disks, double k,
                              std::size_t per_axis = 16);

}  // namespace infcost
