#include "infcost/measures.hpp"

#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>

namespace infcost {

namespace {

// Neumaier summation: grids with 10^5 nodes would otherwise drift past kMassTolerance.
double checked_total(const std::vector<double>& w) {
  double total = 0.0, carry = 0.0;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("weights must be finite and >= 0");
    const double t = total + v;
    carry += std::abs(total) >= std::abs(v) ? (total - t) + v : (v - t) + total;
    total = t;
  }
  return total + carry;
}

void check_dims(const std::vector<Point>& pts) {
  for (const Point& p : pts) {
    if (p.empty()) throw std::invalid_argument("points need dimension >= 1");
    if (p.size() != pts.front().size()) throw std::invalid_argument("dimension mismatch");
    for (double v : p) {
      if (!std::isfinite(v)) throw std::invalid_argument("point coordinates must be finite");
    }
  }
}

std::vector<double> normalized(std::vector<double> w) {
  const double total = checked_total(w);
  if (!(total > 0.0)) throw std::invalid_argument("zero total mass");
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

DiscreteMeasure::DiscreteMeasure(std::vector<Point> atoms, std::vector<double> weights)
    : atoms_(std::move(atoms)), weights_(std::move(weights)) {
  if (atoms_.empty()) throw std::invalid_argument("discrete measure needs at least one atom");
  if (atoms_.size() != weights_.size()) throw std::invalid_argument("atoms/weights size mismatch");
  check_dims(atoms_);
  const double total = checked_total(weights_);
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("discrete weights sum to " + std::to_string(total) + ", expected 1");
  }
  std::set<Point> seen(atoms_.begin(), atoms_.end());
  if (seen.size() != atoms_.size()) throw std::invalid_argument("atoms must be pairwise distinct");
}

Point GridProvenance::cell_width() const {
  Point h(lo.size());
  for (std::size_t k = 0; k < lo.size(); ++k) h[k] = (hi[k] - lo[k]) / static_cast<double>(resolution[k]);
  return h;
}

QuadratureMeasure::QuadratureMeasure(std::vector<Point> nodes, std::vector<double> weights,
                                     Provenance provenance)
    : nodes_(std::move(nodes)), weights_(std::move(weights)), provenance_(std::move(provenance)) {
  if (nodes_.size() != weights_.size()) throw std::invalid_argument("nodes/weights size mismatch");
  if (nodes_.empty()) throw std::invalid_argument("quadrature measure needs at least one node");
  check_dims(nodes_);
  const double total = checked_total(weights_);
  if (std::abs(total - 1.0) > kMassTolerance) {
    throw std::invalid_argument("quadrature weights sum to " + std::to_string(total) + ", expected 1");
  }
}

QuadratureMeasure grid_measure(const GridProvenance& grid, const Density& density) {
  const std::size_t d = grid.lo.size();
  if (d == 0 || grid.hi.size() != d || grid.resolution.size() != d) {
    throw std::invalid_argument("grid: lo/hi/resolution must share a dimension >= 1");
  }
  std::size_t count = 1;
  for (std::size_t k = 0; k < d; ++k) {
    if (grid.resolution[k] == 0 || !(grid.hi[k] > grid.lo[k])) throw std::invalid_argument("grid: empty box");
    count *= grid.resolution[k];
  }
  const Point h = grid.cell_width();
  std::vector<Point> nodes;
  std::vector<double> weights;
  std::vector<std::size_t> idx(d, 0);
  for (std::size_t n = 0; n < count; ++n) {
    Point p(d);
    for (std::size_t k = 0; k < d; ++k) p[k] = grid.lo[k] + (static_cast<double>(idx[k]) + 0.5) * h[k];
    const double w = density(p);
    if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("density must be finite and >= 0");
    if (w > 0.0) {
      nodes.push_back(std::move(p));
      weights.push_back(w);
    }
    // Last axis varies fastest.
    for (std::size_t k = d; k-- > 0;) {
      if (++idx[k] < grid.resolution[k]) break;
      idx[k] = 0;
    }
  }
  return QuadratureMeasure(std::move(nodes), normalized(std::move(weights)), grid);
}

QuadratureMeasure uniform_grid(const GridProvenance& grid) {
  return grid_measure(grid, [](const Point&) { return 1.0; });
}

QuadratureMeasure sample_measure(std::vector<Point> points, std::vector<double> weights) {
  if (weights.empty()) weights.assign(points.size(), 1.0);
  return QuadratureMeasure(std::move(points), normalized(std::move(weights)), SampleProvenance{});
}

QuadratureMeasure as_quadrature(const DiscreteMeasure& m) {
  return QuadratureMeasure(m.atoms(), m.weights(), SampleProvenance{});
}

double mass(const QuadratureMeasure& m, const PointPredicate& pred) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (pred(m.nodes()[i])) s += m.weights()[i];
  }
  return s;
}

QuadratureMeasure restrict_normalize(const QuadratureMeasure& m, const PointPredicate& pred) {
  std::vector<Point> nodes;
  std::vector<double> weights;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (pred(m.nodes()[i]) && m.weights()[i] > 0.0) {
      nodes.push_back(m.nodes()[i]);
      weights.push_back(m.weights()[i]);
    }
  }
  if (nodes.empty()) throw std::invalid_argument("restriction has zero mass");
  // Keep the grid tag only when nothing was removed.
  Provenance prov = nodes.size() == m.size() ? m.provenance() : Provenance{SampleProvenance{}};
  return QuadratureMeasure(std::move(nodes), normalized(std::move(weights)), std::move(prov));
}

std::vector<Point> disk_nodes(const Disk& disk, std::size_t per_axis) {
  if (!(disk.radius > 0.0)) throw std::invalid_argument("disk radius must be positive");
  if (per_axis == 0) throw std::invalid_argument("per_axis must be positive");
  const std::size_t d = disk.center.size();
  GridProvenance box;
  for (std::size_t k = 0; k < d; ++k) {
    box.lo.push_back(disk.center[k] - disk.radius);
    box.hi.push_back(disk.center[k] + disk.radius);
    box.resolution.push_back(per_axis);
  }
  const double r2 = disk.radius * disk.radius;
  std::vector<Point> out;
  const QuadratureMeasure cube = uniform_grid(box);
  for (const Point& p : cube.nodes()) {
    if (squared_distance(p, disk.center) < r2) out.push_back(p);
  }
  if (out.empty()) out.push_back(disk.center);
  return out;
}

QuadratureMeasure perturb_mix(const QuadratureMeasure& m, std::span<const Disk> disks, double k,
                              std::size_t per_axis) {
  if (!(k >= 1.0)) throw std::invalid_argument("perturb_mix: k must be >= 1");
  if (disks.empty()) throw std::invalid_argument("perturb_mix: empty disk list");
  const double keep = 1.0 - 1.0 / k;
  std::vector<Point> nodes;
  std::vector<double> weights;
  for (std::size_t i = 0; i < m.size(); ++i) {
    nodes.push_back(m.nodes()[i]);
    weights.push_back(keep * m.weights()[i]);
  }
  const double per_disk = (1.0 / k) / static_cast<double>(disks.size());
  for (const Disk& disk : disks) {
    if (disk.center.size() != m.dim()) throw std::invalid_argument("perturb_mix: disk dimension mismatch");
    const auto pts = disk_nodes(disk, per_axis);
    const double w = per_disk / static_cast<double>(pts.size());
    for (const Point& p : pts) {
      nodes.push_back(p);
      weights.push_back(w);
    }
  }
  // Renormalize only to absorb rounding; the mixture is already a probability.
  return QuadratureMeasure(std::move(nodes), normalized(std::move(weights)), SampleProvenance{});
}

}  // namespace infcost
