#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "infcost/core.hpp"

namespace infcost {

// One affine piece x -> <slope, x> + offset.
struct AffinePiece {
  Point slope;
  double offset = 0.0;
};

// Nonnegative convex function vanishing at the origin, values in [0, +inf].
// Either a black-box evaluator (with an optional gradient) or the clamped
// maximum of affine pieces max(0, max_j <a_j,x> + b_j).
class GeomConvexFn {
 public:
  using Eval = std::function<double(const Point&)>;
  using Grad = std::function<Point(const Point&)>;

  GeomConvexFn(std::size_t dim, Eval f, Grad gradient = {});
  // Throws on an empty list, mixed dimensions or an offset above 1e-12.
  explicit GeomConvexFn(std::vector<AffinePiece> pieces);
  static GeomConvexFn half_squared_norm(std::size_t dim);

  double operator()(const Point& x) const;
  std::size_t dim() const { return dim_; }
  bool is_piecewise_affine() const { return !pieces_.empty(); }
  const std::vector<AffinePiece>& pieces() const { return pieces_; }

  // Slopes of every piece within tol of the maximum, or {0} where the clamp
  // is strictly active. Empty for black boxes.
  std::vector<Point> active_slopes(const Point& x, double tol = 1e-12) const;
  // Some classical subgradient at x when one is known.
  std::optional<Point> subgradient(const Point& x) const;

 private:
  std::size_t dim_;
  Eval eval_;
  Grad grad_;
  std::vector<AffinePiece> pieces_;
};

// Tensor grid with per_axis points per axis, endpoints included.
struct SearchGrid {
  Point lo;
  Point hi;
  std::size_t per_axis = 101;
  bool polish = true;  // pattern search from the best grid point, kept inside the box

  std::size_t size() const;
  Point point(std::size_t flat) const;  // last axis fastest
};

SearchGrid cube_grid(std::size_t dim, double half_width, std::size_t per_axis, bool polish = true);

struct GeometricCheck {
  bool zero_at_origin = true;
  bool nonnegative = true;
  bool convex = true;  // midpoint inequality on random segments, tol 1e-9
  bool ok() const { return zero_at_origin && nonnegative && convex; }
};
GeometricCheck check_geometric(const GeomConvexFn& phi, const SearchGrid& box, std::size_t samples = 200,
                               std::uint64_t seed = 0);

// sup over grid points with <x,y> > 1 of (<x,y> - 1) / phi(x). +inf when phi
// vanishes at such a point, 0 when there is none; points where phi is +inf add nothing.
double a_transform(const GeomConvexFn& phi, const Point& y, const SearchGrid& grid);

// Exact value for piecewise-affine phi from a small linear program in the
// homogenized variables (w, tau) = (x/phi(x), 1/phi(x)).
double a_transform_exact(const GeomConvexFn& phi, const Point& y);

// |phi(x) * A(y) - (<x,y> - 1)|, using the exact transform when phi is
// piecewise affine and `grid` otherwise. +inf when <x,y> <= 1, phi(x) is not
// in (0, inf) or A(y) is infinite.
double polar_residual(const GeomConvexFn& phi, const Point& x, const Point& y,
                      const SearchGrid* grid = nullptr);

// Points y of `ygrid` with <x,y> > 1 and residual <= tol. Empty unless
// phi(x) is in (0, inf).
std::vector<Point> polar_subgradient(const GeomConvexFn& phi, const Point& x, const SearchGrid& ygrid,
                                     double tol, const SearchGrid* xgrid = nullptr);

// Images of the known classical subgradients at x under subgrad_to_polar
// that pass the residual test.
std::vector<Point> polar_subgradient_exact(const GeomConvexFn& phi, const Point& x, double tol = 1e-9,
                                           const SearchGrid* xgrid = nullptr);

// <z, w - x> + phi(x) <= phi(w) + tol on a seeded sample around x.
bool is_subgradient(const GeomConvexFn& phi, const Point& x, const Point& z, double tol = 1e-9,
                    std::uint64_t seed = 0);

// y = z / (<x,z> - phi(x)). Throws when z fails the subgradient test or
// <x,z> equals phi(x).
Point subgrad_to_polar(const GeomConvexFn& phi, const Point& x, const Point& z);

// z = y phi(x) / (<x,y> - 1). Throws when <x,y> <= 1 or y fails the residual test.
Point polar_to_subgrad(const GeomConvexFn& phi, const Point& x, const Point& y, double tol = 1e-9,
                       const SearchGrid* xgrid = nullptr);

// Affine minorant through (x, phi(x)) attached to a polar subgradient y:
// z -> phi(x) (<z,y> - 1) / (<x,y> - 1).
double tangent_minorant(const GeomConvexFn& phi, const Point& x, const Point& y, const Point& z);

// {y : <p, y> <= 1 for every listed p}; zero points impose nothing.
struct Halfspaces {
  std::vector<Point> normals;
  std::vector<double> rhs;
  bool contains(const Point& y, double tol = 0.0) const;
};
Halfspaces polar_set(const std::vector<Point>& points);

}  // namespace infcost
