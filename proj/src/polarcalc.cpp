#include "infcost/polarcalc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <utility>

#include "parallel.hpp"

namespace infcost {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_dim(const Point& p, std::size_t d, const char* what) {
  if (p.size() != d) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

Point scaled(const Point& p, double s) {
  Point out(p);
  for (double& v : out) v *= s;
  return out;
}

// (<x,y> - 1) / phi(x) where it counts; nullopt when the point adds nothing.
std::optional<double> ratio(const GeomConvexFn& phi, const Point& x, const Point& y) {
  const double gap = dot(x, y) - 1.0;
  if (!(gap > 0.0)) return std::nullopt;
  const double f = phi(x);
  if (f == 0.0) return kInf;
  if (!std::isfinite(f)) return std::nullopt;
  return gap / f;
}

struct Best {
  double value = -kInf;
  std::size_t index = 0;
  bool found = false;
};

double polish(const GeomConvexFn& phi, const Point& y, const SearchGrid& g, Point x, double value) {
  const std::size_t d = x.size();
  Point h(d);
  for (std::size_t k = 0; k < d; ++k) h[k] = (g.hi[k] - g.lo[k]) / static_cast<double>(g.per_axis - 1);
  double hmax = *std::max_element(h.begin(), h.end());
  const double floor = 1e-14 * std::max(1.0, std::sqrt(dot(x, x)));
  for (int it = 0; it < 20000 && hmax > floor; ++it) {
    bool moved = false;
    for (std::size_t k = 0; k < d && !moved; ++k) {
      for (double sgn : {1.0, -1.0}) {
        Point t = x;
        t[k] = std::clamp(t[k] + sgn * h[k], g.lo[k], g.hi[k]);
        if (t[k] == x[k]) continue;
        const auto r = ratio(phi, t, y);
        if (r && *r > value) {
          if (std::isinf(*r)) return kInf;
          x = std::move(t);
          value = *r;
          moved = true;
          break;
        }
      }
    }
    if (!moved) {
      for (double& v : h) v *= 0.5;
      hmax *= 0.5;
    }
  }
  return value;
}

struct LpResult {
  double value = -kInf;
  Eigen::VectorXd arg;
};

// Vertex enumeration for max <c,v> subject to rows . v <= rhs.
LpResult lp_vertex_max(const std::vector<Eigen::VectorXd>& rows, const std::vector<double>& rhs,
                     const Eigen::VectorXd& c) {
  const auto n = c.size();
  const std::size_t r = rows.size();
  std::vector<std::size_t> pick(static_cast<std::size_t>(n));
  std::vector<LpResult> found;
  // Iterate over all n-subsets of the rows in lexicographic order.
  for (std::size_t k = 0; k < pick.size(); ++k) pick[k] = k;
  while (true) {
    // Extended precision: vertices of random piece sets are often ill-conditioned.
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    using VecL = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
    MatL A(n, n);
    VecL b(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      A.row(k) = rows[pick[static_cast<std::size_t>(k)]].cast<long double>().transpose();
      b(k) = rhs[pick[static_cast<std::size_t>(k)]];
    }
    Eigen::FullPivLU<MatL> lu(A);
    if (lu.rank() == n) {
      const VecL vl = lu.solve(b);
      bool feasible = true;
      for (std::size_t q = 0; q < r && feasible; ++q) {
        const VecL row = rows[q].cast<long double>();
        const long double lhs = row.dot(vl);
        feasible = lhs <= rhs[q] + 1e-15L * std::max<long double>(1.0L, row.cwiseAbs().dot(vl.cwiseAbs()));
      }
      const Eigen::VectorXd v = vl.cast<double>();
      if (feasible) found.push_back({static_cast<double>(c.cast<long double>().dot(vl)), v});
    }
    std::size_t k = pick.size();
    while (k > 0 && pick[k - 1] == r - pick.size() + (k - 1)) --k;
    if (k == 0) break;
    ++pick[k - 1];
    for (std::size_t q = k; q < pick.size(); ++q) pick[q] = pick[q - 1] + 1;
  }
  LpResult best;
  for (const LpResult& f : found) {
    if (f.value > best.value) best = f;
  }
  return best;
}

LpResult homogenized_lp(const std::vector<AffinePiece>& pieces, const Point& y, double box) {
  const std::size_t d = y.size();
  const auto n = static_cast<Eigen::Index>(d + 1);
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (const AffinePiece& p : pieces) {
    Eigen::VectorXd row(n);
    for (std::size_t k = 0; k < d; ++k) row(static_cast<Eigen::Index>(k)) = p.slope[k];
    row(n - 1) = p.offset;
    rows.push_back(row);
    rhs.push_back(1.0);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e(k) = 1.0;
    rows.push_back(e);
    rhs.push_back(box);
    if (k < n - 1) {
      rows.push_back(-e);
      rhs.push_back(box);
    } else {
      rows.push_back(-e);  // tau >= 0
      rhs.push_back(0.0);
    }
  }
  Eigen::VectorXd c(n);
  for (std::size_t k = 0; k < d; ++k) c(static_cast<Eigen::Index>(k)) = y[k];
  c(n - 1) = -1.0;
  return lp_vertex_max(rows, rhs, c);
}

}  // namespace

GeomConvexFn::GeomConvexFn(std::size_t dim, Eval f, Grad gradient)
    : dim_(dim), eval_(std::move(f)), grad_(std::move(gradient)) {
  if (dim_ == 0) throw std::invalid_argument("GeomConvexFn: dimension must be positive");
  if (!eval_) throw std::invalid_argument("GeomConvexFn: empty evaluator");
}

GeomConvexFn::GeomConvexFn(std::vector<AffinePiece> pieces) : dim_(0), pieces_(std::move(pieces)) {
  if (pieces_.empty()) throw std::invalid_argument("GeomConvexFn: no pieces");
  dim_ = pieces_.front().slope.size();
  if (dim_ == 0) throw std::invalid_argument("GeomConvexFn: dimension must be positive");
  for (const AffinePiece& p : pieces_) {
    if (p.slope.size() != dim_) throw std::invalid_argument("GeomConvexFn: pieces of mixed dimension");
    if (p.offset > 1e-12) throw std::invalid_argument("GeomConvexFn: positive offset breaks phi(0) = 0");
    for (double v : p.slope) {
      if (!std::isfinite(v)) throw std::invalid_argument("GeomConvexFn: non-finite slope");
    }
    if (!std::isfinite(p.offset)) throw std::invalid_argument("GeomConvexFn: non-finite offset");
  }
}

GeomConvexFn GeomConvexFn::half_squared_norm(std::size_t dim) {
  return GeomConvexFn(
      dim, [](const Point& x) { return 0.5 * dot(x, x); }, [](const Point& x) { return x; });
}

double GeomConvexFn::operator()(const Point& x) const {
  require_dim(x, dim_, "GeomConvexFn");
  if (pieces_.empty()) return eval_(x);
  double v = 0.0;
  for (const AffinePiece& p : pieces_) v = std::max(v, dot(p.slope, x) + p.offset);
  return v;
}

std::vector<Point> GeomConvexFn::active_slopes(const Point& x, double tol) const {
  require_dim(x, dim_, "active_slopes");
  std::vector<Point> out;
  if (pieces_.empty()) return out;
  double top = -kInf;
  for (const AffinePiece& p : pieces_) top = std::max(top, dot(p.slope, x) + p.offset);
  if (top < -tol) return {Point(dim_, 0.0)};
  for (const AffinePiece& p : pieces_) {
    if (dot(p.slope, x) + p.offset >= top - tol) out.push_back(p.slope);
  }
  if (top <= tol) out.push_back(Point(dim_, 0.0));
  return out;
}

std::optional<Point> GeomConvexFn::subgradient(const Point& x) const {
  if (!pieces_.empty()) return active_slopes(x).front();
  if (grad_) return grad_(x);
  return std::nullopt;
}

std::size_t SearchGrid::size() const {
  if (lo.size() != hi.size() || lo.empty()) throw std::invalid_argument("SearchGrid: bad bounds");
  if (per_axis < 2) throw std::invalid_argument("SearchGrid: need at least 2 points per axis");
  std::size_t n = 1;
  for (std::size_t k = 0; k < lo.size(); ++k) n *= per_axis;
  return n;
}

Point SearchGrid::point(std::size_t flat) const {
  Point p(lo.size());
  for (std::size_t k = lo.size(); k-- > 0;) {
    const std::size_t i = flat % per_axis;
    flat /= per_axis;
    p[k] = lo[k] + (hi[k] - lo[k]) * static_cast<double>(i) / static_cast<double>(per_axis - 1);
  }
  return p;
}

SearchGrid cube_grid(std::size_t dim, double half_width, std::size_t per_axis, bool polish) {
  return SearchGrid{Point(dim, -half_width), Point(dim, half_width), per_axis, polish};
}

GeometricCheck check_geometric(const GeomConvexFn& phi, const SearchGrid& box, std::size_t samples,
                               std::uint64_t seed) {
  GeometricCheck out;
  const std::size_t d = phi.dim();
  require_dim(box.lo, d, "check_geometric");
  out.zero_at_origin = std::abs(phi(Point(d, 0.0))) <= 1e-12;
  std::mt19937_64 rng(seed);
  auto draw = [&] {
    Point p(d);
    for (std::size_t k = 0; k < d; ++k) p[k] = std::uniform_real_distribution<double>(box.lo[k], box.hi[k])(rng);
    return p;
  };
  for (std::size_t s = 0; s < samples; ++s) {
    const Point a = draw(), b = draw();
    const double fa = phi(a), fb = phi(b);
    if (fa < 0.0 || fb < 0.0) out.nonnegative = false;
    Point m(d);
    for (std::size_t k = 0; k < d; ++k) m[k] = 0.5 * (a[k] + b[k]);
    const double fm = phi(m);
    if (std::isfinite(fa) && std::isfinite(fb) && fm > 0.5 * (fa + fb) + 1e-9 * std::max(1.0, std::abs(fm))) {
      out.convex = false;
    }
  }
  return out;
}

double a_transform(const GeomConvexFn& phi, const Point& y, const SearchGrid& grid) {
  require_dim(y, phi.dim(), "a_transform");
  require_dim(grid.lo, phi.dim(), "a_transform grid");
  const std::size_t n = grid.size();
  const std::size_t chunks = detail::chunk_count(n);
  std::vector<Best> part(chunks);
  detail::for_each_chunk(n, [&](std::size_t ch, std::size_t b, std::size_t e) {
    Best best;
    for (std::size_t k = b; k < e; ++k) {
      const auto r = ratio(phi, grid.point(k), y);
      if (r && (!best.found || *r > best.value)) {
        best = {*r, k, true};
        if (std::isinf(*r)) break;
      }
    }
    part[ch] = best;
  });
  Best best;
  for (const Best& p : part) {
    if (p.found && (!best.found || p.value > best.value)) best = p;
  }
  if (!best.found) return 0.0;
  if (std::isinf(best.value)) return kInf;
  const double v = grid.polish ? polish(phi, y, grid, grid.point(best.index), best.value) : best.value;
  return std::max(0.0, v);
}

double a_transform_exact(const GeomConvexFn& phi, const Point& y) {
  if (!phi.is_piecewise_affine()) throw std::invalid_argument("a_transform_exact needs a piecewise-affine function");
  require_dim(y, phi.dim(), "a_transform_exact");
  constexpr double kBox = 1e6;
  const LpResult r1 = homogenized_lp(phi.pieces(), y, kBox);
  const LpResult r2 = homogenized_lp(phi.pieces(), y, 2.0 * kBox);
  if (r2.value > r1.value + 1e-6 * std::max(1.0, std::abs(r1.value))) return kInf;
  // Past some box size the optimal basis is fixed and the value is affine in the
  // box. A y that rounds just outside the domain picks up a slope proportional to
  // its rounding error; extrapolating to a zero box removes it.
  return std::max(0.0, 2.0 * r1.value - r2.value);
}

double polar_residual(const GeomConvexFn& phi, const Point& x, const Point& y, const SearchGrid* grid) {
  const double gap = dot(x, y) - 1.0;
  const double f = phi(x);
  if (!(gap > 0.0) || !(f > 0.0) || !std::isfinite(f)) return kInf;
  double a;
  if (phi.is_piecewise_affine()) {
    a = a_transform_exact(phi, y);
  } else {
    if (grid == nullptr) throw std::invalid_argument("polar_residual: black-box function needs a search grid");
    a = a_transform(phi, y, *grid);
  }
  if (!std::isfinite(a)) return kInf;
  return std::abs(f * a - gap);
}

std::vector<Point> polar_subgradient(const GeomConvexFn& phi, const Point& x, const SearchGrid& ygrid, double tol,
                                     const SearchGrid* xgrid) {
  require_dim(x, phi.dim(), "polar_subgradient");
  const double f = phi(x);
  if (!(f > 0.0) || !std::isfinite(f)) return {};
  const std::size_t n = ygrid.size();
  std::vector<char> keep(n, 0);
  detail::for_each_chunk(n, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const Point y = ygrid.point(k);
      if (!(dot(x, y) > 1.0)) continue;
      keep[k] = polar_residual(phi, x, y, xgrid) <= tol ? 1 : 0;
    }
  });
  std::vector<Point> out;
  for (std::size_t k = 0; k < n; ++k) {
    if (keep[k]) out.push_back(ygrid.point(k));
  }
  return out;
}

std::vector<Point> polar_subgradient_exact(const GeomConvexFn& phi, const Point& x, double tol,
                                           const SearchGrid* xgrid) {
  require_dim(x, phi.dim(), "polar_subgradient_exact");
  const double f = phi(x);
  if (!(f > 0.0) || !std::isfinite(f)) return {};
  std::vector<Point> zs = phi.active_slopes(x);
  if (zs.empty()) {
    if (auto z = phi.subgradient(x)) zs.push_back(*z);
  }
  std::vector<Point> out;
  for (const Point& z : zs) {
    const double denom = dot(x, z) - f;
    if (!(denom > 0.0)) continue;
    Point y = scaled(z, 1.0 / denom);
    if (polar_residual(phi, x, y, xgrid) <= tol) out.push_back(std::move(y));
  }
  return out;
}

bool is_subgradient(const GeomConvexFn& phi, const Point& x, const Point& z, double tol, std::uint64_t seed) {
  const std::size_t d = phi.dim();
  require_dim(x, d, "is_subgradient");
  require_dim(z, d, "is_subgradient");
  const double fx = phi(x);
  if (!std::isfinite(fx)) return false;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double scale = std::max(1.0, std::sqrt(dot(x, x)));
  auto holds = [&](const Point& w) {
    const double fw = phi(w);
    if (!std::isfinite(fw)) return true;
    double lin = fx;
    for (std::size_t k = 0; k < d; ++k) lin += z[k] * (w[k] - x[k]);
    return lin <= fw + tol * std::max(1.0, std::abs(fw));
  };
  if (!holds(Point(d, 0.0))) return false;
  for (double r : {1e-3, 1e-1, 1.0, 10.0}) {
    for (int s = 0; s < 16; ++s) {
      Point u(d);
      double norm = 0.0;
      for (double& v : u) {
        v = normal(rng);
        norm += v * v;
      }
      norm = std::sqrt(norm);
      Point w(x);
      for (std::size_t k = 0; k < d; ++k) w[k] += r * scale * u[k] / norm;
      if (!holds(w)) return false;
    }
  }
  return true;
}

Point subgrad_to_polar(const GeomConvexFn& phi, const Point& x, const Point& z) {
  if (!is_subgradient(phi, x, z)) throw std::invalid_argument("subgrad_to_polar: z is not a subgradient at x");
  const double f = phi(x);
  const double denom = dot(x, z) - f;
  if (std::abs(denom) <= 1e-15 * std::max(1.0, std::abs(f))) {
    throw std::invalid_argument("subgrad_to_polar: <x,z> equals phi(x)");
  }
  return scaled(z, 1.0 / denom);
}

Point polar_to_subgrad(const GeomConvexFn& phi, const Point& x, const Point& y, double tol,
                       const SearchGrid* xgrid) {
  require_dim(y, phi.dim(), "polar_to_subgrad");
  const double gap = dot(x, y) - 1.0;
  if (!(gap > 0.0)) throw std::invalid_argument("polar_to_subgrad: <x,y> must exceed 1");
  if (!(polar_residual(phi, x, y, xgrid) <= tol)) {
    throw std::invalid_argument("polar_to_subgrad: y is not a polar subgradient at x");
  }
  return scaled(y, phi(x) / gap);
}

double tangent_minorant(const GeomConvexFn& phi, const Point& x, const Point& y, const Point& z) {
  const double gap = dot(x, y) - 1.0;
  if (!(gap > 0.0)) throw std::invalid_argument("tangent_minorant: <x,y> must exceed 1");
  return phi(x) * (dot(z, y) - 1.0) / gap;
}

bool Halfspaces::contains(const Point& y, double tol) const {
  for (std::size_t k = 0; k < normals.size(); ++k) {
    if (dot(normals[k], y) > rhs[k] + tol) return false;
  }
  return true;
}

Halfspaces polar_set(const std::vector<Point>& points) {
  Halfspaces h;
  for (const Point& p : points) {
    if (std::all_of(p.begin(), p.end(), [](double v) { return v == 0.0; })) continue;
    h.normals.push_back(p);
    h.rhs.push_back(1.0);
  }
  return h;
}

}  // namespace infcost
