#include "infcost/hall.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "parallel.hpp"

namespace infcost {

std::vector<std::size_t> members(Subset s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; s != 0; ++i, s >>= 1) {
    if (s & 1u) out.push_back(i);
  }
  return out;
}

Subset make_subset(std::span<const std::size_t> idx) {
  Subset s = 0;
  for (std::size_t i : idx) {
    if (i >= kMaxAtoms) throw std::out_of_range("atom index beyond the subset width");
    s |= Subset{1} << i;
  }
  return s;
}

std::string subset_to_string(Subset s) {
  std::ostringstream os;
  os << '{';
  bool first = true;
  for (std::size_t i : members(s)) {
    os << (first ? "" : ",") << i;
    first = false;
  }
  os << '}';
  return os.str();
}

std::vector<Subset> finiteness_masks(const QuadratureMeasure& mu, std::span<const Point> us,
                                     const CostFunction& c) {
  if (us.size() > kMaxAtoms) throw std::invalid_argument("at most 20 atoms are supported");
  std::vector<Subset> masks(mu.size(), 0);
  detail::for_each_chunk(mu.size(), [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      Subset s = 0;
      for (std::size_t i = 0; i < us.size(); ++i) {
        if (c.finite(mu.nodes()[k], us[i])) s |= Subset{1} << i;
      }
      masks[k] = s;
    }
  });
  return masks;
}

HallPolytope::HallPolytope(std::size_t m, std::vector<double> masses) : m_(m), masses_(std::move(masses)) {
  if (m == 0 || m > kMaxAtoms) throw std::invalid_argument("hall polytope needs 1..20 atoms");
  if (masses_.size() != (std::size_t{1} << m)) throw std::invalid_argument("mass table must have 2^m entries");
  constexpr double tol = 1e-12;
  if (std::abs(masses_[0]) > tol) throw std::invalid_argument("mass of the empty set must be 0");
  if (std::abs(masses_[full()] - 1.0) > tol) throw std::invalid_argument("mass of the full set must be 1");
  for (Subset s = 0; s <= full(); ++s) {
    for (std::size_t i = 0; i < m; ++i) {
      const Subset t = s | (Subset{1} << i);
      if (masses_[s] > masses_[t] + tol) throw std::invalid_argument("mass table is not monotone");
    }
  }
}

const QuadratureMeasure& HallPolytope::source() const {
  if (!source_) throw std::logic_error("hall polytope has no source measure");
  return *source_;
}

const CostFunction& HallPolytope::cost() const {
  if (!cost_) throw std::logic_error("hall polytope has no cost");
  return *cost_;
}

HallPolytope build_polytope(const QuadratureMeasure& mu, std::span<const Point> us,
                            const CostFunction& c) {
  const std::size_t m = us.size();
  if (m == 0) throw std::invalid_argument("build_polytope: no atoms");
  if (m > kMaxAtoms) throw std::invalid_argument("build_polytope: at most 20 atoms");
  const auto masks = finiteness_masks(mu, us, c);
  const std::size_t size = std::size_t{1} << m;
  std::vector<double> by_mask(size, 0.0);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (masks[k] == 0 && mu.weights()[k] > 0.0) {
      throw std::invalid_argument("node " + to_string(mu.nodes()[k]) + " has infinite cost to every atom");
    }
    by_mask[masks[k]] += mu.weights()[k];
  }
  // within[S] = mass of nodes whose mask is a subset of S.
  std::vector<double> within = by_mask;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t s = 0; s < size; ++s) {
      if (s & (std::size_t{1} << i)) within[s] += within[s ^ (std::size_t{1} << i)];
    }
  }
  const double total = within[size - 1];
  std::vector<double> masses(size);
  for (std::size_t s = 0; s < size; ++s) masses[s] = total - within[(size - 1) & ~s];
  masses[0] = 0.0;
  masses[size - 1] = 1.0;
  for (auto& v : masses) v = std::clamp(v, 0.0, 1.0);
  HallPolytope p(m, std::move(masses));
  p.source_ = std::make_shared<const QuadratureMeasure>(mu);
  p.supports_.assign(us.begin(), us.end());
  p.cost_ = c;
  return p;
}

const char* to_string(Classification::Kind k) {
  switch (k) {
    case Classification::Kind::Interior: return "Interior";
    case Classification::Kind::Boundary: return "Boundary";
    case Classification::Kind::Exterior: return "Exterior";
  }
  return "?";
}

namespace {

std::vector<double> subset_sums(std::span<const double> alpha) {
  std::vector<double> sums(std::size_t{1} << alpha.size(), 0.0);
  for (std::size_t s = 1; s < sums.size(); ++s) {
    const std::size_t low = static_cast<std::size_t>(__builtin_ctzll(s));
    sums[s] = sums[s & (s - 1)] + alpha[low];
  }
  return sums;
}

}  // namespace

Classification classify(const HallPolytope& p, std::span<const double> alpha, double tol) {
  if (alpha.size() != p.m()) throw std::invalid_argument("classify: alpha has the wrong length");
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= -tol)) throw std::invalid_argument("classify: alpha has a negative entry");
    total += a;
  }
  if (std::abs(total - 1.0) > tol) throw std::invalid_argument("classify: alpha does not sum to 1");
  const auto sums = subset_sums(alpha);
  Classification out;
  std::vector<Subset> active;
  for (Subset s = 1; s < p.full(); ++s) {
    const double slack = p.mass(s) - sums[s];
    if (slack < -tol) out.sets.push_back(s);
    else if (slack <= tol) active.push_back(s);
  }
  if (!out.sets.empty()) {
    out.kind = Classification::Kind::Exterior;
  } else if (!active.empty()) {
    out.kind = Classification::Kind::Boundary;
    out.sets = std::move(active);
  }
  return out;
}

std::vector<Subset> minimal_sets(std::span<const Subset> sets) {
  std::vector<Subset> out;
  for (Subset s : sets) {
    const bool has_sub = std::any_of(sets.begin(), sets.end(), [&](Subset t) { return t != s && (t & s) == t; });
    if (!has_sub) out.push_back(s);
  }
  return out;
}

FaceDescriptor split_face(const HallPolytope& p, Subset set) {
  if (set == 0 || set == p.full()) throw std::invalid_argument("split_face: set must be proper and nonempty");
  if (set > p.full()) throw std::invalid_argument("split_face: set names unknown atoms");
  const QuadratureMeasure& mu = p.source();
  const auto masks = finiteness_masks(mu, p.supports(), p.cost());
  FaceDescriptor f;
  f.set = set;
  f.inner_atoms = members(set);
  f.outer_atoms = members(p.full() & ~set);
  f.inner_scale = p.mass(set);
  f.outer_scale = 1.0 - p.mass(set);

  bool any_in = false, any_out = false;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (mu.weights()[k] <= 0.0) continue;
    ((masks[k] & set) ? any_in : any_out) = true;
  }
  auto supports_of = [&](const std::vector<std::size_t>& idx) {
    std::vector<Point> out;
    for (std::size_t i : idx) out.push_back(p.supports()[i]);
    return out;
  };
  // Node order matches mu, so masks[] can index the restriction by position.
  if (any_in) {
    std::vector<Point> nodes;
    std::vector<double> w;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      if ((masks[k] & set) && mu.weights()[k] > 0.0) {
        nodes.push_back(mu.nodes()[k]);
        w.push_back(mu.weights()[k]);
      }
    }
    f.inner = build_polytope(sample_measure(std::move(nodes), std::move(w)), supports_of(f.inner_atoms), p.cost());
  } else {
    f.inner_scale = 0.0;
  }
  if (any_out) {
    std::vector<Point> nodes;
    std::vector<double> w;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      if (!(masks[k] & set) && mu.weights()[k] > 0.0) {
        nodes.push_back(mu.nodes()[k]);
        w.push_back(mu.weights()[k]);
      }
    }
    f.outer = build_polytope(sample_measure(std::move(nodes), std::move(w)), supports_of(f.outer_atoms), p.cost());
  } else {
    f.outer_scale = 0.0;
  }
  return f;
}

NondegeneracyReport check_nondegenerate(const QuadratureMeasure& mu, std::span<const Point> us,
                                        const CostFunction& c) {
  const auto masks = finiteness_masks(mu, us, c);
  const std::size_t m = us.size();
  NondegeneracyReport r;
  for (std::size_t i = 0; i < m && r.ok; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const Subset both = (Subset{1} << i) | (Subset{1} << j);
      double overlap = 0.0;
      for (std::size_t k = 0; k < mu.size(); ++k) {
        if ((masks[k] & both) == both) overlap += mu.weights()[k];
      }
      if (!(overlap > 0.0)) {
        r.ok = false;
        r.witness = std::pair{i, j};
        break;
      }
    }
  }
  return r;
}

std::vector<double> greedy_vertex(const HallPolytope& p, std::span<const std::size_t> order) {
  if (order.size() != p.m()) throw std::invalid_argument("greedy_vertex: order must list every atom");
  std::vector<double> v(p.m(), 0.0);
  Subset prefix = 0;
  for (std::size_t i : order) {
    const Subset next = prefix | (Subset{1} << i);
    v[i] = p.mass(next) - p.mass(prefix);
    prefix = next;
  }
  if (prefix != p.full()) throw std::invalid_argument("greedy_vertex: order is not a permutation");
  return v;
}

namespace {

void dedup(std::vector<std::vector<double>>& pts, double tol) {
  std::sort(pts.begin(), pts.end());
  std::vector<std::vector<double>> out;
  for (auto& v : pts) {
    const bool dup = std::any_of(out.begin(), out.end(), [&](const std::vector<double>& u) {
      for (std::size_t k = 0; k < u.size(); ++k) {
        if (std::abs(u[k] - v[k]) > tol) return false;
      }
      return true;
    });
    if (!dup) out.push_back(std::move(v));
  }
  pts = std::move(out);
}

int affine_rank(const std::vector<std::vector<double>>& pts) {
  if (pts.size() <= 1) return 0;
  const std::size_t d = pts.front().size();
  Eigen::MatrixXd diff(static_cast<Eigen::Index>(pts.size() - 1), static_cast<Eigen::Index>(d));
  for (std::size_t r = 1; r < pts.size(); ++r) {
    for (std::size_t k = 0; k < d; ++k) diff(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(k)) = pts[r][k] - pts[0][k];
  }
  Eigen::FullPivLU<Eigen::MatrixXd> lu(diff);
  lu.setThreshold(1e-9);
  return static_cast<int>(lu.rank());
}

}  // namespace

std::vector<std::vector<double>> vertices(const HallPolytope& p) {
  if (p.m() > 9) throw std::invalid_argument("vertices: full enumeration limited to m <= 9");
  std::vector<std::size_t> order(p.m());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<double>> out;
  do {
    out.push_back(greedy_vertex(p, order));
  } while (std::next_permutation(order.begin(), order.end()));
  dedup(out, 1e-12);
  return out;
}

std::vector<std::vector<double>> face_vertices(const HallPolytope& p, Subset set, double tol) {
  std::vector<std::vector<double>> out;
  for (auto& v : vertices(p)) {
    double s = 0.0;
    for (std::size_t i : members(set)) s += v[i];
    if (std::abs(s - p.mass(set)) <= tol) out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::vector<double>> product_vertices(const FaceDescriptor& f, std::size_t m) {
  auto scaled = [](const std::optional<HallPolytope>& q, double scale, std::size_t count) {
    std::vector<std::vector<double>> vs;
    if (!q) {
      vs.emplace_back(count, 0.0);
      return vs;
    }
    for (auto v : vertices(*q)) {
      for (double& x : v) x *= scale;
      vs.push_back(std::move(v));
    }
    return vs;
  };
  const auto in = scaled(f.inner, f.inner_scale, f.inner_atoms.size());
  const auto out = scaled(f.outer, f.outer_scale, f.outer_atoms.size());
  std::vector<std::vector<double>> result;
  for (const auto& a : in) {
    for (const auto& b : out) {
      std::vector<double> v(m, 0.0);
      for (std::size_t k = 0; k < f.inner_atoms.size(); ++k) v[f.inner_atoms[k]] = a[k];
      for (std::size_t k = 0; k < f.outer_atoms.size(); ++k) v[f.outer_atoms[k]] = b[k];
      result.push_back(std::move(v));
    }
  }
  dedup(result, 1e-12);
  return result;
}

int polytope_dimension(const HallPolytope& p, std::uint64_t seed) {
  std::vector<std::vector<double>> pts;
  if (p.m() <= 8) {
    pts = vertices(p);
  } else {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    const std::size_t draws = 8 * p.m();
    std::vector<double> w(p.m());
    std::vector<std::size_t> order(p.m());
    for (std::size_t r = 0; r < draws; ++r) {
      for (double& x : w) x = gauss(rng);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
      pts.push_back(greedy_vertex(p, order));
    }
    dedup(pts, 1e-12);
  }
  return affine_rank(pts);
}

double hull_distance(std::span<const double> point, const std::vector<std::vector<double>>& hull) {
  if (hull.empty()) throw std::invalid_argument("hull_distance: empty hull");
  const std::size_t d = point.size();
  const auto n = static_cast<Eigen::Index>(hull.size());
  Eigen::MatrixXd P(static_cast<Eigen::Index>(d), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    if (hull[static_cast<std::size_t>(j)].size() != d) throw std::invalid_argument("hull_distance: dimension mismatch");
    for (std::size_t k = 0; k < d; ++k) P(static_cast<Eigen::Index>(k), j) = hull[static_cast<std::size_t>(j)][k] - point[k];
  }
  double scale = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) scale = std::max(scale, P.col(j).squaredNorm());
  const double eps = 1e-14 * std::max(scale, 1e-300);

  // Wolfe's minimum-norm-point iteration on the shifted points.
  Eigen::Index start = 0;
  P.colwise().squaredNorm().minCoeff(&start);
  std::vector<Eigen::Index> S{start};
  std::vector<double> lambda{1.0};
  Eigen::VectorXd x = P.col(start);
  for (int major = 0; major < 1000; ++major) {
    Eigen::Index j = 0;
    (x.transpose() * P).minCoeff(&j);
    if (x.squaredNorm() - x.dot(P.col(j)) <= eps) break;
    if (std::find(S.begin(), S.end(), j) != S.end()) break;
    S.push_back(j);
    lambda.push_back(0.0);
    while (true) {
      const auto k = static_cast<Eigen::Index>(S.size());
      Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
      for (Eigen::Index a = 0; a < k; ++a) {
        for (Eigen::Index b = 0; b < k; ++b) kkt(a, b) = P.col(S[static_cast<std::size_t>(a)]).dot(P.col(S[static_cast<std::size_t>(b)]));
        kkt(a, k) = kkt(k, a) = 1.0;
      }
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
      rhs(k) = 1.0;
      const Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
      const Eigen::VectorXd mu_ = sol.head(k);
      if ((mu_.array() > 1e-14).all()) {
        for (Eigen::Index a = 0; a < k; ++a) lambda[static_cast<std::size_t>(a)] = mu_(a);
        break;
      }
      double theta = 1.0;
      for (Eigen::Index a = 0; a < k; ++a) {
        const double l = lambda[static_cast<std::size_t>(a)];
        if (mu_(a) <= 1e-14 && l - mu_(a) > 0.0) theta = std::min(theta, l / (l - mu_(a)));
      }
      for (Eigen::Index a = 0; a < k; ++a) {
        auto& l = lambda[static_cast<std::size_t>(a)];
        l = (1.0 - theta) * l + theta * mu_(a);
      }
      std::vector<Eigen::Index> S2;
      std::vector<double> l2;
      for (std::size_t a = 0; a < S.size(); ++a) {
        if (lambda[a] > 1e-14) {
          S2.push_back(S[a]);
          l2.push_back(lambda[a]);
        }
      }
      if (S2.empty()) {
        S2.push_back(S.back());
        l2.push_back(1.0);
      }
      const double tot = std::accumulate(l2.begin(), l2.end(), 0.0);
      for (double& l : l2) l /= tot;
      S = std::move(S2);
      lambda = std::move(l2);
      if (S.size() == 1) break;
    }
    x.setZero();
    for (std::size_t a = 0; a < S.size(); ++a) x += lambda[a] * P.col(S[a]);
  }
  return x.norm();
}

double hausdorff_distance(const HallPolytope& a, const HallPolytope& b) {
  if (a.m() != b.m()) throw std::invalid_argument("hausdorff_distance: different atom counts");
  const auto va = vertices(a);
  const auto vb = vertices(b);
  double h = 0.0;
  for (const auto& v : va) h = std::max(h, hull_distance(v, vb));
  for (const auto& v : vb) h = std::max(h, hull_distance(v, va));
  return h;
}

std::vector<std::size_t> c_dual_set(std::span<const std::size_t> k, std::span<const Point> xs,
                                    const CostFunction& c, std::span<const Point> ys) {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < ys.size(); ++j) {
    const bool all_inf = std::none_of(k.begin(), k.end(), [&](std::size_t i) { return c.finite(xs[i], ys[j]); });
    if (all_inf) out.push_back(j);
  }
  return out;
}

IntervalCompat interval_compat_gap(const QuadratureMeasure& mu, const QuadratureMeasure& nu,
                                   const CostFunction& c) {
  auto cells = [](const QuadratureMeasure& q) {
    const auto* g = std::get_if<GridProvenance>(&q.provenance());
    if (g == nullptr || g->lo.size() != 1) throw std::invalid_argument("interval_compat_gap: needs 1D grid measures");
    const double h = g->cell_width()[0];
    std::vector<std::pair<double, double>> out;
    for (const Point& p : q.nodes()) out.emplace_back(p[0] - 0.5 * h, p[0] + 0.5 * h);
    return out;
  };
  const auto mc = cells(mu);
  const auto nc = cells(nu);
  const std::size_t n = nu.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return nc[a].first < nc[b].first; });

  auto corner_finite = [&](std::size_t i, std::size_t k) {
    for (double x : {mc[i].first, mc[i].second}) {
      for (double y : {nc[k].first, nc[k].second}) {
        if (c.finite(Point{x}, Point{y})) return true;
      }
    }
    return false;
  };
  // Positions in sorted nu order of the first and last partner cell.
  std::vector<double> reach_prefix(n, 0.0), reach_suffix(n, 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    std::size_t first = n, last = n;
    for (std::size_t r = 0; r < n; ++r) {
      if (corner_finite(i, order[r])) {
        if (first == n) first = r;
        last = r;
      }
    }
    if (first == n) continue;
    reach_prefix[first] += mu.weights()[i];
    reach_suffix[last] += mu.weights()[i];
  }
  IntervalCompat out{-1.0, 0};
  double nu_prefix = 0.0, mu_prefix = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    nu_prefix += nu.weights()[order[r]];
    mu_prefix += reach_prefix[r];
    out.worst_gap = std::max(out.worst_gap, nu_prefix - mu_prefix);
    ++out.sets_checked;
  }
  double nu_suffix = 0.0, mu_suffix = 0.0;
  for (std::size_t r = n; r-- > 0;) {
    nu_suffix += nu.weights()[order[r]];
    mu_suffix += reach_suffix[r];
    out.worst_gap = std::max(out.worst_gap, nu_suffix - mu_suffix);
    ++out.sets_checked;
  }
  return out;
}

}  // namespace infcost
