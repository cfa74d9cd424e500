#pragma once

// Brute-force reference computations used by the unit and acceptance tests.
// None of these share code paths with the library routines they check.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "infcost/core.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline bool same_point(const Vec& a, const Vec& b, double tol) {
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (std::abs(a[k] - b[k]) > tol) return false;
  }
  return true;
}

inline void dedup(std::vector<Vec>& pts, double tol) {
  std::vector<Vec> out;
  for (auto& p : pts) {
    if (std::none_of(out.begin(), out.end(), [&](const Vec& q) { return same_point(p, q, tol); })) out.push_back(p);
  }
  pts = std::move(out);
}

// Every point of `a` has a match in `b` and vice versa.
inline bool same_point_set(const std::vector<Vec>& a, const std::vector<Vec>& b, double tol) {
  auto covered = [&](const std::vector<Vec>& x, const std::vector<Vec>& y) {
    return std::all_of(x.begin(), x.end(), [&](const Vec& p) {
      return std::any_of(y.begin(), y.end(), [&](const Vec& q) { return same_point(p, q, tol); });
    });
  };
  return covered(a, b) && covered(b, a);
}

inline double subset_sum(const Vec& alpha, std::uint32_t s) {
  double t = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (s >> i & 1u) t += alpha[i];
  }
  return t;
}

// Vertices of {alpha : sum alpha = 1, alpha >= 0, alpha(I) <= masses[I]} by
// solving every square system of m-1 tight inequalities plus the equality.
inline std::vector<Vec> polytope_vertices(const Vec& masses, std::size_t m, double tol = 1e-9) {
  const std::uint32_t full = (1u << m) - 1;
  std::vector<Vec> rows;
  Vec rhs;
  for (std::uint32_t s = 1; s < full; ++s) {
    Vec r(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) r[i] = (s >> i & 1u) ? 1.0 : 0.0;
    rows.push_back(r);
    rhs.push_back(masses[s]);
  }
  for (std::size_t i = 0; i < m; ++i) {
    Vec r(m, 0.0);
    r[i] = -1.0;
    rows.push_back(r);
    rhs.push_back(0.0);
  }
  std::vector<Vec> verts;
  const std::size_t k = m - 1, n = rows.size();
  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  if (k == 0) {
    verts.push_back(Vec{1.0});
    return verts;
  }
  while (true) {
    Eigen::MatrixXd A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    Eigen::VectorXd b(static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < m; ++c) A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[pick[r]][c];
      b(static_cast<Eigen::Index>(r)) = rhs[pick[r]];
    }
    for (std::size_t c = 0; c < m; ++c) A(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(c)) = 1.0;
    b(static_cast<Eigen::Index>(k)) = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
    if (lu.rank() == static_cast<Eigen::Index>(m)) {
      const Eigen::VectorXd x = lu.solve(b);
      bool ok = true;
      for (std::size_t r = 0; r < n && ok; ++r) {
        double lhs = 0.0;
        for (std::size_t c = 0; c < m; ++c) lhs += rows[r][c] * x(static_cast<Eigen::Index>(c));
        ok = lhs <= rhs[r] + tol;
      }
      if (ok) verts.emplace_back(x.data(), x.data() + m);
    }
    std::size_t j = k;
    while (j > 0 && pick[j - 1] == n - k + (j - 1)) --j;
    if (j == 0) break;
    ++pick[j - 1];
    for (std::size_t q = j; q < k; ++q) pick[q] = pick[q - 1] + 1;
  }
  dedup(verts, 1e-9);
  return verts;
}

// Hall violation of a set of source atoms: mu(A) + nu(atoms no member of A reaches) - 1.
template <class Finite>
double hall_excess(const Vec& mu, const Vec& nu, const std::vector<std::size_t>& a, Finite finite) {
  double total = -1.0;
  for (std::size_t i : a) total += mu[i];
  for (std::size_t j = 0; j < nu.size(); ++j) {
    bool reached = false;
    for (std::size_t i : a) reached = reached || finite(i, j);
    if (!reached) total += nu[j];
  }
  return total;
}

// Largest Hall excess over all nonempty subsets of the source atoms.
template <class Finite>
double worst_hall_excess(const Vec& mu, const Vec& nu, Finite finite) {
  const std::size_t n = mu.size();
  double worst = -std::numeric_limits<double>::infinity();
  for (std::uint32_t s = 1; s < (1u << n); ++s) {
    std::vector<std::size_t> a;
    for (std::size_t i = 0; i < n; ++i) {
      if (s >> i & 1u) a.push_back(i);
    }
    worst = std::max(worst, hall_excess(mu, nu, a, finite));
  }
  return worst;
}

// Minimum over permutations of sum cost[i][p(i)] / n, skipping forbidden
// (infinite) entries. +inf when no permutation avoids them.
inline double permutation_optimum(const std::vector<Vec>& cost) {
  const std::size_t n = cost.size();
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cost[i][p[i]];
    best = std::min(best, s / static_cast<double>(n));
  } while (std::next_permutation(p.begin(), p.end()));
  return best;
}

// Transport LP optimum by enumerating basic solutions: choose n+m-1 allowed
// cells, solve the marginal equations, keep nonnegative solutions.
inline double transport_optimum(const Vec& mu, const Vec& nu, const std::vector<Vec>& cost) {
  const std::size_t n = mu.size(), m = nu.size();
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (std::isfinite(cost[i][j])) cells.emplace_back(i, j);
    }
  }
  const std::size_t k = std::min(n + m - 1, cells.size());
  double best = std::numeric_limits<double>::infinity();
  if (k == 0) return best;
  std::vector<std::size_t> pick(k);
  std::iota(pick.begin(), pick.end(), 0);
  while (true) {
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n + m), static_cast<Eigen::Index>(k));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n + m));
    for (std::size_t i = 0; i < n; ++i) b(static_cast<Eigen::Index>(i)) = mu[i];
    for (std::size_t j = 0; j < m; ++j) b(static_cast<Eigen::Index>(n + j)) = nu[j];
    for (std::size_t c = 0; c < k; ++c) {
      A(static_cast<Eigen::Index>(cells[pick[c]].first), static_cast<Eigen::Index>(c)) = 1.0;
      A(static_cast<Eigen::Index>(n + cells[pick[c]].second), static_cast<Eigen::Index>(c)) = 1.0;
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() == static_cast<Eigen::Index>(k)) {
      const Eigen::VectorXd x = qr.solve(b);
      if ((A * x - b).norm() < 1e-10 && x.minCoeff() >= -1e-12) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += x(static_cast<Eigen::Index>(c)) * cost[cells[pick[c]].first][cells[pick[c]].second];
        best = std::min(best, s);
      }
    }
    std::size_t j = k;
    while (j > 0 && pick[j - 1] == cells.size() - k + (j - 1)) --j;
    if (j == 0) break;
    ++pick[j - 1];
    for (std::size_t q = j; q < k; ++q) pick[q] = pick[q - 1] + 1;
  }
  return best;
}

// sup of (<x,y> - 1) / max(0, max_j <a_j,x> + b_j) for planar piecewise-affine
// functions, scanning rays. Along a ray the ratio is linear-fractional between
// breakpoints of the max, so only breakpoints and the far limit matter. Across
// rays the sup sits at a vertex of the cell complex or at a kink of the far
// limit, so those directions are scanned on top of a uniform fan.
// +inf when some ray reaches {phi = 0} past the line <x,y> = 1.
inline double pl_ray_sup(const std::vector<Vec>& slopes, const Vec& offsets, const Vec& y, int fan) {
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t k = slopes.size();
  // Lines of the complex: a_i - a_j (pieces equal) and a_i (piece at zero).
  std::vector<Vec> normals;
  Vec rhs;
  for (std::size_t a = 0; a < k; ++a) {
    normals.push_back(slopes[a]);
    rhs.push_back(-offsets[a]);
    for (std::size_t b = a + 1; b < k; ++b) {
      normals.push_back({slopes[a][0] - slopes[b][0], slopes[a][1] - slopes[b][1]});
      rhs.push_back(offsets[b] - offsets[a]);
    }
  }
  std::vector<Vec> dirs;
  for (int q = 0; q < fan; ++q) dirs.push_back({std::cos(2.0 * M_PI * q / fan), std::sin(2.0 * M_PI * q / fan)});
  for (std::size_t p = 0; p < normals.size(); ++p) {
    dirs.push_back({-normals[p][1], normals[p][0]});
    dirs.push_back({normals[p][1], -normals[p][0]});
    for (std::size_t q = p + 1; q < normals.size(); ++q) {
      const double det = normals[p][0] * normals[q][1] - normals[p][1] * normals[q][0];
      if (std::abs(det) < 1e-14) continue;
      dirs.push_back({(rhs[p] * normals[q][1] - normals[p][1] * rhs[q]) / det,
                      (normals[p][0] * rhs[q] - rhs[p] * normals[q][0]) / det});
    }
  }
  double best = 0.0;
  for (const Vec& d : dirs) {
    const double len = std::hypot(d[0], d[1]);
    if (len == 0.0) continue;
    const double dx = d[0] / len, dy = d[1] / len;
    const double t = dx * y[0] + dy * y[1];
    if (t <= 0.0) continue;
    Vec s(k);
    for (std::size_t j = 0; j < k; ++j) s[j] = slopes[j][0] * dx + slopes[j][1] * dy;
    auto phi = [&](double r) {
      double m = 0.0;
      for (std::size_t j = 0; j < k; ++j) m = std::max(m, r * s[j] + offsets[j]);
      return m;
    };
    const double smax = *std::max_element(s.begin(), s.end());
    if (smax <= 0.0) return inf;  // phi vanishes along the whole ray
    best = std::max(best, t / smax);
    // First radius where phi turns positive; below it phi = 0.
    double r0 = inf;
    for (std::size_t a = 0; a < k; ++a) {
      if (s[a] > 0.0) r0 = std::min(r0, -offsets[a] / s[a]);
    }
    if (r0 * t > 1.0) return inf;
    Vec cand{len};
    for (std::size_t a = 0; a < k; ++a) {
      if (s[a] > 0.0) cand.push_back(-offsets[a] / s[a]);
      for (std::size_t b = a + 1; b < k; ++b) {
        if (s[a] != s[b]) cand.push_back((offsets[b] - offsets[a]) / (s[a] - s[b]));
      }
    }
    for (double r : cand) {
      if (!(r > 0.0) || r * t <= 1.0) continue;
      const double f = phi(r);
      if (f > 0.0) best = std::max(best, (r * t - 1.0) / f);
    }
  }
  return best;
}

// Random probability vector with every entry at least `floor`.
inline Vec random_simplex(std::size_t n, std::mt19937_64& rng, double floor = 0.0) {
  std::exponential_distribution<double> e(1.0);
  Vec w(n);
  for (double& v : w) v = e(rng);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  const double spare = 1.0 - floor * static_cast<double>(n);
  for (double& v : w) v = floor + spare * v / s;
  // Push the rounding residue onto the largest entry so the sum is 1 to an ulp.
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  *std::max_element(w.begin(), w.end()) += 1.0 - total;
  return w;
}

}  // namespace oracle
