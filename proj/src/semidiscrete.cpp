#include "infcost/semidiscrete.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "flow.hpp"
#include "parallel.hpp"

namespace infcost {

namespace {

struct CostGrid {
  std::size_t n = 0, m = 0;
  std::vector<XReal> v;  // row-major n x m
  const XReal& at(std::size_t k, std::size_t i) const { return v[k * m + i]; }
};

CostGrid cost_grid(const QuadratureMeasure& mu, std::span<const Point> us, const CostFunction& c) {
  CostGrid g{mu.size(), us.size(), std::vector<XReal>(mu.size() * us.size())};
  detail::for_each_chunk(g.n, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      for (std::size_t i = 0; i < g.m; ++i) g.v[k * g.m + i] = c(mu.nodes()[k], us[i]);
    }
  });
  return g;
}

bool near(double a, double b) { return std::abs(a - b) <= kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)}); }

struct NodeChoice {
  std::size_t best;
  Subset tied;  // every atom whose score is within the tie band of the best
  bool fallback;
};

// shifts[i] = -ln t_i, +inf for t_i = 0.
NodeChoice choose(const CostGrid& g, std::size_t k, std::span<const XReal> shifts) {
  auto pick = [&](bool zero_weight_only) -> std::optional<NodeChoice> {
    std::size_t best = g.m;
    double best_score = 0.0;
    for (std::size_t i = 0; i < g.m; ++i) {
      const XReal& ci = g.at(k, i);
      if (!ci.finite() || shifts[i].finite() == zero_weight_only) continue;
      const double score = zero_weight_only ? ci.value() : ci.value() + shifts[i].value();
      if (best == g.m || score < best_score) {
        best = i;
        best_score = score;
      }
    }
    if (best == g.m) return std::nullopt;
    Subset tied = 0;
    for (std::size_t i = 0; i < g.m; ++i) {
      const XReal& ci = g.at(k, i);
      if (!ci.finite() || shifts[i].finite() == zero_weight_only) continue;
      const double score = zero_weight_only ? ci.value() : ci.value() + shifts[i].value();
      if (near(score, best_score)) tied |= Subset{1} << i;
    }
    return NodeChoice{best, tied, zero_weight_only};
  };
  if (auto r = pick(false)) return *r;
  if (auto r = pick(true)) return *r;
  throw std::invalid_argument("node " + std::to_string(k) + " has infinite cost to every atom");
}

std::vector<XReal> shifts_from_t(std::span<const double> t, std::size_t m) {
  if (t.size() != m) throw std::invalid_argument("weight vector has the wrong length");
  std::vector<XReal> s;
  bool any = false;
  for (double ti : t) {
    if (!(ti >= 0.0) || !std::isfinite(ti)) throw std::invalid_argument("weights must be finite and >= 0");
    any = any || ti > 0.0;
    s.push_back(ti > 0.0 ? XReal(-std::log(ti)) : XReal::inf());
  }
  if (!any) throw std::invalid_argument("weight vector is identically zero");
  return s;
}

struct Partitioned {
  CellPartition cells;
  std::vector<Subset> tied;
};

Partitioned partition_grid(const QuadratureMeasure& mu, const CostGrid& g, std::span<const XReal> shifts) {
  Partitioned p;
  p.cells.assignment.assign(g.n, 0);
  p.cells.tie.assign(g.n, false);
  p.tied.assign(g.n, 0);
  detail::for_each_chunk(g.n, [&](std::size_t, std::size_t b, std::size_t e) {
    for (std::size_t k = b; k < e; ++k) {
      const NodeChoice ch = choose(g, k, shifts);
      p.cells.assignment[k] = ch.best;
      p.tied[k] = ch.tied;
      p.cells.tie[k] = (ch.tied & (ch.tied - 1)) != 0;
    }
  });
  for (std::size_t k = 0; k < g.n; ++k) {
    if (p.cells.tie[k]) p.cells.tie_mass += mu.weights()[k];
  }
  return p;
}

void check_alpha(std::span<const double> alpha, std::size_t m) {
  if (alpha.size() != m) throw std::invalid_argument("alpha has the wrong length");
  double total = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0)) throw std::invalid_argument("alpha has a negative entry");
    total += a;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("alpha does not sum to 1");
}

// One pass over the nodes: cell masses and sum_k w_k min_i(c + s_i).
struct Sweep {
  std::vector<double> H;
  double envelope = 0.0;
};

Sweep sweep(const QuadratureMeasure& mu, const CostGrid& g, const std::vector<double>& s) {
  const std::size_t chunks = detail::chunk_count(g.n);
  std::vector<std::vector<double>> partH(chunks, std::vector<double>(g.m, 0.0));
  std::vector<double> partE(chunks, 0.0);
  detail::for_each_chunk(g.n, [&](std::size_t ch, std::size_t b, std::size_t e) {
    auto& H = partH[ch];
    double env = 0.0;
    for (std::size_t k = b; k < e; ++k) {
      std::size_t best = g.m;
      double best_score = 0.0;
      for (std::size_t i = 0; i < g.m; ++i) {
        const XReal& ci = g.at(k, i);
        if (!ci.finite()) continue;
        const double score = ci.value() + s[i];
        if (best == g.m || score < best_score) {
          best = i;
          best_score = score;
        }
      }
      if (best == g.m) throw std::invalid_argument("node " + std::to_string(k) + " has infinite cost to every atom");
      H[best] += mu.weights()[k];
      env += mu.weights()[k] * best_score;
    }
    partE[ch] = env;
  });
  Sweep out{std::vector<double>(g.m, 0.0), 0.0};
  for (std::size_t ch = 0; ch < chunks; ++ch) {
    for (std::size_t i = 0; i < g.m; ++i) out.H[i] += partH[ch][i];
    out.envelope += partE[ch];
  }
  return out;
}

void normalize_shifts(std::vector<double>& s) {
  const double lo = *std::min_element(s.begin(), s.end());
  double sum = 0.0;
  for (double v : s) sum += std::exp(-(v - lo));
  const double shift = -lo + std::log(sum);
  for (double& v : s) v += shift;
}

double max_abs_diff(const std::vector<double>& a, std::span<const double> b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
  return r;
}

SolveReport ascend(const QuadratureMeasure& mu, std::span<const Point> us, const CostFunction& c,
                   std::span<const double> alpha, const SolveOptions& opts) {
  const CostGrid g = cost_grid(mu, us, c);
  const std::size_t m = us.size();
  std::vector<double> s(m, 0.0);
  normalize_shifts(s);
  auto dual_of = [&](const Sweep& sw, const std::vector<double>& sv) {
    double lin = 0.0;
    for (std::size_t i = 0; i < m; ++i) lin += alpha[i] * sv[i];
    return sw.envelope - lin;
  };
  Sweep cur = sweep(mu, g, s);
  double F = dual_of(cur, s);
  double r = max_abs_diff(cur.H, alpha);
  double eta = opts.initial_step;

  SolveReport rep;
  std::vector<double> best_s = s;
  double best_r = r;
  auto finish = [&](const std::vector<double>& sv, double res, std::size_t iters) {
    rep.t.resize(m);
    for (std::size_t i = 0; i < m; ++i) rep.t[i] = std::exp(-sv[i]);
    const double tot = std::accumulate(rep.t.begin(), rep.t.end(), 0.0);
    for (double& ti : rep.t) ti /= tot;
    rep.residual = res;
    rep.iterations = iters;
  };

  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    rep.log.push_back({it, r, eta, F});
    if (r <= opts.tol) {
      finish(s, r, it);
      return rep;
    }
    std::vector<double> trial(m);
    for (std::size_t i = 0; i < m; ++i) trial[i] = s[i] + eta * (cur.H[i] - alpha[i]);
    normalize_shifts(trial);
    Sweep next = sweep(mu, g, trial);
    const double F2 = dual_of(next, trial);
    const double r2 = max_abs_diff(next.H, alpha);
    if (F2 < F - 1e-15 * std::max(1.0, std::abs(F))) {
      eta *= 0.5;
      if (eta < opts.min_step) break;
      continue;
    }
    if (r2 > r) eta = std::max(eta * 0.5, opts.min_step);
    s = std::move(trial);
    cur = std::move(next);
    F = F2;
    r = r2;
    if (r < best_r) {
      best_r = r;
      best_s = s;
    }
  }
  if (r <= opts.tol) {
    finish(s, r, rep.log.size());
    return rep;
  }
  finish(best_s, best_r, rep.log.size());
  throw MaxIterExceeded(std::move(rep));
}

}  // namespace

CellPartition cell_partition(const QuadratureMeasure& mu, std::span<const Point> us,
                             const CostFunction& c, std::span<const double> t) {
  const auto shifts = shifts_from_t(t, us.size());
  return partition_grid(mu, cost_grid(mu, us, c), shifts).cells;
}

std::vector<double> weight_map_H(const QuadratureMeasure& mu, std::span<const Point> us,
                                 const CostFunction& c, std::span<const double> t) {
  const CellPartition p = cell_partition(mu, us, c, t);
  std::vector<double> H(us.size(), 0.0);
  for (std::size_t k = 0; k < mu.size(); ++k) H[p.assignment[k]] += mu.weights()[k];
  return H;
}

double tie_mass_diagnostic(const QuadratureMeasure& mu, std::span<const Point> us,
                           const CostFunction& c, std::span<const double> t) {
  const auto shifts = shifts_from_t(t, us.size());
  const CostGrid g = cost_grid(mu, us, c);
  double tie = 0.0;
  for (std::size_t k = 0; k < g.n; ++k) {
    double first = HUGE_VAL, second = HUGE_VAL;
    for (std::size_t i = 0; i < g.m; ++i) {
      if (!g.at(k, i).finite() || !shifts[i].finite()) continue;
      const double sc = g.at(k, i).value() + shifts[i].value();
      if (sc < first) {
        second = first;
        first = sc;
      } else if (sc < second) {
        second = sc;
      }
    }
    if (second < HUGE_VAL && second - first <= kTieTolerance) tie += mu.weights()[k];
  }
  return tie;
}

NotInterior::NotInterior(Classification cls)
    : std::runtime_error(std::string("target weights are not interior to the Hall polytope (") +
                         to_string(cls.kind) + ")"),
      classification(std::move(cls)) {}

MaxIterExceeded::MaxIterExceeded(SolveReport b)
    : std::runtime_error("dual ascent stopped before reaching the tolerance (residual " +
                         std::to_string(b.residual) + ")"),
      best(std::move(b)) {}

SolveReport solve_weights(const QuadratureMeasure& mu, std::span<const Point> us,
                          const CostFunction& c, std::span<const double> alpha,
                          const SolveOptions& opts) {
  const std::size_t m = us.size();
  if (m == 0) throw std::invalid_argument("solve_weights: no atoms");
  check_alpha(alpha, m);
  const HallPolytope poly = build_polytope(mu, us, c);
  Classification cls = classify(poly, alpha, opts.classify_tol);
  if (cls.kind != Classification::Kind::Interior) throw NotInterior(std::move(cls));

  const NondegeneracyReport nd = check_nondegenerate(mu, us, c);
  if (nd.ok || opts.disks.empty()) {
    SolveReport rep = ascend(mu, us, c, alpha, opts);
    rep.original_residual = rep.residual;
    return rep;
  }

  // Mixture alpha: disk (i,j) lands in cell i, the lower label.
  SolveReport rep;
  std::vector<std::pair<double, std::vector<double>>> path;
  for (double k : opts.perturbation_levels) {
    const QuadratureMeasure mk = perturb_mix(mu, opts.disks, k);
    std::vector<double> ak(m);
    for (std::size_t i = 0; i < m; ++i) ak[i] = (1.0 - 1.0 / k) * alpha[i];
    const double per_disk = (1.0 / k) / static_cast<double>(opts.disks.size());
    for (const Disk& d : opts.disks) {
      if (d.pair.first >= m || d.pair.second >= m) throw std::invalid_argument("disk names an unknown atom");
      ak[std::min(d.pair.first, d.pair.second)] += per_disk;
    }
    rep = ascend(mk, us, c, ak, opts);
    path.emplace_back(k, rep.t);
  }
  rep.level_path = std::move(path);
  rep.perturbed = true;
  rep.original_residual = max_abs_diff(weight_map_H(mu, us, c, rep.t), alpha);
  return rep;
}

SemiSolution extract_plan(const QuadratureMeasure& mu, std::span<const Point> us,
                          const CostFunction& c, std::span<const double> t,
                          std::span<const double> alpha) {
  const std::size_t m = us.size();
  const auto shifts = shifts_from_t(t, m);
  const CostGrid g = cost_grid(mu, us, c);
  Partitioned part = partition_grid(mu, g, shifts);

  TransportPlan plan;
  std::vector<double> base(m, 0.0);
  std::vector<std::size_t> tie_nodes;
  for (std::size_t k = 0; k < g.n; ++k) {
    if (mu.weights()[k] <= 0.0) continue;
    if (part.cells.tie[k] && !alpha.empty()) {
      tie_nodes.push_back(k);
      continue;
    }
    plan.entries.push_back({k, part.cells.assignment[k], mu.weights()[k]});
    base[part.cells.assignment[k]] += mu.weights()[k];
  }
  if (!tie_nodes.empty()) {
    check_alpha(alpha, m);
    // source -> tie node -> tied atom -> sink, atom capacity = remaining demand.
    const std::size_t T = tie_nodes.size();
    const std::size_t src = T + m, snk = T + m + 1;
    detail::FlowNetwork net(T + m + 2, 1e-15);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> arcs(T);
    for (std::size_t a = 0; a < T; ++a) {
      const std::size_t k = tie_nodes[a];
      net.add_edge(src, a, mu.weights()[k]);
      for (std::size_t i : members(part.tied[k])) arcs[a].emplace_back(i, net.add_edge(a, T + i, detail::kUnbounded));
    }
    for (std::size_t i = 0; i < m; ++i) net.add_edge(T + i, snk, std::max(0.0, alpha[i] - base[i]));
    net.max_flow(src, snk);
    for (std::size_t a = 0; a < T; ++a) {
      const std::size_t k = tie_nodes[a];
      double left = mu.weights()[k];
      for (const auto& [i, id] : arcs[a]) {
        const double f = std::min(net.flow(id), left);
        if (f > 0.0) {
          plan.entries.push_back({k, i, f});
          left -= f;
        }
      }
      if (left > 0.0) plan.entries.push_back({k, part.cells.assignment[k], left});
    }
    std::sort(plan.entries.begin(), plan.entries.end(), [](const auto& a, const auto& b) {
      return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
  }
  std::vector<Point> supports(us.begin(), us.end());
  Potential pot(std::move(supports), shifts, c);
  return SemiSolution{std::move(plan), std::move(pot), std::move(part.cells)};
}

Decomposition decompose(const QuadratureMeasure& mu, std::span<const Point> us, const CostFunction& c,
                        std::span<const double> alpha, Subset active, double tol) {
  const std::size_t m = us.size();
  check_alpha(alpha, m);
  const HallPolytope poly = build_polytope(mu, us, c);
  if (active == 0 || active >= poly.full()) throw std::invalid_argument("decompose: active set must be proper and nonempty");
  const double inner_mass = poly.mass(active);
  double a_in = 0.0;
  for (std::size_t i : members(active)) a_in += alpha[i];
  if (std::abs(a_in - inner_mass) > tol) throw std::invalid_argument("decompose: set is not active for alpha");
  if (!(inner_mass > 0.0) || !(inner_mass < 1.0)) throw std::invalid_argument("decompose: mu(A_I) must lie strictly between 0 and 1");

  const auto masks = finiteness_masks(mu, us, c);
  auto build = [&](bool inside) {
    SemiProblem sp{QuadratureMeasure({Point(mu.dim(), 0.0)}, {1.0}), {}, {}, {}, {}};
    std::vector<Point> nodes;
    std::vector<double> w;
    for (std::size_t k = 0; k < mu.size(); ++k) {
      if (mu.weights()[k] <= 0.0 || ((masks[k] & active) != 0) != inside) continue;
      nodes.push_back(mu.nodes()[k]);
      w.push_back(mu.weights()[k]);
      sp.node_ids.push_back(k);
    }
    sp.mu = sample_measure(std::move(nodes), std::move(w));
    const Subset chosen = inside ? active : (poly.full() & ~active);
    double total = 0.0;
    for (std::size_t i : members(chosen)) total += alpha[i];
    for (std::size_t i : members(chosen)) {
      sp.atoms.push_back(us[i]);
      sp.alpha.push_back(alpha[i] / total);
      sp.atom_ids.push_back(i);
    }
    return sp;
  };
  return Decomposition{active, inner_mass, build(true), build(false)};
}

namespace {

void solve_rec(const QuadratureMeasure& mu, std::span<const Point> us, const CostFunction& c,
               std::span<const double> alpha, const SolveOptions& opts, bool allow,
               const std::vector<std::size_t>& node_ids, const std::vector<std::size_t>& atom_ids,
               double weight, SemiResult& out) {
  const std::size_t m = us.size();
  // Drop atoms that must receive nothing.
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < m; ++i) {
    if (alpha[i] > opts.classify_tol) keep.push_back(i);
  }
  if (keep.size() < m && allow) {
    std::vector<Point> us2;
    std::vector<double> a2;
    std::vector<std::size_t> ids2;
    double tot = 0.0;
    for (std::size_t i : keep) tot += alpha[i];
    for (std::size_t i : keep) {
      us2.push_back(us[i]);
      a2.push_back(alpha[i] / tot);
      ids2.push_back(atom_ids[i]);
    }
    try {
      solve_rec(mu, us2, c, a2, opts, allow, node_ids, ids2, weight, out);
      return;
    } catch (const std::invalid_argument&) {
      // Some node reaches only dropped atoms: infeasible for this alpha.
      const HallPolytope poly = build_polytope(mu, us, c);
      throw NotInterior(classify(poly, alpha, opts.classify_tol));
    }
  }

  const HallPolytope poly = build_polytope(mu, us, c);
  Classification cls = classify(poly, alpha, opts.classify_tol);
  if (cls.kind == Classification::Kind::Interior || m == 1) {
    SolveReport rep = solve_weights(mu, us, c, alpha, opts);
    SemiSolution sol = extract_plan(mu, us, c, rep.t, alpha);
    for (const auto& e : sol.plan.entries) {
      out.plan.entries.push_back({node_ids[e.source], atom_ids[e.target], weight * e.mass});
    }
    out.parts.push_back(SemiPart{node_ids, atom_ids, weight, std::move(rep), std::move(sol.potential)});
    return;
  }
  if (cls.kind == Classification::Kind::Exterior || !allow) throw NotInterior(std::move(cls));

  Subset chosen = 0;
  for (Subset s : minimal_sets(cls.sets)) {
    if (poly.mass(s) > 0.0 && poly.mass(s) < 1.0) {
      chosen = s;
      break;
    }
  }
  if (chosen == 0) throw NotInterior(std::move(cls));
  const Decomposition d = decompose(mu, us, c, alpha, chosen, opts.classify_tol);
  for (const SemiProblem* sp : {&d.inner, &d.outer}) {
    std::vector<std::size_t> nid, aid;
    for (std::size_t k : sp->node_ids) nid.push_back(node_ids[k]);
    for (std::size_t i : sp->atom_ids) aid.push_back(atom_ids[i]);
    const double w = sp == &d.inner ? d.inner_weight : 1.0 - d.inner_weight;
    solve_rec(sp->mu, sp->atoms, c, sp->alpha, opts, allow, nid, aid, weight * w, out);
  }
}

}  // namespace

SemiResult solve_semidiscrete(const QuadratureMeasure& mu, std::span<const Point> us,
                              const CostFunction& c, std::span<const double> alpha,
                              const SolveOptions& opts, bool allow_decompose) {
  check_alpha(alpha, us.size());
  std::vector<std::size_t> node_ids(mu.size()), atom_ids(us.size());
  std::iota(node_ids.begin(), node_ids.end(), 0);
  std::iota(atom_ids.begin(), atom_ids.end(), 0);
  SemiResult out;
  solve_rec(mu, us, c, alpha, opts, allow_decompose, node_ids, atom_ids, 1.0, out);
  std::sort(out.plan.entries.begin(), out.plan.entries.end(), [](const auto& a, const auto& b) {
    return a.source != b.source ? a.source < b.source : a.target < b.target;
  });
  return out;
}

double plan_cost(const TransportPlan& plan, std::span<const Point> sources, std::span<const Point> targets,
                 const CostFunction& c) {
  double total = 0.0;
  for (const auto& e : plan.entries) {
    const XReal v = c(sources[e.source], targets[e.target]);
    if (!v.finite()) throw std::invalid_argument("plan uses an infinite-cost pair");
    total += e.mass * v.value();
  }
  return total;
}

}  // namespace infcost
