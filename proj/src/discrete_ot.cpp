#include "infcost/discrete_ot.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>

#include "flow.hpp"
#include "infcost/duality.hpp"

namespace infcost {

namespace {

constexpr double kFlowEps = 1e-15;

// Node layout: mu atoms, nu atoms, source, sink.
struct HallNetwork {
  detail::FlowNetwork net;
  std::size_t n, m, s, t;
  std::vector<std::size_t> arc;  // arc[i*m+j]: edge id, or npos when forbidden
  double supply = 0.0;
  double flow = 0.0;

  std::vector<std::size_t> reached_mu(const std::vector<bool>& seen) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
      if (seen[i]) out.push_back(i);
    }
    return out;
  }
};

constexpr std::size_t kNoArc = static_cast<std::size_t>(-1);

// Only mu atoms with active[i] get source capacity.
HallNetwork build_network(const BipartiteInstance& inst, const std::vector<bool>& active, bool costs) {
  const std::size_t n = inst.rows(), m = inst.cols();
  HallNetwork h{detail::FlowNetwork(n + m + 2, kFlowEps), n, m, n + m, n + m + 1,
                std::vector<std::size_t>(n * m, kNoArc)};
  for (std::size_t i = 0; i < n; ++i) {
    const double cap = active[i] ? inst.mu().weights()[i] : 0.0;
    h.net.add_edge(h.s, i, cap);
    h.supply += cap;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const XReal& c = inst.at(i, j);
      if (!c.finite()) continue;
      h.arc[i * m + j] = h.net.add_edge(i, n + j, detail::kUnbounded, costs ? c.value() : 0.0);
    }
  }
  for (std::size_t j = 0; j < m; ++j) h.net.add_edge(n + j, h.t, inst.nu().weights()[j]);
  return h;
}

HallNetwork run_max_flow(const BipartiteInstance& inst, const std::vector<bool>& active) {
  HallNetwork h = build_network(inst, active, false);
  h.flow = h.net.max_flow(h.s, h.t);
  return h;
}

std::vector<bool> reached_nu(const BipartiteInstance& inst, const std::vector<std::size_t>& a) {
  std::vector<bool> hit(inst.cols(), false);
  for (std::size_t i : a) {
    for (std::size_t j = 0; j < inst.cols(); ++j) {
      if (inst.at(i, j).finite()) hit[j] = true;
    }
  }
  return hit;
}

double sum_over(const std::vector<double>& w, const std::vector<std::size_t>& idx) {
  double s = 0.0;
  for (std::size_t i : idx) s += w[i];
  return s;
}

std::vector<std::size_t> complement(const std::vector<std::size_t>& idx, std::size_t n) {
  std::vector<bool> in(n, false);
  for (std::size_t i : idx) in[i] = true;
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!in[i]) out.push_back(i);
  }
  return out;
}

DiscreteMeasure sub_measure(const DiscreteMeasure& m, const std::vector<std::size_t>& idx) {
  std::vector<Point> atoms;
  std::vector<double> w;
  const double total = sum_over(m.weights(), idx);
  if (!(total > 0.0)) throw std::invalid_argument("sub-measure has no mass");
  for (std::size_t i : idx) {
    atoms.push_back(m.atoms()[i]);
    w.push_back(m.weights()[i] / total);
  }
  return DiscreteMeasure(std::move(atoms), std::move(w));
}

}  // namespace

BipartiteInstance::BipartiteInstance(DiscreteMeasure mu, DiscreteMeasure nu, CostFunction c)
    : mu_(std::move(mu)), nu_(std::move(nu)), cost_(std::move(c)) {
  matrix_.reserve(mu_.size() * nu_.size());
  for (const Point& x : mu_.atoms()) {
    for (const Point& y : nu_.atoms()) {
      XReal v = cost_(x, y);
      if (v == XReal::neg_inf()) throw std::invalid_argument("cost matrix has a -inf entry");
      matrix_.push_back(v);
    }
  }
}

Infeasible::Infeasible(HallReport r)
    : std::runtime_error("no finite-cost plan: Hall condition fails on " +
                         std::to_string(r.witness.size()) + " source atom(s)"),
      report(std::move(r)) {}

HallReport hall_feasible(const BipartiteInstance& inst, double tol) {
  const std::size_t n = inst.rows();
  std::vector<bool> active(n, true);
  HallNetwork h = run_max_flow(inst, active);
  HallReport rep;
  rep.flow = h.flow;
  if (h.supply - h.flow <= tol) return rep;
  rep.feasible = false;

  // Source side of a minimum cut, then shrink until no proper subset is deficient.
  std::vector<std::size_t> a = h.reached_mu(h.net.residual_reachable({h.s}));
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t drop : a) {
      std::vector<bool> sub(n, false);
      for (std::size_t i : a) sub[i] = i != drop;
      HallNetwork r = run_max_flow(inst, sub);
      if (r.supply - r.flow > tol) {
        const auto seen = r.net.residual_reachable({r.s});
        std::vector<std::size_t> next;
        for (std::size_t i : r.reached_mu(seen)) {
          if (sub[i]) next.push_back(i);
        }
        a = std::move(next);
        changed = true;
        break;
      }
    }
  }
  rep.witness = a;
  const auto hit = reached_nu(inst, a);
  for (std::size_t j = 0; j < inst.cols(); ++j) {
    if (!hit[j]) rep.blocked.push_back(j);
  }
  rep.excess = sum_over(inst.mu().weights(), a) + sum_over(inst.nu().weights(), rep.blocked) - 1.0;
  return rep;
}

DiscretePlan optimal_plan(const BipartiteInstance& inst) {
  const HallReport hr = hall_feasible(inst);
  if (!hr.feasible) throw Infeasible(hr);
  HallNetwork h = build_network(inst, std::vector<bool>(inst.rows(), true), true);
  h.net.min_cost_flow(h.s, h.t, h.supply);
  DiscretePlan out;
  for (std::size_t i = 0; i < h.n; ++i) {
    for (std::size_t j = 0; j < h.m; ++j) {
      const std::size_t id = h.arc[i * h.m + j];
      if (id == kNoArc) continue;
      const double f = h.net.flow(id);
      if (f > 0.0) out.plan.entries.push_back({i, j, f});
    }
  }
  out.cost = plan_cost(inst, out.plan);
  return out;
}

double plan_cost(const BipartiteInstance& inst, const TransportPlan& plan) {
  double total = 0.0;
  for (const auto& e : plan.entries) {
    const XReal& c = inst.at(e.source, e.target);
    if (!c.finite()) throw std::invalid_argument("plan uses a forbidden pair");
    total += e.mass * c.value();
  }
  return total;
}

DualPair dual_potentials(const BipartiteInstance& inst, const TransportPlan& plan, double admissible_tol) {
  const std::size_t n = inst.rows(), m = inst.cols();
  const auto& xs = inst.mu().atoms();
  const auto& ys = inst.nu().atoms();
  const auto& mw = inst.mu().weights();
  const auto& nw = inst.nu().weights();

  std::vector<std::pair<Point, Point>> pairs;
  for (const auto& e : plan.entries) {
    if (e.mass > 0.0) pairs.emplace_back(xs[e.source], ys[e.target]);
  }
  if (pairs.empty()) throw std::invalid_argument("plan has no support");
  const Potential pot = reconstruct_potential(PairSet(std::move(pairs), inst.cost()));

  DualPair d;
  d.phi.assign(n, XReal::inf());
  for (std::size_t i = 0; i < n; ++i) {
    if (mw[i] > 0.0) d.phi[i] = pot(xs[i]);
  }
  // psi_j = min over charged i of c_ij - phi_i.
  d.psi.assign(m, XReal::inf());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!(mw[i] > 0.0) || !inst.at(i, j).finite() || !d.phi[i].finite()) continue;
      const XReal v = inst.at(i, j).value() - d.phi[i].value();
      if (v < d.psi[j]) d.psi[j] = v;
    }
  }
  // Zero-mass atoms: close the pair with one more transform each way.
  for (std::size_t i = 0; i < n; ++i) {
    if (mw[i] > 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      if (!inst.at(i, j).finite() || !d.psi[j].finite()) continue;
      const XReal v = inst.at(i, j).value() - d.psi[j].value();
      if (v < d.phi[i]) d.phi[i] = v;
    }
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (d.psi[j].finite()) continue;
    XReal best = XReal::inf();
    for (std::size_t i = 0; i < n; ++i) {
      if (!inst.at(i, j).finite() || !d.phi[i].finite()) continue;
      const XReal v = inst.at(i, j).value() - d.phi[i].value();
      if (v < best) best = v;
    }
    d.psi[j] = best.finite() ? best : XReal::neg_inf();
  }

  d.primal = plan_cost(inst, plan);
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mw[i] > 0.0) dual += mw[i] * d.phi[i].to_double();
  }
  for (std::size_t j = 0; j < m; ++j) {
    if (nw[j] > 0.0) dual += nw[j] * d.psi[j].to_double();
  }
  d.dual = dual;
  d.gap = d.primal - dual;
  d.admissible = check_admissible(d.phi, xs, d.psi, ys, inst.cost(), admissible_tol);
  return d;
}

std::vector<Split> detect_decomposition(const BipartiteInstance& inst, double tol) {
  const std::size_t n = inst.rows(), m = inst.cols();
  HallNetwork h = run_max_flow(inst, std::vector<bool>(n, true));
  if (h.supply - h.flow > tol) throw Infeasible(hall_feasible(inst, tol));

  std::vector<Split> found;
  for (std::size_t i = 0; i < n; ++i) {
    const auto seen = h.net.residual_reachable({i});
    if (seen[h.t]) continue;
    Split s;
    for (std::size_t k = 0; k < n; ++k) {
      if (seen[k]) s.mu_atoms.push_back(k);
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (seen[n + j]) s.nu_atoms.push_back(j);
    }
    s.mass = sum_over(inst.mu().weights(), s.mu_atoms);
    const double nu_mass = sum_over(inst.nu().weights(), s.nu_atoms);
    if (!(s.mass > tol) || !(s.mass < 1.0 - tol) || std::abs(s.mass - nu_mass) > tol) continue;
    if (std::none_of(found.begin(), found.end(), [&](const Split& f) { return f.mu_atoms == s.mu_atoms; })) {
      found.push_back(std::move(s));
    }
  }
  auto subset_of = [](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  std::vector<Split> minimal;
  for (const Split& s : found) {
    const bool has_smaller = std::any_of(found.begin(), found.end(), [&](const Split& o) {
      return o.mu_atoms != s.mu_atoms && subset_of(o.mu_atoms, s.mu_atoms);
    });
    if (!has_smaller) minimal.push_back(s);
  }
  std::sort(minimal.begin(), minimal.end(),
            [](const Split& a, const Split& b) { return a.mu_atoms < b.mu_atoms; });
  return minimal;
}

std::pair<SubInstance, SubInstance> split_instance(const BipartiteInstance& inst, const Split& s) {
  const auto mu_out = complement(s.mu_atoms, inst.rows());
  const auto nu_out = complement(s.nu_atoms, inst.cols());
  const double inner = sum_over(inst.mu().weights(), s.mu_atoms);
  const double outer = sum_over(inst.mu().weights(), mu_out);
  SubInstance a{BipartiteInstance(sub_measure(inst.mu(), s.mu_atoms), sub_measure(inst.nu(), s.nu_atoms),
                                  inst.cost()),
                s.mu_atoms, s.nu_atoms, inner};
  SubInstance b{BipartiteInstance(sub_measure(inst.mu(), mu_out), sub_measure(inst.nu(), nu_out), inst.cost()),
                mu_out, nu_out, outer};
  return {std::move(a), std::move(b)};
}

DecomposedPlan solve_split(const BipartiteInstance& inst, const Split& s) {
  auto [a, b] = split_instance(inst, s);
  DecomposedPlan out{s, optimal_plan(a.inst), optimal_plan(b.inst), {}};
  for (const auto* part : {&a, &b}) {
    const DiscretePlan& p = part == &a ? out.inner : out.outer;
    for (const auto& e : p.plan.entries) {
      out.combined.plan.entries.push_back({part->mu_ids[e.source], part->nu_ids[e.target], part->weight * e.mass});
    }
  }
  std::sort(out.combined.plan.entries.begin(), out.combined.plan.entries.end(), [](const auto& x, const auto& y) {
    return x.source != y.source ? x.source < y.source : x.target < y.target;
  });
  out.combined.cost = plan_cost(inst, out.combined.plan);
  return out;
}

}  // namespace infcost
