// infcost command line tool.
//
// Exit codes: 0 ok, 1 usage or input error, 2 infeasible or incompatible,
// 3 solver did not converge.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "infcost/io.hpp"

using namespace infcost;
using infcost::io::json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kIncompatible = 2;
constexpr int kNoConvergence = 3;

struct Flags {
  std::string instance;
  std::string alpha;
  double tol = -1.0;  // negative: use the instance or library default
  std::size_t max_iter = 0;
  std::string grid;
  std::uint64_t seed = 0;
  bool decompose = false;
  bool svg = false;
  std::string out;
};

struct Instance {
  json doc;
  fs::path base;
  CostFunction cost = CostFunction::polar();
};

Instance read_instance(const Flags& f) {
  if (f.instance.empty()) throw std::invalid_argument("--instance is required");
  Instance in;
  in.doc = io::read_json_file(f.instance);
  in.base = fs::path(f.instance).parent_path();
  if (in.doc.contains("cost")) in.cost = io::load_cost(in.doc.at("cost"), in.base);
  return in;
}

bool is_grid(const json& m) { return m.value("type", "") == "grid"; }

double parse_number(const std::string& s) {
  const auto slash = s.find('/');
  std::size_t used = 0;
  if (slash == std::string::npos) {
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("bad number: " + s);
    return v;
  }
  return parse_number(s.substr(0, slash)) / parse_number(s.substr(slash + 1));
}

// Comma separated; entries may be fractions like 1/3.
std::vector<double> parse_alpha(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(parse_number(cell));
  return out;
}

struct AxisGrid {
  double lo, hi;
  std::size_t n;
};

// lo:hi:n, same on every axis.
AxisGrid parse_grid(const std::string& s) {
  const auto a = s.find(':'), b = s.rfind(':');
  if (a == std::string::npos || a == b) throw std::invalid_argument("--grid expects lo:hi:n");
  AxisGrid g{parse_number(s.substr(0, a)), parse_number(s.substr(a + 1, b - a - 1)),
             static_cast<std::size_t>(std::stoul(s.substr(b + 1)))};
  if (g.n == 0 || !(g.lo <= g.hi)) throw std::invalid_argument("--grid needs lo <= hi and n >= 1");
  return g;
}

std::vector<Point> grid_points(const AxisGrid& g, std::size_t dim) {
  std::size_t total = 1;
  for (std::size_t d = 0; d < dim; ++d) total *= g.n;
  std::vector<Point> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    Point p(dim);
    std::size_t r = flat;
    for (std::size_t d = dim; d-- > 0;) {
      const std::size_t k = r % g.n;
      r /= g.n;
      p[d] = g.n == 1 ? g.lo : g.lo + (g.hi - g.lo) * static_cast<double>(k) / static_cast<double>(g.n - 1);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string point_str(const Point& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + io::fmt(p[i]);
  return s + ")";
}

std::string set_str(Subset s) { return subset_to_string(s); }

fs::path out_dir(const Flags& f) {
  const fs::path d = f.out.empty() ? fs::path(".") : fs::path(f.out);
  fs::create_directories(d);
  return d;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << body;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

void write_plan(const fs::path& p, const TransportPlan& plan) {
  std::ostringstream os;
  io::write_plan_csv(os, plan);
  write_text(p, os.str());
}

// Nodes of positive weight that reach no atom at finite cost.
std::vector<std::size_t> unreachable_nodes(const QuadratureMeasure& mu, std::span<const Point> atoms,
                                           const CostFunction& c) {
  const auto masks = finiteness_masks(mu, atoms, c);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    if (masks[k] == 0 && mu.weights()[k] > 0.0) out.push_back(k);
  }
  return out;
}

std::vector<double> target_weights(const Flags& f, const DiscreteMeasure& nu) {
  if (f.alpha.empty()) return nu.weights();
  auto a = parse_alpha(f.alpha);
  if (a.size() != nu.size()) throw std::invalid_argument("--alpha length differs from the number of atoms");
  return a;
}

// Cyclic-monotonicity on at most `cap` support pairs, evenly spaced, since the
// check is cubic in the pair count.
json support_certificate(const TransportPlan& plan, std::span<const Point> xs, std::span<const Point> ys,
                         const CostFunction& c, std::size_t cap = 300) {
  std::vector<std::pair<Point, Point>> pairs;
  const std::size_t n = plan.entries.size();
  const std::size_t stride = n > cap ? (n + cap - 1) / cap : 1;
  for (std::size_t k = 0; k < n; k += stride) {
    const auto& e = plan.entries[k];
    if (e.mass > 0.0) pairs.emplace_back(xs[e.source], ys[e.target]);
  }
  json j = io::certificate_json(check_cyclic_monotone(PairSet(pairs, c)));
  j["support_size"] = n;
  j["pairs_checked"] = pairs.size();
  return j;
}

// ---------------------------------------------------------------------------

int cmd_check_compat(const Flags& f) {
  const Instance in = read_instance(f);
  const json& mj = in.doc.at("mu");
  const json& nj = in.doc.at("nu");
  const double tol = f.tol > 0 ? f.tol : 1e-9;

  if (is_grid(mj) && is_grid(nj)) {
    const QuadratureMeasure mu = io::load_quadrature(mj, in.base), nu = io::load_quadrature(nj, in.base);
    const IntervalCompat ic = interval_compat_gap(mu, nu, in.cost);
    const double gap_tol = f.tol > 0 ? f.tol : 1e-3;
    std::printf("interval sets checked: %zu\nworst gap: %s\n", ic.sets_checked, io::fmt(ic.worst_gap).c_str());
    if (ic.worst_gap > gap_tol) {
      std::printf("verdict: not c-compatible\n");
      return kIncompatible;
    }
    std::printf("verdict: c-compatible (interval sets; strong compatibility is not checked for two continuous "
                "measures)\n");
    return kOk;
  }

  const QuadratureMeasure mu = io::load_quadrature(mj, in.base);
  const DiscreteMeasure nu0 = io::load_discrete(nj, in.base);
  const std::vector<double> alpha = target_weights(f, nu0);
  const DiscreteMeasure nu(nu0.atoms(), alpha);

  bool hall_ok = true;
  std::vector<Split> splits;
  if (!is_grid(mj)) {
    const BipartiteInstance bi(io::load_discrete(mj, in.base), nu, in.cost);
    const HallReport hr = hall_feasible(bi);
    hall_ok = hr.feasible;
    std::printf("hall: %s (flow %s)\n", hr.feasible ? "feasible" : "infeasible", io::fmt(hr.flow).c_str());
    if (!hr.feasible) {
      std::printf("witness mu atoms:");
      for (std::size_t i : hr.witness) std::printf(" %zu%s", i, point_str(bi.mu().atoms()[i]).c_str());
      std::printf("\nblocked nu atoms:");
      for (std::size_t j : hr.blocked) std::printf(" %zu", j);
      std::printf("\nexcess: %s\nverdict: not c-compatible\n", io::fmt(hr.excess).c_str());
      return kIncompatible;
    }
    splits = detect_decomposition(bi);
  }

  const auto lost = unreachable_nodes(mu, nu.atoms(), in.cost);
  if (!lost.empty()) {
    std::printf("classification: Exterior\nnode %zu%s reaches no atom\nverdict: not c-compatible\n", lost[0],
                point_str(mu.nodes()[lost[0]]).c_str());
    return kIncompatible;
  }
  const HallPolytope p = build_polytope(mu, nu.atoms(), in.cost);
  const Classification cls = classify(p, alpha, tol);
  std::printf("classification: %s\n", to_string(cls.kind));
  for (Subset s : cls.sets) {
    double a = 0.0;
    for (std::size_t i : members(s)) a += alpha[i];
    std::printf("  %s set %s: mass %s, alpha %s\n", cls.kind == Classification::Kind::Exterior ? "violated" : "active",
                set_str(s).c_str(), io::fmt(p.mass(s)).c_str(), io::fmt(a).c_str());
  }
  switch (cls.kind) {
    case Classification::Kind::Interior:
      std::printf("verdict: strongly c-compatible\n");
      return kOk;
    case Classification::Kind::Boundary:
      std::printf("verdict: c-compatible, NOT strongly\n");
      for (const Split& s : splits) {
        std::printf("split: mu atoms");
        for (std::size_t i : s.mu_atoms) std::printf(" %zu", i);
        std::printf(" | nu atoms");
        for (std::size_t j : s.nu_atoms) std::printf(" %zu", j);
        std::printf(" | mass %s\n", io::fmt(s.mass).c_str());
      }
      std::fprintf(stderr, "warning: target on the polytope boundary; solve with --decompose\n");
      return hall_ok ? kOk : kIncompatible;
    case Classification::Kind::Exterior:
      std::printf("verdict: not c-compatible\n");
      return kIncompatible;
  }
  return kOk;
}

SolveOptions solve_options(const Flags& f, const Instance& in) {
  SolveOptions o;
  if (in.doc.contains("options")) {
    const json& j = in.doc.at("options");
    o.tol = j.value("tol", o.tol);
    o.max_iter = j.value("max_iter", o.max_iter);
    if (j.contains("disks")) o.disks = io::load_disks(j.at("disks"));
    if (j.contains("perturbation_levels")) o.perturbation_levels = j.at("perturbation_levels").get<std::vector<double>>();
  }
  if (f.tol > 0) o.tol = f.tol;
  if (f.max_iter > 0) o.max_iter = f.max_iter;
  return o;
}

int cmd_solve_semi(const Flags& f) {
  const Instance in = read_instance(f);
  const QuadratureMeasure mu = io::load_quadrature(in.doc.at("mu"), in.base);
  const DiscreteMeasure nu = io::load_discrete(in.doc.at("nu"), in.base);
  const std::vector<double> alpha = target_weights(f, nu);
  const std::vector<Point>& atoms = nu.atoms();
  const SolveOptions opts = solve_options(f, in);

  if (const auto lost = unreachable_nodes(mu, atoms, in.cost); !lost.empty()) {
    std::printf("node %zu%s reaches no atom\nverdict: not c-compatible\n", lost[0],
                point_str(mu.nodes()[lost[0]]).c_str());
    return kIncompatible;
  }
  const fs::path dir = out_dir(f);
  SemiResult res;
  try {
    res = solve_semidiscrete(mu, atoms, in.cost, alpha, opts, f.decompose);
  } catch (const NotInterior& e) {
    std::printf("classification: %s\n", to_string(e.classification.kind));
    for (Subset s : e.classification.sets) std::printf("  set %s\n", set_str(s).c_str());
    if (e.classification.kind == Classification::Kind::Boundary && !f.decompose) {
      std::fprintf(stderr, "target is on the polytope boundary; rerun with --decompose\n");
    }
    return kIncompatible;
  } catch (const MaxIterExceeded& e) {
    write_json(dir / "report.json", io::solve_report_json(e.best));
    std::ostringstream log;
    io::write_log_csv(log, e.best.log);
    write_text(dir / "log.csv", log.str());
    std::printf("no convergence after %zu iterations, residual %s\n", e.best.iterations,
                io::fmt(e.best.residual).c_str());
    return kNoConvergence;
  }

  write_plan(dir / "plan.csv", res.plan);
  json parts = json::array();
  double dual = 0.0, worst_resid = 0.0;
  for (std::size_t p = 0; p < res.parts.size(); ++p) {
    const SemiPart& part = res.parts[p];
    json pj = io::potential_json(part.potential);
    pj["atom_ids"] = part.atom_ids;
    pj["weight"] = part.weight;
    pj["report"] = io::solve_report_json(part.report);
    parts.push_back(pj);
    std::ostringstream log;
    io::write_log_csv(log, part.report.log);
    write_text(dir / (res.parts.size() == 1 ? std::string("log.csv") : "log_part" + std::to_string(p) + ".csv"),
               log.str());
    for (std::size_t k : part.node_ids) dual += mu.weights()[k] * part.potential(mu.nodes()[k]).value();
    for (std::size_t a = 0; a < part.atom_ids.size(); ++a) {
      dual -= alpha[part.atom_ids[a]] * part.potential.shifts()[a].value();
    }
  }
  // Which part owns each atom, to measure the subgradient residual per entry.
  std::vector<std::pair<std::size_t, std::size_t>> owner(atoms.size(), {0, 0});
  for (std::size_t p = 0; p < res.parts.size(); ++p) {
    for (std::size_t a = 0; a < res.parts[p].atom_ids.size(); ++a) owner[res.parts[p].atom_ids[a]] = {p, a};
  }
  for (const auto& e : res.plan.entries) {
    const auto [p, a] = owner[e.target];
    const Potential& phi = res.parts[p].potential;
    const Point& x = mu.nodes()[e.source];
    worst_resid = std::max(worst_resid, in.cost(x, atoms[e.target]).value() + phi.shifts()[a].value() - phi(x).value());
  }
  json potential{{"parts", parts}};
  if (res.parts.size() == 1) {
    potential.update(io::potential_json(res.parts[0].potential));
    potential["t"] = res.parts[0].report.t;
  }
  write_json(dir / "potential.json", potential);

  json cert = support_certificate(res.plan, mu.nodes(), atoms, in.cost);
  cert["subgradient_residual"] = worst_resid;
  write_json(dir / "certificate.json", cert);
  if (f.svg && mu.dim() <= 2) {
    const CellPartition cells = cell_partition(mu, atoms, in.cost, res.parts.size() == 1 ? res.parts[0].report.t : alpha);
    std::ostringstream svg;
    io::write_cells_svg(svg, mu, atoms, cells);
    write_text(dir / "cells.svg", svg.str());
  }

  const double primal = plan_cost(res.plan, mu.nodes(), atoms, in.cost);
  std::printf("parts: %zu\n", res.parts.size());
  for (std::size_t p = 0; p < res.parts.size(); ++p) {
    const SolveReport& r = res.parts[p].report;
    std::printf("part %zu: weight %s, iterations %zu, residual %s%s\n  t =", p, io::fmt(res.parts[p].weight).c_str(),
                r.iterations, io::fmt(r.residual).c_str(), r.perturbed ? " (perturbed)" : "");
    for (double v : r.t) std::printf(" %s", io::fmt(v).c_str());
    std::printf("\n");
  }
  std::printf("certificate: %s\n", cert["verdict"].get<std::string>().c_str());
  std::printf("primal %s dual %s gap %s\n", io::fmt(primal).c_str(), io::fmt(dual).c_str(),
              io::fmt(primal - dual).c_str());
  return kOk;
}

int cmd_solve_discrete(const Flags& f) {
  const Instance in = read_instance(f);
  const DiscreteMeasure mu = io::load_discrete(in.doc.at("mu"), in.base);
  const DiscreteMeasure nu0 = io::load_discrete(in.doc.at("nu"), in.base);
  const BipartiteInstance inst(mu, DiscreteMeasure(nu0.atoms(), target_weights(f, nu0)), in.cost);

  const HallReport hr = hall_feasible(inst);
  if (!hr.feasible) {
    std::printf("infeasible\nwitness mu atoms:");
    for (std::size_t i : hr.witness) std::printf(" %zu%s", i, point_str(mu.atoms()[i]).c_str());
    std::printf("\nexcess: %s\n", io::fmt(hr.excess).c_str());
    return kIncompatible;
  }
  const fs::path dir = out_dir(f);
  DiscretePlan plan;
  const auto splits = f.decompose ? detect_decomposition(inst) : std::vector<Split>{};
  if (!splits.empty()) {
    const DecomposedPlan dp = solve_split(inst, splits[0]);
    write_plan(dir / "plan_inner.csv", dp.inner.plan);
    write_plan(dir / "plan_outer.csv", dp.outer.plan);
    std::printf("split: %zu mu atoms, mass %s\ninner cost %s\nouter cost %s\n", splits[0].mu_atoms.size(),
                io::fmt(splits[0].mass).c_str(), io::fmt(dp.inner.cost).c_str(), io::fmt(dp.outer.cost).c_str());
    plan = dp.combined;
  } else {
    plan = optimal_plan(inst);
  }
  write_plan(dir / "plan.csv", plan.plan);

  const DualPair d = dual_potentials(inst, plan.plan);
  json phi = json::array(), psi = json::array();
  for (const XReal& v : d.phi) phi.push_back(io::xreal_json(v));
  for (const XReal& v : d.psi) psi.push_back(io::xreal_json(v));
  write_json(dir / "potential.json", {{"cost", in.cost.name()},
                                      {"phi", phi},
                                      {"psi", psi},
                                      {"primal", d.primal},
                                      {"dual", d.dual},
                                      {"gap", d.gap},
                                      {"admissible", d.admissible}});
  const json cert = support_certificate(plan.plan, mu.atoms(), inst.nu().atoms(), in.cost);
  write_json(dir / "certificate.json", cert);
  std::printf("cost %s\ncertificate: %s\nadmissible: %s\nprimal %s dual %s gap %s\n", io::fmt(plan.cost).c_str(),
              cert["verdict"].get<std::string>().c_str(), d.admissible ? "yes" : "no", io::fmt(d.primal).c_str(),
              io::fmt(d.dual).c_str(), io::fmt(d.gap).c_str());
  return kOk;
}

int cmd_polytope(const Flags& f) {
  const Instance in = read_instance(f);
  const QuadratureMeasure mu = io::load_quadrature(in.doc.at("mu"), in.base);
  const DiscreteMeasure nu = io::load_discrete(in.doc.at("nu"), in.base);
  if (const auto lost = unreachable_nodes(mu, nu.atoms(), in.cost); !lost.empty()) {
    std::printf("node %zu%s reaches no atom; the Hall polytope is empty\n", lost[0],
                point_str(mu.nodes()[lost[0]]).c_str());
    return kIncompatible;
  }
  const HallPolytope p = build_polytope(mu, nu.atoms(), in.cost);
  const std::size_t m = p.m();
  std::printf("atoms: %zu\ndimension: %d\n", m, polytope_dimension(p, f.seed));
  std::printf("inequalities:\n");
  for (Subset s = 1; s < p.full(); ++s) {
    std::string lhs;
    for (std::size_t i : members(s)) lhs += (lhs.empty() ? "" : " + ") + ("a" + std::to_string(i));
    std::printf("  %s <= %s\n", lhs.c_str(), io::fmt(p.mass(s)).c_str());
  }
  std::string all;
  for (std::size_t i = 0; i < m; ++i) all += (i ? " + " : "") + ("a" + std::to_string(i));
  std::printf("  %s = 1\n", all.c_str());

  json j = io::polytope_json(p, m <= 8);
  if (m <= 8) {
    // Faces F_I listed by the polytope vertices they contain; inclusion of
    // faces is inclusion of these index sets.
    const auto verts = vertices(p);
    std::printf("vertices: %zu\n", verts.size());
    for (std::size_t v = 0; v < verts.size(); ++v) {
      std::printf("  v%zu =", v);
      for (double x : verts[v]) std::printf(" %s", io::fmt(x).c_str());
      std::printf("\n");
    }
    std::printf("faces:\n");
    json faces = json::array();
    for (Subset s = 1; s < p.full(); ++s) {
      std::vector<std::size_t> on;
      for (std::size_t v = 0; v < verts.size(); ++v) {
        double sum = 0.0;
        for (std::size_t i : members(s)) sum += verts[v][i];
        if (std::abs(sum - p.mass(s)) <= 1e-9) on.push_back(v);
      }
      if (on.empty()) continue;
      std::printf("  F%s:", set_str(s).c_str());
      for (std::size_t v : on) std::printf(" v%zu", v);
      std::printf("\n");
      faces.push_back({{"set", members(s)}, {"vertices", on}});
    }
    j["faces"] = faces;
  } else {
    std::printf("faces: skipped for more than 8 atoms\n");
  }
  if (!f.alpha.empty()) {
    const Classification cls = classify(p, target_weights(f, nu), f.tol > 0 ? f.tol : 1e-9);
    std::printf("alpha: %s\n", to_string(cls.kind));
    j["classification"] = io::classification_json(cls);
  }
  if (!f.out.empty()) write_json(out_dir(f) / "polytope.json", j);
  return kOk;
}

Potential load_potential(const json& j, const CostFunction& c, const fs::path& base) {
  const json src = j.is_string() ? io::read_json_file(base / j.get<std::string>()) : j;
  std::vector<Point> sup;
  std::vector<XReal> sh;
  for (const auto& p : src.at("supports")) sup.push_back(io::point_from_json(p));
  for (const auto& v : src.at("shifts")) sh.push_back(io::xreal_from_json(v));
  return Potential(std::move(sup), std::move(sh), c);
}

int cmd_verify_potential(const Flags& f) {
  const Instance in = read_instance(f);
  const Potential phi = load_potential(in.doc.at("potential"), in.cost, in.base);
  std::vector<Point> xs;
  if (!f.grid.empty()) {
    xs = grid_points(parse_grid(f.grid), phi.supports()[0].size());
  } else {
    xs = io::load_quadrature(in.doc.at("mu"), in.base).nodes();
  }
  // The certificate is cubic in the pair count; sample down deterministically.
  constexpr std::size_t kCap = 300;
  if (xs.size() > kCap) {
    std::mt19937_64 rng(f.seed);
    std::shuffle(xs.begin(), xs.end(), rng);
    xs.resize(kCap);
  }
  const PairSet g = subgradient_pairs(phi, xs, f.tol > 0 ? f.tol : 1e-9);
  const Certificate cm = check_cyclic_monotone(g);
  const Certificate pb = check_path_bounded(g);
  const auto classes = equivalence_classes(g);
  std::printf("pairs: %zu\ncyclic monotonicity: %s\npath bounded: %s\nequivalence classes: %zu\n", g.size(),
              to_string(cm.verdict), to_string(pb.verdict), classes.size());
  if (!cm.cycle.empty()) {
    const CycleReplay r = replay_cycle(g, cm.cycle);
    std::printf("cycle cost %s, rerouted %s\n", io::fmt(r.identity).c_str(), io::fmt(r.rerouted).c_str());
  }
  if (!f.out.empty()) {
    write_json(out_dir(f) / "certificate.json",
               {{"cyclic_monotone", io::certificate_json(cm)}, {"path_bounded", io::certificate_json(pb)}});
  }
  return cm.verdict == Certificate::Verdict::CyclicallyMonotone ? kOk : kIncompatible;
}

GeomConvexFn load_function(const json& doc) {
  const json& j = doc.at("function");
  if (j.is_string()) {
    if (j.get<std::string>() != "half_squared_norm") throw std::invalid_argument("unknown function: " + j.dump());
    return GeomConvexFn::half_squared_norm(doc.value("dim", std::size_t{2}));
  }
  return io::load_piecewise(j);
}

std::string csv_header(char tag, std::size_t dim) {
  std::string h;
  for (std::size_t d = 0; d < dim; ++d) h += (d ? "," : "") + (tag + std::to_string(d));
  return h;
}

std::string csv_point(const Point& p) {
  std::string s;
  for (std::size_t d = 0; d < p.size(); ++d) s += (d ? "," : "") + io::fmt(p[d]);
  return s;
}

void emit(const Flags& f, const std::string& name, const std::string& body) {
  if (f.out.empty()) {
    std::fwrite(body.data(), 1, body.size(), stdout);
  } else {
    write_text(out_dir(f) / name, body);
  }
}

SearchGrid search_box(const json& doc, std::size_t dim) {
  return cube_grid(dim, doc.value("search_half_width", 8.0), doc.value("search_per_axis", std::size_t{201}));
}

int cmd_polar_a_transform(const Flags& f) {
  const Instance in = read_instance(f);
  const GeomConvexFn phi = load_function(in.doc);
  if (f.grid.empty()) throw std::invalid_argument("--grid is required");
  const SearchGrid box = search_box(in.doc, phi.dim());
  std::string body = csv_header('y', phi.dim()) + ",value\n";
  for (const Point& y : grid_points(parse_grid(f.grid), phi.dim())) {
    const double v = phi.is_piecewise_affine() ? a_transform_exact(phi, y) : a_transform(phi, y, box);
    body += csv_point(y) + "," + io::fmt(v) + "\n";
  }
  emit(f, "a_transform.csv", body);
  return kOk;
}

int cmd_polar_subgrad(const Flags& f) {
  const Instance in = read_instance(f);
  const GeomConvexFn phi = load_function(in.doc);
  if (f.grid.empty()) throw std::invalid_argument("--grid is required");
  const SearchGrid box = search_box(in.doc, phi.dim());
  const double tol = f.tol > 0 ? f.tol : 1e-9;
  std::string body = csv_header('x', phi.dim()) + "," + csv_header('y', phi.dim()) + "\n";
  for (const Point& x : grid_points(parse_grid(f.grid), phi.dim())) {
    for (const Point& y : polar_subgradient_exact(phi, x, tol, phi.is_piecewise_affine() ? nullptr : &box)) {
      body += csv_point(x) + "," + csv_point(y) + "\n";
    }
  }
  emit(f, "polar_subgradient.csv", body);
  return kOk;
}

// ---------------------------------------------------------------------------
// Canned worked examples.

struct Check {
  bool ok = true;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      std::printf("  failed: %s\n", what.c_str());
    }
  }
};

Point P1(double v) { return Point{v}; }

Check repro_neg_cycle() {
  Check k;
  const PairSet g({{P1(2), P1(2)}, {P1(3), P1(3)}}, CostFunction::polar());
  const Certificate cert = check_cyclic_monotone(g);
  std::printf("  verdict: %s\n", to_string(cert.verdict));
  k.require(cert.verdict == Certificate::Verdict::NegativeCycle, "2-cycle not detected");
  if (!k.ok) return k;
  const CycleReplay r = replay_cycle(g, cert.cycle);
  std::printf("  identity %s (-ln 24 = %s)\n  rerouted %s (-ln 25 = %s)\n", io::fmt(r.identity).c_str(),
              io::fmt(-std::log(24.0)).c_str(), io::fmt(r.rerouted).c_str(), io::fmt(-std::log(25.0)).c_str());
  k.require(std::abs(r.identity + std::log(24.0)) <= 4e-16 * std::log(24.0), "identity cost is not -ln 24");
  k.require(std::abs(r.rerouted + std::log(25.0)) <= 4e-16 * std::log(25.0), "rerouted cost is not -ln 25");
  return k;
}

Check repro_hyperbola() {
  Check k;
  const CostFunction c = CostFunction::polar();
  const QuadratureMeasure arc = grid_measure({{0.5}, {2.0}, {1000}}, io::density_by_id("hyperbola"));
  const IntervalCompat ic = interval_compat_gap(arc, arc, c);
  std::printf("  continuous: worst interval gap %s over %zu sets\n", io::fmt(ic.worst_gap).c_str(), ic.sets_checked);
  k.require(ic.worst_gap <= 1e-3, "continuous marginals fail the interval check");

  std::vector<Point> xs, ys;
  for (double x : {0.5, 1.0, 1.5, 2.0}) {
    xs.push_back(P1(x));
    ys.push_back(P1(1.0 / x));
  }
  const std::vector<double> w(4, 0.25);
  const BipartiteInstance inst(DiscreteMeasure(xs, w), DiscreteMeasure(ys, w), c);
  const HallReport hr = hall_feasible(inst);
  std::printf("  discrete: %s, witness size %zu, excess %s\n", hr.feasible ? "feasible" : "infeasible",
              hr.witness.size(), io::fmt(hr.excess).c_str());
  k.require(!hr.feasible, "discretization reported feasible");
  k.require(hr.witness == std::vector<std::size_t>{0}, "witness is not the atom 1/2");
  return k;
}

Check repro_decompose() {
  Check k;
  const CostFunction c = CostFunction::polar();
  std::vector<Point> atoms;
  for (double x : {0.625, 0.75, 0.875, 1.0, 1.25, 1.5, 1.75, 2.0}) atoms.push_back(P1(x));
  const std::vector<double> alpha(8, 0.125);

  const BipartiteInstance inst(DiscreteMeasure(atoms, alpha), DiscreteMeasure(atoms, alpha), c);
  const auto splits = detect_decomposition(inst);
  k.require(splits.size() == 1, "expected exactly one split");
  if (!k.ok) return k;
  k.require(splits[0].mu_atoms == std::vector<std::size_t>({0, 1, 2, 3}), "split is not the atoms up to 1");
  const double direct = optimal_plan(inst).cost, split = solve_split(inst, splits[0]).combined.cost;
  std::printf("  discrete: split mass %s, direct cost %s, recombined %s\n", io::fmt(splits[0].mass).c_str(),
              io::fmt(direct).c_str(), io::fmt(split).c_str());
  k.require(std::abs(direct - split) <= 1e-9, "recombined cost differs");

  const QuadratureMeasure mu = grid_measure({{0.5}, {2.0}, {600}}, io::density_by_id("two-level"));
  bool rejected = false;
  try {
    solve_semidiscrete(mu, atoms, c, alpha);
  } catch (const NotInterior&) {
    rejected = true;
  }
  k.require(rejected, "boundary target solved without decomposition");
  const SemiResult r = solve_semidiscrete(mu, atoms, c, alpha, {}, true);
  const auto cols = r.plan.target_marginal(atoms.size());
  double worst = 0.0;
  for (double v : cols) worst = std::max(worst, std::abs(v - 0.125));
  std::printf("  semi-discrete: %zu parts, column error %s\n", r.parts.size(), io::fmt(worst).c_str());
  k.require(r.decomposed(), "semi-discrete solve did not split");
  k.require(worst <= 1e-6, "column sums off");
  return k;
}

Check repro_inversion() {
  Check k;
  const GeomConvexFn half_sq = GeomConvexFn::half_squared_norm(2);
  const SearchGrid box = cube_grid(2, 6.0, 121);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  double worst = 0.0;
  int done = 0;
  while (done < 10) {
    const Point x{u(rng), u(rng)};
    const double n2 = x[0] * x[0] + x[1] * x[1];
    if (n2 < 0.25) continue;
    ++done;
    const auto ys = polar_subgradient_exact(half_sq, x, 1e-9, &box);
    if (ys.size() != 1) {
      k.require(false, "polar subgradient at " + point_str(x) + " is not a singleton");
      continue;
    }
    worst = std::max({worst, std::abs(ys[0][0] - 2 * x[0] / n2), std::abs(ys[0][1] - 2 * x[1] / n2)});
  }
  std::printf("  10 samples, worst deviation from 2x/|x|^2: %s\n", io::fmt(worst).c_str());
  k.require(worst <= 1e-9, "inversion error above 1e-9");
  return k;
}

int cmd_repro(const std::string& name) {
  Check k;
  if (name == "exm-neg-cycle") {
    k = repro_neg_cycle();
  } else if (name == "exm-hyperbola") {
    k = repro_hyperbola();
  } else if (name == "exm-decompose") {
    k = repro_decompose();
  } else if (name == "exm-inversion") {
    k = repro_inversion();
  } else {
    throw std::invalid_argument("unknown example: " + name);
  }
  std::printf("%s %s\n", k.ok ? "PASS" : "FAIL", name.c_str());
  return k.ok ? kOk : kIncompatible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal transport with infinite-valued costs"};
  app.require_subcommand(1);
  Flags f;
  std::string example;

  auto common = [&](CLI::App* c) {
    c->add_option("--instance", f.instance, "Instance JSON file");
    c->add_option("--tol", f.tol, "Tolerance");
    c->add_option("--out", f.out, "Output directory");
    c->add_option("--seed", f.seed, "Seed for sampled checks");
  };

  auto* compat = app.add_subcommand("check-compat", "Classify a target against the Hall polytope");
  common(compat);
  compat->add_option("--alpha", f.alpha, "Target weights, comma separated");

  auto* solve = app.add_subcommand("solve", "Solve a transport problem");
  solve->require_subcommand(1);
  auto* semi = solve->add_subcommand("semi", "Semi-discrete dual ascent");
  auto* disc = solve->add_subcommand("discrete", "Discrete min-cost flow");
  for (auto* c : {semi, disc}) {
    common(c);
    c->add_option("--alpha", f.alpha, "Target weights, comma separated");
    c->add_flag("--decompose", f.decompose, "Split along a tight set when the target is on the boundary");
  }
  semi->add_option("--max-iter", f.max_iter, "Iteration cap");
  semi->add_flag("--svg", f.svg, "Write cells.svg (dimension <= 2)");

  auto* poly = app.add_subcommand("polytope", "Print the Hall polytope inequalities and faces");
  common(poly);
  poly->add_option("--alpha", f.alpha, "Target weights to classify");

  auto* verify = app.add_subcommand("verify-potential", "Certify the subgradient of a potential");
  common(verify);
  verify->add_option("--grid", f.grid, "Sample points lo:hi:n per axis");

  auto* polar = app.add_subcommand("polar", "Polar-cost calculus");
  polar->require_subcommand(1);
  auto* atr = polar->add_subcommand("a-transform", "A-transform on a grid of y");
  auto* psub = polar->add_subcommand("subgrad", "Polar subgradients on a grid of x");
  for (auto* c : {atr, psub}) {
    common(c);
    c->add_option("--grid", f.grid, "Points lo:hi:n per axis")->required();
  }

  auto* repro = app.add_subcommand("repro", "Run a canned worked example");
  repro->add_option("name", example, "exm-neg-cycle | exm-hyperbola | exm-decompose | exm-inversion")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*compat) return cmd_check_compat(f);
    if (*semi) return cmd_solve_semi(f);
    if (*disc) return cmd_solve_discrete(f);
    if (*poly) return cmd_polytope(f);
    if (*verify) return cmd_verify_potential(f);
    if (*atr) return cmd_polar_a_transform(f);
    if (*psub) return cmd_polar_subgrad(f);
    if (*repro) return cmd_repro(example);
  } catch (const Infeasible& e) {
    std::fprintf(stderr, "infeasible: %s\n", e.what());
    return kIncompatible;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  }
  return kUsage;
}
