#include "infcost/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace infcost::io {

namespace fs = std::filesystem;

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(XReal v) {
  if (v.is_pos_inf()) return "inf";
  if (v.is_neg_inf()) return "-inf";
  return fmt(v.value());
}

json xreal_json(XReal v) {
  if (v.is_pos_inf()) return "inf";
  if (v.is_neg_inf()) return "-inf";
  return v.value();
}

XReal xreal_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf") return XReal::inf();
    if (s == "-inf") return XReal::neg_inf();
    throw std::invalid_argument("bad extended real: " + s);
  }
  return XReal(j.get<double>());
}

Density density_by_id(const std::string& id) {
  if (id == "uniform") return [](const Point&) { return 1.0; };
  if (id == "two-level") return [](const Point& x) { return x.at(0) <= 1.0 ? 1.0 : 0.5; };
  if (id == "hyperbola") {
    return [](const Point& x) {
      const double t = x.at(0);
      return t > 0.0 ? std::sqrt(1.0 + 1.0 / (t * t * t * t)) : 0.0;
    };
  }
  throw std::invalid_argument("unknown density id: " + id);
}

std::vector<std::string> density_ids() { return {"uniform", "two-level", "hyperbola"}; }

Point point_from_json(const json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

json point_json(const Point& p) { return p; }

std::vector<Point> read_points_csv(std::istream& in) {
  std::string line;
  std::size_t width = 0;
  bool first = true;
  std::vector<std::vector<double>> raw;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      double v = 0.0;
      const auto b = cell.find_first_not_of(" \t");
      const auto e = cell.find_last_not_of(" \t");
      const std::string t = b == std::string::npos ? "" : cell.substr(b, e - b + 1);
      const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
      if (r.ec != std::errc() || r.ptr != t.data() + t.size()) {
        numeric = false;
        break;
      }
      vals.push_back(v);
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw std::invalid_argument("non-numeric CSV row: " + line);
    }
    first = false;
    if (width == 0) width = vals.size();
    if (vals.size() != width) throw std::invalid_argument("ragged CSV point file");
    raw.push_back(std::move(vals));
  }
  return raw;
}

namespace {

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path q(p);
  return q.is_absolute() || base.empty() ? q : base / q;
}

std::pair<std::vector<Point>, std::vector<double>> points_and_weights(const json& j, const fs::path& base) {
  std::vector<Point> pts;
  std::vector<double> w;
  if (j.contains("csv")) {
    const fs::path p = resolve(base, j.at("csv").get<std::string>());
    std::ifstream in(p);
    if (!in) throw std::invalid_argument("cannot open " + p.string());
    const bool weighted = j.value("weighted", false);
    for (auto& pt : read_points_csv(in)) {
      if (weighted) {
        if (pt.size() < 2) throw std::invalid_argument("weighted CSV needs a weight column");
        w.push_back(pt.back());
        pt.pop_back();
      }
      pts.push_back(std::move(pt));
    }
  } else {
    for (const auto& p : j.at("points")) pts.push_back(point_from_json(p));
    if (j.contains("weights")) w = j.at("weights").get<std::vector<double>>();
  }
  if (w.empty()) w.assign(pts.size(), pts.empty() ? 0.0 : 1.0 / static_cast<double>(pts.size()));
  return {std::move(pts), std::move(w)};
}

GridProvenance grid_from_json(const json& j) {
  GridProvenance g;
  g.lo = point_from_json(j.at("lo"));
  g.hi = point_from_json(j.at("hi"));
  const json& r = j.at("resolution");
  if (r.is_number()) {
    g.resolution.assign(g.lo.size(), r.get<std::size_t>());
  } else {
    g.resolution = r.get<std::vector<std::size_t>>();
  }
  return g;
}

}  // namespace

QuadratureMeasure load_quadrature(const json& j, const fs::path& base) {
  const std::string type = j.value("type", "samples");
  if (type == "grid") return grid_measure(grid_from_json(j), density_by_id(j.value("density", "uniform")));
  if (type == "discrete" || type == "samples") {
    auto [pts, w] = points_and_weights(j, base);
    return sample_measure(std::move(pts), std::move(w));
  }
  throw std::invalid_argument("unknown measure type: " + type);
}

DiscreteMeasure load_discrete(const json& j, const fs::path& base) {
  const std::string type = j.value("type", "discrete");
  if (type == "grid") {
    const QuadratureMeasure q = load_quadrature(j, base);
    return DiscreteMeasure(q.nodes(), q.weights());
  }
  auto [pts, w] = points_and_weights(j, base);
  return DiscreteMeasure(std::move(pts), std::move(w));
}

CostFunction load_cost(const json& j, const fs::path& base) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "polar") return CostFunction::polar();
    if (s == "bilinear") return CostFunction::bilinear();
    if (s == "quadratic") return CostFunction::quadratic();
    throw std::invalid_argument("unknown cost: " + s);
  }
  if (j.contains("table_csv")) return load_table_csv_file(resolve(base, j.at("table_csv").get<std::string>()).string());
  if (j.contains("table")) {
    const json& t = j.at("table");
    std::vector<Point> rows, cols;
    for (const auto& p : t.at("rows")) rows.push_back(point_from_json(p));
    for (const auto& p : t.at("cols")) cols.push_back(point_from_json(p));
    std::vector<std::vector<XReal>> values;
    for (const auto& row : t.at("values")) {
      std::vector<XReal> r;
      for (const auto& v : row) r.push_back(xreal_from_json(v));
      values.push_back(std::move(r));
    }
    return CostFunction::table(std::move(rows), std::move(cols), std::move(values));
  }
  throw std::invalid_argument("unrecognized cost specification");
}

std::vector<Disk> load_disks(const json& j) {
  std::vector<Disk> out;
  for (const auto& d : j) {
    const auto pr = d.at("pair").get<std::vector<std::size_t>>();
    if (pr.size() != 2) throw std::invalid_argument("disk pair must name two atoms");
    out.push_back(Disk{point_from_json(d.at("center")), d.at("radius").get<double>(), {pr[0], pr[1]}});
  }
  return out;
}

GeomConvexFn load_piecewise(const json& j) {
  std::vector<AffinePiece> pieces;
  for (const auto& p : j.at("pieces")) {
    pieces.push_back(AffinePiece{point_from_json(p.at("slope")), p.value("offset", 0.0)});
  }
  return GeomConvexFn(std::move(pieces));
}

json read_json_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::invalid_argument("cannot open " + p.string());
  return json::parse(in);
}

json potential_json(const Potential& phi) {
  json sup = json::array(), sh = json::array();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    sup.push_back(point_json(phi.supports()[i]));
    sh.push_back(xreal_json(phi.shifts()[i]));
  }
  return {{"cost", phi.cost().name()}, {"supports", sup}, {"shifts", sh}};
}

json certificate_json(const Certificate& c) {
  json j{{"verdict", to_string(c.verdict)}};
  if (!c.cycle.empty()) j["cycle"] = c.cycle;
  if (!c.bound.empty()) {
    json rows = json::array();
    for (const auto& r : c.bound) {
      json row = json::array();
      for (const XReal& v : r) row.push_back(xreal_json(v));
      rows.push_back(row);
    }
    j["bound"] = rows;
  }
  return j;
}

json classification_json(const Classification& c) {
  json sets = json::array();
  for (Subset s : c.sets) sets.push_back(members(s));
  return {{"kind", to_string(c.kind)}, {"sets", sets}};
}

json polytope_json(const HallPolytope& p, bool with_vertices) {
  json masses = json::array();
  for (Subset s = 0; s <= p.full(); ++s) masses.push_back({{"set", members(s)}, {"mass", p.mass(s)}});
  json j{{"atoms", p.m()}, {"masses", masses}};
  if (with_vertices) {
    j["vertices"] = vertices(p);
    j["dimension"] = polytope_dimension(p);
  }
  return j;
}

json hall_report_json(const HallReport& r) {
  return {{"feasible", r.feasible}, {"flow", r.flow}, {"witness", r.witness},
          {"blocked", r.blocked},   {"excess", r.excess}};
}

json solve_report_json(const SolveReport& r) {
  json j{{"t", r.t},
         {"residual", r.residual},
         {"iterations", r.iterations},
         {"perturbed", r.perturbed},
         {"original_residual", r.original_residual}};
  if (!r.level_path.empty()) {
    json path = json::array();
    for (const auto& [k, t] : r.level_path) path.push_back({{"k", k}, {"t", t}});
    j["level_path"] = path;
  }
  return j;
}

void write_plan_csv(std::ostream& os, const TransportPlan& plan) {
  os << "node_id,atom_id,mass\n";
  for (const auto& e : plan.entries) os << e.source << ',' << e.target << ',' << fmt(e.mass) << '\n';
}

void write_log_csv(std::ostream& os, const std::vector<IterationRecord>& log) {
  os << "iter,residual,step,dual\n";
  for (const auto& r : log) os << r.iter << ',' << fmt(r.residual) << ',' << fmt(r.step) << ',' << fmt(r.dual) << '\n';
}

void write_cells_svg(std::ostream& os, const QuadratureMeasure& mu, std::span<const Point> atoms,
                     const CellPartition& cells) {
  const std::size_t d = mu.dim();
  if (d != 1 && d != 2) throw std::invalid_argument("cell plots need dimension 1 or 2");
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  Point lo(d, HUGE_VAL), hi(d, -HUGE_VAL);
  for (const Point& p : mu.nodes()) {
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  for (const Point& p : atoms) {
    for (std::size_t k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], p[k]);
      hi[k] = std::max(hi[k], p[k]);
    }
  }
  const double W = 600.0, H = d == 1 ? 80.0 : 600.0, pad = 20.0;
  auto sx = [&](double v) { return pad + (v - lo[0]) / std::max(hi[0] - lo[0], 1e-300) * (W - 2 * pad); };
  auto sy = [&](double v) {
    return d == 1 ? H / 2 : H - pad - (v - lo[1]) / std::max(hi[1] - lo[1], 1e-300) * (H - 2 * pad);
  };
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const Point& p = mu.nodes()[k];
    const char* color = cells.tie[k] ? "#000000" : palette[cells.assignment[k] % 10];
    os << "<circle cx=\"" << sx(p[0]) << "\" cy=\"" << sy(d == 1 ? 0.0 : p[1]) << "\" r=\"1.5\" fill=\"" << color
       << "\"/>\n";
  }
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const Point& u = atoms[i];
    os << "<rect x=\"" << sx(u[0]) - 4 << "\" y=\"" << sy(d == 1 ? 0.0 : u[1]) - 4
       << "\" width=\"8\" height=\"8\" fill=\"none\" stroke=\"" << palette[i % 10] << "\" stroke-width=\"2\"/>\n";
  }
  os << "</svg>\n";
}

}  // namespace infcost::io
