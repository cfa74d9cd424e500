#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "infcost/io.hpp"

namespace py = pybind11;
using namespace infcost;

namespace {

using Pairs = std::vector<std::pair<Point, Point>>;

py::list plan_list(const TransportPlan& plan) {
  py::list out;
  for (const auto& e : plan.entries) out.append(py::make_tuple(e.source, e.target, e.mass));
  return out;
}

std::vector<double> doubles(const std::vector<XReal>& v) {
  std::vector<double> out;
  out.reserve(v.size());
  for (const XReal& x : v) out.push_back(x.to_double());
  return out;
}

py::dict report_dict(const SolveReport& r) {
  py::dict d;
  d["t"] = r.t;
  d["residual"] = r.residual;
  d["iterations"] = r.iterations;
  d["perturbed"] = r.perturbed;
  d["level_path"] = r.level_path;
  return d;
}

py::tuple classification_tuple(const Classification& c) {
  std::vector<std::vector<std::size_t>> sets;
  for (Subset s : c.sets) sets.push_back(members(s));
  return py::make_tuple(to_string(c.kind), sets);
}

BipartiteInstance bipartite(std::vector<Point> mu, std::optional<std::vector<double>> mu_w, std::vector<Point> nu,
                            std::optional<std::vector<double>> nu_w, const CostFunction& c) {
  auto uniform = [](std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); };
  std::vector<double> a = mu_w ? *mu_w : uniform(mu.size());
  std::vector<double> b = nu_w ? *nu_w : uniform(nu.size());
  return BipartiteInstance(DiscreteMeasure(std::move(mu), std::move(a)), DiscreteMeasure(std::move(nu), std::move(b)),
                           c);
}

}  // namespace

PYBIND11_MODULE(_infcost, m) {
  m.doc() = "Optimal transport with costs that may be +inf";

  py::register_exception<Infeasible>(m, "Infeasible", PyExc_RuntimeError);
  py::register_exception<NotInterior>(m, "NotInterior", PyExc_RuntimeError);
  py::register_exception<MaxIterExceeded>(m, "MaxIterExceeded", PyExc_RuntimeError);
  py::register_exception<NotPathBounded>(m, "NotPathBounded", PyExc_RuntimeError);

  py::class_<CostFunction>(m, "Cost")
      .def_static("polar", &CostFunction::polar)
      .def_static("bilinear", &CostFunction::bilinear)
      .def_static("quadratic", &CostFunction::quadratic)
      // Values may be float('inf').
      .def_static("table",
                  [](std::vector<Point> rows, std::vector<Point> cols, const std::vector<std::vector<double>>& values) {
                    std::vector<std::vector<XReal>> v;
                    for (const auto& r : values) {
                      std::vector<XReal> row;
                      for (double x : r) row.push_back(std::isinf(x) && x > 0 ? XReal::inf() : XReal(x));
                      v.push_back(std::move(row));
                    }
                    return CostFunction::table(std::move(rows), std::move(cols), std::move(v));
                  })
      .def_property_readonly("name", &CostFunction::name)
      .def("__call__", [](const CostFunction& c, const Point& x, const Point& y) { return c(x, y).to_double(); })
      .def("__repr__", [](const CostFunction& c) { return "Cost(" + c.name() + ")"; });

  py::class_<QuadratureMeasure>(m, "Measure")
      .def_static(
          "grid",
          [](Point lo, Point hi, std::vector<std::size_t> resolution, const std::string& density) {
            return grid_measure({std::move(lo), std::move(hi), std::move(resolution)}, io::density_by_id(density));
          },
          py::arg("lo"), py::arg("hi"), py::arg("resolution"), py::arg("density") = "uniform")
      .def_static(
          "samples",
          [](std::vector<Point> pts, std::optional<std::vector<double>> w) {
            return sample_measure(std::move(pts), w ? *w : std::vector<double>{});
          },
          py::arg("points"), py::arg("weights") = py::none())
      .def_property_readonly("nodes", &QuadratureMeasure::nodes)
      .def_property_readonly("weights", &QuadratureMeasure::weights)
      .def("__len__", &QuadratureMeasure::size);

  m.def(
      "check_cyclic_monotone",
      [](Pairs pairs, const CostFunction& c) {
        const PairSet g(std::move(pairs), c);
        const Certificate cert = check_cyclic_monotone(g);
        py::dict d;
        d["verdict"] = to_string(cert.verdict);
        d["cycle"] = cert.cycle;
        if (!cert.cycle.empty()) {
          const CycleReplay r = replay_cycle(g, cert.cycle);
          d["identity_cost"] = r.identity;
          d["rerouted_cost"] = r.rerouted;
        }
        return d;
      },
      py::arg("pairs"), py::arg("cost"));

  m.def(
      "reconstruct_potential",
      [](Pairs pairs, const CostFunction& c) {
        const Potential phi = reconstruct_potential(PairSet(std::move(pairs), c));
        return py::make_tuple(phi.supports(), doubles(phi.shifts()));
      },
      py::arg("pairs"), py::arg("cost"), "Supports and shifts of a potential whose subgradient holds the pairs.");

  py::class_<HallPolytope>(m, "HallPolytope")
      .def(py::init([](const QuadratureMeasure& mu, std::vector<Point> atoms, const CostFunction& c) {
             return build_polytope(mu, atoms, c);
           }),
           py::arg("mu"), py::arg("atoms"), py::arg("cost"))
      .def_property_readonly("m", &HallPolytope::m)
      .def_property_readonly("masses", &HallPolytope::masses)
      .def(
          "classify",
          [](const HallPolytope& p, std::vector<double> alpha, double tol) {
            return classification_tuple(classify(p, alpha, tol));
          },
          py::arg("alpha"), py::arg("tol") = 1e-9)
      .def("vertices", [](const HallPolytope& p) { return vertices(p); })
      .def("dimension", [](const HallPolytope& p, std::uint64_t seed) { return polytope_dimension(p, seed); },
           py::arg("seed") = 0);

  m.def(
      "solve_semidiscrete",
      [](const QuadratureMeasure& mu, std::vector<Point> atoms, std::vector<double> alpha, const CostFunction& c,
         double tol, std::size_t max_iter, bool decompose) {
        SolveOptions o;
        o.tol = tol;
        o.max_iter = max_iter;
        SemiResult r;
        {
          py::gil_scoped_release release;
          r = solve_semidiscrete(mu, atoms, c, alpha, o, decompose);
        }
        py::list parts;
        for (const SemiPart& p : r.parts) {
          py::dict d = report_dict(p.report);
          d["atom_ids"] = p.atom_ids;
          d["weight"] = p.weight;
          d["shifts"] = doubles(p.potential.shifts());
          parts.append(d);
        }
        py::dict out;
        out["plan"] = plan_list(r.plan);
        out["parts"] = parts;
        return out;
      },
      py::arg("mu"), py::arg("atoms"), py::arg("alpha"), py::arg("cost"), py::arg("tol") = 1e-6,
      py::arg("max_iter") = 5000, py::arg("decompose") = false);

  m.def(
      "hall_feasible",
      [](std::vector<Point> mu, std::optional<std::vector<double>> mu_w, std::vector<Point> nu,
         std::optional<std::vector<double>> nu_w, const CostFunction& c) {
        const HallReport r = hall_feasible(bipartite(std::move(mu), mu_w, std::move(nu), nu_w, c));
        py::dict d;
        d["feasible"] = r.feasible;
        d["flow"] = r.flow;
        d["witness"] = r.witness;
        d["blocked"] = r.blocked;
        d["excess"] = r.excess;
        return d;
      },
      py::arg("mu"), py::arg("mu_weights") = py::none(), py::arg("nu"), py::arg("nu_weights") = py::none(),
      py::arg("cost"));

  m.def(
      "optimal_plan",
      [](std::vector<Point> mu, std::optional<std::vector<double>> mu_w, std::vector<Point> nu,
         std::optional<std::vector<double>> nu_w, const CostFunction& c) {
        const BipartiteInstance inst = bipartite(std::move(mu), mu_w, std::move(nu), nu_w, c);
        const DiscretePlan dp = optimal_plan(inst);
        const DualPair dual = dual_potentials(inst, dp.plan);
        py::dict d;
        d["cost"] = dp.cost;
        d["plan"] = plan_list(dp.plan);
        d["phi"] = doubles(dual.phi);
        d["psi"] = doubles(dual.psi);
        d["gap"] = dual.gap;
        d["admissible"] = dual.admissible;
        return d;
      },
      py::arg("mu"), py::arg("mu_weights") = py::none(), py::arg("nu"), py::arg("nu_weights") = py::none(),
      py::arg("cost"));

  py::class_<GeomConvexFn>(m, "GeomConvexFn")
      .def_static(
          "piecewise",
          [](const std::vector<Point>& slopes, const std::vector<double>& offsets) {
            if (slopes.size() != offsets.size()) throw std::invalid_argument("slopes and offsets differ in length");
            std::vector<AffinePiece> pieces;
            for (std::size_t j = 0; j < slopes.size(); ++j) pieces.push_back({slopes[j], offsets[j]});
            return GeomConvexFn(std::move(pieces));
          },
          py::arg("slopes"), py::arg("offsets"))
      .def_static("half_squared_norm", &GeomConvexFn::half_squared_norm, py::arg("dim"))
      .def_property_readonly("dim", &GeomConvexFn::dim)
      .def("__call__", &GeomConvexFn::operator());

  // Exact for piecewise-affine functions, grid search over [-w, w]^d otherwise.
  m.def(
      "a_transform",
      [](const GeomConvexFn& phi, const Point& y, double half_width, std::size_t per_axis) {
        if (phi.is_piecewise_affine()) return a_transform_exact(phi, y);
        return a_transform(phi, y, cube_grid(phi.dim(), half_width, per_axis));
      },
      py::arg("phi"), py::arg("y"), py::arg("half_width") = 8.0, py::arg("per_axis") = 201);

  m.def(
      "polar_subgradient",
      [](const GeomConvexFn& phi, const Point& x, double tol, double half_width, std::size_t per_axis) {
        const SearchGrid box = cube_grid(phi.dim(), half_width, per_axis);
        return polar_subgradient_exact(phi, x, tol, phi.is_piecewise_affine() ? nullptr : &box);
      },
      py::arg("phi"), py::arg("x"), py::arg("tol") = 1e-9, py::arg("half_width") = 8.0, py::arg("per_axis") = 121);
}
