#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "infcost/core.hpp"
#include "infcost/discrete_ot.hpp"
#include "infcost/duality.hpp"
#include "infcost/hall.hpp"
#include "infcost/measures.hpp"
#include "infcost/polarcalc.hpp"
#include "infcost/semidiscrete.hpp"

namespace infcost::io {

using json = nlohmann::json;

// Shortest round-trip decimal ("%.17g"); "inf" / "-inf" for infinities.
std::string fmt(double v);
std::string fmt(XReal v);
json xreal_json(XReal v);  // number, or the strings "inf" / "-inf"
XReal xreal_from_json(const json& j);

// Densities on the first coordinate, referenced by id in measure files:
// "uniform", "two-level" (1 up to x = 1, then 1/2), "hyperbola" (sqrt(1 + x^-4)).
Density density_by_id(const std::string& id);
std::vector<std::string> density_ids();

Point point_from_json(const json& j);
json point_json(const Point& p);

// {"type":"grid","lo":[..],"hi":[..],"resolution":[..],"density":id}
// {"type":"discrete"|"samples","points":[[..]],"weights":[..]} or {"csv": path}.
// Relative CSV paths resolve against `base`.
QuadratureMeasure load_quadrature(const json& j, const std::filesystem::path& base = {});
DiscreteMeasure load_discrete(const json& j, const std::filesystem::path& base = {});

// "polar" | "bilinear" | "quadratic", {"table":{"rows","cols","values"}} or {"table_csv": path}.
CostFunction load_cost(const json& j, const std::filesystem::path& base = {});

// One numeric row per point; a non-numeric first row is a header. With
// "weighted": true in the measure object the last column is the weight.
std::vector<Point> read_points_csv(std::istream& in);

std::vector<Disk> load_disks(const json& j);
GeomConvexFn load_piecewise(const json& j);  // {"pieces":[{"slope":[..],"offset":b}]}

json read_json_file(const std::filesystem::path& p);

json potential_json(const Potential& phi);
json certificate_json(const Certificate& c);
json classification_json(const Classification& c);
json polytope_json(const HallPolytope& p, bool with_vertices);
json hall_report_json(const HallReport& r);
json solve_report_json(const SolveReport& r);

void write_plan_csv(std::ostream& os, const TransportPlan& plan);
void write_log_csv(std::ostream& os, const std::vector<IterationRecord>& log);
// One mark per node, colored by cell; d must be 1 or 2.
void write_cells_svg(std::ostream& os, const QuadratureMeasure& mu, std::span<const Point> atoms,
                     const CellPartition& cells);

}  // namespace infcost::io
