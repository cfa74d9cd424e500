#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "infcost/semidiscrete.hpp"
#include "oracles.hpp"

using namespace infcost;

namespace {

Point P1(double v) { return Point{v}; }

const std::vector<Point> kWorkedAtoms{P1(1), P1(2)};
const std::vector<double> kWorkedT{6.0 / 7.0, 1.0 / 7.0};

QuadratureMeasure uniform_half_to_two(std::size_t n) { return uniform_grid({{0.5}, {2.0}, {n}}); }

// Density 1 on [1/2,1] and 1/2 on (1,2], against eight equal atoms at the
// right ends of eight cells.
QuadratureMeasure two_level(std::size_t n) {
  return grid_measure({{0.5}, {2.0}, {n}}, [](const Point& x) { return x[0] <= 1.0 ? 1.0 : 0.5; });
}
std::vector<Point> eight_atoms() {
  std::vector<Point> out;
  for (double x : {0.625, 0.75, 0.875, 1.0, 1.25, 1.5, 1.75, 2.0}) out.push_back(P1(x));
  return out;
}

}  // namespace

TEST(CellPartition, SingleAtomTakesEverything) {
  const QuadratureMeasure mu = uniform_half_to_two(50);
  const auto part = cell_partition(mu, std::vector<Point>{P1(2)}, CostFunction::polar(), std::vector<double>{1.0});
  for (std::size_t a : part.assignment) EXPECT_EQ(a, 0u);
  const auto H = weight_map_H(mu, std::vector<Point>{P1(2)}, CostFunction::polar(), std::vector<double>{1.0});
  EXPECT_NEAR(H[0], 1.0, 1e-12);
}

TEST(CellPartition, WorkedThresholdAndTie) {
  // 301 midpoint cells put a node exactly at 5/4.
  const QuadratureMeasure mu = uniform_half_to_two(301);
  const CostFunction c = CostFunction::polar();
  const auto part = cell_partition(mu, kWorkedAtoms, c, kWorkedT);
  std::size_t ties = 0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    const double x = mu.nodes()[k][0];
    if (std::abs(x - 1.25) < 1e-12) {
      EXPECT_TRUE(part.tie[k]);
      ++ties;
    } else {
      EXPECT_FALSE(part.tie[k]) << x;
      EXPECT_EQ(part.assignment[k], x > 1.25 ? 0u : 1u) << x;
    }
  }
  EXPECT_EQ(ties, 1u);
  EXPECT_NEAR(part.tie_mass, 1.0 / 301.0, 1e-15);
  EXPECT_NEAR(tie_mass_diagnostic(mu, kWorkedAtoms, c, kWorkedT), 1.0 / 301.0, 1e-15);
}

TEST(CellPartition, QuadraticSymmetricCellsHaveEqualMass) {
  const QuadratureMeasure mu = uniform_grid({{0.0, 0.0}, {1.0, 1.0}, {40, 40}});
  const std::vector<Point> us{{0.25, 0.5}, {0.75, 0.5}};
  const auto H = weight_map_H(mu, us, CostFunction::quadratic(), std::vector<double>{0.5, 0.5});
  EXPECT_NEAR(H[0], H[1], 1e-12);
}

TEST(TieMass, GenericIsZeroAndDuplicatesTieEverywhere) {
  const QuadratureMeasure mu = uniform_half_to_two(1000);
  const CostFunction c = CostFunction::polar();
  EXPECT_EQ(tie_mass_diagnostic(mu, kWorkedAtoms, c, std::vector<double>{0.61803, 0.38197}), 0.0);
  const QuadratureMeasure above = uniform_grid({{1.1}, {2.0}, {100}});
  EXPECT_NEAR(tie_mass_diagnostic(above, std::vector<Point>{P1(1), P1(1)}, c, std::vector<double>{0.5, 0.5}), 1.0,
              1e-12);
}

TEST(WeightMap, WorkedInstance) {
  const auto H = weight_map_H(uniform_half_to_two(3000), kWorkedAtoms, CostFunction::polar(), kWorkedT);
  EXPECT_NEAR(H[0], 0.5, 1e-3);
  EXPECT_NEAR(H[1], 0.5, 1e-3);
}

TEST(WeightMap, BoundaryFaceLandsOnFace) {
  const QuadratureMeasure mu = uniform_half_to_two(3000);
  const CostFunction c = CostFunction::polar();
  const HallPolytope p = build_polytope(mu, kWorkedAtoms, c);
  const auto H = weight_map_H(mu, kWorkedAtoms, c, std::vector<double>{1.0, 0.0});
  EXPECT_NEAR(H[0], p.mass(0b01), 1e-12);

  const std::vector<Point> three{P1(1), P1(1.5), P1(2)};
  const HallPolytope p3 = build_polytope(mu, three, c);
  const auto H3 = weight_map_H(mu, three, c, std::vector<double>{0.3, 0.7, 0.0});
  EXPECT_NEAR(H3[0] + H3[1], p3.mass(0b011), 1e-12);
}

TEST(WeightMap, StaysInsideThePolytope) {
  const QuadratureMeasure mu = uniform_half_to_two(2000);
  const CostFunction c = CostFunction::polar();
  const std::vector<Point> us{P1(0.8), P1(1.2), P1(1.7), P1(2.0)};
  const HallPolytope p = build_polytope(mu, us, c);
  std::mt19937_64 rng(31);
  for (int k = 0; k < 50; ++k) {
    const auto t = oracle::random_simplex(4, rng, 1e-3);
    EXPECT_NE(classify(p, weight_map_H(mu, us, c, t)).kind, Classification::Kind::Exterior);
  }
}

TEST(WeightMap, ContinuityUnderHalvedPerturbations) {
  const QuadratureMeasure mu = uniform_half_to_two(20000);
  const CostFunction c = CostFunction::polar();
  const auto base = weight_map_H(mu, kWorkedAtoms, c, kWorkedT);
  double prev = HUGE_VAL;
  for (double d = 0.05; d > 1e-4; d /= 2) {
    const std::vector<double> t{kWorkedT[0] - d, kWorkedT[1] + d};
    const auto h = weight_map_H(mu, kWorkedAtoms, c, t);
    const double diff = std::max(std::abs(h[0] - base[0]), std::abs(h[1] - base[1]));
    EXPECT_LE(diff, prev);
    prev = diff;
  }
  EXPECT_LE(prev, 1e-3);
}

TEST(Solve, WorkedInstance) {
  const QuadratureMeasure mu = uniform_half_to_two(10000);
  const SolveReport rep = solve_weights(mu, kWorkedAtoms, CostFunction::polar(), std::vector<double>{0.5, 0.5});
  EXPECT_NEAR(rep.t[0], 6.0 / 7.0, 1e-3);
  EXPECT_NEAR(rep.t[1], 1.0 / 7.0, 1e-3);
  EXPECT_LE(rep.residual, 1e-6);
  EXPECT_FALSE(rep.perturbed);
  EXPECT_FALSE(rep.log.empty());
}

TEST(Solve, QuadraticSymmetricFixedPoint) {
  const QuadratureMeasure mu = uniform_grid({{0.0, 0.0}, {1.0, 1.0}, {40, 40}});
  const std::vector<Point> us{{0.25, 0.5}, {0.75, 0.5}};
  const SolveReport rep = solve_weights(mu, us, CostFunction::quadratic(), std::vector<double>{0.5, 0.5});
  EXPECT_NEAR(rep.t[0], 0.5, 1e-9);
  EXPECT_NEAR(rep.t[1], 0.5, 1e-9);
}

TEST(Solve, BoundaryTargetNamesTheActiveSet) {
  const QuadratureMeasure mu = uniform_half_to_two(3000);
  const CostFunction c = CostFunction::polar();
  const double a = build_polytope(mu, kWorkedAtoms, c).mass(0b01);
  try {
    solve_weights(mu, kWorkedAtoms, c, std::vector<double>{a, 1.0 - a});
    FAIL() << "expected NotInterior";
  } catch (const NotInterior& e) {
    EXPECT_EQ(e.classification.kind, Classification::Kind::Boundary);
    EXPECT_EQ(e.classification.sets, std::vector<Subset>{0b01});
  }
  EXPECT_THROW(solve_weights(mu, kWorkedAtoms, c, std::vector<double>{0.75, 0.25}), NotInterior);
}

TEST(Solve, IterationCapReportsBestIterate) {
  const QuadratureMeasure mu = uniform_half_to_two(10000);
  SolveOptions opts;
  opts.max_iter = 2;
  opts.tol = 1e-12;
  try {
    solve_weights(mu, kWorkedAtoms, CostFunction::polar(), std::vector<double>{0.5, 0.5}, opts);
    FAIL() << "expected MaxIterExceeded";
  } catch (const MaxIterExceeded& e) {
    EXPECT_EQ(e.best.t.size(), 2u);
    EXPECT_GT(e.best.residual, 0.0);
  }
}

TEST(ExtractPlan, SingleAtomPushforward) {
  const QuadratureMeasure mu = uniform_half_to_two(20);
  const SemiSolution s = extract_plan(mu, std::vector<Point>{P1(2)}, CostFunction::polar(), std::vector<double>{1.0});
  EXPECT_EQ(s.plan.entries.size(), mu.size());
  EXPECT_NEAR(s.plan.target_marginal(1)[0], 1.0, 1e-12);
}

TEST(ExtractPlan, TieSplittingHitsTarget) {
  // Three cells with a node at 5/4: the tie node is split to match alpha exactly.
  const QuadratureMeasure mu = uniform_half_to_two(3);
  const std::vector<double> alpha{0.5, 0.5};
  const SemiSolution s = extract_plan(mu, kWorkedAtoms, CostFunction::polar(), kWorkedT, alpha);
  const auto col = s.plan.target_marginal(2);
  EXPECT_NEAR(col[0], 0.5, 1e-15);
  EXPECT_NEAR(col[1], 0.5, 1e-15);
  const auto row = s.plan.source_marginal(3);
  for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(row[k], mu.weights()[k], 1e-15);
}

TEST(ExtractPlan, SoundnessAndDuality) {
  const QuadratureMeasure mu = uniform_half_to_two(10000);
  const CostFunction c = CostFunction::polar();
  const std::vector<double> alpha{0.5, 0.5};
  const SolveReport rep = solve_weights(mu, kWorkedAtoms, c, alpha);
  const SemiSolution s = extract_plan(mu, kWorkedAtoms, c, rep.t, alpha);
  std::vector<XReal> phi;
  double phi_int = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    phi.push_back(s.potential(mu.nodes()[k]));
    phi_int += mu.weights()[k] * phi.back().value();
  }
  for (const auto& e : s.plan.entries) {
    const XReal cxy = c(mu.nodes()[e.source], kWorkedAtoms[e.target]);
    ASSERT_TRUE(cxy.finite());
    EXPECT_LE(cxy.value() + s.potential.shifts()[e.target].value() - phi[e.source].value(), 1e-9);
  }
  const auto psi = c_transform(phi, mu.nodes(), c, kWorkedAtoms);
  const double dual = phi_int + alpha[0] * psi[0].value() + alpha[1] * psi[1].value();
  EXPECT_NEAR(dual, plan_cost(s.plan, mu.nodes(), kWorkedAtoms, c), 1e-6);
}

TEST(Decompose, InteriorTargetIsRejected) {
  const QuadratureMeasure mu = uniform_half_to_two(300);
  EXPECT_THROW(decompose(mu, kWorkedAtoms, CostFunction::polar(), std::vector<double>{0.5, 0.5}, 0b01),
               std::invalid_argument);
}

TEST(Decompose, TwoLevelDensitySplitsAtOne) {
  const QuadratureMeasure mu = two_level(600);
  const std::vector<Point> us = eight_atoms();
  const CostFunction c = CostFunction::polar();
  const std::vector<double> alpha(8, 0.125);
  const HallPolytope p = build_polytope(mu, us, c);
  const Classification cls = classify(p, alpha);
  ASSERT_EQ(cls.kind, Classification::Kind::Boundary);
  // Atoms at most 1 reach only x > 1, which carries exactly their total weight.
  const Subset low = 0b00001111;
  EXPECT_NE(std::find(cls.sets.begin(), cls.sets.end(), low), cls.sets.end());

  const Decomposition d = decompose(mu, us, c, alpha, low);
  EXPECT_NEAR(d.inner_weight, 0.5, 1e-12);
  for (std::size_t k : d.inner.node_ids) EXPECT_GT(mu.nodes()[k][0], 1.0);
  for (std::size_t k : d.outer.node_ids) EXPECT_LE(mu.nodes()[k][0], 1.0);
  EXPECT_EQ(d.inner.atom_ids, (std::vector<std::size_t>{0, 1, 2, 3}));
  EXPECT_EQ(d.outer.atom_ids, (std::vector<std::size_t>{4, 5, 6, 7}));

  EXPECT_THROW(solve_semidiscrete(mu, us, c, alpha), NotInterior);
  const SemiResult r = solve_semidiscrete(mu, us, c, alpha, {}, true);
  EXPECT_TRUE(r.decomposed());
  const auto rows = r.plan.source_marginal(mu.size());
  const auto cols = r.plan.target_marginal(8);
  for (std::size_t k = 0; k < mu.size(); ++k) EXPECT_NEAR(rows[k], mu.weights()[k], 1e-9);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(cols[i], 0.125, 1e-6);
  for (const auto& e : r.plan.entries) EXPECT_TRUE(c.finite(mu.nodes()[e.source], us[e.target]));
}

TEST(Degenerate, PerturbedFallbackReportsLevels) {
  std::vector<Point> nodes;
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < 10; ++b) {
      const double s = 0.9 + 0.02 * a, t = -0.09 + 0.02 * b;
      nodes.push_back({s, t});
      nodes.push_back({t, s});
    }
  }
  const QuadratureMeasure mu = sample_measure(nodes);
  const std::vector<Point> us{{2, 0}, {0, 2}, {2, 2}};
  SolveOptions opts;
  // H moves in steps of one node weight (1/200 here), so 1e-6 is out of reach.
  opts.tol = 5e-3;
  opts.disks = {{{1.0, 1.0}, 0.2, {0, 1}}, {{1.0, 0.0}, 0.05, {0, 2}}, {{0.0, 1.0}, 0.05, {1, 2}}};
  const std::vector<double> alpha{0.3, 0.3, 0.4};
  const SolveReport rep = solve_weights(mu, us, CostFunction::polar(), alpha, opts);
  EXPECT_TRUE(rep.perturbed);
  EXPECT_EQ(rep.level_path.size(), 3u);
  EXPECT_LE(rep.residual, opts.tol);
  EXPECT_LE(rep.original_residual, 1e-2);
}
