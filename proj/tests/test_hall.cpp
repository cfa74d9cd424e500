#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "infcost/hall.hpp"
#include "oracles.hpp"

using namespace infcost;

namespace {

Point P1(double v) { return Point{v}; }

QuadratureMeasure uniform_half_to_two() { return uniform_grid({{0.5}, {2.0}, {3000}}); }

HallPolytope worked_polytope() {
  return build_polytope(uniform_half_to_two(), std::vector<Point>{P1(1), P1(2)}, CostFunction::polar());
}

// Nested finiteness sets on [1/2, 2]: atom u reaches x > 1/u.
HallPolytope nested_three() {
  return build_polytope(uniform_half_to_two(), std::vector<Point>{P1(1), P1(1.5), P1(2)}, CostFunction::polar());
}

}  // namespace

TEST(Subsets, RoundTrip) {
  const std::vector<std::size_t> idx{0, 3, 5};
  EXPECT_EQ(make_subset(idx), 0b101001u);
  EXPECT_EQ(members(0b101001u), idx);
}

TEST(BuildPolytope, WorkedInstanceMasses) {
  const HallPolytope p = worked_polytope();
  EXPECT_EQ(p.mass(0), 0.0);
  EXPECT_NEAR(p.mass(0b01), 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(p.mass(0b10), 1.0, 1e-12);
  EXPECT_NEAR(p.mass(0b11), 1.0, 1e-12);
}

TEST(BuildPolytope, QuadraticIsTheSimplex) {
  const QuadratureMeasure mu = uniform_grid({{0.0, 0.0}, {1.0, 1.0}, {10, 10}});
  const std::vector<Point> us{{0.1, 0.2}, {0.5, 0.5}, {0.9, 0.3}, {2.0, -1.0}};
  const HallPolytope p = build_polytope(mu, us, CostFunction::quadratic());
  for (Subset s = 1; s <= p.full(); ++s) EXPECT_NEAR(p.mass(s), 1.0, 1e-12);
  EXPECT_EQ(polytope_dimension(p), 3);
}

TEST(BuildPolytope, SingleAtomIsAPoint) {
  const HallPolytope p = build_polytope(uniform_half_to_two(), std::vector<Point>{P1(2)}, CostFunction::polar());
  const auto v = vertices(p);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], std::vector<double>{1.0});
  EXPECT_EQ(polytope_dimension(p), 0);
}

TEST(BuildPolytope, RejectsUncoveredNodes) {
  EXPECT_THROW(build_polytope(uniform_half_to_two(), std::vector<Point>{P1(1)}, CostFunction::polar()),
               std::invalid_argument);
}

TEST(BuildPolytope, MassTableChecks) {
  EXPECT_THROW(HallPolytope(2, {0.0, 0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(HallPolytope(2, {0.0, 0.5, 0.5, 0.9}), std::invalid_argument);
  EXPECT_THROW(HallPolytope(2, {0.0, 0.7, 0.5, 0.6}), std::invalid_argument);
  EXPECT_NO_THROW(HallPolytope(2, {0.0, 0.5, 0.7, 1.0}));
}

TEST(BuildPolytope, MonotoneAndUnionBound) {
  const HallPolytope p = nested_three();
  for (Subset a = 0; a <= p.full(); ++a) {
    for (Subset b = 0; b <= p.full(); ++b) {
      if ((a & b) == a) EXPECT_LE(p.mass(a), p.mass(b) + 1e-15);
      EXPECT_LE(p.mass(a | b), p.mass(a) + p.mass(b) + 1e-15);
    }
  }
}

TEST(Classify, WorkedExamples) {
  const HallPolytope p = build_polytope(uniform_grid({{0.5}, {2.0}, {3}}), std::vector<Point>{P1(1), P1(2)},
                                        CostFunction::polar());
  // Three cells of width 1/2: exactly two lie above 1.
  ASSERT_NEAR(p.mass(0b01), 2.0 / 3.0, 1e-15);
  const std::vector<double> interior{0.5, 0.5}, boundary{2.0 / 3.0, 1.0 / 3.0}, exterior{0.75, 0.25};
  EXPECT_EQ(classify(p, interior).kind, Classification::Kind::Interior);
  const Classification b = classify(p, boundary);
  EXPECT_EQ(b.kind, Classification::Kind::Boundary);
  EXPECT_EQ(b.sets, std::vector<Subset>{0b01});
  const Classification e = classify(p, exterior);
  EXPECT_EQ(e.kind, Classification::Kind::Exterior);
  EXPECT_EQ(e.sets, std::vector<Subset>{0b01});
  EXPECT_THROW(classify(p, std::vector<double>{0.5, 0.6}), std::invalid_argument);
}

TEST(MinimalSets, DropsSupersets) {
  const std::vector<Subset> sets{0b011, 0b001, 0b110, 0b100, 0b111};
  EXPECT_EQ(minimal_sets(sets), (std::vector<Subset>{0b001, 0b100}));
}

TEST(SplitFace, TwoAtomFacesArePoints) {
  const HallPolytope p = worked_polytope();
  const FaceDescriptor f = split_face(p, 0b01);
  EXPECT_NEAR(f.inner_scale, 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(f.outer_scale, 1.0 / 3.0, 1e-12);
  ASSERT_TRUE(f.inner.has_value());
  ASSERT_TRUE(f.outer.has_value());
  const auto v = product_vertices(f, 2);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NEAR(v[0][0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(v[0][1], 1.0 / 3.0, 1e-12);
  EXPECT_THROW(split_face(p, 0), std::invalid_argument);
  EXPECT_THROW(split_face(p, 0b11), std::invalid_argument);
  EXPECT_THROW(split_face(HallPolytope(2, {0.0, 0.5, 0.7, 1.0}), 0b01), std::logic_error);
}

TEST(SplitFace, NestedThreeAtomProductMatchesVertexOracle) {
  const HallPolytope p = nested_three();
  const auto all = oracle::polytope_vertices(p.masses(), 3);
  for (Subset s = 1; s < p.full(); ++s) {
    std::vector<std::vector<double>> face;
    for (const auto& v : all) {
      if (std::abs(oracle::subset_sum(v, s) - p.mass(s)) <= 1e-9) face.push_back(v);
    }
    EXPECT_TRUE(oracle::same_point_set(face, product_vertices(split_face(p, s), 3), 1e-9)) << "set " << s;
    EXPECT_TRUE(oracle::same_point_set(face, face_vertices(p, s), 1e-9)) << "set " << s;
  }
}

TEST(SplitFace, ZeroMassSetGivesTheOrigin) {
  // Atom 1/10 needs x > 10, so its finiteness set carries no mass.
  const HallPolytope p =
      build_polytope(uniform_half_to_two(), std::vector<Point>{P1(2), P1(0.1)}, CostFunction::polar());
  EXPECT_EQ(p.mass(0b10), 0.0);
  const FaceDescriptor f = split_face(p, 0b10);
  EXPECT_EQ(f.inner_scale, 0.0);
  EXPECT_FALSE(f.inner.has_value());
  const auto v = product_vertices(f, 2);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0], (std::vector<double>{1.0, 0.0}));
}

TEST(Nondegenerate, Examples) {
  const QuadratureMeasure mu = uniform_half_to_two();
  EXPECT_TRUE(check_nondegenerate(mu, std::vector<Point>{P1(1), P1(2)}, CostFunction::polar()).ok);
  EXPECT_TRUE(check_nondegenerate(mu, std::vector<Point>{P1(1), P1(-2)}, CostFunction::quadratic()).ok);

  // Clusters near (1,0) and (0,1) against atoms (2,0) and (0,2): disjoint finiteness sets.
  std::vector<Point> nodes;
  for (int k = 0; k < 5; ++k) {
    nodes.push_back({1.0 + 0.01 * k, 0.0});
    nodes.push_back({0.0, 1.0 + 0.01 * k});
  }
  const std::vector<Point> us{{2.0, 0.0}, {0.0, 2.0}};
  const QuadratureMeasure clusters = sample_measure(nodes);
  const NondegeneracyReport r = check_nondegenerate(clusters, us, CostFunction::polar());
  EXPECT_FALSE(r.ok);
  ASSERT_TRUE(r.witness.has_value());
  EXPECT_EQ(*r.witness, (std::pair<std::size_t, std::size_t>{0, 1}));
  EXPECT_LT(polytope_dimension(build_polytope(clusters, us, CostFunction::polar())), 1);
}

TEST(Dimension, NondegenerateThreeAtoms) { EXPECT_EQ(polytope_dimension(nested_three()), 2); }

TEST(Vertices, GreedyMatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.3, 2.5);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Point> us;
    for (int i = 0; i < 4; ++i) us.push_back(P1(u(rng)));
    us.push_back(P1(2.5));  // covers every node
    const HallPolytope p = build_polytope(uniform_grid({{0.5}, {2.0}, {60}}), us, CostFunction::polar());
    EXPECT_TRUE(oracle::same_point_set(oracle::polytope_vertices(p.masses(), 5), vertices(p), 1e-9));
  }
}

TEST(HullDistance, SimpleCases) {
  const std::vector<std::vector<double>> seg{{0.0, 0.0}, {2.0, 0.0}};
  EXPECT_NEAR(hull_distance(std::vector<double>{1.0, 1.0}, seg), 1.0, 1e-12);
  EXPECT_NEAR(hull_distance(std::vector<double>{3.0, 0.0}, seg), 1.0, 1e-12);
  EXPECT_NEAR(hull_distance(std::vector<double>{0.5, 0.0}, seg), 0.0, 1e-12);
  const HallPolytope p = worked_polytope();
  EXPECT_NEAR(hausdorff_distance(p, p), 0.0, 1e-12);
}

TEST(CDualSet, EmptyAndIntervalPolarity) {
  const CostFunction c = CostFunction::polar();
  std::vector<Point> grid;
  for (int k = 0; k <= 30; ++k) grid.push_back(P1(0.1 * k));
  EXPECT_EQ(c_dual_set(std::vector<std::size_t>{}, grid, c, grid).size(), grid.size());
  std::vector<std::size_t> k;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i][0] <= 0.5) k.push_back(i);
  }
  const auto dual = c_dual_set(k, grid, c, grid);
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const bool in = std::find(dual.begin(), dual.end(), j) != dual.end();
    EXPECT_EQ(in, grid[j][0] <= 2.0 + 1e-12) << "y = " << grid[j][0];
  }
}

TEST(CDualSet, TripleDualEqualsSingle) {
  const CostFunction c = CostFunction::polar();
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::bernoulli_distribution pick(0.3);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Point> xs, ys;
    for (int i = 0; i < 12; ++i) {
      xs.push_back({u(rng), u(rng)});
      ys.push_back({u(rng), u(rng)});
    }
    std::vector<std::size_t> k;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      if (pick(rng)) k.push_back(i);
    }
    const auto k1 = c_dual_set(k, xs, c, ys);
    const auto k2 = c_dual_set(k1, ys, c, xs);
    const auto k3 = c_dual_set(k2, xs, c, ys);
    EXPECT_EQ(k1, k3);
    // K is contained in K^cc.
    for (std::size_t i : k) EXPECT_NE(std::find(k2.begin(), k2.end(), i), k2.end());
  }
}

TEST(IntervalCompat, UniformAgainstItselfUnderQuadraticCost) {
  const QuadratureMeasure mu = uniform_grid({{0.0}, {1.0}, {50}});
  const IntervalCompat ic = interval_compat_gap(mu, mu, CostFunction::quadratic());
  EXPECT_EQ(ic.sets_checked, 100u);
  EXPECT_LE(ic.worst_gap, 0.0);
  EXPECT_THROW(interval_compat_gap(sample_measure({P1(0), P1(1)}), mu, CostFunction::quadratic()),
               std::invalid_argument);
}

namespace {

// Random 2D atoms against a grid on [0.2, 2]^2 under the polar cost; the atom
// (3,3) reaches every node so the polytope always exists. Redraws until the
// pairwise overlaps are all positive.
HallPolytope random_nondegenerate(std::mt19937_64& rng, std::size_t m) {
  std::uniform_real_distribution<double> u(0.2, 2.5);
  const QuadratureMeasure mu = uniform_grid({{0.2, 0.2}, {2.0, 2.0}, {24, 24}});
  const CostFunction c = CostFunction::polar();
  while (true) {
    std::vector<Point> us{{3.0, 3.0}};
    while (us.size() < m) us.push_back({u(rng), u(rng)});
    if (check_nondegenerate(mu, us, c).ok) return build_polytope(mu, us, c);
  }
}

bool tight(const std::vector<double>& v, const HallPolytope& p, Subset s) {
  return std::abs(oracle::subset_sum(v, s) - p.mass(s)) <= 1e-9;
}

}  // namespace

TEST(FaceLattice, IntersectionsLieInTheFaceOfTheIntersection) {
  std::mt19937_64 rng(31);
  int shared = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t m = 3 + static_cast<std::size_t>(trial % 3);
    const HallPolytope p = random_nondegenerate(rng, m);
    const auto verts = vertices(p);
    for (Subset a = 1; a < p.full(); ++a) {
      for (Subset b = a + 1; b < p.full(); ++b) {
        for (const auto& v : verts) {
          if (!tight(v, p, a) || !tight(v, p, b)) continue;
          // Disjoint faces never meet under non-degeneracy.
          EXPECT_NE(a & b, 0u) << "sets " << a << " and " << b << " share a vertex";
          if (a & b) EXPECT_TRUE(tight(v, p, a & b)) << "sets " << a << ", " << b;
          ++shared;
        }
      }
    }
  }
  EXPECT_GT(shared, 0);
}

TEST(FaceLattice, BoundaryOfTheInnerFactorLiesInSmallerFaces) {
  std::mt19937_64 rng(32);
  int checked = 0;
  for (int trial = 0; trial < 6; ++trial) {
    const std::size_t m = 3 + static_cast<std::size_t>(trial % 3);
    const HallPolytope p = random_nondegenerate(rng, m);
    for (Subset s = 1; s < p.full(); ++s) {
      if (members(s).size() < 2 || !(p.mass(s) > 0.0) || !(p.mass(s) < 1.0)) continue;
      for (const auto& v : product_vertices(split_face(p, s), m)) {
        bool found = false;
        for (Subset j = (s - 1) & s; j != 0 && !found; j = (j - 1) & s) found = tight(v, p, j);
        EXPECT_TRUE(found) << "set " << s;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 0);
}

TEST(Classify, CompatibilityIsSymmetricInTheTwoMeasures) {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.3, 3.0);
  std::uniform_int_distribution<std::size_t> size(2, 5);
  const CostFunction c = CostFunction::polar();  // c(x,y) = c(y,x)
  auto compatible = [&](const std::vector<Point>& xs, const std::vector<double>& xw, const std::vector<Point>& ys,
                        const std::vector<double>& yw) {
    const QuadratureMeasure mu = sample_measure(xs, xw);
    for (Subset mask : finiteness_masks(mu, ys, c)) {
      if (mask == 0) return false;
    }
    return classify(build_polytope(mu, ys, c), yw).kind != Classification::Kind::Exterior;
  };
  int incompatible = 0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Point> xs, ys;
    const std::size_t n = size(rng), m = size(rng);
    for (std::size_t i = 0; i < n; ++i) xs.push_back(P1(u(rng)));
    for (std::size_t j = 0; j < m; ++j) ys.push_back(P1(u(rng)));
    const auto xw = oracle::random_simplex(n, rng), yw = oracle::random_simplex(m, rng);
    const bool forward = compatible(xs, xw, ys, yw);
    EXPECT_EQ(forward, compatible(ys, yw, xs, xw)) << "trial " << trial;
    incompatible += forward ? 0 : 1;
  }
  EXPECT_GT(incompatible, 0);
  EXPECT_LT(incompatible, 50);
}
