#include "oracles.hpp"
#include "psm/grid.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace psm;

TEST(MultiIndexSet, TwoDimensionalOrderingVariesFirstCoordinateFastest) {
  const auto set = multi_index_set(2, 1);
  const std::vector<MultiIndex> expected{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  EXPECT_EQ(set.indices(), expected);
}

TEST(MultiIndexSet, OneDimensional) {
  const std::vector<MultiIndex> expected{{0}, {1}, {2}};
  EXPECT_EQ(multi_index_set(1, 2).indices(), expected);
}

TEST(MultiIndexSet, MatchesReversedTupleSort) {
  const auto idx = multi_index_set(3, 1).indices();
  ASSERT_EQ(idx.size(), 8u);
  std::vector<MultiIndex> sorted;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c) sorted.push_back({a, b, c});
  std::sort(sorted.begin(), sorted.end(), [](const MultiIndex& x, const MultiIndex& y) {
    return std::lexicographical_compare(x.rbegin(), x.rend(), y.rbegin(), y.rend());
  });
  EXPECT_EQ(idx, sorted);
  const auto pos = [&](const MultiIndex& a) { return std::find(idx.begin(), idx.end(), a) - idx.begin(); };
  EXPECT_LT(pos({1, 1, 0}), pos({0, 0, 1}));
}

TEST(MultiIndexSet, CompleteAndRoundTrips) {
  for (int m = 1; m <= 4; ++m) {
    for (int n = 0; n <= 4; ++n) {
      const auto set = multi_index_set(m, n);
      EXPECT_EQ(set.size(), static_cast<std::size_t>(std::pow(n + 1, m)));
      std::set<MultiIndex> seen;
      for (std::size_t i = 0; i < set.size(); ++i) {
        const auto a = set.index_at(i);
        EXPECT_EQ(set.position_of(a), i);
        for (int v : a) EXPECT_TRUE(v >= 0 && v <= n);
        seen.insert(a);
      }
      EXPECT_EQ(seen.size(), set.size());
    }
  }
}

TEST(MultiIndexSet, RejectsBadInput) {
  EXPECT_THROW(multi_index_set(0, 3), std::invalid_argument);
  EXPECT_THROW(multi_index_set(2, -1), std::invalid_argument);
  EXPECT_THROW(multi_index_set(8, 30), ResourceLimitError);
}

TEST(LegendreRule, DegreeZero) {
  const auto r = legendre_rule_1d(0);
  ASSERT_EQ(r.nodes.size(), 1);
  EXPECT_DOUBLE_EQ(r.nodes(0), 0.0);
  EXPECT_DOUBLE_EQ(r.weights(0), 2.0);
}

TEST(LegendreRule, DegreeOne) {
  const auto r = legendre_rule_1d(1);
  // Roots of P_2 = (3x^2 - 1)/2 from its 2x2 companion matrix.
  Eigen::Matrix2d companion;
  companion << 0, 1.0 / 3.0, 1, 0;
  Eigen::Vector2d roots = companion.eigenvalues().real();
  std::sort(roots.data(), roots.data() + 2);
  EXPECT_NEAR(r.nodes(0), roots(0), 1e-15);
  EXPECT_NEAR(r.nodes(1), roots(1), 1e-15);
  EXPECT_NEAR(r.nodes(1), 0.5773502691896258, 1e-15);
  // Weights from exactness on 1 and x (the x^2 row is parallel to the first).
  Eigen::Matrix2d a;
  a << 1, 1, roots(0), roots(1);
  const Eigen::Vector2d w = a.fullPivLu().solve(Eigen::Vector2d(2.0, 0.0));
  EXPECT_NEAR(r.weights(0), w(0), 1e-14);
  EXPECT_NEAR(r.weights(1), w(1), 1e-14);
}

TEST(LegendreRule, IntegratesXToTheEighthAtDegreeFour) {
  const auto r = legendre_rule_1d(4);
  double s = 0.0;
  for (Index i = 0; i < r.nodes.size(); ++i) s += r.weights(i) * std::pow(r.nodes(i), 8);
  EXPECT_NEAR(s, 2.0 / 9.0, 1e-13);
}

TEST(LegendreRule, StructuralProperties) {
  for (int n : {1, 2, 5, 10, 31, 64, 100, 200}) {
    const auto r = legendre_rule_1d(n);
    double wsum = 0.0;
    for (Index i = 0; i < r.nodes.size(); ++i) {
      if (i > 0) EXPECT_LT(r.nodes(i - 1), r.nodes(i));
      EXPECT_NEAR(r.nodes(i), -r.nodes(r.nodes.size() - 1 - i), 1e-14);
      EXPECT_GT(r.weights(i), 0.0);
      wsum += r.weights(i);
    }
    EXPECT_NEAR(wsum, 2.0, 1e-13) << "n=" << n;
  }
}

TEST(LegendreRule, AgreesWithNewtonOracle) {
  for (int n : {3, 17, 50, 100}) {
    std::vector<double> x, w;
    oracle::gauss_legendre(n, x, w);
    const auto r = legendre_rule_1d(n);
    for (int i = 0; i <= n; ++i) {
      EXPECT_NEAR(r.nodes(i), x[i], 1e-14);
      EXPECT_NEAR(r.weights(i), w[i], 1e-14);
    }
  }
}

TEST(LegendreRule, ExactForMonomialsUpTo2nPlus1) {
  for (int n : {1, 4, 9, 20}) {
    const auto r = legendre_rule_1d(n);
    for (int j = 0; j <= 2 * n + 1; ++j) {
      double s = 0.0;
      for (Index i = 0; i < r.nodes.size(); ++i) s += r.weights(i) * std::pow(r.nodes(i), j);
      const double exact = oracle::monomial_integral(j, -1.0, 1.0);
      EXPECT_NEAR(s, exact, 1e-12 * std::max(1.0, std::abs(exact))) << "n=" << n << " j=" << j;
    }
  }
}

TEST(TensorGrid, SmallGridHasUnitWeights) {
  const auto g = tensor_grid(2, 1, reference_box(2));
  ASSERT_EQ(g.size(), 4u);
  for (Index p = 0; p < 4; ++p) EXPECT_NEAR(g.weights()(p), 1.0, 1e-15);
  EXPECT_NEAR(g.weights().sum(), 4.0, 1e-14);
}

TEST(TensorGrid, WeightSumIsVolume) {
  EXPECT_NEAR(tensor_grid(2, 10, reference_box(2)).weights().sum(), 4.0, 1e-12);
  EXPECT_NEAR(tensor_grid(2, 10, cube(2, -5.3, 5.3)).weights().sum(), 10.6 * 10.6, 1e-10);
  const Box b{{0.0, 2.0}, {-1.0, 3.0}, {1.0, 1.5}};
  EXPECT_NEAR(tensor_grid(3, 4, b).weights().sum(), 2.0 * 4.0 * 0.5, 1e-12);
}

TEST(TensorGrid, PointsAndWeightsAreAffineProducts) {
  const Box box{{-2.0, 1.0}, {0.5, 4.0}};
  const int n = 5;
  const auto g = tensor_grid(2, n, box);
  const auto r = legendre_rule_1d(n);
  const auto set = g.index_set();
  for (std::size_t p = 0; p < g.size(); ++p) {
    const auto a = set.index_at(p);
    double w = 1.0;
    for (int i = 0; i < 2; ++i) {
      const double lo = box[i].lo, hi = box[i].hi;
      EXPECT_NEAR(g.points()(static_cast<Index>(p), i), lo + (r.nodes(a[i]) + 1.0) * 0.5 * (hi - lo), 1e-14);
      w *= r.weights(a[i]) * 0.5 * (hi - lo);
    }
    EXPECT_NEAR(g.weights()(static_cast<Index>(p)), w, 1e-15);
  }
}

TEST(TensorGrid, CubatureExactOnMonomials) {
  const Box box{{-1.0, 2.0}, {0.0, 1.0}};
  const int n = 6;
  const auto g = tensor_grid(2, n, box);
  for (int i = 0; i <= 2 * n + 1; ++i) {
    for (int j = 0; j <= 2 * n + 1; ++j) {
      double s = 0.0;
      for (Index p = 0; p < static_cast<Index>(g.size()); ++p) {
        s += g.weights()(p) * std::pow(g.points()(p, 0), i) * std::pow(g.points()(p, 1), j);
      }
      const double exact = oracle::monomial_integral(i, -1.0, 2.0) * oracle::monomial_integral(j, 0.0, 1.0);
      EXPECT_NEAR(s, exact, 1e-12 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST(TensorGrid, Deterministic) {
  const auto a = tensor_grid(3, 7, cube(3, -1.5, 2.0));
  const auto b = tensor_grid(3, 7, cube(3, -1.5, 2.0));
  EXPECT_TRUE((a.points().array() == b.points().array()).all());
  EXPECT_TRUE((a.weights().array() == b.weights().array()).all());
}

TEST(TensorGrid, RejectsBadBoxes) {
  EXPECT_THROW(tensor_grid(2, 3, reference_box(1)), std::invalid_argument);
  EXPECT_THROW(tensor_grid(1, 3, Box{{1.0, 1.0}}), std::invalid_argument);
  EXPECT_THROW(tensor_grid(0, 3, Box{}), std::invalid_argument);
}

TEST(BoundaryGrids, TwoDimensionalFaces) {
  const auto faces = boundary_grids(2, 1, reference_box(2));
  ASSERT_EQ(faces.size(), 4u);
  for (const auto& f : faces) EXPECT_EQ(f.grid.size(), 2u);
}

TEST(BoundaryGrids, OneDimensionalFacesArePoints) {
  const auto faces = boundary_grids(1, 5, Box{{-1.0, 3.0}});
  ASSERT_EQ(faces.size(), 2u);
  for (const auto& f : faces) {
    EXPECT_EQ(f.grid.size(), 1u);
    EXPECT_DOUBLE_EQ(f.grid.weights()(0), 1.0);
  }
  EXPECT_DOUBLE_EQ(faces[0].embedded_points()(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(faces[1].embedded_points()(0, 0), 3.0);
}

TEST(BoundaryGrids, HighDegreeFaces) {
  const auto faces = boundary_grids(2, 100, reference_box(2));
  for (const auto& f : faces) {
    EXPECT_EQ(f.grid.size(), 101u);
    EXPECT_NEAR(f.grid.weights().sum(), 2.0, 1e-12);
    const Matrix pts = f.embedded_points();
    for (Index p = 0; p < pts.rows(); ++p) EXPECT_DOUBLE_EQ(pts(p, f.axis), f.side < 0 ? -1.0 : 1.0);
  }
}
