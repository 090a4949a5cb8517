#include <gtest/gtest.h>

#include <cmath>

#include "coco/colloc.hpp"

using namespace coco;

TEST(Collocation, DiskBoundaryOnUnitCircle) {
  const auto disk = shape_library("disk");
  const auto set = generate_collocation(disk, {200, 100, 100}, 5.0, 0.01);
  for (const auto &b : set.bd)
    EXPECT_NEAR(b.x1 * b.x1 + b.x2 * b.x2, 1.0, 1e-12);
}

TEST(Collocation, DiskOffsetsAtZeroAngle) {
  const auto disk = shape_library("disk");
  const auto set = generate_collocation(disk, {200, 100, 100}, 5.0, 0.01);
  // theta grid is (0, 2 pi]; the last point sits at theta = 2 pi.
  const auto &b = set.bd.back();
  EXPECT_NEAR(std::sin(b.theta), 0.0, 1e-12);
  EXPECT_NEAR(set.bd_plus.back()[0], 1.01, 1e-12);
  EXPECT_NEAR(set.bd_plus.back()[1], 0.0, 1e-12);
  EXPECT_NEAR(set.bd_minus.back()[0], 0.99, 1e-12);
  EXPECT_NEAR(set.bd_minus.back()[1], 0.0, 1e-12);
}

TEST(Collocation, Invariants) {
  for (const auto &name : library_shape_names()) {
    const auto map = shape_library(name);
    const double L = 5.0, delta = name == "spike" ? 5e-3 : 1e-2;
    const CollocationCounts counts{2000, 500, 500};
    const auto set = generate_collocation(map, counts, L, delta);

    ASSERT_GE(set.ext.size(), std::size_t(counts.n_ext)) << name;
    EXPECT_LT(set.ext.size(), std::size_t(counts.n_ext + counts.n_bd)) << name;
    for (const auto &p : set.ext) {
      EXPECT_GT(p.rho, map.rho0());
      EXPECT_LE(p.rho, std::log(L) + 1e-15);
      const cplx z = map(std::polar(std::exp(p.rho), p.theta));
      EXPECT_EQ(z.real(), p.x1);
      EXPECT_EQ(z.imag(), p.x2);
    }

    ASSERT_EQ(set.bd.size(), std::size_t(counts.n_bd));
    ASSERT_EQ(set.bd_plus.size(), set.bd.size());
    ASSERT_EQ(set.bd_minus.size(), set.bd.size());
    for (std::size_t i = 0; i < set.bd.size(); ++i) {
      const auto &b = set.bd[i];
      EXPECT_NEAR(std::abs(map.boundary(b.theta) - cplx(b.x1, b.x2)), 0.0, 1e-12);
      EXPECT_NEAR(std::hypot(set.bd_plus[i][0] - b.x1, set.bd_plus[i][1] - b.x2),
                  delta, 1e-14);
      EXPECT_NEAR(std::hypot(set.bd_minus[i][0] - b.x1, set.bd_minus[i][1] - b.x2),
                  delta, 1e-14);
      EXPECT_EQ(winding_number(map, {set.bd_minus[i][0], set.bd_minus[i][1]}), 1);
      EXPECT_EQ(winding_number(map, {set.bd_plus[i][0], set.bd_plus[i][1]}), 0);
    }

    EXPECT_GE(set.interior.size() + set.discarded_interior, 500u) << name;
    for (const auto &x : set.interior)
      EXPECT_EQ(winding_number(map, {x[0], x[1]}), 1) << name;
  }
}

TEST(Collocation, StarShapedLibraryKeepsAllInteriorPoints) {
  for (const auto &name : {"disk", "ellipse", "square", "fish", "spike"}) {
    const auto set = generate_collocation(shape_library(name), {500, 500, 100},
                                          5.0, 0.01);
    EXPECT_EQ(set.discarded_interior, 0) << name;
  }
}

TEST(Collocation, InteriorRaysFollowBoundaryAngles) {
  const auto map = shape_library("fish");
  const auto set = generate_collocation(map, {100, 100, 100}, 5.0, 0.01);
  // n_r = round(sqrt(100) / 2) = 5 radii per ray, 20 rays
  ASSERT_EQ(set.interior.size() + set.discarded_interior, 100u);
  const cplx z = map.boundary(two_pi / 20);
  for (int k = 1; k <= 5; ++k) {
    const auto &x = set.interior[k - 1];
    EXPECT_NEAR(std::abs(cplx(x[0], x[1]) - z * (k / 6.0)), 0.0, 1e-14);
  }
}

TEST(Collocation, SpikeArmsRejectDefaultOffset) {
  // the spike arms are thinner than 2e-2 near their tips
  EXPECT_THROW(generate_collocation(shape_library("spike"), {100, 100, 500},
                                    5.0, 1e-2),
               ConfigError);
}

TEST(Collocation, Errors) {
  const auto map = shape_library("fish");
  EXPECT_THROW(generate_collocation(map, {10, 10, 10}, 1.0, 0.01), ConfigError);
  EXPECT_THROW(generate_collocation(map, {10, 10, 10}, 5.0, 0.0), ConfigError);
  EXPECT_THROW(generate_collocation(map, {10, 0, 10}, 5.0, 0.01), ConfigError);
  EXPECT_THROW(generate_collocation(map, {100, 10, 100}, 5.0, 2.0), ConfigError);
}

TEST(ExteriorGrid, StandardGridShape) {
  const auto map = shape_library("kite");
  const auto g = standard_grid(map);
  ASSERT_EQ(g.size(), 2000u);
  EXPECT_NEAR(g.back().rho, std::log(5.0), 1e-15);
  EXPECT_NEAR(g.back().theta, two_pi, 1e-15);
  EXPECT_GT(g.front().rho, 0.0);
}
