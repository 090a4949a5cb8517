#include <gtest/gtest.h>

#include <cmath>

#include "coco/designer.hpp"

using namespace coco;

namespace {

DesignConfig plain(int n) {
  DesignConfig c;
  c.n = n;
  c.eps_reg = 0.0;
  c.positivity_weight = 0.0;
  return c;
}

} // namespace

TEST(Objective, DiskNeutralIsZero) {
  const auto disk = shape_library("disk");
  EXPECT_LE(design_objective(disk, InterfaceDensity(1.0, 1.25), 5.0, 1.0, plain(0)),
            1e-24);
}

TEST(Objective, InsulatedDiskIsTwo) {
  const auto disk = shape_library("disk");
  EXPECT_NEAR(design_objective(disk, InterfaceDensity(1.0, 0.0), 5.0, 1.0, plain(0)),
              2.0, 1e-13);
  auto single = plain(0);
  single.single_field = true;
  EXPECT_NEAR(design_objective(disk, InterfaceDensity(1.0, 0.0), 5.0, 1.0, single),
              1.0, 1e-13);
}

TEST(Objective, RegularizerOnlyWhenScatteringVanishes) {
  const auto disk = shape_library("disk");
  auto c = plain(0);
  c.eps_reg = 1e-3;
  EXPECT_NEAR(design_objective(disk, InterfaceDensity(1.0, 1.25), 5.0, 1.0, c),
              1e-3 * two_pi * 1.25 * 1.25, 1e-15);
}

TEST(Objective, PositivityPenalty) {
  const auto disk = shape_library("disk");
  auto c = plain(0);
  c.positivity_weight = 2.0;
  c.positivity_samples = 100;
  // p = -1 everywhere: 100 violations of size 1
  const double base = design_objective(disk, InterfaceDensity(1.0, -1.0), 5.0, 1.0, plain(0));
  EXPECT_NEAR(design_objective(disk, InterfaceDensity(1.0, -1.0), 5.0, 1.0, c),
              base + 200.0, 1e-10);
}

TEST(Config, Validation) {
  DesignConfig c;
  EXPECT_NO_THROW(c.validate());
  c.fd_step = 1e-2;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DesignConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = DesignConfig{};
  c.max_iters = -1;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(optimizer_from_string("sgd"), ConfigError);
  EXPECT_EQ(optimizer_from_string("nelder-mead"), Optimizer::nelder_mead);
  EXPECT_EQ(optimizer_from_string("adam"), Optimizer::adam);
}

TEST(Design, ZeroIterationsReturnsInitial) {
  const auto fish = shape_library("fish");
  for (auto opt : {Optimizer::adam, Optimizer::nelder_mead}) {
    DesignConfig c;
    c.n = 4;
    c.max_iters = 0;
    c.optimizer = opt;
    c.init_jitter = 0.1;
    c.seed = 3;
    const DesignProblem prob(fish, 5.0, 1.0, c);
    const auto init = prob.initial_density();
    const auto res = design_direct(prob);
    EXPECT_EQ(res.density.p0, init.p0);
    EXPECT_EQ(res.density.pk, init.pk);
    EXPECT_EQ(res.best_objective, prob.objective(init));
  }
}

TEST(Design, InitialDensityIsPointwiseConstant) {
  DesignConfig c;
  c.n = 20;
  const auto fish = shape_library("fish");
  const auto d = DesignProblem(fish, 5.0, 1.0, c).initial_density();
  const auto ref = constant_density(fish, 5.0, 20);
  EXPECT_EQ(d.p0, ref.p0);
  EXPECT_EQ(d.pk, ref.pk);
  // smooth scale factor: the order-20 fit is essentially exact
  const auto el = shape_library("ellipse");
  const auto e = DesignProblem(el, 5.0, 1.0, c).initial_density();
  for (int j = 0; j < 64; ++j)
    EXPECT_NEAR(e.pointwise(el, two_pi * j / 64), 5.0, 1e-6);
}

TEST(Design, DiskNelderMeadRecoversNeutralValue) {
  const auto disk = shape_library("disk");
  auto c = plain(4);
  c.max_iters = 3000;
  const auto res = design_direct(disk, 5.0, 1.0, c);
  EXPECT_NEAR(res.density.p0, neutral_disk_value(5.0, 1.0), 1e-3);
  for (const auto &p : res.density.pk)
    EXPECT_LE(std::abs(p), 1e-3);
  EXPECT_TRUE(res.admissible);
}

TEST(Design, DiskAdamRecoversNeutralValue) {
  const auto disk = shape_library("disk");
  auto c = plain(0);
  c.optimizer = Optimizer::adam;
  c.learning_rate = 2e-2;
  c.max_iters = 3000;
  const auto res = design_direct(disk, 5.0, 1.0, c);
  EXPECT_NEAR(res.density.p0, 1.25, 1e-3);
}

TEST(Design, BestTraceMonotoneAndDeterministic) {
  const auto fish = shape_library("fish");
  for (auto opt : {Optimizer::adam, Optimizer::nelder_mead}) {
    DesignConfig c;
    c.n = 3;
    c.max_iters = 300;
    c.optimizer = opt;
    c.init_jitter = 0.05;
    c.seed = 11;
    const auto a = design_direct(fish, 5.0, 1.0, c);
    const auto b = design_direct(fish, 5.0, 1.0, c);
    ASSERT_EQ(a.best_trace.size(), a.trace.size());
    for (std::size_t i = 1; i < a.best_trace.size(); ++i)
      EXPECT_LE(a.best_trace[i], a.best_trace[i - 1]);
    EXPECT_EQ(a.best_objective, a.best_trace.back());
    EXPECT_EQ(a.density.p0, b.density.p0);
    EXPECT_EQ(a.density.pk, b.density.pk);
    EXPECT_EQ(a.trace, b.trace);
  }
}

TEST(Design, SeedChangesJitteredStart) {
  const auto fish = shape_library("fish");
  DesignConfig c;
  c.n = 3;
  c.init_jitter = 0.1;
  c.seed = 1;
  const auto d1 = DesignProblem(fish, 5.0, 1.0, c).initial_density();
  c.seed = 2;
  const auto d2 = DesignProblem(fish, 5.0, 1.0, c).initial_density();
  EXPECT_NE(d1.p0, d2.p0);
}

TEST(CrossDirection, DiskNeutral) {
  const auto rep = cross_direction_report(shape_library("disk"),
                                          InterfaceDensity(1.0, 1.25), 5.0, 1.0);
  EXPECT_LE(rep.p_neutral_x1, 1e-10);
  EXPECT_LE(rep.p_neutral_x2, 1e-10);
  EXPECT_LE(rep.p_neutral_mixed, 1e-10);
  EXPECT_FALSE(rep.first_rows_independent);
}

TEST(CrossDirection, ZeroDensityScatters) {
  for (const auto &name : library_shape_names()) {
    const auto rep = cross_direction_report(shape_library(name),
                                            InterfaceDensity(1.0, 0.0), 5.0, 1.0);
    EXPECT_GT(rep.p_neutral_x1, 1e-3) << name;
    EXPECT_GT(rep.p_neutral_x2, 1e-3) << name;
    EXPECT_GT(rep.p_neutral_mixed, 1e-3) << name;
  }
}

TEST(CrossDirection, InsulatedDiskMatchesGridMean) {
  // u - H = Re(1/w) for the insulated disk with H = x1
  const auto disk = shape_library("disk");
  const auto rep = cross_direction_report(disk, InterfaceDensity(1.0, 0.0), 5.0, 1.0);
  double acc = 0.0;
  const auto grid = standard_grid(disk);
  for (const auto &p : grid) {
    const double v = std::exp(-p.rho) * std::cos(p.theta);
    acc += v * v;
  }
  EXPECT_NEAR(rep.p_neutral_x1, acc / grid.size(), 1e-14);
}

TEST(Objective, SplitsIntoSmoothPartAndPenalty) {
  const auto fish = shape_library("fish");
  DesignConfig c;
  c.n = 3;
  const DesignProblem prob(fish, 5.0, 1.0, c);
  InterfaceDensity d(1.0, 0.2, {{0.3, -0.1}, {0.2, 0.0}, {0.0, 0.05}});
  ASSERT_GT(prob.positivity_violation(d), 0.0);
  EXPECT_EQ(prob.objective(d),
            prob.smooth_objective(d) + c.positivity_weight * prob.positivity_violation(d));
}

TEST(Design, SmoothPhaseKeepsTraceOnFullObjective) {
  const auto fish = shape_library("fish");
  DesignConfig c;
  c.n = 2;
  c.max_iters = 200;
  c.nm_smooth_fraction = 0.5;
  const DesignProblem prob(fish, 5.0, 1.0, c);
  const auto res = design_direct(prob);
  ASSERT_EQ(res.trace.size(), 200u);
  EXPECT_EQ(res.best_objective, prob.objective(res.density));
  EXPECT_LE(res.best_objective, prob.objective(prob.initial_density()));

  c.nm_smooth_fraction = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.nm_smooth_fraction = -0.1;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Design, WarmStartMustMatchOrder) {
  DesignConfig c;
  c.n = 3;
  c.max_iters = 5;
  const DesignProblem prob(shape_library("fish"), 5.0, 1.0, c);
  EXPECT_THROW(design_direct(prob, InterfaceDensity(1.0, 1.0)), ConfigError);
  const auto start = constant_density(prob.map(), 2.0, 3);
  const auto res = design_direct(prob, start);
  EXPECT_LE(res.best_objective, prob.objective(start));
}
