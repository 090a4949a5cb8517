#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coco/training.hpp"

using namespace coco;

namespace {

TrainConfig small(TrainMode mode, std::uint64_t seed = 1) {
  TrainConfig c;
  c.mode = mode;
  c.counts = {96, 40, 48};
  c.n = 4;
  c.seed = seed;
  c.iterations = 0;
  return c;
}

// Perturb everything so that every loss term and gradient path is active.
void scramble(TrainRun &run, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.05);
  auto x = run.flat_params();
  for (auto &v : x)
    v += g(rng);
  run.set_flat_params(x);
}

double max_abs(const std::vector<double> &v) {
  double m = 0.0;
  for (double x : v)
    m = std::max(m, std::abs(x));
  return m;
}

void check_gradient(TrainMode mode) {
  auto cfg = small(mode, 4);
  cfg.weights.eps = 1e-2;
  auto run = make_run(shape_library("fish"), cfg);
  scramble(run, 17);
  std::vector<double> grad;
  evaluate_loss(run, &grad);
  auto x = run.flat_params();

  std::mt19937_64 rng(23);
  const std::size_t n_net = run.u_int.params().size() + run.u_ext.params().size();
  std::uniform_int_distribution<std::size_t> any(0, x.size() - 1);
  std::uniform_int_distribution<std::size_t> inv(n_net, x.size() - 1);
  const double floor = 1e-6 * max_abs(grad);
  for (int k = 0; k < 20; ++k) {
    // a quarter of the picks come from the interface parameters
    const std::size_t i = k % 4 == 0 ? inv(rng) : any(rng);
    const double xi = x[i], h = 1e-5;
    x[i] = xi + h;
    run.set_flat_params(x);
    const double fp = loss_reg(run);
    x[i] = xi - h;
    run.set_flat_params(x);
    const double fm = loss_reg(run);
    x[i] = xi;
    run.set_flat_params(x);
    const double fd = (fp - fm) / (2 * h);
    EXPECT_LE(std::abs(grad[i] - fd), 1e-4 * std::max(std::abs(fd), floor))
        << to_string(mode) << " param " << i << " grad " << grad[i] << " fd " << fd;
  }
}

} // namespace

TEST(Loss, GradientMatchesFiniteDifferencesCoco) { check_gradient(TrainMode::coco); }

TEST(Loss, GradientMatchesFiniteDifferencesClassical) {
  check_gradient(TrainMode::classical);
}

TEST(Loss, ZeroWeightsGiveZero) {
  auto cfg = small(TrainMode::coco);
  cfg.weights = {0, 0, 0, 0, 0, 0};
  auto run = make_run(shape_library("kite"), cfg);
  scramble(run, 3);
  const auto L = loss_total(run);
  EXPECT_EQ(L.total, 0.0);
  EXPECT_EQ(loss_reg(run), 0.0);
}

TEST(Loss, PositivityCountsEachBoundarySample) {
  auto cfg = small(TrainMode::coco);
  cfg.counts = {96, 40, 100};
  cfg.n = 0;
  cfg.weights = {0, 0, 0, 0, 1, 0};
  auto run = make_run(shape_library("disk"), cfg);
  run.density = InterfaceDensity(1.0, -1.0);
  EXPECT_NEAR(loss_total(run).positivity, 100.0, 1e-12);
}

TEST(Loss, PointwiseDensityMatchesAnalyticConvention) {
  auto cfg = small(TrainMode::coco);
  auto run = make_run(shape_library("fish"), cfg);
  scramble(run, 8);
  nn::Tape tape;
  for (std::size_t i = 0; i < run.colloc.bd.size(); ++i)
    EXPECT_NEAR(run.p_at(i, tape),
                run.density.pointwise(run.map, run.colloc.bd[i].theta), 1e-13);
}

TEST(Loss, NeutralDiskExactPairIsNearlyZero) {
  // u_ext = x1 and u_int = A x1 with A = 2 sm p / ((sc + sm) p + sc sm) = 0.2
  // at the neutral value p = 1.25. A one-unit tanh net c tanh(e x1) / e is
  // linear to O(e^2).
  const double sc = 5.0, sm = 1.0, p = 1.25;
  const double A = 2 * sm * p / ((sc + sm) * p + sc * sm);
  auto cfg = small(TrainMode::coco);
  cfg.widths = {2, 1, 1};
  cfg.n = 0;
  cfg.delta = 1e-7;
  cfg.weights.eps = 0.0;
  auto run = make_run(shape_library("disk"), cfg);
  const double e = 1e-5;
  run.u_ext.params() = {e, 0.0, 0.0, 1.0 / e, 0.0};
  run.u_int.params() = {e, 0.0, 0.0, A / e, 0.0};
  run.density = InterfaceDensity(1.0, p);
  const auto L = loss_total(run);
  EXPECT_LE(L.pde_int, 1e-8);
  EXPECT_LE(L.pde_ext, 1e-8);
  EXPECT_LE(L.bd1, 1e-8);
  EXPECT_LE(L.bd2, 1e-8);
  EXPECT_LE(L.neutral, 1e-8);
  EXPECT_EQ(L.positivity, 0.0);

  // a non-neutral interior slope breaks the flux condition
  run.u_int.params() = {e, 0.0, 0.0, 0.5 / e, 0.0};
  EXPECT_GT(loss_total(run).bd2, 1e-2);
}

TEST(Loss, Regularizer) {
  auto cfg = small(TrainMode::coco);
  cfg.n = 0;
  cfg.weights.eps = 1e-3;
  auto run = make_run(shape_library("disk"), cfg);
  run.density = InterfaceDensity(1.0, 1.0);
  EXPECT_NEAR(loss_total(run).reg, two_pi * 1e-3, 1e-15);

  auto ccfg = small(TrainMode::classical);
  ccfg.weights.eps = 1e-3;
  auto crun = make_run(shape_library("disk"), ccfg);
  auto &pp = crun.p_nn.params();
  for (std::size_t l = 0; l < crun.p_nn.layers(); ++l) {
    const auto &w = crun.p_nn.widths();
    std::fill_n(pp.begin() + std::ptrdiff_t(crun.p_nn.offset(l)),
                w[l] * w[l + 1], 0.0);
  }
  EXPECT_EQ(loss_total(crun).reg, 0.0);

  cfg.weights.eps = 0.0;
  auto run0 = make_run(shape_library("fish"), cfg);
  EXPECT_EQ(loss_reg(run0), loss_total(run0).total);
}

TEST(Loss, ThreadCountDoesNotChangeResult) {
  auto cfg = small(TrainMode::coco);
  auto run = make_run(shape_library("fish"), cfg);
  scramble(run, 2);
  std::vector<double> g1, g3;
  const auto a = evaluate_loss(run, &g1);
  run.config.threads = 3;
  const auto b = evaluate_loss(run, &g3);
  EXPECT_EQ(a.total, b.total);
  EXPECT_EQ(a.reg, b.reg);
  EXPECT_EQ(g1, g3);
}

TEST(Train, ZeroIterationsLeavesParameters) {
  auto cfg = small(TrainMode::coco);
  auto run = make_run(shape_library("fish"), cfg);
  const auto before = run.flat_params();
  train(run);
  EXPECT_TRUE(run.trace.empty());
  EXPECT_EQ(run.flat_params(), before);
}

TEST(Train, InitialInterfaceValue) {
  auto cfg = small(TrainMode::classical);
  cfg.init_p0 = 5.0;
  const auto run = make_run(shape_library("fish"), cfg);
  nn::Tape tape;
  EXPECT_NEAR(run.p_at(0, tape), 5.0, 1e-12);
  auto c2 = small(TrainMode::coco);
  c2.n = 20;
  const auto r2 = make_run(shape_library("ellipse"), c2);
  EXPECT_NEAR(r2.p_at(3, tape), 5.0, 1e-6);
}

TEST(Train, DeterministicAndTraceComplete) {
  for (auto mode : {TrainMode::coco, TrainMode::classical}) {
    auto cfg = small(mode, 9);
    cfg.iterations = 15;
    auto a = make_run(shape_library("square"), cfg);
    auto b = make_run(shape_library("square"), cfg);
    train(a);
    train(b);
    EXPECT_EQ(a.flat_params(), b.flat_params());
    ASSERT_EQ(a.trace.size(), 15u);
    for (const auto &L : a.trace)
      EXPECT_TRUE(std::isfinite(L.total_reg()));
    EXPECT_LT(a.trace.back().total_reg(), a.trace.front().total_reg());
  }
}

TEST(Train, DefaultOffsetShrinksForThinArms) {
  auto cfg = small(TrainMode::coco);
  const auto run = make_run(shape_library("spike"), cfg);
  EXPECT_DOUBLE_EQ(run.config.delta, 5e-3);
  cfg.delta = 1e-2;
  EXPECT_THROW(make_run(shape_library("spike"), cfg), ConfigError);
}

TEST(Credibility, ReportsMetricsAndFitError) {
  auto cfg = small(TrainMode::classical);
  cfg.iterations = 3;
  auto run = make_run(shape_library("fish"), cfg);
  train(run);
  const auto rep = credibility_eval(run);
  EXPECT_EQ(rep.density.order(), cfg.n);
  EXPECT_GE(rep.fit_error, 0.0);
  EXPECT_TRUE(std::isfinite(rep.metrics.cred));
  EXPECT_GT(rep.metrics.p_neutral, 0.0);
}

TEST(Credibility, ExactNetworkGivesZeroCred) {
  // Neutral disk: u_p = H = x1 and u_ext_NN ~ x1.
  auto cfg = small(TrainMode::coco);
  cfg.widths = {2, 1, 1};
  cfg.n = 0;
  auto run = make_run(shape_library("disk"), cfg);
  const double e = 1e-6;
  run.u_ext.params() = {e, 0.0, 0.0, 1.0 / e, 0.0};
  run.density = InterfaceDensity(1.0, 1.25);
  const auto rep = credibility_eval(run);
  EXPECT_LE(rep.metrics.cred, 1e-12);
  EXPECT_LE(rep.metrics.p_neutral, 1e-20);
}

TEST(Study, IdenticalSeedsHaveZeroSpread) {
  auto cfg = small(TrainMode::coco);
  cfg.iterations = 5;
  const std::vector<std::uint64_t> seeds{4, 4};
  const auto st = consistency_study(shape_library("fish"), cfg, seeds);
  EXPECT_EQ(st.completed, 2);
  EXPECT_EQ(st.aborted, 0);
  EXPECT_EQ(st.pointwise.mean_of_sd, 0.0);
  EXPECT_EQ(st.cred.sd, 0.0);
  EXPECT_GT(st.pointwise.mean_amplitude, 0.0);
}

TEST(Study, StabilityRowPerConductivity) {
  auto cfg = small(TrainMode::coco);
  cfg.iterations = 2;
  const std::vector<double> sig{3.0, 5.0};
  const std::vector<std::uint64_t> seeds{1};
  const auto rows = stability_study(shape_library("fish"), cfg, sig, seeds);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].sigma_c, 3.0);
  EXPECT_EQ(rows[1].sigma_c, 5.0);
  EXPECT_EQ(rows[0].mean_of_sd, 0.0);
}

TEST(Study, PointwiseStatistics) {
  const auto disk = shape_library("disk");
  const std::vector<InterfaceDensity> ds{InterfaceDensity(1.0, 1.0),
                                         InterfaceDensity(1.0, 3.0)};
  const auto st = pointwise_stats(disk, ds);
  EXPECT_NEAR(st.mean_amplitude, 2.0, 1e-14);
  EXPECT_NEAR(st.mean_of_sd, 1.0, 1e-14);
  EXPECT_EQ(st.theta.size(), 256u);
}

TEST(Config, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.weights.w4 = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = TrainConfig{};
  c.field_a = 0.0;
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_THROW(train_mode_from_string("pinn"), ConfigError);
}

TEST(Config, DeskPresetKeepsOtherSettings) {
  TrainConfig base;
  base.mode = TrainMode::classical;
  base.seed = 9;
  base.lr_pinn = 2e-3;
  const auto d = desk_preset(base);
  EXPECT_EQ(d.counts.n_ext, 2000);
  EXPECT_EQ(d.counts.n_int, 500);
  EXPECT_EQ(d.counts.n_bd, 500);
  EXPECT_EQ(d.iterations, 5000);
  EXPECT_EQ(d.lr_inv, 5e-2);
  EXPECT_EQ(d.mode, TrainMode::classical);
  EXPECT_EQ(d.seed, 9u);
  EXPECT_EQ(d.lr_pinn, 2e-3);
  EXPECT_EQ(d.eta, 0.7);
  EXPECT_NO_THROW(d.validate());
}
