#pragma once

// PINN training for the imperfect-interface problem. Two networks model the
// interior and exterior potentials; the interface function is either a
// Fourier density (coco mode) or a boundary network p_NN (classical mode).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "coco/analytic.hpp"
#include "coco/colloc.hpp"
#include "coco/errors.hpp"
#include "coco/geometry.hpp"
#include "coco/nn.hpp"

namespace coco {

enum class TrainMode { coco, classical };

inline std::string to_string(TrainMode m) {
  return m == TrainMode::coco ? "coco" : "classical";
}

inline TrainMode train_mode_from_string(const std::string &s) {
  if (s == "coco")
    return TrainMode::coco;
  if (s == "classical")
    return TrainMode::classical;
  throw ConfigError("unknown training mode '" + s + "'");
}

struct LossWeights {
  double w1 = 1.0, w2 = 1.0, w3 = 1.0, w4 = 10.0, w5 = 1.0;
  double eps = 1e-6;

  void validate() const {
    for (double v : {w1, w2, w3, w4, w5, eps})
      if (!std::isfinite(v) || v < 0.0)
        throw ConfigError("loss weights must be finite and >= 0");
  }
};

struct TrainConfig {
  TrainMode mode = TrainMode::coco;
  double sigma_c = 5.0, sigma_m = 1.0;
  /// Density order (coco mode) and Fourier-fit order for credibility.
  int n = 20;
  CollocationCounts counts{};
  /// Outer radius; 0 selects 5 gamma.
  double L = 0.0;
  /// Boundary offset; 0 selects 1e-2 gamma.
  double delta = 0.0;
  int iterations = 5000;
  double lr_pinn = 1e-3, lr_inv = 1e-3, eta = 0.7;
  int decay_every = 1000;
  std::uint64_t seed = 0;
  /// Initial pointwise interface value.
  double init_p0 = 5.0;
  LossWeights weights{};
  /// Background field H = a x1 + b x2.
  double field_a = 1.0, field_b = 0.0;
  std::vector<int> widths = nn::default_widths();
  double divergence_factor = 1e6;
  /// Worker threads for the loss; results do not depend on this value.
  int threads = 1;

  void validate() const {
    weights.validate();
    if (!(sigma_c > 0.0) || !(sigma_m > 0.0))
      throw ConfigError("conductivities must be positive");
    if (n < 0)
      throw ConfigError("density order must be >= 0");
    if (iterations < 0)
      throw ConfigError("iterations must be >= 0");
    if (!(lr_pinn > 0.0) || !(lr_inv > 0.0) || !(eta > 0.0))
      throw ConfigError("learning rates and eta must be positive");
    if (decay_every < 1)
      throw ConfigError("decay_every must be >= 1");
    if (L < 0.0 || delta < 0.0)
      throw ConfigError("L and delta must be nonnegative (0 = default)");
    if (threads < 1)
      throw ConfigError("threads must be >= 1");
    if (field_a == 0.0 && field_b == 0.0)
      throw ConfigError("background field must be nonzero");
  }
};

/// Desk-scale preset: 2000/500/500 points, 5000 iterations.
/// With the eta decay an Adam coordinate travels at most about
/// 2800 * lr_inv in 5000 steps, which at 1e-3 cannot carry p0 from
/// init_p0 = 5 to a neutral value, so the interface rate is raised.
inline TrainConfig desk_preset(TrainConfig base = {}) {
  base.counts = {2000, 500, 500};
  base.iterations = 5000;
  base.lr_inv = 5e-2;
  return base;
}

/// Weighted loss terms. `total` excludes the regularizer.
struct LossComponents {
  double pde_int = 0.0, pde_ext = 0.0, bd1 = 0.0, bd2 = 0.0, neutral = 0.0,
         positivity = 0.0, reg = 0.0, total = 0.0;

  [[nodiscard]] double total_reg() const { return total + reg; }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct TrainRun {
  TrainConfig config;
  ConformalMap map;
  CollocationSet colloc;
  BackgroundField H;
  nn::Mlp u_int, u_ext;
  /// coco mode
  InterfaceDensity density;
  /// classical mode; input (cos theta, sin theta)
  nn::Mlp p_nn;
  std::vector<LossComponents> trace;
  bool diverged = false;

  // Precomputed per-point data.
  std::vector<double> H_ext;            // H at ext points
  std::vector<double> inv_h_bd;         // 1 / h at bd angles
  std::vector<std::vector<double>> dv;  // d v(theta_i) / d x_j (coco)

  [[nodiscard]] std::size_t n_inverse() const {
    return config.mode == TrainMode::coco ? 1 + 2 * density.pk.size()
                                          : p_nn.params().size();
  }
  [[nodiscard]] std::size_t n_params() const {
    return u_int.params().size() + u_ext.params().size() + n_inverse();
  }

  /// Interface value p at boundary sample i.
  [[nodiscard]] double p_at(std::size_t i, nn::Tape &tape) const {
    if (config.mode == TrainMode::coco)
      return density.weighted(colloc.bd[i].theta) * inv_h_bd[i];
    const double th = colloc.bd[i].theta;
    const double in[2] = {std::cos(th), std::sin(th)};
    return nn::forward(p_nn, in, tape, nn::JetOrder::value).u;
  }

  /// Flat view [u_int | u_ext | inverse].
  [[nodiscard]] std::vector<double> flat_params() const {
    std::vector<double> x(u_int.params());
    x.insert(x.end(), u_ext.params().begin(), u_ext.params().end());
    if (config.mode == TrainMode::coco) {
      const auto d = density.to_params();
      x.insert(x.end(), d.begin(), d.end());
    } else {
      x.insert(x.end(), p_nn.params().begin(), p_nn.params().end());
    }
    return x;
  }

  void set_flat_params(std::span<const double> x) {
    if (x.size() != n_params())
      throw ConfigError("parameter vector has the wrong length");
    auto it = x.begin();
    std::copy_n(it, u_int.params().size(), u_int.params().begin());
    it += static_cast<std::ptrdiff_t>(u_int.params().size());
    std::copy_n(it, u_ext.params().size(), u_ext.params().begin());
    it += static_cast<std::ptrdiff_t>(u_ext.params().size());
    if (config.mode == TrainMode::coco)
      density = InterfaceDensity::from_params(density.gamma,
                                              std::span(it, x.end()));
    else
      std::copy(it, x.end(), p_nn.params().begin());
  }
};

/// Builds collocation points, initializes networks and the interface
/// function (constant init_p0), and precomputes boundary data.
inline TrainRun make_run(const ConformalMap &map, const TrainConfig &cfg) {
  cfg.validate();
  TrainRun run;
  run.config = cfg;
  run.map = map;
  const double gamma = map.gamma();
  if (run.config.L == 0.0)
    run.config.L = 5.0 * gamma;
  if (run.config.delta == 0.0) {
    // Default offset 1e-2 gamma, halved while z - delta N leaves a thin
    // inclusion (the spike needs 5e-3).
    double d = 1e-2 * gamma;
    for (int tries = 0;; ++tries, d *= 0.5) {
      try {
        run.colloc = generate_collocation(map, cfg.counts, run.config.L, d);
        break;
      } catch (const ConfigError &) {
        if (tries >= 6)
          throw;
      }
    }
    run.config.delta = d;
  } else {
    run.colloc = generate_collocation(map, cfg.counts, run.config.L,
                                      run.config.delta);
  }
  run.H = BackgroundField::linear(cfg.field_a, cfg.field_b);
  const FaberTable faber = faber_build(map, 1);
  run.H_ext.reserve(run.colloc.ext.size());
  for (const auto &p : run.colloc.ext)
    run.H_ext.push_back(run.H.value(faber, {p.x1, p.x2}));

  run.u_int = nn::Mlp(cfg.widths);
  run.u_ext = nn::Mlp(cfg.widths);
  run.u_int.init_glorot(splitmix64(cfg.seed * 3 + 0));
  run.u_ext.init_glorot(splitmix64(cfg.seed * 3 + 1));

  for (const auto &b : run.colloc.bd)
    run.inv_h_bd.push_back(1.0 / scale_factor(map, map.rho0(), b.theta));

  if (cfg.mode == TrainMode::coco) {
    run.density = constant_density(map, cfg.init_p0, cfg.n);
    const std::size_t P = 1 + 2 * std::size_t(cfg.n);
    run.dv.assign(run.colloc.bd.size(), std::vector<double>(P));
    for (std::size_t i = 0; i < run.colloc.bd.size(); ++i) {
      const double th = run.colloc.bd[i].theta;
      auto &row = run.dv[i];
      row[0] = 1.0;
      double gk = 1.0;
      for (int k = 1; k <= cfg.n; ++k) {
        gk *= gamma;
        row[2 * k - 1] = 2.0 * gk * std::cos(k * th);
        row[2 * k] = -2.0 * gk * std::sin(k * th);
      }
    }
  } else {
    run.p_nn = nn::Mlp(cfg.widths);
    run.p_nn.init_glorot(splitmix64(cfg.seed * 3 + 2));
    // Start from the constant init_p0: zero output weights, bias init_p0.
    auto &pp = run.p_nn.params();
    const std::size_t last = run.p_nn.layers() - 1;
    std::fill_n(pp.begin() + std::ptrdiff_t(run.p_nn.offset(last)),
                cfg.widths[last], 0.0);
    pp.back() = cfg.init_p0;
  }
  return run;
}

// ---------------------------------------------------------------------------
// Loss and gradient

namespace detail {

enum class Part { interior, exterior, boundary };

struct Chunk {
  Part part;
  std::size_t begin, end;
};

inline std::vector<Chunk> make_chunks(const TrainRun &run,
                                      std::size_t size = 64) {
  std::vector<Chunk> out;
  auto add = [&](Part p, std::size_t n) {
    for (std::size_t b = 0; b < n; b += size)
      out.push_back({p, b, std::min(n, b + size)});
  };
  add(Part::interior, run.colloc.interior.size());
  add(Part::exterior, run.colloc.ext.size());
  add(Part::boundary, run.colloc.bd.size());
  return out;
}

struct ChunkResult {
  LossComponents loss;
  std::vector<double> grad;
};

[[noreturn]] inline void non_finite(const char *term, double x1, double x2) {
  throw NumericalError(std::string("non-finite loss term '") + term +
                       "' at (" + std::to_string(x1) + ", " +
                       std::to_string(x2) + ")");
}

inline void eval_chunk(const TrainRun &run, const Chunk &c, ChunkResult &out,
                       bool want_grad) {
  const auto &cfg = run.config;
  const auto &w = cfg.weights;
  const double sc = cfg.sigma_c, sm = cfg.sigma_m;
  const std::size_t n_int = run.u_int.params().size();
  const std::size_t n_ext = run.u_ext.params().size();
  std::span<double> g_int, g_ext, g_inv;
  if (want_grad) {
    out.grad.assign(run.n_params(), 0.0);
    std::span<double> g(out.grad);
    g_int = g.subspan(0, n_int);
    g_ext = g.subspan(n_int, n_ext);
    g_inv = g.subspan(n_int + n_ext);
  }
  nn::Tape ta, tb, tp;
  auto &L = out.loss;

  switch (c.part) {
  case Part::interior: {
    const double scale = w.w1 / double(run.colloc.interior.size());
    for (std::size_t i = c.begin; i < c.end; ++i) {
      const auto &x = run.colloc.interior[i];
      const auto J = nn::forward(run.u_int, x, ta, nn::JetOrder::laplacian);
      const double r = sc * J.lap;
      if (!std::isfinite(r))
        non_finite("pde_int", x[0], x[1]);
      L.pde_int += scale * r * r;
      if (want_grad) {
        nn::JetAdjoint s;
        s.lap = 2.0 * scale * r * sc;
        nn::backward(run.u_int, ta, s, g_int);
      }
    }
    break;
  }
  case Part::exterior: {
    const double n = double(run.colloc.ext.size());
    const double s1 = w.w1 / n, s4 = w.w4 / n;
    for (std::size_t i = c.begin; i < c.end; ++i) {
      const auto &p = run.colloc.ext[i];
      const double x[2] = {p.x1, p.x2};
      const auto J = nn::forward(run.u_ext, x, ta, nn::JetOrder::laplacian);
      const double r = sm * J.lap;
      const double d = J.u - run.H_ext[i];
      if (!std::isfinite(r))
        non_finite("pde_ext", p.x1, p.x2);
      if (!std::isfinite(d))
        non_finite("neutral", p.x1, p.x2);
      L.pde_ext += s1 * r * r;
      L.neutral += s4 * d * d;
      if (want_grad) {
        nn::JetAdjoint s;
        s.lap = 2.0 * s1 * r * sm;
        s.u = 2.0 * s4 * d;
        nn::backward(run.u_ext, ta, s, g_ext);
      }
    }
    break;
  }
  case Part::boundary: {
    const double n = double(run.colloc.bd.size());
    const double s2 = w.w2 / n, s3 = w.w3 / n;
    for (std::size_t i = c.begin; i < c.end; ++i) {
      const auto &b = run.colloc.bd[i];
      const auto &xp = run.colloc.bd_plus[i];
      const auto &ym = run.colloc.bd_minus[i];
      const double N0 = b.normal[0], N1 = b.normal[1];
      const auto Je = nn::forward(run.u_ext, xp, ta, nn::JetOrder::gradient);
      const auto Ji = nn::forward(run.u_int, ym, tb, nn::JetOrder::gradient);
      const double p = run.p_at(i, tp);
      const double fe = N0 * Je.grad[0] + N1 * Je.grad[1];
      const double fi = N0 * Ji.grad[0] + N1 * Ji.grad[1];
      const double jump = Je.u - Ji.u;
      const double r1 = p * jump - sm * fe;
      const double r2 = sm * fe - sc * fi;
      if (!std::isfinite(r1))
        non_finite("bd1", b.x1, b.x2);
      if (!std::isfinite(r2))
        non_finite("bd2", b.x1, b.x2);
      L.bd1 += s2 * r1 * r1;
      L.bd2 += s3 * r2 * r2;
      L.positivity += w.w5 * std::max(0.0, -p);
      if (!want_grad)
        continue;
      const double c1 = 2.0 * s2 * r1, c2 = 2.0 * s3 * r2;
      nn::JetAdjoint se, si;
      se.u = c1 * p;
      const double ge = -c1 * sm + c2 * sm;
      se.grad[0] = ge * N0;
      se.grad[1] = ge * N1;
      si.u = -c1 * p;
      const double gi = -c2 * sc;
      si.grad[0] = gi * N0;
      si.grad[1] = gi * N1;
      nn::backward(run.u_ext, ta, se, g_ext);
      nn::backward(run.u_int, tb, si, g_int);
      const double dp = c1 * jump - (p < 0.0 ? w.w5 : 0.0);
      if (cfg.mode == TrainMode::coco) {
        const double s = dp * run.inv_h_bd[i];
        const auto &row = run.dv[i];
        for (std::size_t j = 0; j < row.size(); ++j)
          g_inv[j] += s * row[j];
      } else {
        nn::JetAdjoint sp;
        sp.u = dp;
        nn::backward(run.p_nn, tp, sp, g_inv);
      }
    }
    break;
  }
  }
}

} // namespace detail

/// Loss terms (and, if grad is non-null, the gradient of total + reg with
/// respect to flat_params()). Chunks are reduced in a fixed order, so the
/// result does not depend on config.threads.
inline LossComponents evaluate_loss(const TrainRun &run,
                                    std::vector<double> *grad = nullptr) {
  const auto chunks = detail::make_chunks(run);
  std::vector<detail::ChunkResult> res(chunks.size());
  const bool want = grad != nullptr;
  const int T = std::min<int>(run.config.threads, int(chunks.size()));
  if (T <= 1) {
    for (std::size_t k = 0; k < chunks.size(); ++k)
      detail::eval_chunk(run, chunks[k], res[k], want);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errs(T);
    std::vector<std::thread> pool;
    for (int t = 0; t < T; ++t)
      pool.emplace_back([&, t] {
        try {
          for (std::size_t k; (k = next++) < chunks.size();)
            detail::eval_chunk(run, chunks[k], res[k], want);
        } catch (...) {
          errs[t] = std::current_exception();
        }
      });
    for (auto &th : pool)
      th.join();
    for (auto &e : errs)
      if (e)
        std::rethrow_exception(e);
  }

  LossComponents L;
  if (want)
    grad->assign(run.n_params(), 0.0);
  for (const auto &r : res) {
    L.pde_int += r.loss.pde_int;
    L.pde_ext += r.loss.pde_ext;
    L.bd1 += r.loss.bd1;
    L.bd2 += r.loss.bd2;
    L.neutral += r.loss.neutral;
    L.positivity += r.loss.positivity;
    if (want)
      for (std::size_t j = 0; j < r.grad.size(); ++j)
        (*grad)[j] += r.grad[j];
  }
  L.total = L.pde_int + L.pde_ext + L.bd1 + L.bd2 + L.neutral + L.positivity;

  const double eps = run.config.weights.eps;
  const std::size_t off =
      run.u_int.params().size() + run.u_ext.params().size();
  if (run.config.mode == TrainMode::coco) {
    const auto &d = run.density;
    L.reg = eps * density_regularizer(d);
    if (want) {
      const double g2 = d.gamma * d.gamma;
      (*grad)[off] += eps * 2.0 * two_pi * g2 * d.p0;
      for (int k = 1; k <= d.order(); ++k) {
        const double c = eps * 4.0 * two_pi * g2 * (1.0 + double(k) * k);
        (*grad)[off + 2 * k - 1] += c * d.pk[k - 1].real();
        (*grad)[off + 2 * k] += c * d.pk[k - 1].imag();
      }
    }
  } else {
    L.reg = eps * run.p_nn.weight_norm2();
    if (want)
      run.p_nn.add_weight_norm_gradient(std::span(*grad).subspan(off), eps);
  }
  if (!std::isfinite(L.reg))
    throw NumericalError("non-finite loss term 'reg'");
  return L;
}

inline LossComponents loss_total(const TrainRun &run) {
  return evaluate_loss(run);
}

inline double loss_reg(const TrainRun &run) {
  return evaluate_loss(run).total_reg();
}

/// Runs config.iterations Adam steps (lr_pinn for the networks, lr_inv for
/// the interface parameters, both decayed by eta every decay_every steps).
/// The trace records the loss before each step.
inline void train(TrainRun &run,
                  const std::function<void(int, const LossComponents &)>
                      &progress = {}) {
  const auto &cfg = run.config;
  const std::size_t n_net =
      run.u_int.params().size() + run.u_ext.params().size();
  nn::AdamState net_opt(n_net, cfg.lr_pinn, cfg.eta, cfg.decay_every);
  nn::AdamState inv_opt(run.n_inverse(), cfg.lr_inv, cfg.eta,
                        cfg.decay_every);
  std::vector<double> grad, x = run.flat_params();
  double initial = 0.0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const LossComponents L = evaluate_loss(run, &grad);
    if (it == 0)
      initial = L.total_reg();
    else if (L.total_reg() > cfg.divergence_factor * initial) {
      run.diverged = true;
      break;
    }
    run.trace.push_back(L);
    if (progress)
      progress(it, L);
    std::span<double> xs(x), gs(grad);
    nn::adam_step(net_opt, xs.subspan(0, n_net), gs.subspan(0, n_net));
    nn::adam_step(inv_opt, xs.subspan(n_net), gs.subspan(n_net));
    run.set_flat_params(x);
  }
}

// ---------------------------------------------------------------------------
// Credibility

struct CredibilityReport {
  Metrics metrics;
  InterfaceDensity density;
  /// Relative error of the order-n Fourier fit of p_NN (classical only).
  double fit_error = 0.0;
  bool admissible = true;
  int truncation = 0;
  std::vector<std::string> warnings;
};

/// Samples used for the classical-mode Fourier fit of p_NN.
inline constexpr int fit_samples = 512;

/// Reconstructs u_p from the trained interface function with the series
/// solver and compares it with u_ext_NN and H on the standard grid.
inline CredibilityReport credibility_eval(const TrainRun &run) {
  const auto &cfg = run.config;
  const auto &map = run.map;
  CredibilityReport rep;
  if (cfg.mode == TrainMode::coco) {
    rep.density = run.density;
  } else {
    std::vector<std::pair<double, double>> samples;
    nn::Tape tape;
    for (int j = 0; j < fit_samples; ++j) {
      const double th = two_pi * j / fit_samples;
      const double in[2] = {std::cos(th), std::sin(th)};
      samples.emplace_back(
          th, nn::forward(run.p_nn, in, tape, nn::JetOrder::value).u);
    }
    const auto fit = density_from_pointwise(map, samples, cfg.n);
    rep.density = fit.density;
    rep.fit_error = fit.relative_error;
  }
  rep.admissible = rep.density.admissible(map);
  if (!rep.admissible)
    rep.warnings.push_back("interface function is negative somewhere");

  const int N = default_truncation(map, rep.density.order());
  rep.truncation = N;
  const FaberTable faber = faber_build(map, N);
  const MatrixSystem sys =
      assemble_system(map, faber, rep.density, cfg.sigma_c, cfg.sigma_m, N);
  for (const auto &w : sys.warnings)
    rep.warnings.push_back(w);
  const auto sol = solve_scattering(sys, run.H);
  const auto grid = standard_grid(map);
  const auto up = eval_exterior(map, faber, run.H, sol, grid);

  std::vector<double> u_nn, u_p, H;
  nn::Tape tape;
  for (const auto &s : up) {
    const double x[2] = {s.x1, s.x2};
    u_nn.push_back(nn::forward(run.u_ext, x, tape, nn::JetOrder::value).u);
    u_p.push_back(s.u);
    H.push_back(s.H);
  }
  rep.metrics = neutrality_metrics(u_nn, u_p, H);
  return rep;
}

// ---------------------------------------------------------------------------
// Studies

struct PointwiseStats {
  std::vector<double> theta, mean, sd;
  double mean_of_sd = 0.0;
  /// Mean over theta of |mean p(theta)|.
  double mean_amplitude = 0.0;
};

/// Pointwise mean and (population) standard deviation of p(theta) over a
/// uniform grid of `samples` angles.
inline PointwiseStats pointwise_stats(const ConformalMap &map,
                                      std::span<const InterfaceDensity> ds,
                                      int samples = 256) {
  if (ds.empty())
    throw DomainError("pointwise statistics need at least one density");
  PointwiseStats st;
  for (int j = 0; j < samples; ++j) {
    const double th = two_pi * j / samples;
    double m = 0.0, m2 = 0.0;
    for (const auto &d : ds) {
      const double p = d.pointwise(map, th);
      m += p;
      m2 += p * p;
    }
    m /= double(ds.size());
    const double var = std::max(0.0, m2 / double(ds.size()) - m * m);
    st.theta.push_back(th);
    st.mean.push_back(m);
    st.sd.push_back(std::sqrt(var));
    st.mean_of_sd += std::sqrt(var) / samples;
    st.mean_amplitude += std::abs(m) / samples;
  }
  return st;
}

struct MeanSd {
  double mean = 0.0, sd = 0.0;
};

inline MeanSd mean_sd(std::span<const double> v) {
  MeanSd r;
  if (v.empty())
    return r;
  for (double x : v)
    r.mean += x;
  r.mean /= double(v.size());
  for (double x : v)
    r.sd += (x - r.mean) * (x - r.mean);
  r.sd = std::sqrt(r.sd / double(v.size()));
  return r;
}

struct StudyResult {
  PointwiseStats pointwise;
  MeanSd cred, sup, p_neutral;
  int completed = 0, aborted = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<CredibilityReport> reports;
};

inline StudyResult consistency_study(
    const ConformalMap &map, const TrainConfig &base,
    std::span<const std::uint64_t> seeds,
    const std::function<void(std::uint64_t, const CredibilityReport &)>
        &on_run = {}) {
  if (seeds.size() < 1)
    throw ConfigError("consistency study needs at least one seed");
  StudyResult out;
  std::vector<InterfaceDensity> dens;
  std::vector<double> cred, sup, pn;
  for (const auto seed : seeds) {
    TrainConfig cfg = base;
    cfg.seed = seed;
    try {
      TrainRun run = make_run(map, cfg);
      train(run);
      if (run.diverged) {
        ++out.aborted;
        continue;
      }
      auto rep = credibility_eval(run);
      if (on_run)
        on_run(seed, rep);
      dens.push_back(rep.density);
      cred.push_back(rep.metrics.cred);
      sup.push_back(rep.metrics.sup);
      pn.push_back(rep.metrics.p_neutral);
      out.reports.push_back(std::move(rep));
      out.seeds.push_back(seed);
      ++out.completed;
    } catch (const NumericalError &) {
      ++out.aborted;
    } catch (const AssemblyError &) {
      ++out.aborted;
    }
  }
  if (dens.empty())
    throw NumericalError("every run of the study aborted");
  out.pointwise = pointwise_stats(map, dens);
  out.cred = mean_sd(cred);
  out.sup = mean_sd(sup);
  out.p_neutral = mean_sd(pn);
  return out;
}

struct StabilityRow {
  double sigma_c = 0.0;
  double mean_of_sd = 0.0;
  int completed = 0, aborted = 0;
};

inline std::vector<StabilityRow>
stability_study(const ConformalMap &map, const TrainConfig &base,
                std::span<const double> sigma_cs,
                std::span<const std::uint64_t> seeds) {
  if (sigma_cs.empty())
    throw ConfigError("stability study needs at least one conductivity");
  std::vector<StabilityRow> rows;
  for (double sc : sigma_cs) {
    TrainConfig cfg = base;
    cfg.sigma_c = sc;
    const auto st = consistency_study(map, cfg, seeds);
    rows.push_back({sc, st.pointwise.mean_of_sd, st.completed, st.aborted});
  }
  return rows;
}

} // namespace coco
