#pragma once

// Direct inverse design of the interface density: minimize the first-row
// scattering norm of the series solver over the density coefficients.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "coco/analytic.hpp"
#include "coco/colloc.hpp"
#include "coco/errors.hpp"
#include "coco/geometry.hpp"
#include "coco/nn.hpp"

namespace coco {

enum class Optimizer { adam, nelder_mead };

inline std::string to_string(Optimizer o) {
  return o == Optimizer::adam ? "adam" : "nelder-mead";
}

inline Optimizer optimizer_from_string(const std::string &s) {
  if (s == "adam")
    return Optimizer::adam;
  if (s == "nelder-mead")
    return Optimizer::nelder_mead;
  throw ConfigError("unknown optimizer '" + s + "'");
}

struct DesignConfig {
  int n = 20;
  /// Matrix truncation; 0 selects default_truncation().
  int N = 0;
  double eps_reg = 1e-6;
  double positivity_weight = 1e2;
  int positivity_samples = 256;
  Optimizer optimizer = Optimizer::nelder_mead;
  double learning_rate = 1e-3;
  int max_iters = 100000;
  double fd_step = 1e-6;
  std::uint64_t seed = 0;
  /// Initial pointwise interface value.
  double init_p0 = 5.0;
  /// Standard deviation of the seeded perturbation of the initial
  /// coefficients (0 disables it).
  double init_jitter = 0.0;
  /// Train with H = x1 only instead of both x1 and x2.
  bool single_field = false;
  /// Nelder-Mead restart: when (f_max - f_min) <= spread * |f_min| the
  /// simplex is rebuilt around the best vertex with this relative step.
  double nm_restart_spread = 1e-6;
  double nm_restart_step = 1e-2;
  /// Share of the Nelder-Mead budget spent first without the positivity
  /// term. The hinge's kinks stall the simplex far from the constrained
  /// optimum unless it starts near it.
  double nm_smooth_fraction = 0.3;

  void validate() const {
    if (n < 0)
      throw ConfigError("design order n must be >= 0");
    if (!(learning_rate > 0.0))
      throw ConfigError("learning_rate must be > 0");
    if (max_iters < 0)
      throw ConfigError("max_iters must be >= 0");
    if (!(fd_step > 1e-9 && fd_step < 1e-3))
      throw ConfigError("fd_step must lie in (1e-9, 1e-3)");
    if (eps_reg < 0.0 || positivity_weight < 0.0)
      throw ConfigError("weights must be nonnegative");
    if (init_jitter < 0.0)
      throw ConfigError("init_jitter must be nonnegative");
    if (!std::isfinite(init_p0))
      throw ConfigError("init_p0 must be finite");
    if (!(nm_restart_step > 0.0) || nm_restart_spread < 0.0)
      throw ConfigError("invalid Nelder-Mead restart settings");
    if (!(nm_smooth_fraction >= 0.0 && nm_smooth_fraction < 1.0))
      throw ConfigError("nm_smooth_fraction must lie in [0, 1)");
  }
};

inline double neutral_disk_value(double sigma_c, double sigma_m) {
  return sigma_c > sigma_m ? sigma_c * sigma_m / (sigma_c - sigma_m) : 1.0;
}

/// Precomputed per-shape data for repeated objective evaluations.
class DesignProblem {
public:
  DesignProblem(ConformalMap map, double sigma_c, double sigma_m,
                DesignConfig cfg)
      : map_(std::move(map)), sigma_c_(sigma_c), sigma_m_(sigma_m),
        cfg_(std::move(cfg)) {
    cfg_.validate();
    N_ = cfg_.N > 0 ? cfg_.N : default_truncation(map_, cfg_.n);
    if (cfg_.n > N_)
      throw ConfigError("density order exceeds matrix truncation");
    faber_ = faber_build(map_, N_);
    ops_ = shape_operators(faber_, map_.gamma(), N_);
    const int J = cfg_.positivity_samples;
    inv_h_.resize(J);
    for (int j = 0; j < J; ++j)
      inv_h_[j] = 1.0 / scale_factor(map_, map_.rho0(), two_pi * j / J);
  }

  [[nodiscard]] const ConformalMap &map() const { return map_; }
  [[nodiscard]] const FaberTable &faber() const { return faber_; }
  [[nodiscard]] const ShapeOperators &operators() const { return ops_; }
  [[nodiscard]] const DesignConfig &config() const { return cfg_; }
  [[nodiscard]] int truncation() const { return N_; }
  [[nodiscard]] double sigma_c() const { return sigma_c_; }
  [[nodiscard]] double sigma_m() const { return sigma_m_; }

  /// Sum over the positivity samples of max(0, -p(theta)).
  [[nodiscard]] double positivity_violation(const InterfaceDensity &d) const {
    const int J = static_cast<int>(inv_h_.size());
    double acc = 0.0;
    for (int j = 0; j < J; ++j)
      acc += std::max(0.0, -d.weighted(two_pi * j / J) * inv_h_[j]);
    return acc;
  }

  /// Scattering and regularizer terms only.
  [[nodiscard]] double smooth_objective(const InterfaceDensity &d) const {
    const FirstRows rows = first_rows(ops_, d, sigma_c_, sigma_m_);
    double val = first_row_scattering(rows, 1.0).squaredNorm();
    if (!cfg_.single_field)
      val += first_row_scattering(rows, cplx(0, -1)).squaredNorm();
    return val + cfg_.eps_reg * density_regularizer(d);
  }

  [[nodiscard]] double objective(const InterfaceDensity &d) const {
    return smooth_objective(d) +
           cfg_.positivity_weight * positivity_violation(d);
  }

  [[nodiscard]] double objective(std::span<const double> x) const {
    return objective(InterfaceDensity::from_params(map_.gamma(), x));
  }

  [[nodiscard]] InterfaceDensity initial_density() const {
    InterfaceDensity d = constant_density(map_, cfg_.init_p0, cfg_.n);
    if (cfg_.init_jitter > 0.0) {
      std::mt19937_64 rng(cfg_.seed);
      std::normal_distribution<double> nd(0.0, cfg_.init_jitter);
      d.p0 += nd(rng);
      for (auto &p : d.pk)
        p += cplx(nd(rng), nd(rng));
    }
    return d;
  }

private:
  ConformalMap map_;
  double sigma_c_, sigma_m_;
  DesignConfig cfg_;
  int N_ = 0;
  FaberTable faber_;
  ShapeOperators ops_;
  std::vector<double> inv_h_;
};

/// Objective: ||row_1 s(x1)||^2 + ||row_1 s(x2)||^2 (x1 only in
/// single-field mode) + eps * regularizer + positivity penalty.
inline double design_objective(const ConformalMap &map,
                               const InterfaceDensity &density, double sigma_c,
                               double sigma_m, const DesignConfig &cfg) {
  DesignConfig c = cfg;
  c.n = std::max(cfg.n, density.order());
  return DesignProblem(map, sigma_c, sigma_m, c).objective(density);
}

struct DesignResult {
  InterfaceDensity density;
  double best_objective = 0.0;
  /// Objective at the iterate of each step (Adam) or best simplex vertex.
  std::vector<double> trace;
  /// Best objective seen so far at each step.
  std::vector<double> best_trace;
  bool admissible = false;
  int truncation = 0;
};

namespace detail {

inline double checked(double v, const char *where) {
  if (!std::isfinite(v))
    throw NumericalError(std::string("non-finite design objective in ") +
                         where);
  return v;
}

inline void fd_gradient(const DesignProblem &prob, std::vector<double> &x,
                        std::vector<double> &g) {
  const double rel = prob.config().fd_step;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double h = rel * std::max(1.0, std::abs(xi));
    x[i] = xi + h;
    const double fp = checked(prob.objective(x), "gradient stencil");
    x[i] = xi - h;
    const double fm = checked(prob.objective(x), "gradient stencil");
    x[i] = xi;
    g[i] = (fp - fm) / (2.0 * h);
  }
}

/// Nelder-Mead with standard coefficients. A collapsed simplex is rebuilt
/// around its best vertex with a fresh axis-aligned step. Calls
/// on_iter(best value, best vertex) once per iteration and returns the
/// best vertex.
template <class F, class OnIter>
std::vector<double> nelder_mead(F &&objective, const std::vector<double> &x0,
                                int iters, const DesignConfig &cfg,
                                OnIter &&on_iter) {
  const std::size_t n = x0.size();
  auto eval = [&](const std::vector<double> &at) {
    return checked(objective(std::span<const double>(at)), "simplex");
  };
  std::vector<std::vector<double>> simplex(n + 1, x0);
  std::vector<double> f(n + 1);
  auto rebuild = [&](const std::vector<double> &at, double step) {
    for (std::size_t k = 0; k <= n; ++k) {
      simplex[k] = at;
      if (k > 0)
        simplex[k][k - 1] += step * std::max(1.0, std::abs(at[k - 1]));
      f[k] = eval(simplex[k]);
    }
  };
  if (iters <= 0)
    return x0;
  rebuild(x0, 0.1);
  std::vector<std::size_t> order(n + 1);
  std::vector<double> centroid(n), trial(n), trial2(n);
  auto sort_vertices = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return f[a] < f[b]; });
  };
  for (int it = 0; it < iters; ++it) {
    sort_vertices();
    if (f[order.back()] - f[order.front()] <=
        cfg.nm_restart_spread * std::abs(f[order.front()])) {
      const auto keep = simplex[order.front()];
      rebuild(keep, cfg.nm_restart_step);
      sort_vertices();
    }
    const std::size_t lo = order.front(), hi = order.back(), nh = order[n - 1];
    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k <= n; ++k)
      if (k != hi)
        for (std::size_t i = 0; i < n; ++i)
          centroid[i] += simplex[k][i] / double(n);
    auto along = [&](double t, std::vector<double> &out) {
      for (std::size_t i = 0; i < n; ++i)
        out[i] = centroid[i] + t * (simplex[hi][i] - centroid[i]);
      return eval(out);
    };
    const double fr = along(-1.0, trial);
    if (fr < f[lo]) {
      const double fe = along(-2.0, trial2);
      if (fe < fr) {
        simplex[hi] = trial2;
        f[hi] = fe;
      } else {
        simplex[hi] = trial;
        f[hi] = fr;
      }
    } else if (fr < f[nh]) {
      simplex[hi] = trial;
      f[hi] = fr;
    } else {
      const double fc = along(fr < f[hi] ? -0.5 : 0.5, trial2);
      if (fc < std::min(fr, f[hi])) {
        simplex[hi] = trial2;
        f[hi] = fc;
      } else {
        for (std::size_t k = 0; k <= n; ++k) {
          if (k == lo)
            continue;
          for (std::size_t i = 0; i < n; ++i)
            simplex[k][i] =
                simplex[lo][i] + 0.5 * (simplex[k][i] - simplex[lo][i]);
          f[k] = eval(simplex[k]);
        }
      }
    }
    const auto best = std::min_element(f.begin(), f.end());
    on_iter(*best, std::span<const double>(
                       simplex[std::size_t(best - f.begin())]));
  }
  const auto best = std::min_element(f.begin(), f.end());
  return simplex[std::size_t(best - f.begin())];
}

} // namespace detail

/// Runs the configured optimizer from `start`.
inline DesignResult design_direct(const DesignProblem &prob,
                                  const InterfaceDensity &start) {
  const auto &cfg = prob.config();
  if (start.order() != cfg.n)
    throw ConfigError("start density order does not match the config");
  std::vector<double> x = start.to_params();
  const double gamma = prob.map().gamma();

  DesignResult res;
  res.truncation = prob.truncation();
  std::vector<double> best_x = x;
  double best = detail::checked(prob.objective(x), "initial density");
  auto record = [&](double f, std::span<const double> at) {
    res.trace.push_back(f);
    if (f < best) {
      best = f;
      best_x.assign(at.begin(), at.end());
    }
    res.best_trace.push_back(best);
  };

  if (cfg.optimizer == Optimizer::adam) {
    nn::AdamState st(x.size(), cfg.learning_rate);
    std::vector<double> g(x.size());
    for (int it = 0; it < cfg.max_iters; ++it) {
      detail::fd_gradient(prob, x, g);
      nn::adam_step(st, x, g);
      record(detail::checked(prob.objective(x), "Adam iterate"), x);
    }
  } else {
    const auto params = [&](std::span<const double> at) {
      return InterfaceDensity::from_params(gamma, at);
    };
    const int smooth_iters =
        cfg.positivity_weight > 0.0
            ? static_cast<int>(cfg.nm_smooth_fraction * cfg.max_iters)
            : 0;
    if (smooth_iters > 0) {
      x = detail::nelder_mead(
          [&](std::span<const double> at) {
            return prob.smooth_objective(params(at));
          },
          x, smooth_iters, cfg, [&](double fs, std::span<const double> at) {
            record(fs + cfg.positivity_weight *
                            prob.positivity_violation(params(at)),
                   at);
          });
    }
    detail::nelder_mead(
        [&](std::span<const double> at) { return prob.objective(at); }, x,
        cfg.max_iters - smooth_iters, cfg, record);
  }

  res.density = InterfaceDensity::from_params(gamma, best_x);
  res.best_objective = best;
  res.admissible = res.density.admissible(prob.map());
  return res;
}

inline DesignResult design_direct(const DesignProblem &prob) {
  return design_direct(prob, prob.initial_density());
}

inline DesignResult design_direct(const ConformalMap &map, double sigma_c,
                                  double sigma_m, const DesignConfig &cfg) {
  return design_direct(DesignProblem(map, sigma_c, sigma_m, cfg));
}

// ---------------------------------------------------------------------------

struct CrossDirectionReport {
  double p_neutral_x1 = 0.0;
  double p_neutral_x2 = 0.0;
  double p_neutral_mixed = 0.0; // H = 2 x1 - x2
  bool first_rows_independent = false;
  double singular_ratio = 0.0;
  int truncation = 0;
};

/// P-Neutral of the series solution on the standard grid for
/// H = x1, x2 and 2 x1 - x2.
inline CrossDirectionReport
cross_direction_report(const ConformalMap &map, const InterfaceDensity &density,
                       double sigma_c, double sigma_m, int N = 0) {
  if (N <= 0)
    N = default_truncation(map, density.order());
  const FaberTable faber = faber_build(map, N);
  const MatrixSystem sys =
      assemble_system(map, faber, density, sigma_c, sigma_m, N);
  const auto grid = standard_grid(map);

  auto pn = [&](double a, double b) {
    const auto field = BackgroundField::linear(a, b);
    const auto sol = solve_scattering(sys, field);
    return p_neutral(eval_exterior(map, faber, field, sol, grid));
  };
  CrossDirectionReport rep;
  rep.p_neutral_x1 = pn(1.0, 0.0);
  rep.p_neutral_x2 = pn(0.0, 1.0);
  rep.p_neutral_mixed = pn(2.0, -1.0);
  rep.singular_ratio =
      first_row_singular_ratio(sys.Atilde1.row(0), sys.Atilde2.row(0));
  rep.first_rows_independent = first_row_independence(sys);
  rep.truncation = N;
  return rep;
}

} // namespace coco
