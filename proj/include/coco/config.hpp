#pragma once

// Experiment configuration shared by the CLI commands. Parses from and
// serializes to JSON; unknown keys are rejected.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "coco/designer.hpp"
#include "coco/errors.hpp"
#include "coco/geometry.hpp"
#include "coco/io.hpp"
#include "coco/training.hpp"

namespace coco {

struct ExperimentConfig {
  std::string shape = "fish";
  /// Inline map; overrides `shape` when present.
  std::optional<ConformalMap> map;
  double sigma_c = 5.0, sigma_m = 1.0;
  int n = 20;
  /// Matrix truncation; 0 = default.
  int N = 0;
  CollocationCounts counts{};
  double L = 0.0, delta = 0.0;
  DesignConfig design{};
  /// Training settings; sigma, n, counts, L, delta, seed and weights are
  /// taken from the fields above.
  TrainConfig train{};
  LossWeights weights{};
  std::string output_dir = "coco_out";
  std::uint64_t seed = 0;
  int threads = 1;

  [[nodiscard]] ConformalMap resolve_map() const {
    if (map)
      return *map;
    return shape_library(shape);
  }

  [[nodiscard]] std::string shape_label() const {
    return map ? std::string("custom") : shape;
  }

  [[nodiscard]] DesignConfig design_config() const {
    DesignConfig d = design;
    d.n = n;
    d.N = N;
    d.seed = seed;
    return d;
  }

  [[nodiscard]] TrainConfig train_config() const {
    TrainConfig t = train;
    t.sigma_c = sigma_c;
    t.sigma_m = sigma_m;
    t.n = n;
    t.counts = counts;
    t.L = L;
    t.delta = delta;
    t.seed = seed;
    t.weights = weights;
    t.threads = threads;
    return t;
  }

  void validate() const {
    if (!(sigma_c > 0.0) || !(sigma_m > 0.0))
      throw ConfigError("conductivities must be positive");
    if (n < 0 || N < 0)
      throw ConfigError("n and N must be >= 0");
    if (threads < 1)
      throw ConfigError("threads must be >= 1");
    (void)resolve_map();
    design_config().validate();
    train_config().validate();
  }
};

namespace detail {

inline void reject_unknown(const io::json &j, std::set<std::string> keys,
                           const std::string &where) {
  if (!j.is_object())
    throw ConfigError(where + " must be a JSON object");
  for (const auto &[k, v] : j.items())
    if (!keys.count(k))
      throw ConfigError("unknown key '" + k + "' in " + where);
}

template <class T>
void get_if(const io::json &j, const char *key, T &out) {
  if (j.contains(key))
    out = j.at(key).get<T>();
}

} // namespace detail

inline io::json to_json(const ExperimentConfig &c) {
  using io::json;
  json j;
  j["schema_version"] = io::schema_version;
  j["shape"] = c.shape;
  if (c.map)
    j["map"] = io::map_to_json(*c.map);
  j["sigma_c"] = c.sigma_c;
  j["sigma_m"] = c.sigma_m;
  j["n"] = c.n;
  j["N"] = c.N;
  j["counts"] = {{"n_ext", c.counts.n_ext},
                 {"n_int", c.counts.n_int},
                 {"n_bd", c.counts.n_bd}};
  j["L"] = c.L;
  j["delta"] = c.delta;
  const auto &d = c.design;
  j["design"] = {{"eps_reg", d.eps_reg},
                 {"positivity_weight", d.positivity_weight},
                 {"positivity_samples", d.positivity_samples},
                 {"optimizer", to_string(d.optimizer)},
                 {"learning_rate", d.learning_rate},
                 {"max_iters", d.max_iters},
                 {"fd_step", d.fd_step},
                 {"init_p0", d.init_p0},
                 {"init_jitter", d.init_jitter},
                 {"single_field", d.single_field},
                 {"nm_restart_spread", d.nm_restart_spread},
                 {"nm_restart_step", d.nm_restart_step},
                 {"nm_smooth_fraction", d.nm_smooth_fraction}};
  const auto &t = c.train;
  j["train"] = {{"mode", to_string(t.mode)},
                {"iterations", t.iterations},
                {"lr_pinn", t.lr_pinn},
                {"lr_inv", t.lr_inv},
                {"eta", t.eta},
                {"decay_every", t.decay_every},
                {"init_p0", t.init_p0},
                {"field_a", t.field_a},
                {"field_b", t.field_b},
                {"widths", t.widths},
                {"divergence_factor", t.divergence_factor}};
  const auto &w = c.weights;
  j["weights"] = {{"w1", w.w1}, {"w2", w.w2}, {"w3", w.w3},
                  {"w4", w.w4}, {"w5", w.w5}, {"eps", w.eps}};
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  return j;
}

inline ExperimentConfig config_from_json(const io::json &j) {
  using detail::get_if;
  ExperimentConfig c;
  try {
    detail::reject_unknown(j,
                           {"schema_version", "shape", "map", "sigma_c",
                            "sigma_m", "n", "N", "counts", "L", "delta",
                            "design", "train", "weights", "output_dir", "seed",
                            "threads"},
                           "config");
    if (j.contains("schema_version"))
      io::check_schema(j, "config");
    get_if(j, "shape", c.shape);
    if (j.contains("map"))
      c.map = io::map_from_json(j.at("map"));
    get_if(j, "sigma_c", c.sigma_c);
    get_if(j, "sigma_m", c.sigma_m);
    get_if(j, "n", c.n);
    get_if(j, "N", c.N);
    if (j.contains("counts")) {
      const auto &k = j.at("counts");
      detail::reject_unknown(k, {"n_ext", "n_int", "n_bd"}, "counts");
      get_if(k, "n_ext", c.counts.n_ext);
      get_if(k, "n_int", c.counts.n_int);
      get_if(k, "n_bd", c.counts.n_bd);
    }
    get_if(j, "L", c.L);
    get_if(j, "delta", c.delta);
    if (j.contains("design")) {
      const auto &d = j.at("design");
      detail::reject_unknown(
          d,
          {"eps_reg", "positivity_weight", "positivity_samples", "optimizer",
           "learning_rate", "max_iters", "fd_step", "init_p0", "init_jitter",
           "single_field", "nm_restart_spread", "nm_restart_step",
           "nm_smooth_fraction"},
          "design");
      auto &o = c.design;
      get_if(d, "eps_reg", o.eps_reg);
      get_if(d, "positivity_weight", o.positivity_weight);
      get_if(d, "positivity_samples", o.positivity_samples);
      if (d.contains("optimizer"))
        o.optimizer = optimizer_from_string(d.at("optimizer").get<std::string>());
      get_if(d, "learning_rate", o.learning_rate);
      get_if(d, "max_iters", o.max_iters);
      get_if(d, "fd_step", o.fd_step);
      get_if(d, "init_p0", o.init_p0);
      get_if(d, "init_jitter", o.init_jitter);
      get_if(d, "single_field", o.single_field);
      get_if(d, "nm_restart_spread", o.nm_restart_spread);
      get_if(d, "nm_restart_step", o.nm_restart_step);
      get_if(d, "nm_smooth_fraction", o.nm_smooth_fraction);
    }
    if (j.contains("train")) {
      const auto &t = j.at("train");
      detail::reject_unknown(t,
                             {"mode", "iterations", "lr_pinn", "lr_inv", "eta",
                              "decay_every", "init_p0", "field_a", "field_b",
                              "widths", "divergence_factor"},
                             "train");
      auto &o = c.train;
      if (t.contains("mode"))
        o.mode = train_mode_from_string(t.at("mode").get<std::string>());
      get_if(t, "iterations", o.iterations);
      get_if(t, "lr_pinn", o.lr_pinn);
      get_if(t, "lr_inv", o.lr_inv);
      get_if(t, "eta", o.eta);
      get_if(t, "decay_every", o.decay_every);
      get_if(t, "init_p0", o.init_p0);
      get_if(t, "field_a", o.field_a);
      get_if(t, "field_b", o.field_b);
      get_if(t, "widths", o.widths);
      get_if(t, "divergence_factor", o.divergence_factor);
    }
    if (j.contains("weights")) {
      const auto &w = j.at("weights");
      detail::reject_unknown(w, {"w1", "w2", "w3", "w4", "w5", "eps"},
                             "weights");
      get_if(w, "w1", c.weights.w1);
      get_if(w, "w2", c.weights.w2);
      get_if(w, "w3", c.weights.w3);
      get_if(w, "w4", c.weights.w4);
      get_if(w, "w5", c.weights.w5);
      get_if(w, "eps", c.weights.eps);
    }
    get_if(j, "output_dir", c.output_dir);
    get_if(j, "seed", c.seed);
    get_if(j, "threads", c.threads);
  } catch (const io::json::exception &e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  return c;
}

} // namespace coco
