// coco: command-line driver for the series solver, the direct designer and
// PINN training. Exit codes: 0 success, 1 numerical failure, 2 bad config.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coco/analytic.hpp"
#include "coco/colloc.hpp"
#include "coco/config.hpp"
#include "coco/designer.hpp"
#include "coco/errors.hpp"
#include "coco/geometry.hpp"
#include "coco/io.hpp"
#include "coco/training.hpp"

namespace fs = std::filesystem;
using namespace coco;
using io::json;

namespace {

struct Outputs {
  fs::path dir;
  json files = json::object();

  void text(const std::string &name, const std::string &content) {
    io::write_text(dir / name, content);
    files[name] = io::git_blob_hash(content);
  }
  void js(const std::string &name, const json &j) { text(name, j.dump(2) + "\n"); }
};

struct Common {
  std::string config_file;
  std::string shape;
  std::string map_file;
  std::optional<double> sigma_c, sigma_m;
  std::optional<int> n, N;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  std::optional<int> threads;
  std::optional<int> n_ext, n_int, n_bd;
  std::optional<double> L, delta;
};

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("--config", c.config_file, "JSON experiment config");
  cmd->add_option("--shape", c.shape, "library shape name");
  cmd->add_option("--map", c.map_file, "JSON map {gamma, coeffs:[[k,re,im]]}");
  cmd->add_option("--sigma-c", c.sigma_c, "inclusion conductivity");
  cmd->add_option("--sigma-m", c.sigma_m, "matrix conductivity");
  cmd->add_option("-n,--order", c.n, "interface density order");
  cmd->add_option("-N,--truncation", c.N, "matrix truncation (0 = default)");
  cmd->add_option("--seed", c.seed, "random seed");
  cmd->add_option("-o,--output-dir", c.output_dir,
                  "output directory (env COCO_OUTPUT_DIR)");
  cmd->add_option("--threads", c.threads, "worker threads (env COCO_THREADS)");
  cmd->add_option("--n-ext", c.n_ext, "exterior collocation points");
  cmd->add_option("--n-int", c.n_int, "interior collocation points");
  cmd->add_option("--n-bd", c.n_bd, "boundary collocation points");
  cmd->add_option("--outer-radius", c.L, "outer radius L (0 = 5 gamma)");
  cmd->add_option("--delta", c.delta, "boundary offset (0 = 1e-2 gamma)");
}

ExperimentConfig resolve(const Common &c, std::vector<std::string> &inputs,
                         json &input_hashes) {
  ExperimentConfig cfg;
  if (!c.config_file.empty()) {
    const std::string txt = io::read_text(c.config_file);
    input_hashes["config"] = io::git_blob_hash(txt);
    try {
      cfg = config_from_json(json::parse(txt));
    } catch (const json::parse_error &e) {
      throw ConfigError(std::string("invalid config JSON: ") + e.what());
    }
  }
  if (const char *env = std::getenv("COCO_OUTPUT_DIR"); env && *env)
    cfg.output_dir = env;
  if (const char *env = std::getenv("COCO_THREADS"); env && *env) {
    try {
      cfg.threads = std::stoi(env);
    } catch (const std::exception &) {
      throw ConfigError("COCO_THREADS must be an integer");
    }
  }
  if (!c.shape.empty()) {
    cfg.shape = c.shape;
    cfg.map.reset();
  }
  if (!c.map_file.empty()) {
    const std::string txt = io::read_text(c.map_file);
    input_hashes["map"] = io::git_blob_hash(txt);
    cfg.map = io::map_from_json(json::parse(txt));
  }
  if (c.sigma_c)
    cfg.sigma_c = *c.sigma_c;
  if (c.sigma_m)
    cfg.sigma_m = *c.sigma_m;
  if (c.n)
    cfg.n = *c.n;
  if (c.N)
    cfg.N = *c.N;
  if (c.seed)
    cfg.seed = *c.seed;
  if (!c.output_dir.empty())
    cfg.output_dir = c.output_dir;
  if (c.threads)
    cfg.threads = *c.threads;
  if (c.n_ext)
    cfg.counts.n_ext = *c.n_ext;
  if (c.n_int)
    cfg.counts.n_int = *c.n_int;
  if (c.n_bd)
    cfg.counts.n_bd = *c.n_bd;
  if (c.L)
    cfg.L = *c.L;
  if (c.delta)
    cfg.delta = *c.delta;
  (void)inputs;
  return cfg;
}

json manifest(const std::string &command, const ExperimentConfig &cfg,
              const json &inputs, const Outputs &out) {
  return {{"schema_version", io::schema_version},
          {"command", command},
          {"config", to_json(cfg)},
          {"seed", cfg.seed},
          {"inputs", inputs},
          {"outputs", out.files}};
}

json metrics_json(const Metrics &m) {
  return {{"cred", m.cred}, {"sup", m.sup}, {"p_neutral", m.p_neutral}};
}

// ---------------------------------------------------------------------------

int cmd_shapes(bool as_json) {
  json all = json::object();
  for (const auto &name : library_shape_names()) {
    const auto m = shape_library(name);
    if (as_json) {
      all[name] = io::map_to_json(m);
      continue;
    }
    std::cout << name << "  gamma=" << m.gamma();
    for (int k = 0; k <= m.degree(); ++k)
      if (m.a(k) != cplx{})
        std::cout << "  a_" << k << "=" << m.a(k).real()
                  << (m.a(k).imag() != 0.0
                          ? (m.a(k).imag() > 0 ? "+" : "") +
                                std::to_string(m.a(k).imag()) + "i"
                          : "");
    std::cout << '\n';
  }
  if (as_json)
    std::cout << all.dump(2) << '\n';
  return 0;
}

struct SolveArgs {
  std::string density_file;
  std::optional<double> p0;
  double a = 1.0, b = 0.0;
};

int cmd_solve(const Common &c, const SolveArgs &s) {
  std::vector<std::string> in;
  json hashes = json::object();
  ExperimentConfig cfg = resolve(c, in, hashes);
  cfg.validate();
  const auto map = cfg.resolve_map();

  InterfaceDensity d;
  if (!s.density_file.empty()) {
    const std::string txt = io::read_text(s.density_file);
    hashes["density"] = io::git_blob_hash(txt);
    d = io::density_from_json(json::parse(txt));
  } else if (s.p0) {
    d = InterfaceDensity(map.gamma(), *s.p0);
  } else {
    throw ConfigError("solve needs --density FILE or --p0 VALUE");
  }
  if (std::abs(d.gamma - map.gamma()) > 1e-12 * map.gamma())
    throw ConfigError("density gamma does not match the map");

  const int N = cfg.N > 0 ? cfg.N : default_truncation(map, d.order());
  const FaberTable faber = faber_build(map, N);
  const MatrixSystem sys =
      assemble_system(map, faber, d, cfg.sigma_c, cfg.sigma_m, N);
  const auto field = BackgroundField::linear(s.a, s.b);
  const auto sol = solve_scattering(sys, field);
  const auto grid = exterior_grid(
      map, cfg.counts.n_ext, cfg.counts.n_bd,
      cfg.L > 0.0 ? cfg.L : 5.0 * map.gamma());
  const auto samples = eval_exterior(map, faber, field, sol, grid);

  Outputs out{cfg.output_dir};
  out.text("field.csv", io::field_csv(samples));
  const auto std_samples =
      eval_exterior(map, faber, field, sol, standard_grid(map));
  json m = {{"schema_version", io::schema_version},
            {"p_neutral", p_neutral(samples)},
            {"p_neutral_standard_grid", p_neutral(std_samples)},
            {"row1_norm", CRow(sol.s.row(0)).norm()},
            {"residual", residual_check(sys, sol)},
            {"truncation", N},
            {"cond_B2bar", sys.cond_B2bar},
            {"cond_schur", sys.cond_schur},
            {"grunsky_tail_ratio", faber.tail_ratio},
            {"warnings", sys.warnings}};
  out.js("metrics.json", m);
  io::write_json(fs::path(cfg.output_dir) / "manifest.json",
                 manifest("solve", cfg, hashes, out));
  std::cout << "P-Neutral " << m["p_neutral"].get<double>() << '\n';
  for (const auto &w : sys.warnings)
    std::cerr << "warning: " << w << '\n';
  return 0;
}

int cmd_design(const Common &c, const DesignConfig &over,
               const std::map<std::string, bool> &set) {
  std::vector<std::string> in;
  json hashes = json::object();
  ExperimentConfig cfg = resolve(c, in, hashes);
  if (set.at("optimizer"))
    cfg.design.optimizer = over.optimizer;
  if (set.at("max_iters"))
    cfg.design.max_iters = over.max_iters;
  if (set.at("learning_rate"))
    cfg.design.learning_rate = over.learning_rate;
  if (set.at("eps_reg"))
    cfg.design.eps_reg = over.eps_reg;
  if (set.at("positivity_weight"))
    cfg.design.positivity_weight = over.positivity_weight;
  if (set.at("init_p0"))
    cfg.design.init_p0 = over.init_p0;
  if (set.at("init_jitter"))
    cfg.design.init_jitter = over.init_jitter;
  if (set.at("single_field"))
    cfg.design.single_field = true;
  cfg.validate();
  const auto map = cfg.resolve_map();

  const DesignProblem prob(map, cfg.sigma_c, cfg.sigma_m, cfg.design_config());
  const DesignResult res = design_direct(prob);
  const auto rep = cross_direction_report(map, res.density, cfg.sigma_c,
                                          cfg.sigma_m, prob.truncation());
  const FirstRows rows =
      first_rows(prob.operators(), res.density, cfg.sigma_c, cfg.sigma_m);

  Outputs out{cfg.output_dir};
  out.js("density.json", io::density_to_json(res.density));
  out.text("trace.csv", io::design_trace_csv(res));
  json r = {{"schema_version", io::schema_version},
            {"best_objective", res.best_objective},
            {"admissible", res.admissible},
            {"min_pointwise", res.density.min_pointwise(map)},
            {"truncation", res.truncation},
            {"row1_norm_x1", first_row_scattering(rows, 1.0).norm()},
            {"row1_norm_x2", first_row_scattering(rows, cplx(0, -1)).norm()},
            {"p_neutral", {{"x1", rep.p_neutral_x1},
                           {"x2", rep.p_neutral_x2},
                           {"2x1-x2", rep.p_neutral_mixed}}},
            {"first_rows_independent", rep.first_rows_independent},
            {"singular_ratio", rep.singular_ratio}};
  out.js("report.json", r);
  io::write_json(fs::path(cfg.output_dir) / "manifest.json",
                 manifest("design", cfg, hashes, out));
  std::cout << "objective " << res.best_objective << "  P-Neutral x1 "
            << rep.p_neutral_x1 << "  x2 " << rep.p_neutral_x2 << "  2x1-x2 "
            << rep.p_neutral_mixed << (res.admissible ? "" : "  (inadmissible)")
            << '\n';
  return 0;
}

struct TrainArgs {
  std::optional<std::string> mode;
  std::optional<int> iterations;
  bool desk = false;
  bool quiet = false;
};

void apply_train(ExperimentConfig &cfg, const Common &c, const TrainArgs &t) {
  if (t.desk) {
    // preset first; explicit point counts still win
    const TrainConfig d = desk_preset(cfg.train);
    cfg.train = d;
    cfg.counts = {c.n_ext.value_or(d.counts.n_ext),
                  c.n_int.value_or(d.counts.n_int),
                  c.n_bd.value_or(d.counts.n_bd)};
  }
  if (t.mode)
    cfg.train.mode = train_mode_from_string(*t.mode);
  if (t.iterations)
    cfg.train.iterations = *t.iterations;
}

int cmd_train(const Common &c, const TrainArgs &t) {
  std::vector<std::string> in;
  json hashes = json::object();
  ExperimentConfig cfg = resolve(c, in, hashes);
  apply_train(cfg, c, t);
  cfg.validate();
  const auto map = cfg.resolve_map();

  TrainRun run = make_run(map, cfg.train_config());
  train(run, [&](int it, const LossComponents &L) {
    if (!t.quiet && it % 500 == 0)
      std::cerr << "iter " << it << "  loss " << L.total_reg() << '\n';
  });
  if (run.diverged)
    std::cerr << "warning: training diverged; stopped after "
              << run.trace.size() << " iterations\n";
  const auto rep = credibility_eval(run);

  Outputs out{cfg.output_dir};
  out.text("loss_trace.csv", io::loss_trace_csv(run.trace));
  out.js("u_int.json", io::mlp_to_json(run.u_int));
  out.js("u_ext.json", io::mlp_to_json(run.u_ext));
  if (cfg.train.mode == TrainMode::classical)
    out.js("p_nn.json", io::mlp_to_json(run.p_nn));
  out.js("density.json", io::density_to_json(rep.density));
  json m = {{"schema_version", io::schema_version},
            {"mode", to_string(cfg.train.mode)},
            {"iterations_completed", run.trace.size()},
            {"diverged", run.diverged},
            {"metrics", metrics_json(rep.metrics)},
            {"admissible", rep.admissible},
            {"truncation", rep.truncation},
            {"warnings", rep.warnings}};
  if (cfg.train.mode == TrainMode::classical)
    m["fourier_fit_error"] = rep.fit_error;
  out.js("metrics.json", m);
  io::write_json(fs::path(cfg.output_dir) / "manifest.json",
                 manifest("train", cfg, hashes, out));
  std::cout << "Cred " << rep.metrics.cred << "  sup " << rep.metrics.sup
            << "  P-Neutral " << rep.metrics.p_neutral << '\n';
  return run.diverged ? 1 : 0;
}

struct StudyArgs {
  std::string kind = "consistency";
  std::vector<std::uint64_t> seeds;
  int runs = 3;
  std::vector<double> sigma_cs{3, 4, 5, 6, 7};
};

int cmd_study(const Common &c, const TrainArgs &t, const StudyArgs &s) {
  std::vector<std::string> in;
  json hashes = json::object();
  ExperimentConfig cfg = resolve(c, in, hashes);
  apply_train(cfg, c, t);
  cfg.validate();
  const auto map = cfg.resolve_map();
  std::vector<std::uint64_t> seeds = s.seeds;
  if (seeds.empty())
    for (int i = 0; i < s.runs; ++i)
      seeds.push_back(cfg.seed + std::uint64_t(i));
  if (seeds.empty())
    throw ConfigError("study needs at least one seed");

  Outputs out{cfg.output_dir};
  const std::string method = to_string(cfg.train.mode);
  if (s.kind == "consistency") {
    const auto res = consistency_study(
        map, cfg.train_config(), seeds,
        [&](std::uint64_t seed, const CredibilityReport &r) {
          if (!t.quiet)
            std::cerr << "seed " << seed << "  Cred " << r.metrics.cred
                      << "  P-Neutral " << r.metrics.p_neutral << '\n';
        });
    out.text("consistency.csv",
             io::consistency_csv_header() +
                 io::consistency_csv_row(method, cfg.shape_label(), res));
    out.text("pointwise.csv", io::pointwise_csv(res.pointwise));
    std::cout << "mean of sd " << res.pointwise.mean_of_sd << "  runs "
              << res.completed << "  aborted " << res.aborted << '\n';
  } else if (s.kind == "stability") {
    const auto rows =
        stability_study(map, cfg.train_config(), s.sigma_cs, seeds);
    out.text("stability.csv",
             io::stability_csv(method, cfg.shape_label(), rows));
    for (const auto &r : rows)
      std::cout << "sigma_c " << r.sigma_c << "  mean of sd " << r.mean_of_sd
                << '\n';
  } else {
    throw ConfigError("study kind must be consistency or stability");
  }
  json hs = hashes;
  hs["seeds"] = seeds;
  io::write_json(fs::path(cfg.output_dir) / "manifest.json",
                 manifest("study-" + s.kind, cfg, hs, out));
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Neutral inclusion design with imperfect interfaces"};
  app.require_subcommand(1);

  bool shapes_json = false;
  auto *shapes = app.add_subcommand("shapes", "list library shapes");
  shapes->add_flag("--json", shapes_json, "JSON output");

  Common common;
  SolveArgs solve_args;
  auto *solve = app.add_subcommand("solve", "series solution for a density");
  add_common(solve, common);
  solve->add_option("--density", solve_args.density_file, "density JSON");
  solve->add_option("--p0", solve_args.p0, "constant weighted density p0");
  solve->add_option("--field-a", solve_args.a, "H = a x1 + b x2");
  solve->add_option("--field-b", solve_args.b, "H = a x1 + b x2");

  DesignConfig dover;
  std::string optimizer;
  auto *design = app.add_subcommand("design", "direct density design");
  add_common(design, common);
  auto *o_opt = design->add_option("--optimizer", optimizer,
                                   "adam | nelder-mead");
  auto *o_it = design->add_option("--max-iters", dover.max_iters);
  auto *o_lr = design->add_option("--learning-rate", dover.learning_rate);
  auto *o_eps = design->add_option("--eps-reg", dover.eps_reg);
  auto *o_pw = design->add_option("--positivity-weight",
                                  dover.positivity_weight);
  auto *o_p0 = design->add_option("--init-p0", dover.init_p0);
  auto *o_jit = design->add_option("--init-jitter", dover.init_jitter);
  auto *o_single =
      design->add_flag("--single-field", dover.single_field, "train on x1 only");

  TrainArgs targs;
  auto *trainc = app.add_subcommand("train", "PINN training");
  add_common(trainc, common);
  trainc->add_option("--mode", targs.mode, "coco | classical");
  trainc->add_option("--iterations", targs.iterations);
  trainc->add_flag("--desk", targs.desk,
                   "desk preset: 2000/500/500 points, 5000 iterations");
  trainc->add_flag("-q,--quiet", targs.quiet);

  StudyArgs sargs;
  auto *study = app.add_subcommand("study", "repeated-training studies");
  add_common(study, common);
  study->add_option("--kind", sargs.kind, "consistency | stability");
  study->add_option("--seeds", sargs.seeds, "explicit seed list");
  study->add_option("--runs", sargs.runs, "number of seeds (seed, seed+1, ...)");
  study->add_option("--sigma-c-list", sargs.sigma_cs, "stability conductivities");
  study->add_option("--mode", targs.mode, "coco | classical");
  study->add_option("--iterations", targs.iterations);
  study->add_flag("--desk", targs.desk,
                  "desk preset: 2000/500/500 points, 5000 iterations");
  study->add_flag("-q,--quiet", targs.quiet);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (shapes->parsed())
      return cmd_shapes(shapes_json);
    if (solve->parsed())
      return cmd_solve(common, solve_args);
    if (design->parsed()) {
      if (!optimizer.empty())
        dover.optimizer = optimizer_from_string(optimizer);
      const std::map<std::string, bool> set = {
          {"optimizer", o_opt->count() > 0},
          {"max_iters", o_it->count() > 0},
          {"learning_rate", o_lr->count() > 0},
          {"eps_reg", o_eps->count() > 0},
          {"positivity_weight", o_pw->count() > 0},
          {"init_p0", o_p0->count() > 0},
          {"init_jitter", o_jit->count() > 0},
          {"single_field", o_single->count() > 0}};
      return cmd_design(common, dover, set);
    }
    if (trainc->parsed())
      return cmd_train(common, targs);
    if (study->parsed())
      return cmd_study(common, targs, sargs);
  } catch (const ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DomainError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const DegenerateMapError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::filesystem::filesystem_error &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const json::exception &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
