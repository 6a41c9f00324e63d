// Command-line toolchain: simulate / thin / fit-em / fit-wgan / gof /
// hotspots / sweep / report.  Every output is a pure function of
// (inputs, config, seed); manifests record how each artifact was produced.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "hawkes/io.hpp"
#include "hawkes/parallel.hpp"

namespace fs = std::filesystem;
using namespace hawkes;

namespace {

struct Common {
  std::string config_path;
  std::string out_dir = ".";
  std::string in_path;
  std::string runs_dir;
  std::string resume_path;
  std::uint64_t seed = 0;
  int streams = -1;
  int jobs = 1;
  bool emit_qq = false;
};

void add_common(CLI::App* cmd, Common& c, bool needs_config = true) {
  auto* opt = cmd->add_option("--config", c.config_path, "Config file (ini)");
  if (needs_config) opt->required();
  cmd->add_option("--seed", c.seed, "Random seed");
  cmd->add_option("--out", c.out_dir, "Output directory");
  cmd->add_option("--streams", c.streams, "Override stream count");
  cmd->add_option("--jobs", c.jobs, "Worker threads");
}

std::string joined_command(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) {
    if (i) s += ' ';
    s += argv[i];
  }
  return s;
}

struct Timer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

void finish_manifest(const Common& c, const std::string& command, const Timer& timer,
                     std::vector<std::string> inputs, std::vector<std::string> outputs) {
  RunManifest m;
  m.command = command;
  m.seed = c.seed;
  m.inputs = std::move(inputs);
  m.outputs = std::move(outputs);
  m.wall_time_s = timer.seconds();
  std::string snapshot = c.config_path.empty() ? "" : read_text_file(c.config_path);
  write_manifest(c.out_dir, m, snapshot);
}

std::vector<EventStream> load_input_streams(const Common& c) {
  if (c.in_path.empty()) throw ConfigError("--in streams file is required");
  return read_streams(c.in_path);
}

int run_simulate(const Common& c, const std::string& command) {
  Timer timer;
  AppConfig cfg = AppConfig::load(c.config_path);
  int n = c.streams > 0 ? c.streams : cfg.n_streams;
  std::vector<std::uint64_t> seeds(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    seeds[static_cast<std::size_t>(i)] = mix_key(c.seed, 501, static_cast<std::uint64_t>(i));
  std::vector<EventStream> streams =
      simulate_batch(cfg.params, cfg.background, seeds, cfg.generator, c.jobs);
  ensure_dir(c.out_dir);
  std::string path = c.out_dir + "/streams.csv";
  write_streams(path, streams);
  StreamMeta meta;
  meta.count = streams.size();
  meta.seed = c.seed;
  meta.horizon = cfg.generator.mode == GenConfig::Mode::HorizonLimited ? cfg.generator.horizon : 0;
  meta.truncation_count =
      cfg.generator.mode == GenConfig::Mode::CountLimited ? cfg.generator.max_events : 0;
  meta.params = cfg.params;
  write_stream_meta(path, meta);
  finish_manifest(c, command, timer, {c.config_path}, {path});
  std::cout << "wrote " << streams.size() << " streams to " << path << "\n";
  return 0;
}

int run_thin(const Common& c, const std::string& command) {
  Timer timer;
  AppConfig cfg = AppConfig::load(c.config_path);
  RegionMap map = cfg.load_region_map();
  std::vector<EventStream> streams = load_input_streams(c);
  std::vector<EventStream> thinned(streams.size());
  for (std::size_t i = 0; i < streams.size(); ++i) {
    BaseNoise noise(mix_key(c.seed, 502, i));
    EventStream s = streams[i];
    if (cfg.apply_victimization)
      s = victimization_subsample(s, map, cfg.horizon_ratio, noise);
    thinned[i] = thin_stream(s, map, noise);
  }
  ensure_dir(c.out_dir);
  std::string path = c.out_dir + "/reported.csv";
  write_streams(path, thinned);
  StreamMeta meta;
  meta.count = thinned.size();
  meta.seed = c.seed;
  if (!cfg.region_map_path.empty()) meta.region_map_hash = file_hash(cfg.region_map_path);
  write_stream_meta(path, meta);
  finish_manifest(c, command, timer, {c.config_path, c.in_path}, {path});
  std::cout << "wrote " << thinned.size() << " reported streams to " << path << "\n";
  return 0;
}

int run_fit_em(const Common& c, const std::string& command) {
  Timer timer;
  AppConfig cfg = AppConfig::load(c.config_path);
  std::vector<EventStream> streams = load_input_streams(c);
  EmConfig em = cfg.em;
  em.jobs = c.jobs;
  EmResult res = fit_em(streams, cfg.params, cfg.background, em);
  ensure_dir(c.out_dir);
  IniFile out;
  out.set("fit", "iterations", std::to_string(res.iterations));
  out.set("fit", "converged", res.converged ? "true" : "false");
  out.set("fit", "flagged_iterations", std::to_string(res.flagged_iterations));
  out.set("estimate", "mu", format_double(res.params.mu));
  out.set("estimate", "alpha", format_double(res.params.alpha));
  out.set("estimate", "beta", format_double(res.params.beta));
  out.set("estimate", "sigma_sq", format_double(res.params.sigma_sq));
  out.set("estimate", "theta_br", format_double(res.params.theta_br()));
  if (res.params.anisotropic()) {
    out.set("estimate", "sigma_x_sq", format_double(*res.params.sigma_x_sq));
    out.set("estimate", "sigma_y_sq", format_double(*res.params.sigma_y_sq));
  }
  out.save(c.out_dir + "/em_fit.ini");
  std::ofstream trace(c.out_dir + "/em_trace.csv", std::ios::binary);
  trace << "iteration,loglik,mu,alpha,beta,sigma_sq\n";
  for (std::size_t i = 0; i < res.param_trace.size(); ++i)
    trace << i << ',' << format_double(res.loglik_trace[i]) << ','
          << format_double(res.param_trace[i].mu) << ','
          << format_double(res.param_trace[i].alpha) << ','
          << format_double(res.param_trace[i].beta) << ','
          << format_double(res.param_trace[i].sigma_sq) << '\n';
  trace.close();
  finish_manifest(c, command, timer, {c.config_path, c.in_path},
                  {c.out_dir + "/em_fit.ini", c.out_dir + "/em_trace.csv"});
  std::cout << "em estimate: mu=" << res.params.mu << " alpha=" << res.params.alpha
            << " beta=" << res.params.beta << " sigma_sq=" << res.params.sigma_sq << "\n";
  return 0;
}

int run_fit_wgan(const Common& c, const std::string& command) {
  Timer timer;
  AppConfig cfg = AppConfig::load(c.config_path);
  RegionMap map = cfg.load_region_map();
  std::vector<EventStream> data = load_input_streams(c);
  ensure_dir(c.out_dir);

  std::vector<std::string> outputs;
  if (!c.resume_path.empty()) {
    TrainState state = read_train_state(c.resume_path);
    std::string dir = c.out_dir + "/run_resumed";
    ensure_dir(dir);
    CheckpointFn save = [&](const TrainState& st) { write_train_state(dir + "/state.ckpt", st); };
    TrainRun run = train(data, map, cfg.background, state.partial.theta_init, cfg.train,
                         state.partial.seed, &state, save);
    write_train_run(dir, run);
    outputs.push_back(dir);
  } else {
    std::vector<ModelParams> inits = default_init_grid(cfg.params, cfg.train.free_mask);
    std::vector<TrainRun> runs;
    runs.resize(inits.size());
    parallel_for(inits.size(), c.jobs, [&](std::size_t i) {
      std::string dir = c.out_dir + "/run_" + std::to_string(i);
      ensure_dir(dir);
      CheckpointFn save = [dir](const TrainState& st) {
        write_train_state(dir + "/state.ckpt", st);
      };
      runs[i] = train(data, map, cfg.background, inits[i], cfg.train, c.seed, nullptr, save);
    });
    for (std::size_t i = 0; i < runs.size(); ++i) {
      std::string dir = c.out_dir + "/run_" + std::to_string(i);
      write_train_run(dir, runs[i]);
      outputs.push_back(dir);
    }
  }
  finish_manifest(c, command, timer, {c.config_path, c.in_path}, outputs);
  std::cout << "wrote " << outputs.size() << " run record(s) under " << c.out_dir << "\n";
  return 0;
}

ModelParams theta_from_record(const std::string& record_path) {
  IniFile ini = IniFile::load(record_path);
  return ModelParams(parse_double(ini.get("theta_hat", "mu"), "mu"),
                     parse_double(ini.get("theta_hat", "alpha"), "alpha"),
                     parse_double(ini.get("theta_hat", "beta"), "beta"),
                     parse_double(ini.get("theta_hat", "sigma_sq"), "sigma_sq"));
}

int run_gof(const Common& c, const std::string& command) {
  Timer timer;
  AppConfig cfg = AppConfig::load(c.config_path);
  RegionMap map = cfg.load_region_map();
  std::vector<EventStream> data = load_input_streams(c);
  InterarrivalPool training = pool_interarrivals(data, "training");

  struct Candidate {
    std::string name;
    ModelParams theta;
    std::string status = "max_epochs";
  };
  std::vector<Candidate> candidates;
  if (!c.runs_dir.empty()) {
    std::vector<fs::path> records;
    for (const auto& entry : fs::directory_iterator(c.runs_dir)) {
      fs::path record = entry.path() / "record.ini";
      if (entry.is_directory() && fs::exists(record)) records.push_back(record);
    }
    std::sort(records.begin(), records.end());
    for (const auto& r : records) {
      IniFile ini = IniFile::load(r.string());
      candidates.push_back({r.parent_path().filename().string(), theta_from_record(r.string()),
                            ini.get("run", "status")});
    }
    if (candidates.empty()) throw ConfigError("no run records under '" + c.runs_dir + "'");
  } else if (cfg.has_eval_theta_hat) {
    candidates.push_back({"theta_hat", cfg.eval_theta_hat});
  } else {
    throw ConfigError("gof needs --runs or [eval] theta_hat");
  }

  ensure_dir(c.out_dir);
  std::ofstream scores(c.out_dir + "/gof_scores.csv", std::ios::binary);
  scores << "candidate,chi_square,status\n";
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_idx = 0;
  bool any = false;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& cand = candidates[i];
    bool usable = cand.status == "converged" || cand.status == "max_epochs";
    double score = std::numeric_limits<double>::quiet_NaN();
    if (usable) {
      score = gof_score(cand.theta, training, cfg.background, map, cfg.gof_k_synthetic,
                        cfg.generator, c.seed, cfg.chi, c.jobs);
      if (score < best) {
        best = score;
        best_idx = i;
      }
      any = true;
    }
    scores << cand.name << ',' << format_double(score) << ',' << cand.status << '\n';
  }
  scores.close();
  if (!any) throw NumericalError("gof: every candidate failed");

  const Candidate& bc = candidates[best_idx];
  IniFile bi;
  bi.set("best", "candidate", bc.name);
  bi.set("best", "chi_square", format_double(best));
  bi.set("best", "mu", format_double(bc.theta.mu));
  bi.set("best", "alpha", format_double(bc.theta.alpha));
  bi.set("best", "beta", format_double(bc.theta.beta));
  bi.set("best", "sigma_sq", format_double(bc.theta.sigma_sq));
  bi.save(c.out_dir + "/gof_best.ini");

  // Histogram data twin for the best candidate.
  {
    std::vector<EventStream> synth(static_cast<std::size_t>(cfg.gof_k_synthetic));
    parallel_for(synth.size(), c.jobs, [&](std::size_t j) {
      BaseNoise noise(mix_key(c.seed, 211, j));
      EventStream s = simulate_stream(bc.theta, cfg.background, noise, cfg.generator);
      synth[j] = thin_stream(s, map, noise);
    });
    InterarrivalPool pool = pool_interarrivals(synth, "synthetic");
    write_gof_histogram_csv(c.out_dir + "/gof_hist_best.csv",
                            chi_square_histogram(training, pool, cfg.chi));
  }

  if (c.emit_qq) {
    // Compensator residual diagnostic; valid for un-thinned data only.
    QqData qq = qq_residuals(data, bc.theta, cfg.background);
    write_qq_csv(c.out_dir + "/qq_residuals.csv", qq);
  }

  finish_manifest(c, command, timer, {c.config_path, c.in_path},
                  {c.out_dir + "/gof_scores.csv", c.out_dir + "/gof_best.ini"});
  std::cout << "best candidate: " << bc.name << " (chi_square " << best << ")\n";
  return 0;
}

int run_hotspots(const Common& c, const std::string& command) {
  Timer timer;
  AppConfig cfg = AppConfig::load(c.config_path);
  RegionMap map = cfg.load_region_map();
  ModelParams theta_hat = cfg.params;
  if (!c.runs_dir.empty()) {
    IniFile best = IniFile::load(c.runs_dir + "/gof_best.ini");
    theta_hat = ModelParams(parse_double(best.get("best", "mu"), "mu"),
                            parse_double(best.get("best", "alpha"), "alpha"),
                            parse_double(best.get("best", "beta"), "beta"),
                            parse_double(best.get("best", "sigma_sq"), "sigma_sq"));
  } else if (cfg.has_eval_theta_hat) {
    theta_hat = cfg.eval_theta_hat;
  }

  GridSummary truth =
      expected_counts(cfg.params, cfg.background, map, cfg.grid, mix_key(c.seed, 601, 0), c.jobs);
  GridSummary est =
      expected_counts(theta_hat, cfg.background, map, cfg.grid, mix_key(c.seed, 602, 0), c.jobs);
  std::vector<Cell> top_true = top_k(truth, cfg.top_k);
  std::vector<Cell> top_est = top_k(est, cfg.top_k);
  int excluded = 0;
  double mae = relative_mae(truth, est, cfg.mae_floor, &excluded);
  double acc = hotspot_accuracy(top_true, top_est);

  ensure_dir(c.out_dir);
  write_grid_summary(c.out_dir, "grid_true", truth);
  write_grid_summary(c.out_dir, "grid_estimated", est);
  IniFile summary;
  summary.set("hotspots", "top_k", std::to_string(cfg.top_k));
  summary.set("hotspots", "accuracy", format_double(acc));
  summary.set("hotspots", "relative_mae", format_double(mae));
  summary.set("hotspots", "mae_excluded_cells", std::to_string(excluded));
  summary.set("theta_hat", "mu", format_double(theta_hat.mu));
  summary.set("theta_hat", "alpha", format_double(theta_hat.alpha));
  summary.set("theta_hat", "beta", format_double(theta_hat.beta));
  summary.set("theta_hat", "sigma_sq", format_double(theta_hat.sigma_sq));
  summary.save(c.out_dir + "/hotspot_summary.ini");

  finish_manifest(c, command, timer, {c.config_path},
                  {c.out_dir + "/hotspot_summary.ini", c.out_dir + "/grid_true.csv",
                   c.out_dir + "/grid_estimated.csv"});
  std::cout << "top-" << cfg.top_k << " accuracy " << acc << ", relative MAE " << mae << "\n";
  return 0;
}

int run_sweep(const Common& c, const std::string& command) {
  Timer timer;
  AppConfig cfg = AppConfig::load(c.config_path);
  RegionMap map = cfg.load_region_map();

  std::vector<ModelParams> grid;
  for (double mu : cfg.sweep_mu)
    for (double alpha : cfg.sweep_alpha)
      for (double beta : cfg.sweep_beta)
        for (double ssq : cfg.sweep_sigma_sq) grid.emplace_back(mu, alpha, beta, ssq);

  Estimator estimator;
  if (cfg.sweep_estimator == "bypass") {
    estimator = [](const std::vector<EventStream>&, const ModelParams& theta0, std::uint64_t) {
      return theta0;
    };
  } else if (cfg.sweep_estimator == "em") {
    estimator = [&](const std::vector<EventStream>& data, const ModelParams&, std::uint64_t) {
      EmConfig em = cfg.em;
      em.jobs = c.jobs;
      return fit_em(data, cfg.params, cfg.background, em).params;
    };
  } else {
    estimator = [&](const std::vector<EventStream>& data, const ModelParams&,
                    std::uint64_t seed) {
      TrainRun run = train(data, map, cfg.background, cfg.params, cfg.train, seed);
      return run.theta_hat;
    };
  }

  SweepConfig sc;
  sc.n_training_streams = c.streams > 0 ? c.streams : cfg.sweep_training_streams;
  sc.gen = cfg.generator;
  sc.grid = cfg.grid;
  sc.top_k = cfg.top_k;
  sc.mae_floor = cfg.mae_floor;
  std::vector<SweepRow> rows =
      robustness_sweep(grid, cfg.background, map, sc, estimator, c.seed, c.jobs);

  ensure_dir(c.out_dir);
  std::ofstream out(c.out_dir + "/sweep.csv", std::ios::binary);
  out << "mu,alpha,beta,sigma_sq,mu_hat,alpha_hat,beta_hat,sigma_sq_hat,accuracy,mae\n";
  double acc_sum = 0.0;
  for (const auto& r : rows) {
    out << format_double(r.theta_true.mu) << ',' << format_double(r.theta_true.alpha) << ','
        << format_double(r.theta_true.beta) << ',' << format_double(r.theta_true.sigma_sq) << ','
        << format_double(r.theta_hat.mu) << ',' << format_double(r.theta_hat.alpha) << ','
        << format_double(r.theta_hat.beta) << ',' << format_double(r.theta_hat.sigma_sq) << ','
        << format_double(r.accuracy) << ',' << format_double(r.mae) << '\n';
    acc_sum += r.accuracy;
  }
  out.close();
  finish_manifest(c, command, timer, {c.config_path}, {c.out_dir + "/sweep.csv"});
  std::cout << "sweep of " << rows.size() << " combinations, mean accuracy "
            << (rows.empty() ? 0.0 : acc_sum / static_cast<double>(rows.size())) << "\n";
  return 0;
}

int run_report(const Common& c) {
  std::string dir = c.in_path.empty() ? c.out_dir : c.in_path;
  if (!fs::exists(fs::path(dir) / "manifest.ini"))
    throw ConfigError("no manifest.ini under '" + dir + "' (empty or foreign run directory)");
  IniFile manifest = IniFile::load((fs::path(dir) / "manifest.ini").string());
  std::ostringstream report;
  report << "artifact report for " << dir << "\n";
  report << "  command: " << manifest.get("manifest", "command") << "\n";
  report << "  seed: " << manifest.get("manifest", "seed") << "\n";
  report << "  code_version: " << manifest.get("manifest", "code_version") << "\n";
  for (const char* name : {"em_fit.ini", "gof_best.ini", "hotspot_summary.ini", "sweep.csv",
                           "streams.csv.meta", "reported.csv.meta"}) {
    fs::path p = fs::path(dir) / name;
    if (!fs::exists(p)) continue;
    report << "  " << name << ":\n";
    std::istringstream in(read_text_file(p.string()));
    std::string line;
    int shown = 0;
    while (std::getline(in, line) && shown < 12) {
      if (line.empty()) continue;
      report << "    " << line << "\n";
      ++shown;
    }
  }
  std::string text = report.str();
  std::cout << text;
  write_text_file((fs::path(dir) / "report.txt").string(), text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatiotemporal Hawkes processes under missing data: simulation, "
               "likelihood-free (WGAN) and EM estimation, goodness of fit, hotspot evaluation"};
  app.require_subcommand(1);

  Common c;
  std::string command = joined_command(argc, argv);

  auto* sim = app.add_subcommand("simulate", "Generate Hawkes streams");
  add_common(sim, c);

  auto* thin = app.add_subcommand("thin", "Apply the missingness mechanism to streams");
  add_common(thin, c);
  thin->add_option("--in", c.in_path, "Input streams csv")->required();

  auto* em = app.add_subcommand("fit-em", "EM baseline on (reported) streams");
  add_common(em, c);
  em->add_option("--in", c.in_path, "Input streams csv")->required();

  auto* wgan = app.add_subcommand("fit-wgan", "Likelihood-free WGAN estimation (multi-start)");
  add_common(wgan, c);
  wgan->add_option("--in", c.in_path, "Input streams csv")->required();
  wgan->add_option("--resume", c.resume_path, "Resume from a train-state checkpoint");

  auto* gof = app.add_subcommand("gof", "Score candidates by the inter-arrival chi-square");
  add_common(gof, c);
  gof->add_option("--in", c.in_path, "Training streams csv")->required();
  gof->add_option("--runs", c.runs_dir, "Directory of fit-wgan run records");
  gof->add_flag("--qq", c.emit_qq, "Also emit compensator QQ data (un-thinned input only)");

  auto* hot = app.add_subcommand("hotspots", "Expected-count grids, top-k sets, MAE, accuracy");
  add_common(hot, c);
  hot->add_option("--runs", c.runs_dir, "Directory containing gof_best.ini");

  auto* sweep = app.add_subcommand("sweep", "Robustness sweep over true-parameter grids");
  add_common(sweep, c);

  auto* report = app.add_subcommand("report", "Collate run artifacts");
  add_common(report, c, false);
  report->add_option("--in", c.in_path, "Run directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return run_simulate(c, command);
    if (thin->parsed()) return run_thin(c, command);
    if (em->parsed()) return run_fit_em(c, command);
    if (wgan->parsed()) return run_fit_wgan(c, command);
    if (gof->parsed()) return run_gof(c, command);
    if (hot->parsed()) return run_hotspots(c, command);
    if (sweep->parsed()) return run_sweep(c, command);
    if (report->parsed()) return run_report(c);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
