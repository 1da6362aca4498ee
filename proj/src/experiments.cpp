#include "nfqs/experiments.hpp"

#include <chrono>
#include <memory>
#include <cmath>
#include <filesystem>
#include <set>

#include "nfqs/checks.hpp"
#include "nfqs/grid.hpp"

namespace nfqs {

namespace fs = std::filesystem;

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void expect_keys(const json& j, const std::set<std::string>& allowed,
                 const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

HamiltonianSpec parse_hamiltonian(const json& j) {
  expect_keys(j,
              {"type", "g2", "yukawa_mass", "n_particles", "space_dim", "mass",
               "omega", "a", "b", "n_dof", "v_offset"},
              "hamiltonian");
  const std::string type = j.at("type").get<std::string>();
  HamiltonianSpec h;
  if (type == "trap") {
    h = HamiltonianSpec::make_trap(j.value("g2", 0.0), j.value("yukawa_mass", 2.0));
    maybe(j, "n_particles", h.trap.n_particles);
    maybe(j, "space_dim", h.trap.space_dim);
    maybe(j, "mass", h.trap.mass);
    maybe(j, "omega", h.trap.omega);
  } else if (type == "tunnel") {
    h = HamiltonianSpec::make_tunnel(j.value("a", 0.25), j.value("b", 4.25));
  } else if (type == "harmonic") {
    h = HamiltonianSpec::make_harmonic(j.value("n_dof", 1), j.value("omega", 1.0),
                                       j.value("mass", 1.0));
  } else {
    throw ConfigError("hamiltonian: unknown type '" + type + "'");
  }
  maybe(j, "v_offset", h.v_offset);
  h.validate();
  return h;
}

void apply_preset(ExperimentConfig& c) {
  const bool paper = c.preset == "paper";
  if (!paper && c.preset != "quick")
    throw ConfigError("preset must be 'quick' or 'paper'");
  if (c.experiment == "ground") {
    c.train.batch = paper ? (1 << 10) : (1 << 8);
    c.train.steps = paper ? 30000 : 5000;
    c.train.learning_rate = paper ? 3e-4 : 1e-3;
    c.train.eval_samples = 1 << 15;
    c.depth = paper ? 6 : 2;
  } else if (c.experiment == "evolve") {
    c.architecture = "qcnf";
    c.evolve.batch = paper ? (1 << 12) : (1 << 8);
    c.evolve.max_inner_iters = paper ? 5000 : 2000;
    c.prep.batch = paper ? (1 << 10) : (1 << 8);
    c.prep.max_steps = paper ? 30000 : 8000;
    c.prep.learning_rate = paper ? 1e-3 : 3e-3;
    c.ham = HamiltonianSpec::make_tunnel();
  } else if (c.experiment == "pimc") {
    c.pimc.n_sweeps = paper ? 60000 : 20000;
    c.pimc.n_therm = paper ? 6000 : 2000;
  } else if (c.experiment == "exact") {
    c.ham = HamiltonianSpec::make_tunnel();
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  const std::set<std::string> experiments{"ground", "evolve", "pimc", "exact",
                                          "check"};
  if (!experiments.count(experiment))
    throw ConfigError("unknown experiment '" + experiment + "'");
  if (architecture != "qnvp" && architecture != "qcnf")
    throw ConfigError("architecture must be 'qnvp' or 'qcnf'");
  if (depth < 1) throw ConfigError("model depth must be >= 1");
  if (hidden < 1) throw ConfigError("model hidden width must be >= 1");
  if (qcnf_steps < 1) throw ConfigError("qcnf_steps must be >= 1");
  ham.validate();
  train.validate();
  evolve.validate();
  pimc.validate();
  grid.validate();
  if (dt_grid <= 0 || dt_grid > 1e-3)
    throw ConfigError("dt_grid must be in (0, 1e-3]");
  if (n_restarts < 1) throw ConfigError("n_restarts must be >= 1");
  if (experiment == "ground" && architecture == "qnvp" && ham.n_dof() < 2)
    throw ConfigError("QNVP requires n_dof >= 2; use qcnf for 1D problems");
  if (sweep_g2.empty() != sweep_depth.empty())
    throw ConfigError("sweep requires both g2 and depth lists");
}

ExperimentConfig resolve_config(const json& j, const std::string& experiment,
                                const std::string& preset_flag) {
  ExperimentConfig c;
  c.experiment = experiment;
  // preset from config file unless the flag overrides it
  if (j.contains("preset")) c.preset = j.at("preset").get<std::string>();
  if (!preset_flag.empty()) c.preset = preset_flag;
  apply_preset(c);

  expect_keys(j,
              {"experiment", "architecture", "preset", "seed", "out", "threads",
               "hamiltonian", "model", "train", "evolve", "prep", "pimc", "grid",
               "snapshot_times", "sweep", "n_restarts"},
              "config");
  if (j.contains("experiment")) {
    const std::string e = j.at("experiment").get<std::string>();
    if (e != experiment)
      throw ConfigError("config experiment '" + e + "' does not match subcommand '" +
                        experiment + "'");
  }
  maybe(j, "architecture", c.architecture);
  maybe(j, "seed", c.seed);
  maybe(j, "out", c.out_dir);
  maybe(j, "threads", c.n_threads);
  if (j.contains("hamiltonian")) c.ham = parse_hamiltonian(j.at("hamiltonian"));
  if (j.contains("model")) {
    const json& m = j.at("model");
    expect_keys(m, {"depth", "hidden", "qcnf_steps"}, "model");
    maybe(m, "depth", c.depth);
    maybe(m, "hidden", c.hidden);
    maybe(m, "qcnf_steps", c.qcnf_steps);
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    expect_keys(t,
                {"batch", "steps", "learning_rate", "eval_samples", "record_every",
                 "init_scale"},
                "train");
    maybe(t, "batch", c.train.batch);
    maybe(t, "steps", c.train.steps);
    maybe(t, "learning_rate", c.train.learning_rate);
    maybe(t, "eval_samples", c.train.eval_samples);
    maybe(t, "record_every", c.train.record_every);
    maybe(t, "init_scale", c.train.init_scale);
  }
  if (j.contains("evolve")) {
    const json& e = j.at("evolve");
    expect_keys(e,
                {"dt", "n_steps", "loss_threshold", "max_inner_iters", "inner_lr",
                 "batch", "refresh_every", "theta_samples", "energy_samples",
                 "theta_x0", "norm_check_every"},
                "evolve");
    maybe(e, "dt", c.evolve.dt);
    maybe(e, "n_steps", c.evolve.n_steps);
    maybe(e, "loss_threshold", c.evolve.loss_threshold);
    maybe(e, "max_inner_iters", c.evolve.max_inner_iters);
    maybe(e, "inner_lr", c.evolve.inner_lr);
    maybe(e, "batch", c.evolve.batch);
    maybe(e, "refresh_every", c.evolve.refresh_every);
    maybe(e, "theta_samples", c.evolve.theta_samples);
    maybe(e, "energy_samples", c.evolve.energy_samples);
    maybe(e, "theta_x0", c.evolve.theta_x0);
    maybe(e, "norm_check_every", c.evolve.norm_check_every);
  }
  if (j.contains("prep")) {
    const json& p = j.at("prep");
    expect_keys(p,
                {"batch", "max_steps", "learning_rate", "check_every",
                 "fidelity_gate", "fidelity_stop", "init_scale"},
                "prep");
    maybe(p, "batch", c.prep.batch);
    maybe(p, "max_steps", c.prep.max_steps);
    maybe(p, "learning_rate", c.prep.learning_rate);
    maybe(p, "check_every", c.prep.check_every);
    maybe(p, "fidelity_gate", c.prep.fidelity_gate);
    maybe(p, "fidelity_stop", c.prep.fidelity_stop);
    maybe(p, "init_scale", c.prep.init_scale);
  }
  if (j.contains("pimc")) {
    const json& p = j.at("pimc");
    expect_keys(p,
                {"beta", "dtau", "n_sweeps", "n_therm", "n_chains", "move_width",
                 "com_width", "g2_list"},
                "pimc");
    maybe(p, "beta", c.pimc.beta);
    maybe(p, "dtau", c.pimc.dtau);
    maybe(p, "n_sweeps", c.pimc.n_sweeps);
    maybe(p, "n_therm", c.pimc.n_therm);
    maybe(p, "n_chains", c.pimc.n_chains);
    maybe(p, "move_width", c.pimc.move_width);
    maybe(p, "com_width", c.pimc.com_width);
    maybe(p, "g2_list", c.pimc_g2);
  }
  if (j.contains("grid")) {
    const json& g = j.at("grid");
    expect_keys(g, {"x_min", "x_max", "n_points", "dt"}, "grid");
    maybe(g, "x_min", c.grid.x_min);
    maybe(g, "x_max", c.grid.x_max);
    maybe(g, "n_points", c.grid.n_points);
    maybe(g, "dt", c.dt_grid);
  }
  maybe(j, "snapshot_times", c.snapshot_times);
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    expect_keys(s, {"g2", "depth"}, "sweep");
    maybe(s, "g2", c.sweep_g2);
    maybe(s, "depth", c.sweep_depth);
  }
  maybe(j, "n_restarts", c.n_restarts);

  c.train.seed = c.seed;
  c.evolve.seed = c.seed;
  c.prep.seed = c.seed;
  c.pimc.seed = c.seed;
  c.train.n_threads = c.n_threads;
  c.evolve.n_threads = c.n_threads;
  c.prep.n_threads = c.n_threads;
  c.pimc.n_threads = c.n_threads;
  c.validate();
  return c;
}

json config_to_json(const ExperimentConfig& c) {
  json ham;
  switch (c.ham.kind) {
    case HamiltonianSpec::Kind::kTrap:
      ham = {{"type", "trap"},          {"g2", c.ham.trap.g2},
             {"yukawa_mass", c.ham.trap.yukawa_mass},
             {"n_particles", c.ham.trap.n_particles},
             {"space_dim", c.ham.trap.space_dim},
             {"mass", c.ham.trap.mass}, {"omega", c.ham.trap.omega}};
      break;
    case HamiltonianSpec::Kind::kTunnel:
      ham = {{"type", "tunnel"}, {"a", c.ham.tunnel.a}, {"b", c.ham.tunnel.b}};
      break;
    default:
      ham = {{"type", "harmonic"},
             {"n_dof", c.ham.harmonic.n_dof},
             {"omega", c.ham.harmonic.omega},
             {"mass", c.ham.harmonic.mass}};
  }
  if (c.ham.v_offset != 0.0) ham["v_offset"] = c.ham.v_offset;
  return json{
      {"experiment", c.experiment},
      {"architecture", c.architecture},
      {"preset", c.preset},
      {"seed", c.seed},
      {"out", c.out_dir},
      {"threads", c.n_threads},
      {"hamiltonian", ham},
      {"model", {{"depth", c.depth}, {"hidden", c.hidden}, {"qcnf_steps", c.qcnf_steps}}},
      {"train",
       {{"batch", c.train.batch},
        {"steps", c.train.steps},
        {"learning_rate", c.train.learning_rate},
        {"eval_samples", c.train.eval_samples},
        {"record_every", c.train.record_every},
        {"init_scale", c.train.init_scale}}},
      {"evolve",
       {{"dt", c.evolve.dt},
        {"n_steps", c.evolve.n_steps},
        {"loss_threshold", c.evolve.loss_threshold},
        {"max_inner_iters", c.evolve.max_inner_iters},
        {"inner_lr", c.evolve.inner_lr},
        {"batch", c.evolve.batch},
        {"refresh_every", c.evolve.refresh_every},
        {"theta_samples", c.evolve.theta_samples},
        {"energy_samples", c.evolve.energy_samples},
        {"theta_x0", c.evolve.theta_x0},
        {"norm_check_every", c.evolve.norm_check_every}}},
      {"prep",
       {{"batch", c.prep.batch},
        {"max_steps", c.prep.max_steps},
        {"learning_rate", c.prep.learning_rate},
        {"check_every", c.prep.check_every},
        {"fidelity_gate", c.prep.fidelity_gate},
        {"fidelity_stop", c.prep.fidelity_stop},
        {"init_scale", c.prep.init_scale}}},
      {"pimc",
       {{"beta", c.pimc.beta},
        {"dtau", c.pimc.dtau},
        {"n_sweeps", c.pimc.n_sweeps},
        {"n_therm", c.pimc.n_therm},
        {"n_chains", c.pimc.n_chains},
        {"move_width", c.pimc.move_width},
        {"com_width", c.pimc.com_width}}},
      {"grid",
       {{"x_min", c.grid.x_min},
        {"x_max", c.grid.x_max},
        {"n_points", c.grid.n_points},
        {"dt", c.dt_grid}}},
      {"snapshot_times", c.snapshot_times},
      {"n_restarts", c.n_restarts}};
}

namespace {

void write_manifest(const ExperimentConfig& cfg, double wall_seconds,
                    const json& extra = json::object()) {
  json m{{"tool", "nfqs"},
         {"version", NFQS_VERSION},
         {"config", config_to_json(cfg)},
         {"seed", cfg.seed},
         {"threads", cfg.n_threads},
         {"wall_time_s", wall_seconds},
         {"random_walk_note",
          "bound_random_walk is the diagnostic incoherent sum "
          "sqrt(sum_steps (dt*sqrt(L))^2); it is reported alongside the "
          "rigorous integral bound and never used for error bars"}};
  for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  write_json_file((fs::path(cfg.out_dir) / "manifest.json").string(), m);
}

FlowModel build_ground_model(const ExperimentConfig& cfg, int depth) {
  if (cfg.architecture == "qnvp")
    return make_qnvp_model(cfg.ham.n_dof(), depth, cfg.hidden);
  return make_qcnf_model(cfg.ham.n_dof(), cfg.hidden, cfg.qcnf_steps);
}

struct GroundRun {
  FlowModel model;
  TrainingCurve curve;
  EnergyEstimate energy;
  uint64_t seed = 0;
};

GroundRun ground_single(const ExperimentConfig& cfg, const HamiltonianSpec& ham,
                        int depth, uint64_t seed) {
  FlowModel m0 = build_ground_model(cfg, depth);
  Rng rng(seed);
  init_flow_params(m0, cfg.train.init_scale, rng);
  TrainConfig tc = cfg.train;
  tc.seed = seed;
  GroundRun run;
  auto res = train_ground(m0, ham, tc);
  run.model = std::move(res.model);
  run.curve = std::move(res.curve);
  Rng eval_rng = rng.split(0xe7a1);
  run.energy = evaluate_energy(run.model, ham, tc.eval_samples, eval_rng,
                               cfg.n_threads);
  run.seed = seed;
  return run;
}

void write_curve_csv(const std::string& path, const TrainingCurve& c) {
  CsvWriter w(path, {"step", "loss"});
  for (size_t i = 0; i < c.step.size(); ++i)
    w.row({static_cast<double>(c.step[i]), c.loss[i]});
}

json energy_record(const HamiltonianSpec& ham, int depth,
                   const EnergyEstimate& e, uint64_t seed) {
  return json{{"g2", ham.kind == HamiltonianSpec::Kind::kTrap ? ham.trap.g2 : 0.0},
              {"depth", depth},
              {"energy", e.mean},
              {"std_error", e.std_error},
              {"n_samples", e.n_samples},
              {"seed", seed}};
}

}  // namespace

RunSummary run_ground(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  fs::create_directories(cfg.out_dir);
  RunSummary out;

  const bool sweep = !cfg.sweep_g2.empty();
  std::vector<std::pair<double, int>> combos;
  if (sweep) {
    for (double g2 : cfg.sweep_g2)
      for (int d : cfg.sweep_depth) combos.emplace_back(g2, d);
  } else {
    combos.emplace_back(
        cfg.ham.kind == HamiltonianSpec::Kind::kTrap ? cfg.ham.trap.g2 : 0.0,
        cfg.depth);
  }

  std::unique_ptr<CsvWriter> sweep_csv;
  if (sweep)
    sweep_csv = std::make_unique<CsvWriter>(
        (fs::path(cfg.out_dir) / "sweep.csv").string(),
        std::vector<std::string>{"g2", "depth", "energy", "std_error"});

  json best_records = json::array();
  for (const auto& [g2, depth] : combos) {
    HamiltonianSpec ham = cfg.ham;
    if (ham.kind == HamiltonianSpec::Kind::kTrap) ham.trap.g2 = g2;
    fs::path dir = cfg.out_dir;
    if (sweep) {
      dir /= "g2_" + format_double(g2) + "_d" + std::to_string(depth);
      fs::create_directories(dir);
    }
    // multi-seed restarts; keep the minimum-energy run
    GroundRun best;
    bool have = false;
    std::unique_ptr<CsvWriter> restarts;
    if (cfg.n_restarts > 1)
      restarts = std::make_unique<CsvWriter>(
          (dir / "restarts.csv").string(),
          std::vector<std::string>{"seed", "energy", "std_error"});
    for (int r = 0; r < cfg.n_restarts; ++r) {
      GroundRun run = ground_single(cfg, ham, depth, cfg.seed + r);
      if (restarts)
        restarts->row({static_cast<double>(run.seed), run.energy.mean,
                       run.energy.std_error});
      if (!have || run.energy.mean < best.energy.mean) {
        best = std::move(run);
        have = true;
      }
    }
    const json rec = energy_record(ham, depth, best.energy, best.seed);
    write_json_file((dir / "energy.json").string(), rec);
    write_curve_csv((dir / "training_curve.csv").string(), best.curve);
    save_checkpoint((dir / "checkpoint.json").string(), best.model);
    if (sweep_csv)
      sweep_csv->row({g2, static_cast<double>(depth), best.energy.mean,
                      best.energy.std_error});
    best_records.push_back(rec);
  }

  out.data = {{"runs", best_records}};
  write_manifest(cfg, now_seconds() - t0, out.data);
  return out;
}

RunSummary run_pimc(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  fs::create_directories(cfg.out_dir);
  RunSummary out;
  std::vector<double> g2s = cfg.pimc_g2;
  if (g2s.empty())
    g2s.push_back(cfg.ham.kind == HamiltonianSpec::Kind::kTrap ? cfg.ham.trap.g2
                                                               : 0.0);
  std::unique_ptr<CsvWriter> sweep_csv;
  if (g2s.size() > 1)
    sweep_csv = std::make_unique<CsvWriter>(
        (fs::path(cfg.out_dir) / "pimc_sweep.csv").string(),
        std::vector<std::string>{"g2", "energy", "std_error", "energy_thermo",
                                 "thermo_std_error", "acceptance"});
  json records = json::array();
  for (double g2 : g2s) {
    TrapSpec sp = cfg.ham.kind == HamiltonianSpec::Kind::kTrap ? cfg.ham.trap
                                                               : TrapSpec{};
    sp.g2 = g2;
    const auto r = pimc_energy(sp, cfg.pimc);
    json rec{{"g2", r.g2},
             {"beta", r.beta},
             {"dtau", r.dtau},
             {"energy", r.energy.mean},
             {"std_error", r.energy.std_error},
             {"energy_thermo", r.energy_thermo.mean},
             {"thermo_std_error", r.energy_thermo.std_error},
             {"n_sweeps", r.n_sweeps},
             {"acceptance", r.acceptance},
             {"tuning_warning", r.tuning_warning}};
    records.push_back(rec);
    if (sweep_csv)
      sweep_csv->row({g2, r.energy.mean, r.energy.std_error, r.energy_thermo.mean,
                      r.energy_thermo.std_error, r.acceptance});
    const std::string name =
        g2s.size() > 1 ? "pimc_g2_" + format_double(g2) + ".json" : "pimc.json";
    write_json_file((fs::path(cfg.out_dir) / name).string(), rec);
  }
  out.data = {{"pimc", records}};
  write_manifest(cfg, now_seconds() - t0, out.data);
  return out;
}

namespace {

void write_flow_density(const std::string& path, const FlowModel& m,
                        const Grid1D& g) {
  CsvWriter w(path, {"x", "psi2", "re_psi", "im_psi"});
  std::vector<double> x(1);
  for (int i = 0; i < g.n_points; ++i) {
    x[0] = g.x(i);
    const auto p = psi_value_at(m, x);
    w.row({x[0], p.re * p.re + p.im * p.im, p.re, p.im});
  }
}

void write_grid_density(const std::string& path, const GridState& s) {
  CsvWriter w(path, {"x", "psi2", "re_psi", "im_psi"});
  for (int i = 0; i < s.grid.n_points; ++i)
    w.row({s.grid.x(i), std::norm(s.psi[i]), s.psi[i].real(), s.psi[i].imag()});
}

}  // namespace

RunSummary run_evolve(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  fs::create_directories(cfg.out_dir);
  RunSummary out;

  if (cfg.architecture != "qcnf" && cfg.ham.n_dof() == 1)
    throw ConfigError("run_evolve: 1D evolution uses the qcnf architecture");

  // initial state: false-vacuum gaussian prepared variationally
  FlowModel m0 = make_qcnf_model(1, cfg.hidden, cfg.qcnf_steps);
  FlowModel prepared = prepare_initial_tunneling(m0, cfg.prep);
  save_checkpoint((fs::path(cfg.out_dir) / "checkpoint_initial.json").string(),
                  prepared);

  // oracles: matched initial state plus the exact gaussian
  GridState matched = grid_state_from_flow(prepared, cfg.grid);
  GridState exact = grid_state_gaussian(cfg.grid, 0.0);
  const double e0 = overlap_error_vs_oracle(prepared, exact);
  Rng prep_rng(cfg.seed + 17);
  const auto prep_theta =
      theta_expectation(prepared, cfg.evolve.theta_x0, cfg.evolve.theta_samples, prep_rng);
  Rng prep_erng(cfg.seed + 18);
  const auto prep_energy = evaluate_energy(
      prepared, HamiltonianSpec::make_harmonic(1), cfg.evolve.energy_samples,
      prep_erng, cfg.n_threads);
  write_json_file(
      (fs::path(cfg.out_dir) / "prep.json").string(),
      {{"fidelity", flow_fidelity_vs_gaussian(prepared, Grid1D{-8.0, 8.0, 2048})},
       {"e0", e0},
       {"theta", prep_theta.value},
       {"theta_err", prep_theta.std_error},
       {"energy_harmonic", prep_energy.mean},
       {"energy_err", prep_energy.std_error}});

  const int sub = std::max(1, static_cast<int>(std::round(cfg.evolve.dt / cfg.dt_grid)));
  const double dtg = cfg.evolve.dt / sub;
  if (dtg > 1e-3)
    throw ConfigError("run_evolve: dt/dt_grid leaves grid substeps above 1e-3");

  struct Row {
    StepRecord rec;
    double overlap_deficit = 0.0, theta_grid = 0.0, theta_exact = 0.0;
  };
  std::vector<Row> rows;
  std::vector<double> snaps = cfg.snapshot_times;
  size_t next_snap = 0;
  json snapshots = json::array();

  EvolveConfig ec = cfg.evolve;
  ec.norm_grid = cfg.grid;
  auto trace = evolve(prepared, cfg.ham, ec, [&](const FlowModel& m,
                                                 const StepRecord& rec) {
    if (rec.step > 0) {
      grid_evolve(matched, cfg.ham, dtg, sub);
      grid_evolve(exact, cfg.ham, dtg, sub);
    }
    Row row;
    row.rec = rec;
    row.overlap_deficit = overlap_error_vs_oracle(m, matched);
    row.theta_grid = grid_theta(matched, cfg.evolve.theta_x0);
    row.theta_exact = grid_theta(exact, cfg.evolve.theta_x0);
    rows.push_back(row);
    if (next_snap < snaps.size() &&
        std::fabs(rec.t - snaps[next_snap]) < 0.5 * cfg.evolve.dt) {
      const std::string tag = format_double(snaps[next_snap]);
      write_flow_density(
          (fs::path(cfg.out_dir) / ("flow_density_t" + tag + ".csv")).string(), m,
          cfg.grid);
      write_grid_density(
          (fs::path(cfg.out_dir) / ("grid_density_t" + tag + ".csv")).string(),
          matched);
      write_grid_density(
          (fs::path(cfg.out_dir) / ("exact_density_t" + tag + ".csv")).string(),
          exact);
      snapshots.push_back({{"t", rec.t},
                           {"theta_flow", rec.theta},
                           {"theta_err", rec.theta_err},
                           {"theta_grid", row.theta_grid},
                           {"theta_exact", row.theta_exact}});
      ++next_snap;
    }
  });
  trace.ledger.e0 = e0;

  CsvWriter w((fs::path(cfg.out_dir) / "trace.csv").string(),
              {"step", "t", "final_loss", "inner_iters", "converged", "theta",
               "theta_err", "energy", "energy_err", "norm_quad", "sqrt_loss",
               "bound_rigorous", "bound_random_walk", "e_norm", "theta_bound",
               "overlap_deficit_grid", "theta_grid", "theta_exact"});
  bool bound_ok = true;
  double max_violation = -1e300;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const int li = static_cast<int>(i) - 1;  // ledger index (step 0 predates it)
    const double sl = li >= 0 ? trace.ledger.sqrt_loss[li] : 0.0;
    const double br = li >= 0 ? trace.ledger.bound_rigorous(li) : e0;
    const double brw = li >= 0 ? trace.ledger.bound_random_walk(li) : 0.0;
    const double en = state_error_norm(br);
    const double tb = observable_bound(1.0, en);
    w.row({static_cast<double>(r.rec.step), r.rec.t, r.rec.final_loss,
           static_cast<double>(r.rec.inner_iters), r.rec.converged ? 1.0 : 0.0,
           r.rec.theta, r.rec.theta_err, r.rec.energy, r.rec.energy_err,
           r.rec.norm_quad, sl, br, brw, en, tb, r.overlap_deficit, r.theta_grid,
           r.theta_exact});
    if (r.overlap_deficit > br) bound_ok = false;
    max_violation = std::max(max_violation, r.overlap_deficit - br);
    if (std::fabs(r.rec.theta - r.theta_grid) > tb) bound_ok = false;
  }

  out.ok = bound_ok && trace.all_converged;
  out.data = {{"e0", e0},
              {"bound_valid", bound_ok},
              {"max_bound_violation", max_violation},
              {"all_steps_converged", trace.all_converged},
              {"final_bound_rigorous",
               trace.ledger.size() ? trace.ledger.bound_rigorous(trace.ledger.size() - 1)
                                   : e0},
              {"snapshots", snapshots}};
  write_json_file((fs::path(cfg.out_dir) / "summary.json").string(), out.data);
  write_manifest(cfg, now_seconds() - t0, json{{"summary", out.data}});
  return out;
}

RunSummary run_exact(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  fs::create_directories(cfg.out_dir);
  RunSummary out;
  if (cfg.ham.n_dof() != 1)
    throw ConfigError("run_exact: grid oracle handles 1D hamiltonians only");

  auto ground = grid_ground_state(cfg.ham, cfg.grid);
  write_json_file((fs::path(cfg.out_dir) / "ground.json").string(),
                  {{"energy", ground.energy}});
  write_grid_density((fs::path(cfg.out_dir) / "ground_density.csv").string(),
                     ground.state);

  GridState s = grid_state_gaussian(cfg.grid, 0.0);
  const double dt = cfg.evolve.dt;
  const int sub = std::max(1, static_cast<int>(std::round(dt / cfg.dt_grid)));
  const double dtg = dt / sub;
  CsvWriter w((fs::path(cfg.out_dir) / "trace_exact.csv").string(),
              {"step", "t", "theta", "energy", "norm"});
  w.row({0.0, 0.0, grid_theta(s, cfg.evolve.theta_x0), grid_energy(s, cfg.ham),
         s.norm()});
  size_t next_snap = 0;
  for (int step = 1; step <= cfg.evolve.n_steps; ++step) {
    grid_evolve(s, cfg.ham, dtg, sub);
    w.row({static_cast<double>(step), s.t, grid_theta(s, cfg.evolve.theta_x0),
           grid_energy(s, cfg.ham), s.norm()});
    if (next_snap < cfg.snapshot_times.size() &&
        std::fabs(s.t - cfg.snapshot_times[next_snap]) < 0.5 * dt) {
      write_grid_density(
          (fs::path(cfg.out_dir) /
           ("exact_density_t" + format_double(cfg.snapshot_times[next_snap]) + ".csv"))
              .string(),
          s);
      ++next_snap;
    }
  }
  out.data = {{"ground_energy", ground.energy},
              {"theta_final", grid_theta(s, cfg.evolve.theta_x0)}};
  write_manifest(cfg, now_seconds() - t0, out.data);
  return out;
}

RunSummary run_check(const ExperimentConfig& cfg) {
  const double t0 = now_seconds();
  fs::create_directories(cfg.out_dir);
  RunSummary out;
  const auto checks = run_core_checks(cfg.seed, cfg.n_threads);
  out.ok = all_pass(checks);
  out.data = checks_to_json(checks);
  write_json_file((fs::path(cfg.out_dir) / "check_report.json").string(), out.data);
  write_manifest(cfg, now_seconds() - t0);
  return out;
}

}  // namespace nfqs
