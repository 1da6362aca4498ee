#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "nfqs/experiments.hpp"

namespace {

struct SharedOpts {
  std::string config_path;
  std::string out_dir;
  std::string preset;
  uint64_t seed = 0;
  bool seed_given = false;
  int threads = -1;
};

void attach(CLI::App* sub, SharedOpts& o) {
  sub->add_option("--config", o.config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  sub->add_option("--out", o.out_dir, "output directory");
  sub->add_option("--preset", o.preset, "quick|paper")
      ->check(CLI::IsMember({"quick", "paper"}));
  sub->add_option("--seed", o.seed, "master RNG seed");
  sub->add_option("--threads", o.threads, "worker threads (0 = auto)");
}

int dispatch(const std::string& name, const SharedOpts& o) {
  nfqs::json file = nfqs::json::object();
  if (!o.config_path.empty()) file = nfqs::read_json_file(o.config_path);
  if (o.seed_given) file["seed"] = o.seed;
  if (!o.out_dir.empty()) file["out"] = o.out_dir;
  if (o.threads >= 0) file["threads"] = o.threads;
  const auto cfg = nfqs::resolve_config(file, name, o.preset);

  nfqs::RunSummary sum;
  if (name == "ground") {
    sum = nfqs::run_ground(cfg);
    for (const auto& rec : sum.data.at("runs"))
      std::printf("g2=%g depth=%d  E = %.6f +- %.6f\n",
                  rec.at("g2").get<double>(), rec.at("depth").get<int>(),
                  rec.at("energy").get<double>(), rec.at("std_error").get<double>());
  } else if (name == "evolve") {
    sum = nfqs::run_evolve(cfg);
    std::printf("evolution finished: e0=%.3e final_bound=%.4f bound_valid=%s\n",
                sum.data.at("e0").get<double>(),
                sum.data.at("final_bound_rigorous").get<double>(),
                sum.data.at("bound_valid").get<bool>() ? "yes" : "no");
  } else if (name == "pimc") {
    sum = nfqs::run_pimc(cfg);
    for (const auto& rec : sum.data.at("pimc"))
      std::printf("g2=%g  E = %.4f +- %.4f (virial), %.4f +- %.4f (thermo), acc=%.2f\n",
                  rec.at("g2").get<double>(), rec.at("energy").get<double>(),
                  rec.at("std_error").get<double>(),
                  rec.at("energy_thermo").get<double>(),
                  rec.at("thermo_std_error").get<double>(),
                  rec.at("acceptance").get<double>());
  } else if (name == "exact") {
    sum = nfqs::run_exact(cfg);
    std::printf("grid oracle: ground energy %.8f, theta(T)=%.6f\n",
                sum.data.at("ground_energy").get<double>(),
                sum.data.at("theta_final").get<double>());
  } else if (name == "check") {
    sum = nfqs::run_check(cfg);
    for (const auto& c : sum.data.at("checks"))
      std::printf("%s %-45s value=%.3e tol=%.3e\n",
                  c.at("pass").get<bool>() ? "PASS" : "FAIL",
                  c.at("name").get<std::string>().c_str(),
                  c.at("value").get<double>(), c.at("tolerance").get<double>());
    if (!sum.ok) {
      std::printf("check: FAILURES present\n");
      return 1;
    }
    std::printf("check: all passed\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural quantum states from normalizing flows"};
  app.require_subcommand(1);
  SharedOpts opts;

  auto* ground = app.add_subcommand("ground", "variational ground-state search");
  auto* evolve = app.add_subcommand("evolve", "real-time evolution with error bounds");
  auto* pimc = app.add_subcommand("pimc", "path-integral Monte Carlo energy oracle");
  auto* exact = app.add_subcommand("exact", "1D grid reference solver");
  auto* check = app.add_subcommand("check", "oracle-equivalence and invariant suite");
  for (auto* sub : {ground, evolve, pimc, exact, check}) attach(sub, opts);
  for (auto* sub : {ground, evolve, pimc, exact, check})
    sub->get_option("--seed")->each([&](const std::string&) { opts.seed_given = true; });

  CLI11_PARSE(app, argc, argv);

  try {
    return dispatch(app.get_subcommands().front()->get_name(), opts);
  } catch (const nfqs::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
