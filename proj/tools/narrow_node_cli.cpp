// Command-line front end.
//
//   narrow_node_cli simulate     --weights w.json --N 8 [--x0 a,b] [--out prefix]
//   narrow_node_cli bound        --weights w.json --N 10
//   narrow_node_cli min-switches --weights w.json --eps 0.1
//   narrow_node_cli sweep        --weights w.json --N-list 4,8,16 [--out sweep.csv]
//   narrow_node_cli verify       --weights w.json [--N-list ...]
//
// Exit status: 0 ok, 1 verification failed, 2 bad flags, 3 file or parse
// error, 4 integration failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "narrow_node/narrow_node.hpp"

namespace nn = narrow_node;

namespace {

enum Exit : int {
  kOk = 0,
  kVerifyFailed = 1,
  kBadFlags = 2,
  kFileError = 3,
  kIntegrationFailed = 4,
};

struct BadFlags : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FileError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CliConfig {
  std::string weights_path;
  double r = 1.0;
  double T = 1.0;
  std::optional<int> N;
  std::vector<int> N_list;
  std::optional<double> eps;
  std::size_t samples = 50;
  std::uint64_t seed = 0;
  std::string out_path;
  std::optional<double> step;
  std::optional<double> tol;
  std::vector<double> x0;
};

void add_common(CLI::App* cmd, CliConfig& cfg) {
  cmd->add_option("--weights", cfg.weights_path, "JSON weight file")->required();
  cmd->add_option("--r", cfg.r, "radius of the L1 ball of initial conditions")
      ->capture_default_str();
  cmd->add_option("--T", cfg.T, "time horizon")->capture_default_str();
  cmd->add_option("--step", cfg.step, "use fixed-step RK4 with this step");
  cmd->add_option("--tol", cfg.tol, "adaptive absolute and relative tolerance (default 1e-10)");
}

void validate(const CliConfig& cfg) {
  if (!(cfg.r >= 0.0)) throw BadFlags("--r must be >= 0");
  if (!(cfg.T > 0.0)) throw BadFlags("--T must be > 0");
  if (cfg.N && *cfg.N < 1) throw BadFlags("--N must be >= 1");
  for (std::size_t k = 0; k < cfg.N_list.size(); ++k) {
    if (cfg.N_list[k] < 1) throw BadFlags("--N-list entries must be >= 1");
    if (k > 0 && cfg.N_list[k] <= cfg.N_list[k - 1])
      throw BadFlags("--N-list must be strictly increasing");
  }
  if (cfg.eps && !(*cfg.eps > 0.0)) throw BadFlags("--eps must be > 0");
  if (cfg.samples < 1) throw BadFlags("--samples must be >= 1");
  if (cfg.step && !(*cfg.step > 0.0)) throw BadFlags("--step must be > 0");
  if (cfg.tol && !(*cfg.tol > 0.0)) throw BadFlags("--tol must be > 0");
  if (cfg.step && cfg.tol) throw BadFlags("--step and --tol are mutually exclusive");
}

nn::IntegratorConfig integrator(const CliConfig& cfg) {
  if (cfg.step) return nn::IntegratorConfig::fixed(*cfg.step);
  return nn::IntegratorConfig::adaptive(cfg.tol.value_or(1e-10));
}

nn::WideField load(const CliConfig& cfg) {
  try {
    return nn::load_weights(cfg.weights_path);
  } catch (const nn::Error& e) {
    throw FileError(e.what());
  }
}

void print(const std::string& key, double value) {
  std::cout << key << '=' << nn::format_number(value) << '\n';
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FileError("cannot write " + path);
  return out;
}

int run_simulate(const CliConfig& cfg) {
  if (!cfg.N) throw BadFlags("simulate requires --N");
  const auto field = load(cfg);
  nn::Vector x0;
  if (!cfg.x0.empty()) {
    x0 = Eigen::Map<const nn::Vector>(cfg.x0.data(), static_cast<Eigen::Index>(cfg.x0.size()));
    if (x0.size() != field.dim()) throw BadFlags("--x0 has the wrong dimension");
  } else {
    x0 = nn::sample_ball(cfg.r, field.dim(), 1, cfg.seed).front();
  }
  const nn::SwitchSchedule schedule(field, cfg.T, *cfg.N);
  const auto icfg = integrator(cfg);
  const auto wide = nn::integrate_wide(field, x0, cfg.T, icfg);
  const auto switched = nn::integrate_switched(schedule, x0, icfg);
  if (!cfg.out_path.empty()) {
    auto w = open_output(cfg.out_path + ".wide.csv");
    nn::write_trajectory_csv(w, wide);
    auto s = open_output(cfg.out_path + ".switched.csv");
    nn::write_trajectory_csv(s, switched);
    if (!w || !s) throw FileError("failed writing trajectories");
  }
  print("terminal_error", (switched.final_state() - wide.final_state()).lpNorm<1>());
  print("bound", nn::error_bound(nn::growth_constants(field, cfg.r, cfg.T), *cfg.N));
  return kOk;
}

int run_bound(const CliConfig& cfg) {
  if (!cfg.N) throw BadFlags("bound requires --N");
  const auto gc = nn::growth_constants(load(cfg), cfg.r, cfg.T);
  print("c", gc.c);
  print("L", gc.L);
  print("K_tilde", gc.K_tilde);
  print("X", nn::velocity_bound(gc, gc.T));
  print("R", nn::trajectory_radius(gc, gc.T));
  std::cout << "N=" << *cfg.N << '\n';
  print("bound", nn::error_bound(gc, *cfg.N));
  return kOk;
}

int run_min_switches(const CliConfig& cfg) {
  if (!cfg.eps) throw BadFlags("min-switches requires --eps");
  const auto gc = nn::growth_constants(load(cfg), cfg.r, cfg.T);
  const auto N = nn::min_switches(gc, *cfg.eps);
  std::cout << "N=" << N << '\n';
  print("bound", nn::error_bound(gc, N));
  return kOk;
}

int run_sweep(const CliConfig& cfg) {
  if (cfg.N_list.empty()) throw BadFlags("sweep requires --N-list");
  const auto report = nn::convergence_sweep(load(cfg), cfg.r, cfg.T, cfg.N_list, cfg.samples,
                                            cfg.seed, integrator(cfg));
  if (cfg.out_path.empty()) {
    nn::write_sweep_csv(std::cout, report);
  } else {
    auto out = open_output(cfg.out_path);
    nn::write_sweep_csv(out, report);
    if (!out) throw FileError("failed writing " + cfg.out_path);
  }
  return kOk;
}

int run_verify(const CliConfig& cfg) {
  const auto field = load(cfg);
  const auto icfg = integrator(cfg);
  const std::vector<int> N_list =
      cfg.N_list.empty() ? std::vector<int>{1, 2, 4, 8, 16, 32, 64} : cfg.N_list;

  nn::BoundCheck bounds;
  for (int N : N_list)
    bounds.merge(nn::verify_velocity_bound(field, cfg.r, cfg.T, N, cfg.samples, cfg.seed, icfg));
  const auto report =
      nn::convergence_sweep(field, cfg.r, cfg.T, N_list, cfg.samples, cfg.seed, icfg);
  const auto violations = nn::count_bound_violations(report, nn::noise_floor(icfg) / 100.0);

  print("worst_velocity_ratio", bounds.worst_velocity_ratio);
  print("worst_radius_ratio", bounds.worst_radius_ratio);
  std::cout << "nodes_checked=" << bounds.nodes_checked << '\n';
  std::cout << "bound_violations=" << violations << '\n';
  const bool ok = bounds.passed() && violations == 0;
  std::cout << "result=" << (ok ? "pass" : "fail") << '\n';
  return ok ? kOk : kVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Switched narrow neural ODE versus wide shallow neural ODE"};
  app.require_subcommand(1);
  CliConfig cfg;

  auto* simulate = app.add_subcommand("simulate", "integrate both systems from one x0");
  add_common(simulate, cfg);
  simulate->add_option("--N", cfg.N, "number of switching periods");
  simulate->add_option("--x0", cfg.x0, "initial condition (default: one sample from the ball)")
      ->delimiter(',');
  simulate->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();
  simulate->add_option("--out", cfg.out_path, "writes <out>.wide.csv and <out>.switched.csv");

  auto* bound = app.add_subcommand("bound", "print the growth constants and the error bound");
  add_common(bound, cfg);
  bound->add_option("--N", cfg.N, "number of switching periods");

  auto* min_sw = app.add_subcommand("min-switches", "smallest N whose bound is <= eps");
  add_common(min_sw, cfg);
  min_sw->add_option("--eps", cfg.eps, "target error");

  auto* sweep = app.add_subcommand("sweep", "empirical error versus bound over N");
  add_common(sweep, cfg);
  sweep->add_option("--N-list", cfg.N_list, "comma separated N values")->delimiter(',');
  sweep->add_option("--samples", cfg.samples, "initial conditions")->capture_default_str();
  sweep->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();
  sweep->add_option("--out", cfg.out_path, "CSV output (default stdout)");

  auto* verify = app.add_subcommand("verify", "velocity, radius and bound-dominance checks");
  add_common(verify, cfg);
  verify->add_option("--N-list", cfg.N_list, "comma separated N values")->delimiter(',');
  verify->add_option("--samples", cfg.samples, "initial conditions")->capture_default_str();
  verify->add_option("--seed", cfg.seed, "sampling seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadFlags;
  }

  try {
    validate(cfg);
    if (simulate->parsed()) return run_simulate(cfg);
    if (bound->parsed()) return run_bound(cfg);
    if (min_sw->parsed()) return run_min_switches(cfg);
    if (sweep->parsed()) return run_sweep(cfg);
    return run_verify(cfg);
  } catch (const BadFlags& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadFlags;
  } catch (const FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFileError;
  } catch (const nn::IntegrationError& e) {
    std::cerr << "integration failed: " << e.what() << '\n';
    return kIntegrationFailed;
  } catch (const nn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadFlags;
  }
}
