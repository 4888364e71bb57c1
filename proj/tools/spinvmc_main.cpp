// command line front end: run / compare / ed / diagnostics over a flat
// key=value config, flags overriding file values

#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spinvmc/driver.hpp"

namespace {

struct CliOptions {
  std::string config_file;
  std::map<std::string, std::string> overrides;
  std::string coupling_h, coupling_delta;
};

// registers the shared config flags on a subcommand; every flag simply lands
// in the override map so the precedence logic lives in one place
void add_config_flags(CLI::App* cmd, CliOptions& cli) {
  cmd->set_help_flag("--help", "print this help and exit");  // frees -h / --h
  cmd->add_option("--config", cli.config_file, "key = value config file");
  auto kv = [&cli, cmd](const std::string& flag, const std::string& key,
                        const std::string& help) {
    cmd->add_option_function<std::string>(
           flag, [&cli, key](const std::string& v) { cli.overrides[key] = v; }, help)
        ->expected(1);
  };
  kv("--model", "model", "tfi or xxz");
  kv("--dims", "dims", "lattice extents, e.g. 8 or 4x4");
  kv("--coupling", "coupling", "model coupling (h or delta)");
  kv("--optimizer", "optimizer", "gd, ngd or rgn");
  kv("--mode", "mode", "exact, mcmc or tempered");
  kv("--alpha", "alpha", "hidden channels per site");
  kv("--init-scale", "init_scale", "parameter init variance");
  kv("--seed", "seed", "master seed");
  kv("--iterations", "iterations", "optimization iterations");
  kv("--ramp", "ramp", "schedule ramp length");
  kv("--eps-min", "eps_min", "schedule eps floor");
  kv("--eps-max", "eps_max", "schedule eps ceiling");
  kv("--eta-min", "eta_min", "schedule eta floor");
  kv("--eta-max", "eta_max", "schedule eta ceiling");
  kv("--chains", "chains", "independent chains");
  kv("--levels", "levels", "tempering levels");
  kv("--swap-interval", "swap_interval", "sweeps between swap attempts");
  kv("--steps-mult", "steps_mult", "sampling steps per iteration, times n");
  kv("--record-stride", "record_stride", "steps between records (0 = n)");
  kv("--final-mult", "final_mult", "final estimate steps, times n (0 = off)");
  kv("--checkpoint-stride", "checkpoint_stride", "iterations between checkpoints");
  kv("--out", "out", "output path prefix");
  kv("--backend", "backend", "auto, direct or fft");
  kv("--workers", "workers", "worker threads (0 = VMC_WORKERS, then hardware)");
  // model-specific spellings of the coupling
  cmd->add_option("--h", cli.coupling_h, "transverse field (tfi coupling)");
  cmd->add_option("--delta", cli.coupling_delta, "anisotropy (xxz coupling)");
}

spinvmc::RunConfig build_config(const CliOptions& cli) {
  spinvmc::RunConfig cfg;
  if (!cli.config_file.empty()) cfg = spinvmc::load_config_file(cli.config_file);
  if (!cli.coupling_h.empty() && !cli.coupling_delta.empty())
    spinvmc::fail(spinvmc::ErrorKind::config_error, "--h and --delta are mutually exclusive");
  auto overrides = cli.overrides;
  if (!cli.coupling_h.empty()) overrides["coupling"] = cli.coupling_h;
  if (!cli.coupling_delta.empty()) overrides["coupling"] = cli.coupling_delta;
  cfg.apply_kv(overrides);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variational ground-state engine for transverse-field Ising and xxz lattices"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);

  CliOptions run_cli, compare_cli, ed_cli, diag_cli;
  std::string compare_optimizers = "gd,ngd,rgn";
  std::string diag_checkpoint;

  CLI::App* run = app.add_subcommand("run", "optimize and write trace/summary artifacts");
  add_config_flags(run, run_cli);

  CLI::App* compare = app.add_subcommand("compare", "run several optimizers, compare to a reference");
  add_config_flags(compare, compare_cli);
  compare->add_option("--optimizers", compare_optimizers, "comma-separated optimizer list");

  CLI::App* ed = app.add_subcommand("ed", "exact ground-state energy");
  add_config_flags(ed, ed_cli);

  CLI::App* diag = app.add_subcommand("diagnostics", "checkpoint and sampler diagnostics");
  add_config_flags(diag, diag_cli);
  diag->add_option("--checkpoint", diag_checkpoint, "checkpoint file or run prefix")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return spinvmc::cmd_run(build_config(run_cli));
    if (ed->parsed()) return spinvmc::cmd_ed(build_config(ed_cli));
    if (compare->parsed()) {
      std::vector<std::string> kinds;
      std::string cur;
      for (char c : compare_optimizers + ",") {
        if (c == ',') {
          if (!cur.empty()) kinds.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      return spinvmc::cmd_compare(build_config(compare_cli), kinds);
    }
    if (diag->parsed()) return spinvmc::cmd_diagnostics(build_config(diag_cli), diag_checkpoint);
  } catch (const spinvmc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == spinvmc::ErrorKind::config_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
