#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spinvmc/exact.hpp"
#include "spinvmc/run_config.hpp"

namespace spinvmc {

// Orchestration behind the CLI subcommands. do_* functions return structured
// results for programmatic use; cmd_* wrappers add file/stdout emission and
// map errors to exit codes.

struct RunSummary {
  std::string model;
  std::vector<int> dims;
  double coupling = 0;
  std::string optimizer;
  double final_energy_per_site = 0;
  double stderr_per_site = 0;  // batch-means; 0 in exact mode
  long iterations = 0;
  long guard_triggers = 0;
  // not serialized, for callers:
  double final_energy_total = 0;
  long final_samples = 0;
};

struct RunArtifacts {
  RunSummary summary;
  OptimizeResult result;
  std::string trace_path;
  std::string summary_path;
  std::string checkpoint_path;
  std::string config_path;
};

// writes <out>_trace.csv, <out>_summary.json, <out>_final.ckpt,
// <out>_config.txt and optional periodic checkpoints <out>_iterNNNNNN.ckpt.
// Exact mode: summary energy = last trace energy, no final run.
// Sampling modes: summary energy from a final `final_mult * n`-step run with
// batch-means standard error. Energies in traces are lattice totals; the
// summary reports per-site values.
RunArtifacts do_run(const RunConfig& cfg);

struct EdResult {
  std::string model;
  std::vector<int> dims;
  double coupling = 0;
  double ground_energy = 0;
  double residual = 0;
};
EdResult do_ed(const RunConfig& cfg);

struct CompareRow {
  std::string optimizer;
  double final_energy = 0;         // total
  double reference_energy = 0;     // dense/Lanczos ED (n <= 16) or chain formula (1-D tfi)
  double rel_error = 0;
};
std::vector<CompareRow> do_compare(const RunConfig& cfg,
                                   const std::vector<std::string>& optimizers);

struct DiagnosticsResult {
  std::vector<std::pair<long, double>> jratio;  // (iter, ||J||_F scaled ratio) per checkpoint
  std::vector<double> acceptance_rates;         // per chain from a probe run
  std::vector<SwapStat> swap_totals;
  double eloc_v2 = 0;        // batch-means asymptotic variance of the probe E_loc series
  double eloc_variance = 0;  // plain variance of the same series
  long probe_samples = 0;
  std::string jratio_path, sampler_path, swaps_path, eloc_path, json_path;
};
// checkpoint: explicit file, or a <prefix> whose <prefix>_iter*.ckpt series
// (plus <prefix>_final.ckpt) is scanned in iteration order
DiagnosticsResult do_diagnostics(const RunConfig& cfg, const std::string& checkpoint);

// CSV helpers shared by driver and tests
void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace);
void write_eloc_csv(const std::string& path, const Eigen::VectorXcd& series);

int cmd_run(const RunConfig& cfg);
int cmd_ed(const RunConfig& cfg);
int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& optimizers);
int cmd_diagnostics(const RunConfig& cfg, const std::string& checkpoint);

}  // namespace spinvmc
