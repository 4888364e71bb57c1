#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spinvmc/optimizer.hpp"

namespace spinvmc {

// Flat key=value run configuration. Files hold one `key = value` pair per
// line ('#' comments); command line flags override file values. resolve()
// fills optimizer-dependent schedule defaults and validates, after which
// serialize() emits the complete effective config (round-trips to the same
// run).
struct RunConfig {
  std::string model = "tfi";
  std::vector<int> dims{10};
  double coupling = 0;
  bool coupling_set = false;
  std::string optimizer = "rgn";
  std::string mode = "exact";  // exact | mcmc | tempered
  int alpha = 5;
  double init_scale = 1e-3;
  std::uint64_t seed = 123;
  long iterations = 1000;
  int ramp = 500;
  double eps_min = -1, eps_max = -1, eta_min = -1, eta_max = -1;  // < 0 = optimizer default
  int chains = 50;
  int levels = 50;  // tempered mode ladder size
  int swap_interval = 1;
  long steps_mult = 20;
  long record_stride = 0;  // 0 -> n
  long final_mult = 2000;  // final sampling run, 0 disables
  long checkpoint_stride = 0;
  std::string out = "out/run";
  std::string backend = "auto";  // auto | direct | fft
  int workers = 0;

  static RunConfig from_kv(const std::map<std::string, std::string>& kv);
  void apply_kv(const std::map<std::string, std::string>& kv);
  std::map<std::string, std::string> to_kv() const;

  void resolve();  // fill schedule defaults, validate everything
  std::string serialize() const;

  // resolved helpers (valid after resolve())
  Model model_kind() const;
  OptimizerKind optimizer_kind() const;
  PenaltySchedule schedule() const;
  Backend backend_kind(int n) const;  // auto picks fft from n >= 64
};

RunConfig load_config_file(const std::string& path);
std::map<std::string, std::string> parse_kv_text(const std::string& text);

}  // namespace spinvmc
