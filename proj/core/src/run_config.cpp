#include "spinvmc/run_config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spinvmc/errors.hpp"

namespace spinvmc {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

long parse_long(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const long out = std::stol(v, &pos);
    require(pos == v.size(), ErrorKind::config_error, "trailing junk in " + key + ": " + v);
    return out;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::config_error, "cannot parse integer for " + key + ": " + v);
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(v, &pos);
    require(pos == v.size(), ErrorKind::config_error, "trailing junk in " + key + ": " + v);
    return out;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::config_error, "cannot parse number for " + key + ": " + v);
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const unsigned long long out = std::stoull(v, &pos);
    require(pos == v.size(), ErrorKind::config_error, "trailing junk in " + key + ": " + v);
    return out;
  } catch (const Error&) {
    throw;
  } catch (...) {
    fail(ErrorKind::config_error, "cannot parse seed for " + key + ": " + v);
  }
}

// "10", "4x4" or "4,4"
std::vector<int> parse_dims(const std::string& v) {
  std::vector<int> dims;
  std::string cur;
  for (char ch : v + "x") {
    if (ch == 'x' || ch == 'X' || ch == ',') {
      const std::string t = trim(cur);
      require(!t.empty(), ErrorKind::config_error, "empty extent in dims: " + v);
      dims.push_back(static_cast<int>(parse_long("dims", t)));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  return dims;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::map<std::string, std::string> parse_kv_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    require(eq != std::string::npos, ErrorKind::config_error,
            "line " + std::to_string(lineno) + " is not key = value: " + t);
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    require(!key.empty(), ErrorKind::config_error,
            "empty key on line " + std::to_string(lineno));
    kv[key] = val;
  }
  return kv;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io_error, "cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  cfg.apply_kv(parse_kv_text(ss.str()));
  return cfg;
}

RunConfig RunConfig::from_kv(const std::map<std::string, std::string>& kv) {
  RunConfig cfg;
  cfg.apply_kv(kv);
  return cfg;
}

void RunConfig::apply_kv(const std::map<std::string, std::string>& kv) {
  for (const auto& [key, val] : kv) {
    if (key == "model") model = val;
    else if (key == "dims") dims = parse_dims(val);
    else if (key == "coupling") { coupling = parse_double(key, val); coupling_set = true; }
    else if (key == "optimizer") optimizer = val;
    else if (key == "mode") mode = val;
    else if (key == "alpha") alpha = static_cast<int>(parse_long(key, val));
    else if (key == "init_scale") init_scale = parse_double(key, val);
    else if (key == "seed") seed = parse_u64(key, val);
    else if (key == "iterations") iterations = parse_long(key, val);
    else if (key == "ramp") ramp = static_cast<int>(parse_long(key, val));
    else if (key == "eps_min") eps_min = parse_double(key, val);
    else if (key == "eps_max") eps_max = parse_double(key, val);
    else if (key == "eta_min") eta_min = parse_double(key, val);
    else if (key == "eta_max") eta_max = parse_double(key, val);
    else if (key == "chains") chains = static_cast<int>(parse_long(key, val));
    else if (key == "levels") levels = static_cast<int>(parse_long(key, val));
    else if (key == "swap_interval") swap_interval = static_cast<int>(parse_long(key, val));
    else if (key == "steps_mult") steps_mult = parse_long(key, val);
    else if (key == "record_stride") record_stride = parse_long(key, val);
    else if (key == "final_mult") final_mult = parse_long(key, val);
    else if (key == "checkpoint_stride") checkpoint_stride = parse_long(key, val);
    else if (key == "out") out = val;
    else if (key == "backend") backend = val;
    else if (key == "workers") workers = static_cast<int>(parse_long(key, val));
    else fail(ErrorKind::config_error, "unknown config key: " + key);
  }
}

std::map<std::string, std::string> RunConfig::to_kv() const {
  std::map<std::string, std::string> kv;
  kv["model"] = model;
  std::string d;
  for (std::size_t i = 0; i < dims.size(); ++i)
    d += (i ? "x" : "") + std::to_string(dims[i]);
  kv["dims"] = d;
  if (coupling_set) kv["coupling"] = format_double(coupling);
  kv["optimizer"] = optimizer;
  kv["mode"] = mode;
  kv["alpha"] = std::to_string(alpha);
  kv["init_scale"] = format_double(init_scale);
  kv["seed"] = std::to_string(seed);
  kv["iterations"] = std::to_string(iterations);
  kv["ramp"] = std::to_string(ramp);
  if (eps_min >= 0) kv["eps_min"] = format_double(eps_min);
  if (eps_max >= 0) kv["eps_max"] = format_double(eps_max);
  if (eta_min >= 0) kv["eta_min"] = format_double(eta_min);
  if (eta_max >= 0) kv["eta_max"] = format_double(eta_max);
  kv["chains"] = std::to_string(chains);
  kv["levels"] = std::to_string(levels);
  kv["swap_interval"] = std::to_string(swap_interval);
  kv["steps_mult"] = std::to_string(steps_mult);
  kv["record_stride"] = std::to_string(record_stride);
  kv["final_mult"] = std::to_string(final_mult);
  kv["checkpoint_stride"] = std::to_string(checkpoint_stride);
  kv["out"] = out;
  kv["backend"] = backend;
  kv["workers"] = std::to_string(workers);
  return kv;
}

void RunConfig::resolve() {
  require(model == "tfi" || model == "xxz", ErrorKind::config_error,
          "model must be tfi or xxz, got " + model);
  require(optimizer == "gd" || optimizer == "ngd" || optimizer == "rgn",
          ErrorKind::config_error, "optimizer must be gd, ngd or rgn, got " + optimizer);
  require(mode == "exact" || mode == "mcmc" || mode == "tempered", ErrorKind::config_error,
          "mode must be exact, mcmc or tempered, got " + mode);
  require(backend == "auto" || backend == "direct" || backend == "fft",
          ErrorKind::config_error, "backend must be auto, direct or fft, got " + backend);
  require(coupling_set, ErrorKind::config_error, "coupling is required");
  require(!dims.empty() && dims.size() <= 2, ErrorKind::config_error,
          "dims must have 1 or 2 extents");
  for (int d : dims)
    require(d >= 2, ErrorKind::config_error, "every extent needs at least 2 sites");
  require(alpha >= 1, ErrorKind::config_error, "alpha must be positive");
  require(init_scale > 0, ErrorKind::config_error, "init_scale must be positive");
  require(iterations >= 0, ErrorKind::config_error, "iterations must be non-negative");
  require(ramp >= 1, ErrorKind::config_error, "ramp must be positive");
  require(chains >= 1, ErrorKind::config_error, "chains must be positive");
  require(swap_interval >= 1, ErrorKind::config_error, "swap_interval must be positive");
  require(steps_mult >= 1, ErrorKind::config_error, "steps_mult must be positive");
  require(record_stride >= 0, ErrorKind::config_error, "record_stride must be non-negative");
  require(final_mult >= 0, ErrorKind::config_error, "final_mult must be non-negative");
  require(checkpoint_stride >= 0, ErrorKind::config_error,
          "checkpoint_stride must be non-negative");
  require(workers >= 0, ErrorKind::config_error, "workers must be non-negative");
  require(!out.empty(), ErrorKind::config_error, "out prefix must not be empty");
  if (mode == "tempered")
    require(levels >= 2, ErrorKind::config_error, "tempered mode needs at least 2 levels");

  long n = 1;
  for (int d : dims) n *= d;
  if (mode == "exact")
    require(n <= 16, ErrorKind::size_cap, "exact mode is capped at 16 sites");

  const PenaltySchedule def = default_schedule(optimizer_kind());
  if (eps_min < 0) eps_min = def.eps_min;
  if (eps_max < 0) eps_max = def.eps_max;
  if (eta_min < 0) eta_min = def.eta_min;
  if (eta_max < 0) eta_max = def.eta_max;
  require(eps_min > 0 && eta_min > 0, ErrorKind::config_error,
          "schedule minima must be positive");
  require(eps_max >= eps_min && eta_max >= eta_min, ErrorKind::config_error,
          "schedule maxima must not undercut the minima");
}

std::string RunConfig::serialize() const {
  // fixed emission order, independent of map iteration details
  static const char* order[] = {"model", "dims", "coupling", "optimizer", "mode",
                                "alpha", "init_scale", "seed", "iterations", "ramp",
                                "eps_min", "eps_max", "eta_min", "eta_max", "chains",
                                "levels", "swap_interval", "steps_mult", "record_stride",
                                "final_mult", "checkpoint_stride", "out", "backend",
                                "workers"};
  const auto kv = to_kv();
  std::string s;
  for (const char* key : order) {
    const auto it = kv.find(key);
    if (it != kv.end()) s += std::string(key) + " = " + it->second + "\n";
  }
  return s;
}

Model RunConfig::model_kind() const {
  if (model == "tfi") return Model::tfi;
  if (model == "xxz") return Model::xxz;
  fail(ErrorKind::config_error, "model must be tfi or xxz, got " + model);
}

OptimizerKind RunConfig::optimizer_kind() const {
  if (optimizer == "gd") return OptimizerKind::gd;
  if (optimizer == "ngd") return OptimizerKind::ngd;
  if (optimizer == "rgn") return OptimizerKind::rgn;
  fail(ErrorKind::config_error, "optimizer must be gd, ngd or rgn, got " + optimizer);
}

PenaltySchedule RunConfig::schedule() const {
  PenaltySchedule s = default_schedule(optimizer_kind());
  if (eps_min >= 0) s.eps_min = eps_min;
  if (eps_max >= 0) s.eps_max = eps_max;
  if (eta_min >= 0) s.eta_min = eta_min;
  if (eta_max >= 0) s.eta_max = eta_max;
  s.ramp = ramp;
  return s;
}

Backend RunConfig::backend_kind(int n) const {
  if (backend == "direct") return Backend::direct;
  if (backend == "fft") return Backend::fft;
  if (backend == "auto") return n >= 64 ? Backend::fft : Backend::direct;
  fail(ErrorKind::config_error, "backend must be auto, direct or fft, got " + backend);
}

}  // namespace spinvmc
