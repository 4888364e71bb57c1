#include "spinvmc/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "spinvmc/errors.hpp"

namespace spinvmc {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_parent_dir(const std::string& prefix) {
  const fs::path parent = fs::path(prefix).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io_error, "cannot open for writing: " + path);
  out << text;
  out.flush();
  require(out.good(), ErrorKind::io_error, "write failed: " + path);
}

ordered_json summary_json(const RunSummary& s) {
  ordered_json j;
  j["model"] = s.model;
  j["dims"] = s.dims;
  j["coupling"] = s.coupling;
  j["optimizer"] = s.optimizer;
  j["final_energy_per_site"] = s.final_energy_per_site;
  j["stderr"] = s.stderr_per_site;
  j["iterations"] = s.iterations;
  j["guard_triggers"] = s.guard_triggers;
  return j;
}

std::unique_ptr<MultiChainSampler> make_sampler(const RunConfig& cfg,
                                                const HamiltonianSpec& ham) {
  SamplerOptions so;
  so.chain_count = cfg.chains;
  so.levels = cfg.mode == "tempered" ? cfg.levels : 1;
  so.swap_interval = cfg.swap_interval;
  so.seed = cfg.seed;
  so.backend = cfg.backend_kind(ham.lattice.n);
  so.workers = cfg.workers;
  return std::make_unique<MultiChainSampler>(ham, so);
}

// mean energy and batch-means standard error of a chain-major eloc batch
std::pair<double, double> batch_energy_se(const SampleBatch& batch) {
  const cx mean = batch.eloc.mean();
  double v2 = 0;
  bool have_v2 = false;
  if (batch.chain_count > 0 && batch.rows_per_chain >= 4) {
    for (int c = 0; c < batch.chain_count; ++c)
      v2 += asymptotic_variance(
          batch.eloc.segment(c * batch.rows_per_chain, batch.rows_per_chain));
    v2 /= batch.chain_count;
    have_v2 = true;
  }
  const double se = have_v2 ? std::sqrt(v2 / static_cast<double>(batch.rows())) : 0.0;
  return {mean.real(), se};
}

}  // namespace

void write_trace_csv(const std::string& path, const std::vector<IterationRecord>& trace) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io_error, "cannot open for writing: " + path);
  out << "iter,energy_re,energy_im,variance,eps,eta,update_norm,guard,residual,seconds\n";
  for (const auto& r : trace)
    out << r.iter << ',' << fmt(r.energy.real()) << ',' << fmt(r.energy.imag()) << ','
        << fmt(r.variance) << ',' << fmt(r.eps) << ',' << fmt(r.eta) << ','
        << fmt(r.update_norm) << ',' << r.guard << ',' << fmt(r.residual) << ','
        << fmt(r.seconds) << '\n';
  out.flush();
  require(out.good(), ErrorKind::io_error, "write failed: " + path);
}

void write_eloc_csv(const std::string& path, const Eigen::VectorXcd& series) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::io_error, "cannot open for writing: " + path);
  out << "step,eloc_re,eloc_im\n";
  for (long i = 0; i < series.size(); ++i)
    out << i << ',' << fmt(series[i].real()) << ',' << fmt(series[i].imag()) << '\n';
  out.flush();
  require(out.good(), ErrorKind::io_error, "write failed: " + path);
}

RunArtifacts do_run(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  cfg.resolve();
  ensure_parent_dir(cfg.out);

  const LatticeSpec lat = build_lattice(cfg.dims);
  const HamiltonianSpec ham = make_hamiltonian(cfg.model_kind(), cfg.coupling, lat);
  const RbmParams init = init_params(cfg.alpha, lat.n, cfg.init_scale, cfg.seed);

  OptimizeOptions opts;
  opts.iterations = cfg.iterations;
  opts.exact = cfg.mode == "exact";
  opts.steps_mult = cfg.steps_mult;
  opts.record_stride = cfg.record_stride;
  opts.checkpoint_stride = cfg.checkpoint_stride;
  opts.checkpoint_prefix = cfg.out;

  std::unique_ptr<MultiChainSampler> sampler;
  if (!opts.exact) sampler = make_sampler(cfg, ham);

  RunArtifacts art;
  art.result = optimize(ham, init, cfg.optimizer_kind(), cfg.schedule(), opts, sampler.get());

  art.trace_path = cfg.out + "_trace.csv";
  art.checkpoint_path = cfg.out + "_final.ckpt";
  art.config_path = cfg.out + "_config.txt";
  art.summary_path = cfg.out + "_summary.json";
  write_trace_csv(art.trace_path, art.result.trace);
  save_checkpoint(art.result.params, art.checkpoint_path);
  write_text(art.config_path, cfg.serialize());

  RunSummary& sum = art.summary;
  sum.model = cfg.model;
  sum.dims = cfg.dims;
  sum.coupling = cfg.coupling;
  sum.optimizer = cfg.optimizer;
  sum.iterations = cfg.iterations;
  sum.guard_triggers = art.result.guard_triggers;

  const double n = static_cast<double>(lat.n);
  if (opts.exact) {
    if (!art.result.trace.empty()) {
      sum.final_energy_total = art.result.trace.back().energy.real();
    } else {
      sum.final_energy_total =
          estimate(exact_batch(ham, art.result.params, false)).energy.real();
    }
    sum.stderr_per_site = 0;
    sum.final_samples = 1L << lat.n;
  } else if (cfg.final_mult > 0) {
    const long stride = cfg.record_stride > 0 ? cfg.record_stride : lat.n;
    const SampleBatch fin =
        sampler->run(art.result.params, cfg.final_mult * lat.n, stride, false);
    const auto [mean, se] = batch_energy_se(fin);
    sum.final_energy_total = mean;
    sum.stderr_per_site = se / n;
    sum.final_samples = fin.rows();
  } else if (!art.result.trace.empty()) {
    const auto& last = art.result.trace.back();
    sum.final_energy_total = last.energy.real();
    const long t_rows = static_cast<long>(cfg.chains) *
                        (cfg.steps_mult * lat.n / (cfg.record_stride > 0 ? cfg.record_stride : lat.n));
    sum.stderr_per_site = t_rows > 0 ? std::sqrt(last.variance / t_rows) / n : 0.0;
    sum.final_samples = t_rows;
  } else {
    const long stride = cfg.record_stride > 0 ? cfg.record_stride : lat.n;
    const SampleBatch fin =
        sampler->run(art.result.params, cfg.steps_mult * lat.n, stride, false);
    const auto [mean, se] = batch_energy_se(fin);
    sum.final_energy_total = mean;
    sum.stderr_per_site = se / n;
    sum.final_samples = fin.rows();
  }
  sum.final_energy_per_site = sum.final_energy_total / n;

  write_text(art.summary_path, summary_json(sum).dump(2) + "\n");
  return art;
}

EdResult do_ed(const RunConfig& cfg_in) {
  RunConfig cfg = cfg_in;
  cfg.resolve();
  const LatticeSpec lat = build_lattice(cfg.dims);
  const HamiltonianSpec ham = make_hamiltonian(cfg.model_kind(), cfg.coupling, lat);
  const GroundState gs = ground_state(ham);
  EdResult res;
  res.model = cfg.model;
  res.dims = cfg.dims;
  res.coupling = cfg.coupling;
  res.ground_energy = gs.energy;
  res.residual = gs.residual;
  return res;
}

std::vector<CompareRow> do_compare(const RunConfig& cfg_in,
                                   const std::vector<std::string>& optimizers) {
  RunConfig cfg = cfg_in;
  cfg.resolve();
  require(!optimizers.empty(), ErrorKind::config_error, "compare needs at least one optimizer");

  const LatticeSpec lat = build_lattice(cfg.dims);
  const HamiltonianSpec ham = make_hamiltonian(cfg.model_kind(), cfg.coupling, lat);
  double reference = 0;
  if (lat.n <= 16) {
    reference = ground_state(ham).energy;
  } else if (cfg.model_kind() == Model::tfi && cfg.dims.size() == 1) {
    reference = tfi_chain_reference_energy(cfg.dims[0], cfg.coupling);
  } else {
    fail(ErrorKind::size_cap, "no reference energy available beyond 16 sites for this model");
  }

  std::vector<CompareRow> rows;
  for (const std::string& opt : optimizers) {
    RunConfig sub = cfg;
    sub.optimizer = opt;
    sub.out = cfg.out + "_" + opt;
    const RunArtifacts art = do_run(sub);
    CompareRow row;
    row.optimizer = opt;
    row.final_energy = art.summary.final_energy_total;
    row.reference_energy = reference;
    row.rel_error = std::abs(row.final_energy - reference) / std::abs(reference);
    rows.push_back(row);
  }

  std::string csv = "optimizer,final_energy,reference_energy,rel_error\n";
  for (const auto& r : rows)
    csv += r.optimizer + "," + fmt(r.final_energy) + "," + fmt(r.reference_energy) + "," +
           fmt(r.rel_error) + "\n";
  ensure_parent_dir(cfg.out);
  write_text(cfg.out + "_compare.csv", csv);
  return rows;
}

DiagnosticsResult do_diagnostics(const RunConfig& cfg_in, const std::string& checkpoint) {
  RunConfig cfg = cfg_in;
  cfg.resolve();
  require(!checkpoint.empty(), ErrorKind::config_error, "diagnostics needs a checkpoint path");

  // explicit file, or prefix with an _iterNNNNNN.ckpt series plus _final.ckpt
  std::vector<std::pair<long, std::string>> ckpts;
  if (fs::is_regular_file(checkpoint)) {
    ckpts.emplace_back(0, checkpoint);
  } else {
    const fs::path prefix(checkpoint);
    const fs::path dir = prefix.parent_path().empty() ? fs::path(".") : prefix.parent_path();
    const std::string base = prefix.filename().string();
    if (fs::is_directory(dir))
      for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() == base.size() + 16 && name.rfind(base + "_iter", 0) == 0 &&
            name.substr(name.size() - 5) == ".ckpt") {
          const std::string digits = name.substr(base.size() + 5, 6);
          if (std::all_of(digits.begin(), digits.end(),
                          [](char c) { return c >= '0' && c <= '9'; }))
            ckpts.emplace_back(std::stol(digits), entry.path().string());
        }
      }
    std::sort(ckpts.begin(), ckpts.end());
    const std::string fin = checkpoint + "_final.ckpt";
    if (fs::is_regular_file(fin)) {
      const long label = ckpts.empty() ? cfg.iterations : std::max(cfg.iterations, ckpts.back().first);
      if (ckpts.empty() || ckpts.back().first < label) ckpts.emplace_back(label, fin);
    }
    require(!ckpts.empty(), ErrorKind::io_error,
            "no checkpoints found for prefix: " + checkpoint);
  }

  const LatticeSpec lat = build_lattice(cfg.dims);
  const HamiltonianSpec ham = make_hamiltonian(cfg.model_kind(), cfg.coupling, lat);

  DiagnosticsResult res;
  if (lat.n <= 10) {
    for (const auto& [iter, path] : ckpts) {
      const RbmParams p = load_checkpoint(path);
      require(p.n == lat.n, ErrorKind::data_error,
              "checkpoint " + path + " does not match the configured lattice");
      const WirtingerBlocks blocks = exact_wirtinger_blocks(ham, p);
      const double jn = blocks.J.norm();
      const double hn = blocks.H.norm();
      res.jratio.emplace_back(iter, jn / std::sqrt(hn * hn + jn * jn));
    }
  }

  // probe run from the newest checkpoint: acceptance, swaps, E_loc series
  const RbmParams last = load_checkpoint(ckpts.back().second);
  require(last.n == lat.n, ErrorKind::data_error,
          "checkpoint does not match the configured lattice");
  auto sampler = make_sampler(cfg, ham);
  const long probe_records = 200;
  const SampleBatch probe = sampler->run(last, probe_records * lat.n, lat.n, false);
  res.probe_samples = probe.rows();
  res.acceptance_rates = sampler->acceptance_rates();
  res.swap_totals = sampler->swap_totals();
  double v2 = 0;
  for (int c = 0; c < probe.chain_count; ++c)
    v2 += asymptotic_variance(probe.eloc.segment(c * probe.rows_per_chain,
                                                 probe.rows_per_chain));
  res.eloc_v2 = v2 / probe.chain_count;
  res.eloc_variance = (probe.eloc.array() - probe.eloc.mean()).abs2().mean();

  ensure_parent_dir(cfg.out);
  res.jratio_path = cfg.out + "_jratio.csv";
  res.sampler_path = cfg.out + "_acceptance.csv";
  res.swaps_path = cfg.out + "_swaps.csv";
  res.eloc_path = cfg.out + "_eloc.csv";
  res.json_path = cfg.out + "_diagnostics.json";

  std::string jcsv = "iter,jratio\n";
  for (const auto& [iter, ratio] : res.jratio) jcsv += std::to_string(iter) + "," + fmt(ratio) + "\n";
  write_text(res.jratio_path, jcsv);

  std::string acsv = "chain,acceptance_rate\n";
  for (std::size_t c = 0; c < res.acceptance_rates.size(); ++c)
    acsv += std::to_string(c) + "," + fmt(res.acceptance_rates[c]) + "\n";
  write_text(res.sampler_path, acsv);

  std::string scsv = "level_low,level_high,attempts,accepts\n";
  for (std::size_t i = 0; i < res.swap_totals.size(); ++i)
    scsv += std::to_string(i) + "," + std::to_string(i + 1) + "," +
            std::to_string(res.swap_totals[i].attempts) + "," +
            std::to_string(res.swap_totals[i].accepts) + "\n";
  write_text(res.swaps_path, scsv);

  write_eloc_csv(res.eloc_path, probe.eloc);

  ordered_json j;
  j["model"] = cfg.model;
  j["dims"] = cfg.dims;
  j["coupling"] = cfg.coupling;
  j["checkpoints"] = ckpts.size();
  ordered_json jr = ordered_json::array();
  for (const auto& [iter, ratio] : res.jratio) jr.push_back({{"iter", iter}, {"jratio", ratio}});
  j["jratio"] = jr;
  if (lat.n > 10) j["jratio_note"] = "skipped: exact blocks are capped at 10 sites";
  j["probe_samples"] = res.probe_samples;
  j["eloc_v2"] = res.eloc_v2;
  j["eloc_variance"] = res.eloc_variance;
  j["acceptance_rates"] = res.acceptance_rates;
  ordered_json sw = ordered_json::array();
  for (std::size_t i = 0; i < res.swap_totals.size(); ++i)
    sw.push_back({{"pair", {i, i + 1}},
                  {"attempts", res.swap_totals[i].attempts},
                  {"accepts", res.swap_totals[i].accepts}});
  j["swaps"] = sw;
  write_text(res.json_path, j.dump(2) + "\n");
  return res;
}

namespace {

int run_guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::config_error || e.kind() == ErrorKind::missing_field ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int cmd_run(const RunConfig& cfg) {
  return run_guarded([&] {
    const RunArtifacts art = do_run(cfg);
    std::cout << summary_json(art.summary).dump(2) << "\n";
  });
}

int cmd_ed(const RunConfig& cfg) {
  return run_guarded([&] {
    const EdResult res = do_ed(cfg);
    ordered_json j;
    j["model"] = res.model;
    j["dims"] = res.dims;
    j["coupling"] = res.coupling;
    j["ground_energy"] = res.ground_energy;
    j["residual"] = res.residual;
    std::cout << j.dump(2) << "\n";
  });
}

int cmd_compare(const RunConfig& cfg, const std::vector<std::string>& optimizers) {
  return run_guarded([&] {
    const auto rows = do_compare(cfg, optimizers);
    std::cout << "optimizer,final_energy,reference_energy,rel_error\n";
    for (const auto& r : rows)
      std::cout << r.optimizer << ',' << fmt(r.final_energy) << ',' << fmt(r.reference_energy)
                << ',' << fmt(r.rel_error) << "\n";
  });
}

int cmd_diagnostics(const RunConfig& cfg, const std::string& checkpoint) {
  return run_guarded([&] {
    const DiagnosticsResult res = do_diagnostics(cfg, checkpoint);
    std::ifstream in(res.json_path);
    std::cout << in.rdbuf();
  });
}

}  // namespace spinvmc
