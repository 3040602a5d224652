#pragma once

// Command-line front end. run_cli parses argv, dispatches one subcommand and
// maps failures to exit codes: 0 success, 1 invalid input, 2 runtime failure.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wasep/config.hpp"
#include "wasep/drift.hpp"
#include "wasep/ensemble.hpp"
#include "wasep/io.hpp"
#include "wasep/kernel.hpp"

namespace wasep {

struct CliOptions {
  std::vector<std::string> configs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> replicas;
  std::optional<std::string> out;
  std::optional<std::string> format;
  bool override_safety = false;
};

namespace cli_detail {

inline JobConfig load(const std::string& path, const CliOptions& o) {
  auto c = load_config(path);
  if (o.seed) c.master_seed = *o.seed;
  if (o.replicas) c.replicas = *o.replicas;
  if (o.format) c.format = *o.format;
  if (o.override_safety) c.override_safety = true;
  c.validate();
  return c;
}

/// Refuses jobs whose window plus horizon can feel the torus seam.
inline void check_seam(const JobConfig& c, const EnsembleJob& job) {
  if (c.override_safety) return;
  const auto r = seam_reach(job.params, job.size, job.window_radius, job.t_end);
  if (r.safe()) return;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "lattice.size_factor: window plus horizon reach %.1f sites from the origin, beyond half the "
                "torus (%d); enlarge the lattice or use --override-safety",
                r.reach, r.half_size);
  throw ValidationError(buf);
}

inline JobConfig single(const CliOptions& o) {
  if (o.configs.size() != 1) throw ValidationError("--config: this subcommand takes exactly one config");
  return load(o.configs.front(), o);
}

/// --out, then output.dir, then $WASEP_OUT_DIR; empty when none is set.
inline std::string explicit_dir(const CliOptions& o, const JobConfig& c) {
  if (o.out) return *o.out;
  if (!c.out_dir.empty()) return c.out_dir;
  if (const char* env = std::getenv("WASEP_OUT_DIR"); env && *env) return env;
  return {};
}

inline std::string output_dir(const CliOptions& o, const JobConfig& c) {
  auto d = explicit_dir(o, c);
  return d.empty() ? "." : d;
}

inline void announce_time(const JobConfig& c, const ModelParams& p, std::ostream& err) {
  const double t = c.t_end(p);
  char buf[200];
  std::snprintf(buf, sizeof buf, "time conversion: T = %.10g  ->  t = eps^-2 beta T = %.10g (beta = %.10g)\n",
                c.T_end(p), t, p.beta);
  err << buf;
}

inline Json params_document(const ModelParams& p) {
  Json j = to_json(p);
  j["tool"] = kToolVersion;
  return j;
}

inline int cmd_calibrate(const CliOptions& o, std::ostream& out) {
  const auto c = single(o);
  const auto doc = params_document(c.params()).dump(2) + "\n";
  out << doc;
  if (auto d = explicit_dir(o, c); !d.empty()) write_atomic(std::filesystem::path(d) / "params.json", doc);
  return 0;
}

inline int cmd_verify_drift(const CliOptions& o, std::ostream& out) {
  const auto c = single(o);
  const auto p = c.params();
  const auto rows = decomposition_table(p);
  std::string doc;
  if (c.format == "json") {
    Json j;
    j["meta"] = provenance(p, c.master_seed);
    double worst = 0.0;
    Json arr = Json::array();
    for (const auto& r : rows) {
      arr.push_back({{"window_id", r.id}, {"eta", r.eta}, {"omega", r.omega}, {"omega_lin", r.omega_lin},
                     {"omega_qd", r.omega_qd}, {"residual", r.residual}});
      worst = std::max(worst, r.residual);
    }
    j["windows"] = arr;
    j["max_residual"] = worst;
    doc = j.dump(2) + "\n";
  } else {
    std::ostringstream s;
    s << csv_header(p, c.master_seed) << "window_id,eta,omega,omega_lin,omega_qd,residual\n";
    for (const auto& r : rows)
      s << r.id << ',' << r.eta << ',' << fmt_double(r.omega) << ',' << fmt_double(r.omega_lin) << ','
        << fmt_double(r.omega_qd) << ',' << fmt_double(r.residual) << "\n";
    doc = s.str();
  }
  out << doc;
  if (auto d = explicit_dir(o, c); !d.empty())
    write_atomic(std::filesystem::path(d) / (c.format == "json" ? "drift.json" : "drift.csv"), doc);
  return 0;
}

inline int cmd_kernel(const CliOptions& o, std::ostream& out, std::ostream& err) {
  const auto c = single(o);
  const auto p = c.params();
  announce_time(c, p, err);
  const double t = c.t_end(p);
  const int S = c.lattice_size();
  const auto tab = kernel_table(t, p, S);
  std::string doc;
  if (c.format == "json") {
    Json j;
    j["meta"] = provenance(p, c.master_seed);
    j["t_micro"] = t;
    j["size"] = S;
    j["mass"] = tab.mass();
    j["second_moment"] = tab.second_moment();
    Json xs = Json::array(), ps = Json::array();
    for (int x = -S / 2; x < S / 2; ++x) {
      xs.push_back(x);
      ps.push_back(tab.at(x));
    }
    j["x"] = xs;
    j["p"] = ps;
    doc = j.dump(2) + "\n";
  } else {
    std::ostringstream s;
    s << csv_header(p, c.master_seed) << "t,x,p\n";
    const auto ts = fmt_double(t);
    for (int x = -S / 2; x < S / 2; ++x) s << ts << ',' << x << ',' << fmt_double(tab.at(x)) << "\n";
    doc = s.str();
  }
  out << doc;
  if (auto d = explicit_dir(o, c); !d.empty())
    write_atomic(std::filesystem::path(d) / (c.format == "json" ? "kernel.json" : "kernel.csv"), doc);
  return 0;
}

inline bool wants(const JobConfig& c, const std::string& name) {
  for (const auto& ob : c.observables)
    if (ob.name == name) return true;
  return false;
}

/// One replica (id 0 of the master seed): snapshots of the scaled field and
/// the height at every checkpoint and the horizon, plus an optional event log.
inline int cmd_simulate(const CliOptions& o, std::ostream& out, std::ostream& err) {
  const auto c = single(o);
  auto job = c.job();
  job.replicas = 1;
  check_seam(c, job);
  announce_time(c, job.params, err);
  const auto scales = FieldScales::from(job.params);
  const HopSampler sampler(job.params);
  RngStream rng(job.master_seed, 0);
  auto cfg = job.ic.make(job.size, rng);

  std::ostringstream traj;
  traj << csv_header(job.params, job.master_seed) << "T,X,Z_scaled,h\n";
  const double unit_time = job.params.micro_time(1.0);
  auto record = [&] {
    const auto f = height_from_config(cfg, job.window_radius, scales);
    const auto T = fmt_double(cfg.clock / unit_time);
    for (long x = -job.window_radius; x <= job.window_radius; ++x)
      traj << T << ',' << fmt_double(static_cast<double>(x) * scales.epsilon / scales.beta_prime) << ','
           << fmt_double(f.z(x)) << ',' << f.h(x) << "\n";
  };

  const auto dir = std::filesystem::path(output_dir(o, c));
  const bool log_events = wants(c, "event_log");
  std::string events;
  std::size_t executed = 0, rejected = 0;
  struct Counter {
    std::size_t* ex;
    std::size_t* rej;
    void on_hop(const HopEvent&, const LatticeConfig&) { ++*ex; }
    void on_reject(const HopEvent&) { ++*rej; }
  } counter{&executed, &rejected};

  char* buf = nullptr;
  std::size_t len = 0;
  std::FILE* mem = log_events ? open_memstream(&buf, &len) : nullptr;
  if (log_events && !mem) throw std::runtime_error("simulate: cannot allocate event log buffer");
  std::optional<EventLogWriter> writer;
  if (mem) {
    std::fputs(csv_header(job.params, job.master_seed).c_str(), mem);
    writer.emplace(mem, job.size, true);
  }
  auto advance = [&](double t) {
    if (writer) {
      SinkSet<Counter, EventLogWriter> both(counter, *writer);
      run_until(cfg, sampler, t, rng, both);
    } else {
      run_until(cfg, sampler, t, rng, counter);
    }
  };

  record();
  for (double t : job.checkpoints) {
    if (t <= cfg.clock) continue;
    advance(t);
    record();
  }
  if (cfg.clock < job.t_end) {
    advance(job.t_end);
    record();
  }
  if (mem) {
    std::fclose(mem);
    events.assign(buf, len);
    std::free(buf);
  }

  write_atomic(dir / "snapshots.csv", traj.str());
  Json files = Json::array({(dir / "snapshots.csv").string()});
  if (log_events) {
    write_atomic(dir / "events.csv", events);
    files.push_back((dir / "events.csv").string());
  }
  Json j;
  j["meta"] = provenance(job.params, job.master_seed);
  j["replica_seed"] = rng.seed();
  j["lattice_size"] = job.size;
  j["t_micro"] = job.t_end;
  j["executed_hops"] = executed;
  j["rejected_attempts"] = rejected;
  j["net_flux"] = cfg.net_flux;
  j["files"] = files;
  const auto doc = j.dump(2) + "\n";
  write_atomic(dir / "simulate.json", doc);
  out << doc;
  return 0;
}

inline std::vector<double> doubles(const Json& args, const char* key, std::vector<double> fallback,
                                   const std::string& path) {
  return detail::field_or<std::vector<double>>(args, key, std::move(fallback), path);
}

/// Runs one named estimator of the config.
inline EnsembleSummary run_observable(const ObservableSpec& ob, const JobConfig& c, const EnsembleJob& job,
                                      std::vector<std::string>& cdf_observables) {
  const auto& a = ob.args;
  const std::string path = "observables." + ob.name;
  if (ob.name == "heights") return run_heights(job);
  if (ob.name == "invariance") return invariance_check(job, detail::field_or<int>(a, "max_lag", 5, path));
  if (ob.name == "mean_heatflow") {
    auto j2 = job;
    if (j2.checkpoints.empty()) j2.checkpoints = {job.t_end};
    return mean_heatflow_check(j2);
  }
  if (ob.name == "bracket") {
    std::vector<int> def;
    for (int l = 0; l <= job.params.spec.m; ++l) def.push_back(l);
    const auto points = detail::field_or<std::vector<long>>(a, "points", {0}, path);
    const auto offsets = detail::field_or<std::vector<int>>(a, "offsets", def, path);
    return bracket_check(job, points, offsets);
  }
  if (ob.name == "weak_vanishing")
    return weak_vanishing_estimator(job, doubles(a, "offsets", {-0.5, 0.5}, path),
                                    detail::field_or<int>(a, "n", 1, path));
  if (ob.name == "step_statistics") {
    const double T = c.T_end(job.params);
    const auto fx = doubles(a, "X", {0.0}, path);
    const auto mx = doubles(a, "mean_X", {}, path);
    for (double X : fx) {
      if (std::abs(std::lround(job.params.micro_position(X))) > job.window_radius)
        throw ValidationError(path + ".X: position outside lattice.window_radius");
      cdf_observables.push_back(label("F", {{"T", T}, {"X", X}}));
    }
    for (double X : mx)
      if (std::floor(job.params.micro_position(X)) + 1 > job.window_radius ||
          std::floor(job.params.micro_position(X)) < -job.window_radius)
        throw ValidationError(path + ".mean_X: position outside lattice.window_radius");
    return step_statistics(job, T, fx, mx);
  }
  throw ValidationError("observables: unknown estimator \"" + ob.name + "\"");
}

inline int cmd_ensemble(const CliOptions& o, std::ostream& out, std::ostream& err) {
  const auto c = single(o);
  if (c.observables.empty()) throw ValidationError("observables: at least one estimator is required");
  const auto job = c.job();
  check_seam(c, job);
  announce_time(c, job.params, err);
  const auto dir = std::filesystem::path(output_dir(o, c));
  Json index;
  index["meta"] = provenance(job.params, job.master_seed);
  index["outputs"] = Json::object();
  for (const auto& ob : c.observables) {
    if (ob.name == "event_log") continue;
    std::vector<std::string> cdfs;
    const auto s = run_observable(ob, c, job, cdfs);
    Json files = Json::array();
    auto emit = [&](const std::string& name, const std::string& content) {
      write_atomic(dir / name, content);
      files.push_back((dir / name).string());
    };
    if (c.format == "json")
      emit(ob.name + "_summary.json", to_json(s).dump(2) + "\n");
    else
      emit(ob.name + "_estimates.csv", estimates_csv(s));
    emit(ob.name + "_samples.csv", samples_csv(s));
    for (std::size_t i = 0; i < cdfs.size(); ++i)
      emit(ob.name + "_distribution_" + std::to_string(i) + ".csv", distribution_csv(s, cdfs[i]));
    Json entry;
    entry["files"] = files;
    Json der = Json::object();
    for (const auto& [k, e] : s.derived) der[k] = to_json(e);
    entry["derived"] = der;
    index["outputs"][ob.name] = entry;
  }
  out << index.dump(2) << "\n";
  return 0;
}

/// KS distance after spreading each F value uniformly over its lattice cell
/// of width 2 lambda eps^{1/2}; a diagnostic for lattice discreteness.
inline double cell_jittered_ks(const std::vector<double>& a, const std::vector<double>& b, double tilt,
                               std::uint64_t seed) {
  RngStream rng(seed, 1);
  auto ja = a, jb = b;
  for (auto& v : ja) v += tilt * (2.0 * rng.uniform() - 1.0);
  for (auto& v : jb) v += tilt * (2.0 * rng.uniform() - 1.0);
  return ks_distance(ja, jb);
}

inline int cmd_compare(const CliOptions& o, std::ostream& out, std::ostream& err) {
  if (o.configs.size() != 2) throw ValidationError("--config: compare takes exactly two configs");
  const auto ca = load(o.configs[0], o), cb = load(o.configs[1], o);
  const auto ja = ca.job(), jb = cb.job();
  check_seam(ca, ja);
  check_seam(cb, jb);
  const double Ta = ca.T_end(ja.params), Tb = cb.T_end(jb.params);
  if (std::abs(Ta - Tb) > 1e-12 * std::max(1.0, Ta)) throw ValidationError("horizon: compared jobs differ in T");
  auto x_of = [](const JobConfig& c) {
    for (const auto& ob : c.observables)
      if (ob.name == "step_statistics") return doubles(ob.args, "X", {0.0}, "observables.step_statistics").at(0);
    return 0.0;
  };
  const double X = x_of(ca);
  if (x_of(cb) != X) throw ValidationError("observables.step_statistics.X: compared jobs differ in X");
  announce_time(ca, ja.params, err);
  announce_time(cb, jb.params, err);
  const auto r = universality_compare(ja, jb, Ta, X);
  Json j;
  j["meta"] = {{"tool", kToolVersion}, {"engine", kEngineVersion}, {"generator", kGeneratorId}};
  j["job_a"] = provenance(ja.params, ja.master_seed);
  j["job_b"] = provenance(jb.params, jb.master_seed);
  j["T"] = Ta;
  j["X"] = X;
  j["replicas"] = {r.sample_a.size(), r.sample_b.size()};
  j["F_a"] = to_json(estimate(r.sample_a));
  j["F_b"] = to_json(estimate(r.sample_b));
  j["ks"] = r.ks;
  j["critical_value"] = r.critical;
  j["level"] = r.level;
  j["reject_same_law"] = !r.below_critical();
  j["diagnostics"] = {{"lattice_cell_width", 2.0 * ja.params.tilt()},
                      {"ks_cell_jittered", cell_jittered_ks(r.sample_a, r.sample_b, ja.params.tilt(),
                                                            ja.master_seed ^ jb.master_seed)}};
  const auto doc = j.dump(2) + "\n";
  write_atomic(std::filesystem::path(output_dir(o, ca)) / "compare.json", doc);
  out << doc;
  return 0;
}

}  // namespace cli_detail

inline std::string version_string() {
  return std::string(kToolVersion) + "\nengine: " + kEngineVersion + "\ngenerator: " + kGeneratorId + "\n";
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Simulation and verification lab for weakly asymmetric finite-range exclusion"};
  app.require_subcommand(0, 1);
  CliOptions o;
  bool show_version = false;
  app.add_flag("--version", show_version, "Print engine and generator identifiers");

  const std::vector<std::pair<std::string, std::string>> commands = {
      {"calibrate", "Solve the calibration system and print the parameters as JSON"},
      {"verify-drift", "Per-window residuals of the exact drift decomposition"},
      {"kernel", "Semi-discrete heat kernel on the torus at the horizon"},
      {"simulate", "Run one replica and write snapshots of the scaled field and height"},
      {"ensemble", "Run all configured estimators over the replicas"},
      {"compare", "KS comparison of the F statistic between two step-IC jobs"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.configs, "Job config (JSON); repeat for compare")->required();
    sub->add_option("--seed", o.seed, "Master seed override");
    sub->add_option("--replicas", o.replicas, "Replica count override");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--format", o.format, "Summary format")->check(CLI::IsMember({"csv", "json"}));
    sub->add_flag("--override-safety", o.override_safety,
                  "Allow windows wider than size/4 and horizons that reach the torus seam");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return 0;
    }
    err << "error: " << e.what() << "\n";
    return 1;
  }
  if (show_version) {
    out << version_string();
    return 0;
  }
  if (app.get_subcommands().empty()) {
    err << app.help();
    return 1;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "calibrate") return cli_detail::cmd_calibrate(o, out);
    if (cmd == "verify-drift") return cli_detail::cmd_verify_drift(o, out);
    if (cmd == "kernel") return cli_detail::cmd_kernel(o, out, err);
    if (cmd == "simulate") return cli_detail::cmd_simulate(o, out, err);
    if (cmd == "ensemble") return cli_detail::cmd_ensemble(o, out, err);
    if (cmd == "compare") return cli_detail::cmd_compare(o, out, err);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace wasep
