#pragma once

// Output plumbing: atomic file writes and JSON/CSV encodings of parameters
// and ensemble summaries.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wasep/ensemble.hpp"
#include "wasep/params.hpp"
#include "wasep/rng.hpp"

namespace wasep {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "wasep 1.0.0";

/// Writes `content` to `path` via a sibling temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

/// %.17g, which round-trips every double.
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline Json to_json(const ModelSpec& s) {
  return {{"m", s.m}, {"r", s.r}, {"lambda", s.lambda}, {"epsilon", s.epsilon}};
}

inline Json to_json(const ModelParams& p) {
  Json j;
  j["spec"] = to_json(p.spec);
  j["kind"] = to_string(p.kind);
  j["gamma"] = p.gamma;
  j["r_tilde"] = p.r_tilde;
  j["q_plus"] = p.q_plus;
  j["q_minus"] = p.q_minus;
  j["rho"] = p.rho;
  j["sigma"] = p.sigma;
  j["nu"] = p.nu;
  j["nu_prime"] = p.nu_prime;
  j["nu_dprime"] = p.nu_dprime;
  j["alpha"] = p.alpha;
  j["alpha_l"] = p.alpha_l;
  j["beta"] = p.beta;
  j["beta_prime"] = p.beta_prime;
  j["u_val"] = p.u_val;
  j["v_val"] = p.v_val;
  j["matching_residual"] = p.residual;
  j["condition_number"] = p.condition_number;
  j["warnings"] = p.warnings;
  return j;
}

inline Json to_json(const Estimate& e) { return {{"mean", e.mean}, {"se", e.se}, {"n", e.n}}; }

/// Metadata block embedded in every output file.
inline Json provenance(const ModelParams& p, std::uint64_t seed) {
  return {{"tool", kToolVersion}, {"engine", kEngineVersion}, {"generator", kGeneratorId},
          {"master_seed", seed}, {"params", to_json(p)}};
}

inline Json to_json(const EnsembleSummary& s) {
  Json j;
  j["estimator"] = s.estimator;
  j["meta"] = provenance(s.params, s.master_seed);
  j["meta"]["lattice_size"] = s.size;
  j["meta"]["window_radius"] = s.window_radius;
  j["meta"]["initial_condition"] = s.ic;
  j["meta"]["t_micro"] = s.t_end;
  j["meta"]["caveats"] = s.caveats;
  j["replica_count"] = s.replica_count();
  Json est = Json::object();
  for (const auto& [k, e] : s.estimates) est[k] = to_json(e);
  j["estimates"] = est;
  Json der = Json::object();
  for (const auto& [k, e] : s.derived) der[k] = to_json(e);
  j["derived"] = der;
  return j;
}

/// Comment lines carrying version, seed and the parameter snapshot.
inline std::string csv_header(const ModelParams& p, std::uint64_t seed) {
  std::string h = "# tool: " + std::string(kToolVersion) + "\n";
  h += "# generator: " + std::string(kGeneratorId) + "\n";
  h += "# master_seed: " + std::to_string(seed) + "\n";
  h += "# params: " + to_json(p).dump() + "\n";
  return h;
}

/// replica,observable,value rows.
inline std::string samples_csv(const EnsembleSummary& s) {
  std::ostringstream out;
  out << csv_header(s.params, s.master_seed) << "replica,observable,value\n";
  for (const auto& [id, obs] : s.samples)
    for (const auto& [name, v] : obs) out << id << ",\"" << name << "\"," << fmt_double(v) << "\n";
  return out.str();
}

/// observable,mean,se,n rows for the pooled and derived estimates.
inline std::string estimates_csv(const EnsembleSummary& s) {
  std::ostringstream out;
  out << csv_header(s.params, s.master_seed) << "observable,mean,se,n\n";
  auto row = [&](const std::string& k, const Estimate& e) {
    out << '"' << k << "\"," << fmt_double(e.mean) << ',' << fmt_double(e.se) << ',' << e.n << "\n";
  };
  for (const auto& [k, e] : s.estimates) row(k, e);
  for (const auto& [k, e] : s.derived) row(k, e);
  return out.str();
}

/// Empirical CDF of one observable: value,cdf rows over the sorted sample.
inline std::string distribution_csv(const EnsembleSummary& s, const std::string& name) {
  auto v = s.sample_vector(name);
  std::sort(v.begin(), v.end());
  std::ostringstream out;
  out << csv_header(s.params, s.master_seed) << "# observable: " << name << "\nvalue,cdf\n";
  for (std::size_t i = 0; i < v.size(); ++i)
    out << fmt_double(v[i]) << ',' << fmt_double(static_cast<double>(i + 1) / static_cast<double>(v.size())) << "\n";
  return out.str();
}

}  // namespace wasep
