#pragma once

// JobConfig: the JSON job description shared by every CLI subcommand.
//
//   {
//     "model":   {"m": 2, "r": [0.5, 0.5], "lambda": 1, "epsilon": 0.05, "params": "exact"},
//     "lattice": {"size_factor": 20, "window_radius": 1.0},
//     "ic":      "step" | {"bernoulli": 0.5},
//     "horizon": {"T_macro": 1.0} | {"t_micro": 400},
//     "checkpoints": [0.5, 1.0],
//     "observables": [{"name": "bracket", "points": [0], "offsets": [0, 1, 2]}],
//     "replicas": 200, "master_seed": 7, "threads": 0,
//     "output": {"dir": "out", "format": "json"}
//   }
//
// The output of `calibrate` (an object with a "spec" member) is accepted as a
// config too; it names the model and parameter kind and leaves the rest at
// their defaults.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "wasep/ensemble.hpp"
#include "wasep/io.hpp"
#include "wasep/params.hpp"

namespace wasep {

struct ObservableSpec {
  std::string name;
  Json args = Json::object();
};

struct JobConfig {
  ModelSpec model;
  ParamKind kind = ParamKind::exact;
  double size_factor = 20.0;
  std::optional<int> size;      ///< explicit lattice size, overrides size_factor
  double window_radius = 0.0;   ///< macroscopic radius of the observation window
  InitialCondition ic = InitialCondition::step();
  std::optional<double> T_macro;
  std::optional<double> t_micro;
  std::vector<double> checkpoints;  ///< macroscopic
  std::vector<ObservableSpec> observables;
  std::size_t replicas = 1;
  std::uint64_t master_seed = 0;
  unsigned threads = 0;
  std::string out_dir;
  std::string format = "json";
  bool override_safety = false;

  ModelParams params() const {
    switch (kind) {
      case ParamKind::gartner:
        if (model.m != 1) throw ValidationError("model.params: \"gartner\" requires m = 1");
        return gartner_params(model.lambda, model.epsilon);
      case ParamKind::leading_order: return leading_order_params(model);
      default: return calibrate(model);
    }
  }

  int lattice_size() const { return size ? *size : torus_size(size_factor, model.epsilon); }
  int window_points() const { return static_cast<int>(std::ceil(window_radius / model.epsilon - 1e-9)); }

  bool has_horizon() const { return T_macro.has_value() || t_micro.has_value(); }
  double t_end(const ModelParams& p) const {
    if (!has_horizon()) throw ValidationError("horizon: one of T_macro or t_micro is required");
    return T_macro ? p.micro_time(*T_macro) : *t_micro;
  }
  /// Macroscopic horizon (converted from t_micro when needed).
  double T_end(const ModelParams& p) const { return T_macro ? *T_macro : t_end(p) / p.micro_time(1.0); }

  /// Validates everything except the horizon requirement, which depends on the subcommand.
  void validate() const {
    model.validate();
    if (T_macro && t_micro) throw ValidationError("horizon: give exactly one of T_macro and t_micro");
    if (T_macro && !(*T_macro > 0.0)) throw ValidationError("horizon.T_macro: must be positive");
    if (t_micro && !(*t_micro >= 0.0)) throw ValidationError("horizon.t_micro: must be non-negative");
    if (!(size_factor > 0.0)) throw ValidationError("lattice.size_factor: must be positive");
    if (size && (*size < 4 || *size % 2)) throw ValidationError("lattice.size: must be even and >= 4");
    if (!(window_radius >= 0.0)) throw ValidationError("lattice.window_radius: must be non-negative");
    if (!override_safety && window_points() > lattice_size() / 4)
      throw ValidationError("lattice.window_radius: window_radius / epsilon = " + std::to_string(window_points()) +
                            " exceeds size/4 = " + std::to_string(lattice_size() / 4) +
                            " (use --override-safety to allow)");
    if (window_points() >= lattice_size() / 2)
      throw ValidationError("lattice.window_radius: window does not fit inside the lattice");
    if (replicas == 0) throw ValidationError("replicas: must be positive");
    if (format != "json" && format != "csv") throw ValidationError("output.format: must be \"csv\" or \"json\"");
    if (ic.kind == InitialCondition::Kind::bernoulli && !(ic.density >= 0.0 && ic.density <= 1.0))
      throw ValidationError("ic.bernoulli: density must lie in [0, 1]");
    double prev = -1.0;
    for (double c : checkpoints) {
      if (!(c >= 0.0) || c < prev) throw ValidationError("checkpoints: must be non-negative and increasing");
      prev = c;
    }
    if (T_macro && !checkpoints.empty() && checkpoints.back() > *T_macro)
      throw ValidationError("checkpoints: must not exceed horizon.T_macro");
  }

  EnsembleJob job() const {
    const auto p = params();
    EnsembleJob j;
    j.params = p;
    j.size = lattice_size();
    j.window_radius = window_points();
    j.ic = ic;
    j.t_end = t_end(p);
    for (double c : checkpoints) j.checkpoints.push_back(std::min(p.micro_time(c), j.t_end));
    j.replicas = replicas;
    j.master_seed = master_seed;
    j.threads = threads;
    return j;
  }
};

namespace detail {

template <class T>
T field(const Json& obj, const char* key, const std::string& path) {
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ValidationError((path.empty() ? std::string(key) : path + "." + key) + ": missing or of the wrong type");
  }
}

template <class T>
T field_or(const Json& obj, const char* key, T fallback, const std::string& path) {
  if (!obj.contains(key)) return fallback;
  return field<T>(obj, key, path);
}

inline ParamKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "exact") return ParamKind::exact;
  if (s == "gartner") return ParamKind::gartner;
  if (s == "leading_order") return ParamKind::leading_order;
  throw ValidationError(path + ": unknown parameter kind \"" + s + "\"");
}

inline ModelSpec parse_model(const Json& j, const std::string& path) {
  if (!j.is_object()) throw ValidationError(path + ": must be an object");
  ModelSpec s;
  s.m = field<int>(j, "m", path);
  s.r = field<std::vector<double>>(j, "r", path);
  s.lambda = field<double>(j, "lambda", path);
  s.epsilon = field<double>(j, "epsilon", path);
  return s;
}

}  // namespace detail

inline JobConfig parse_config(const Json& j) {
  if (!j.is_object()) throw ValidationError("config: top level must be a JSON object");
  JobConfig c;
  if (j.contains("spec")) {  // calibrate output
    c.model = detail::parse_model(j.at("spec"), "spec");
    c.kind = detail::parse_kind(detail::field_or<std::string>(j, "kind", "exact", ""), "kind");
  } else {
    if (!j.contains("model")) throw ValidationError("model: missing");
    const auto& m = j.at("model");
    c.model = detail::parse_model(m, "model");
    c.kind = detail::parse_kind(detail::field_or<std::string>(m, "params", "exact", "model"), "model.params");
  }
  if (j.contains("lattice")) {
    const auto& l = j.at("lattice");
    c.size_factor = detail::field_or<double>(l, "size_factor", c.size_factor, "lattice");
    if (l.contains("size")) c.size = detail::field<int>(l, "size", "lattice");
    c.window_radius = detail::field_or<double>(l, "window_radius", c.window_radius, "lattice");
  }
  if (j.contains("ic")) {
    const auto& ic = j.at("ic");
    if (ic.is_string() && ic.get<std::string>() == "step") {
      c.ic = InitialCondition::step();
    } else if (ic.is_object() && ic.contains("bernoulli")) {
      c.ic = InitialCondition::bernoulli(detail::field<double>(ic, "bernoulli", "ic"));
    } else {
      throw ValidationError("ic: expected \"step\" or {\"bernoulli\": density}");
    }
  }
  if (j.contains("horizon")) {
    const auto& h = j.at("horizon");
    if (h.contains("T_macro")) c.T_macro = detail::field<double>(h, "T_macro", "horizon");
    if (h.contains("t_micro")) c.t_micro = detail::field<double>(h, "t_micro", "horizon");
    if (!c.T_macro && !c.t_micro) throw ValidationError("horizon: give exactly one of T_macro and t_micro");
  }
  c.checkpoints = detail::field_or<std::vector<double>>(j, "checkpoints", {}, "");
  if (j.contains("observables")) {
    const auto& obs = j.at("observables");
    if (!obs.is_array()) throw ValidationError("observables: must be an array");
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto path = "observables[" + std::to_string(i) + "]";
      if (obs[i].is_string()) {
        c.observables.push_back({obs[i].get<std::string>(), Json::object()});
      } else {
        c.observables.push_back({detail::field<std::string>(obs[i], "name", path), obs[i]});
      }
    }
  }
  c.replicas = detail::field_or<std::size_t>(j, "replicas", c.replicas, "");
  c.master_seed = detail::field_or<std::uint64_t>(j, "master_seed", c.master_seed, "");
  c.threads = detail::field_or<unsigned>(j, "threads", c.threads, "");
  if (j.contains("output")) {
    const auto& o = j.at("output");
    c.out_dir = detail::field_or<std::string>(o, "dir", c.out_dir, "output");
    c.format = detail::field_or<std::string>(o, "format", c.format, "output");
  }
  c.override_safety = detail::field_or<bool>(j, "override_safety", false, "");
  return c;
}

inline JobConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("--config: cannot read " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError("--config: " + path + " is not valid JSON (" + e.what() + ")");
  }
  return parse_config(j);
}

}  // namespace wasep
