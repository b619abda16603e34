#pragma once

#include <json.hpp>

#include <string>
#include <vector>

#include "muskat/harness/config.hpp"

namespace muskat::harness {

using Json = nlohmann::ordered_json;

/// Flat numeric table, written as one CSV file.
struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultRecord {
  ExperimentConfig config;
  Json payload = Json::object();
  std::vector<Table> tables;
  double wall_seconds = 0.0;

  const Table& table(const std::string& name) const {
    for (const auto& t : tables)
      if (t.name == name) return t;
    throw std::out_of_range("no table named " + name);
  }
};

inline Json modes_json(const InitialSpec& s) {
  Json modes = Json::array();
  for (const auto& m : s.modes)
    modes.push_back({{"kind", m.cosine ? "cos" : "sin"}, {"m", m.m}, {"amplitude", m.amplitude}});
  return modes;
}

/// Resolved configuration, defaults included.
inline Json config_json(const ExperimentConfig& c) {
  Json j;
  j["experiment"] = {{"type", to_string(c.experiment)}, {"problem", to_string(c.problem)}, {"seed", c.seed}};
  switch (c.problem) {
    case ProblemKind::kPe1:
      j["params"] = {{"k", c.pe1.k}, {"mu", c.pe1.mu}, {"delta_rho", c.pe1.delta_rho}};
      break;
    case ProblemKind::kPe2:
      j["params"] = {{"k", c.pe2.k}, {"mu_minus", c.pe2.mu_minus}, {"mu_plus", c.pe2.mu_plus},
                     {"sigma", c.pe2.sigma}, {"theta", c.pe2.theta}, {"a_mu", c.pe2.a_mu}};
      break;
    case ProblemKind::kScalarModel:
      j["params"] = {{"a", c.scalar_a}, {"b", c.scalar_b}, {"v0", c.scalar_v0}};
      break;
  }
  j["grid"] = {{"n", c.n}, {"quadrature", c.quadrature}, {"dealias", c.dealias}};
  j["time"] = {{"scheme", to_string(c.scheme)}, {"dt", c.dt}, {"t_final", c.t_final},
               {"output_every", c.output_every}};
  j["initial"] = {{"mean", c.initial.mean}, {"modes", modes_json(c.initial)},
                  {"file", c.initial.file}, {"noise", c.initial.noise}};
  Json window_end = std::isfinite(c.window_end) ? Json(c.window_end) : Json(nullptr);
  j["analysis"] = {{"norms", c.norms},         {"window_start", c.window_start},
                   {"window_end", window_end}, {"stop_amplitude", c.stop_amplitude},
                   {"m_max", c.m_max},         {"margin", c.margin},
                   {"eps", c.eps},             {"zero_mean", c.zero_mean}};
  switch (c.experiment) {
    case Experiment::kInstability:
      j["instability"] = {{"amplitudes", c.amplitudes}, {"radius", c.radius},
                          {"time_cap", c.time_cap}, {"norm", c.probe_norm}};
      break;
    case Experiment::kPicard:
      j["picard"] = {{"intervals", c.intervals},
                     {"tol", c.tol},
                     {"max_iter", c.max_iter},
                     {"interpolation", c.interpolation == Interpolation::kLinear ? "linear" : "constant"},
                     {"max_substep", c.max_substep},
                     {"compare_dt", c.compare_dt},
                     {"halve", c.halve}};
      break;
    case Experiment::kSemiflow:
      j["semiflow"] = {{"s", c.semiflow_s}, {"t", c.semiflow_t}};
      break;
    case Experiment::kOperators: {
      Json fs = Json::array();
      for (const auto& f : c.functions) fs.push_back(modes_json(f));
      j["operators"] = {{"check", c.check == OperatorCheck::kQuasilinear ? "quasilinear" : "hilbert"},
                        {"functions", fs}};
      break;
    }
    default:
      break;
  }
  return j;
}

}  // namespace muskat::harness
