#pragma once

// Experiment configuration: INI files with sections, dotted overrides,
// and validation that reports every offending field at once.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "muskat/dynamics.hpp"
#include "muskat/errors.hpp"
#include "muskat/params.hpp"
#include "muskat/torus.hpp"

namespace muskat::harness {

enum class Experiment { kSpectrum, kEvolve, kDecay, kInstability, kPicard, kSemiflow, kOperators };
enum class ProblemKind { kPe1, kPe2, kScalarModel };
enum class OperatorCheck { kQuasilinear, kHilbert };

inline const std::map<std::string, Experiment>& experiment_names() {
  static const std::map<std::string, Experiment> names{
      {"spectrum", Experiment::kSpectrum},       {"evolve", Experiment::kEvolve},
      {"decay", Experiment::kDecay},             {"instability", Experiment::kInstability},
      {"picard", Experiment::kPicard},           {"semiflow", Experiment::kSemiflow},
      {"operators", Experiment::kOperators}};
  return names;
}

inline std::string to_string(Experiment e) {
  for (const auto& [name, value] : experiment_names())
    if (value == e) return name;
  return "?";
}

inline std::string to_string(ProblemKind p) {
  switch (p) {
    case ProblemKind::kPe1: return "pe1";
    case ProblemKind::kPe2: return "pe2";
    case ProblemKind::kScalarModel: return "scalar";
  }
  return "?";
}

inline std::string to_string(Scheme s) {
  return s == Scheme::kExplicitRk4 ? "rk4" : "imex";
}

/// a cos(m x) or a sin(m x)
struct ModeSpec {
  bool cosine = true;
  int m = 1;
  double amplitude = 0.0;
};

struct InitialSpec {
  double mean = 0.0;
  std::vector<ModeSpec> modes;
  std::string file;    ///< one value per line, N lines; added to the modes
  double noise = 0.0;  ///< amplitude of seeded random modes 1 <= m <= N/4
};

struct ExperimentConfig {
  Experiment experiment = Experiment::kEvolve;
  ProblemKind problem = ProblemKind::kPe1;
  std::uint64_t seed = 0;

  MuskatParamsNoST pe1;
  MuskatParamsST pe2;
  double scalar_a = 1.0;  ///< scalar model v' + (a + b v^2) v = 0
  double scalar_b = 1.0;
  double scalar_v0 = 1.0;

  std::size_t n = 64;
  std::size_t quadrature = 64;
  bool dealias = true;

  Scheme scheme = Scheme::kExplicitRk4;
  double dt = 1e-2;
  double t_final = 1.0;
  std::size_t output_every = 1;

  InitialSpec initial;

  std::vector<double> norms;
  double window_start = 0.0;
  double window_end = std::numeric_limits<double>::infinity();
  double stop_amplitude = 0.0;  ///< 0: never stop early
  int m_max = 16;
  double margin = 1e-8;
  double eps = 1e-6;
  bool zero_mean = true;

  std::vector<double> amplitudes;
  double radius = 0.05;
  double time_cap = 60.0;
  double probe_norm = 1.0;

  std::size_t intervals = 50;
  double tol = 1e-10;
  std::size_t max_iter = 50;
  Interpolation interpolation = Interpolation::kLinear;
  double max_substep = 1e-2;
  double compare_dt = 1e-3;
  bool halve = false;

  double semiflow_s = 0.5;
  double semiflow_t = 0.5;

  OperatorCheck check = OperatorCheck::kQuasilinear;
  std::vector<InitialSpec> functions;

  std::string out_dir = "muskat-results";
  std::filesystem::path base_dir;  ///< directory relative file paths resolve against
};

namespace detail {

using boost::property_tree::ptree;

inline std::vector<std::string> split(const std::string& s, const std::string& seps) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (seps.find(c) != std::string::npos) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& text, double& out) {
  const std::string s = trim(text);
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && errno == 0 && std::isfinite(out);
}

inline bool parse_unsigned(const std::string& text, std::uint64_t& out) {
  const std::string s = trim(text);
  if (s.empty() || s[0] == '-') return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtoull(s.c_str(), &end, 10);
  return end == s.c_str() + s.size() && errno == 0;
}

// "cos:1:0.01 sin:2:-0.05"
inline bool parse_modes(const std::string& text, std::vector<ModeSpec>& out) {
  out.clear();
  for (const auto& tok : split(text, " \t,")) {
    const auto parts = split(tok, ":");
    if (parts.size() != 3 || (parts[0] != "cos" && parts[0] != "sin")) return false;
    std::uint64_t m = 0;
    double a = 0.0;
    if (!parse_unsigned(parts[1], m) || !parse_double(parts[2], a)) return false;
    out.push_back({parts[0] == "cos", static_cast<int>(m), a});
  }
  return true;
}

/// Typed access to the property tree that records malformed and unknown keys.
class Reader {
 public:
  explicit Reader(const ptree& tree) : tree_(tree) {}

  std::string text(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    const auto v = tree_.get_optional<std::string>(ptree::path_type(key, '.'));
    return v ? trim(*v) : fallback;
  }

  bool has(const std::string& key) const {
    return static_cast<bool>(tree_.get_child_optional(ptree::path_type(key, '.')));
  }

  void real(const std::string& key, double& out) {
    if (!has(key)) return void(seen_.insert(key));
    if (!parse_double(text(key, ""), out)) bad_.push_back(key);
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return void(seen_.insert(key));
    std::uint64_t v = 0;
    if (!parse_unsigned(text(key, ""), v)) return bad_.push_back(key);
    out = static_cast<Int>(v);
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return void(seen_.insert(key));
    const std::string v = text(key, "");
    if (v == "true" || v == "1" || v == "yes") out = true;
    else if (v == "false" || v == "0" || v == "no") out = false;
    else bad_.push_back(key);
  }

  void reals(const std::string& key, std::vector<double>& out) {
    if (!has(key)) return void(seen_.insert(key));
    out.clear();
    for (const auto& tok : split(text(key, ""), " \t,")) {
      double v = 0.0;
      if (!parse_double(tok, v)) return bad_.push_back(key);
      out.push_back(v);
    }
  }

  template <typename Enum>
  void choice(const std::string& key, const std::map<std::string, Enum>& options, Enum& out) {
    if (!has(key)) return void(seen_.insert(key));
    const auto it = options.find(text(key, ""));
    if (it == options.end()) return bad_.push_back(key);
    out = it->second;
  }

  void flag(const std::string& key) { bad_.push_back(key); }

  /// Keys present in the tree that no accessor asked for.
  std::vector<std::string> unknown() const {
    std::vector<std::string> out;
    for (const auto& [section, body] : tree_) {
      if (body.empty()) {
        out.push_back(section);
        continue;
      }
      for (const auto& [key, value] : body) {
        (void)value;
        const std::string full = section + "." + key;
        if (!seen_.count(full)) out.push_back(full);
      }
    }
    return out;
  }

  std::vector<std::string>& bad() { return bad_; }

 private:
  const ptree& tree_;
  std::set<std::string> seen_;
  std::vector<std::string> bad_;
};

inline void add_unique(std::vector<std::string>& v, const std::string& s) {
  for (const auto& x : v)
    if (x == s) return;
  v.push_back(s);
}

}  // namespace detail

/// Reads an INI file into a tree. Missing or unreadable files are config errors.
inline boost::property_tree::ptree load_ini(const std::filesystem::path& path) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(path.string(), tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot read config " + path.string() + ": " + e.message(), {"config"});
  }
  return tree;
}

/// Applies "section.key=value" overrides.
inline void apply_overrides(boost::property_tree::ptree& tree,
                            const std::vector<std::string>& overrides) {
  std::vector<std::string> bad;
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const std::string key = detail::trim(o.substr(0, eq));
    const auto dot = key.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot == 0 ||
        dot + 1 == key.size() || key.find('.', dot + 1) != std::string::npos) {
      bad.push_back(o);
      continue;
    }
    tree.put(boost::property_tree::ptree::path_type(key, '.'), detail::trim(o.substr(eq + 1)));
  }
  if (!bad.empty()) throw ConfigError("overrides must look like section.key=value", bad);
}

/// Builds and validates a configuration. Every malformed, unknown or
/// out-of-range field is listed in the thrown ConfigError.
inline ExperimentConfig parse_config(const boost::property_tree::ptree& tree,
                                     const std::filesystem::path& base_dir = {}) {
  using detail::add_unique;
  ExperimentConfig c;
  c.base_dir = base_dir;
  detail::Reader in(tree);

  in.choice("experiment.type", experiment_names(), c.experiment);
  in.choice("experiment.problem",
            std::map<std::string, ProblemKind>{{"pe1", ProblemKind::kPe1},
                                               {"pe2", ProblemKind::kPe2},
                                               {"scalar", ProblemKind::kScalarModel}},
            c.problem);
  in.integer("experiment.seed", c.seed);

  in.real("params.k", c.pe1.k);
  c.pe2.k = c.pe1.k;
  in.real("params.mu", c.pe1.mu);
  in.real("params.delta_rho", c.pe1.delta_rho);
  in.real("params.mu_minus", c.pe2.mu_minus);
  in.real("params.mu_plus", c.pe2.mu_plus);
  in.real("params.sigma", c.pe2.sigma);
  in.real("params.theta", c.pe2.theta);
  in.real("params.a", c.scalar_a);
  in.real("params.b", c.scalar_b);
  in.real("params.v0", c.scalar_v0);
  if (c.pe2.mu_minus + c.pe2.mu_plus > 0.0)
    c.pe2.a_mu = (c.pe2.mu_minus - c.pe2.mu_plus) / (c.pe2.mu_minus + c.pe2.mu_plus);

  in.integer("grid.n", c.n);
  c.quadrature = c.n;
  in.integer("grid.quadrature", c.quadrature);
  in.boolean("grid.dealias", c.dealias);

  c.scheme = c.problem == ProblemKind::kPe2 ? Scheme::kImexLinearlyImplicit : Scheme::kExplicitRk4;
  in.choice("time.scheme",
            std::map<std::string, Scheme>{{"rk4", Scheme::kExplicitRk4},
                                          {"imex", Scheme::kImexLinearlyImplicit}},
            c.scheme);
  in.real("time.dt", c.dt);
  in.real("time.t_final", c.t_final);
  in.integer("time.output_every", c.output_every);

  in.real("initial.mean", c.initial.mean);
  if (in.has("initial.modes") && !detail::parse_modes(in.text("initial.modes", ""), c.initial.modes))
    in.flag("initial.modes");
  in.text("initial.modes", "");
  c.initial.file = in.text("initial.file", "");
  in.real("initial.noise", c.initial.noise);

  c.norms = {c.problem == ProblemKind::kPe2 ? 2.5 : 1.75};
  in.reals("analysis.norms", c.norms);
  in.real("analysis.window_start", c.window_start);
  if (in.has("analysis.window_end")) in.real("analysis.window_end", c.window_end);
  else in.text("analysis.window_end", "");
  in.real("analysis.stop_amplitude", c.stop_amplitude);
  in.integer("analysis.m_max", c.m_max);
  in.real("analysis.margin", c.margin);
  in.real("analysis.eps", c.eps);
  in.boolean("analysis.zero_mean", c.zero_mean);

  in.reals("instability.amplitudes", c.amplitudes);
  in.real("instability.radius", c.radius);
  in.real("instability.time_cap", c.time_cap);
  in.real("instability.norm", c.probe_norm);

  in.integer("picard.intervals", c.intervals);
  in.real("picard.tol", c.tol);
  in.integer("picard.max_iter", c.max_iter);
  in.choice("picard.interpolation",
            std::map<std::string, Interpolation>{{"constant", Interpolation::kPiecewiseConstant},
                                                 {"linear", Interpolation::kLinear}},
            c.interpolation);
  in.real("picard.max_substep", c.max_substep);
  in.real("picard.compare_dt", c.compare_dt);
  in.boolean("picard.halve", c.halve);

  in.real("semiflow.s", c.semiflow_s);
  in.real("semiflow.t", c.semiflow_t);

  in.choice("operators.check",
            std::map<std::string, OperatorCheck>{{"quasilinear", OperatorCheck::kQuasilinear},
                                                 {"hilbert", OperatorCheck::kHilbert}},
            c.check);
  if (in.has("operators.functions")) {
    for (const auto& group : detail::split(in.text("operators.functions", ""), "|")) {
      InitialSpec f;
      if (!detail::parse_modes(group, f.modes) || f.modes.empty()) {
        in.flag("operators.functions");
        break;
      }
      c.functions.push_back(f);
    }
  } else {
    in.text("operators.functions", "");
  }

  c.out_dir = in.text("output.dir", c.out_dir);

  std::vector<std::string> bad = in.bad();
  for (const auto& u : in.unknown()) add_unique(bad, u);

  // range checks
  const bool integrates = c.experiment == Experiment::kEvolve || c.experiment == Experiment::kDecay ||
                          c.experiment == Experiment::kSemiflow || c.experiment == Experiment::kInstability;
  if (c.n < 16 || !is_power_of_two(c.n)) add_unique(bad, "grid.n");
  if (c.quadrature < 2 || !is_power_of_two(c.quadrature)) add_unique(bad, "grid.quadrature");
  if (c.problem == ProblemKind::kPe1) {
    try {
      c.pe1.validate();
    } catch (const ConfigError& e) {
      for (const auto& f : e.fields()) add_unique(bad, "params." + f);
    }
  } else if (c.problem == ProblemKind::kPe2) {
    try {
      c.pe2.validate();
    } catch (const ConfigError& e) {
      for (const auto& f : e.fields())
        add_unique(bad, f == "mu_minus+mu_plus" || f == "a_mu" ? "params.mu_minus" : "params." + f);
    }
  } else {
    if (!(c.scalar_a > 0.0)) add_unique(bad, "params.a");
    if (!(c.scalar_b >= 0.0)) add_unique(bad, "params.b");
    if (!(c.scalar_v0 > 0.0)) add_unique(bad, "params.v0");
    if (c.experiment != Experiment::kPicard) add_unique(bad, "experiment.problem");
  }
  if (!(c.dt > 0.0)) add_unique(bad, "time.dt");
  if (integrates && !(c.t_final > 0.0)) add_unique(bad, "time.t_final");
  if (c.experiment == Experiment::kPicard && !(c.t_final > 0.0)) add_unique(bad, "time.t_final");
  if (c.output_every == 0) add_unique(bad, "time.output_every");
  for (const auto& m : c.initial.modes)
    if (m.m < 0 || 2 * static_cast<std::size_t>(m.m) >= c.n) add_unique(bad, "initial.modes");
  if (!(c.initial.noise >= 0.0)) add_unique(bad, "initial.noise");
  if (c.norms.empty()) add_unique(bad, "analysis.norms");
  for (double r : c.norms)
    if (!(r >= 0.0)) add_unique(bad, "analysis.norms");
  if (!(c.window_end > c.window_start)) add_unique(bad, "analysis.window_end");
  if (!(c.stop_amplitude >= 0.0)) add_unique(bad, "analysis.stop_amplitude");
  if (c.m_max < 1) add_unique(bad, "analysis.m_max");
  if (!(c.margin >= 0.0)) add_unique(bad, "analysis.margin");
  if (!(c.eps > 0.0)) add_unique(bad, "analysis.eps");

  switch (c.experiment) {
    case Experiment::kSpectrum:
      if (c.problem == ProblemKind::kScalarModel) break;
      if (2 * static_cast<std::size_t>(c.m_max) > c.n - 2) add_unique(bad, "analysis.m_max");
      break;
    case Experiment::kEvolve:
    case Experiment::kDecay:
      break;
    case Experiment::kInstability:
      if (c.problem != ProblemKind::kPe2) add_unique(bad, "experiment.problem");
      else if (!(c.pe2.theta + c.pe2.sigma < 0.0)) add_unique(bad, "params.theta");
      if (c.amplitudes.empty()) add_unique(bad, "instability.amplitudes");
      for (std::size_t i = 0; i < c.amplitudes.size(); ++i)
        if (!(c.amplitudes[i] > 0.0) || (i > 0 && !(c.amplitudes[i] < c.amplitudes[i - 1])))
          add_unique(bad, "instability.amplitudes");
      if (!(c.radius > 0.0)) add_unique(bad, "instability.radius");
      if (!(c.time_cap > 0.0)) add_unique(bad, "instability.time_cap");
      if (!(c.probe_norm >= 0.0)) add_unique(bad, "instability.norm");
      break;
    case Experiment::kPicard:
      if (c.problem == ProblemKind::kPe2) add_unique(bad, "experiment.problem");
      if (c.intervals == 0) add_unique(bad, "picard.intervals");
      if (!(c.tol > 0.0)) add_unique(bad, "picard.tol");
      if (c.max_iter == 0) add_unique(bad, "picard.max_iter");
      if (!(c.max_substep > 0.0)) add_unique(bad, "picard.max_substep");
      if (!(c.compare_dt > 0.0)) add_unique(bad, "picard.compare_dt");
      break;
    case Experiment::kSemiflow:
      if (!(c.semiflow_s >= 0.0)) add_unique(bad, "semiflow.s");
      if (!(c.semiflow_t > 0.0)) add_unique(bad, "semiflow.t");
      break;
    case Experiment::kOperators:
      if (c.check == OperatorCheck::kQuasilinear && c.problem != ProblemKind::kPe1)
        add_unique(bad, "experiment.problem");
      if (c.check == OperatorCheck::kQuasilinear && c.functions.empty())
        add_unique(bad, "operators.functions");
      for (const auto& f : c.functions)
        for (const auto& m : f.modes)
          if (m.m < 0 || 2 * static_cast<std::size_t>(m.m) >= c.n) add_unique(bad, "operators.functions");
      if (c.check == OperatorCheck::kHilbert && 2 * static_cast<std::size_t>(c.m_max) >= c.quadrature)
        add_unique(bad, "analysis.m_max");
      break;
  }

  if (!bad.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration:";
    for (const auto& b : bad) msg << ' ' << b;
    throw ConfigError(msg.str(), bad);
  }
  return c;
}

/// Loads a file, applies overrides and parses. When `experiment` is given
/// it is imposed, and a conflicting [experiment] type is an error.
inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    const std::vector<std::string>& overrides = {},
                                    std::optional<Experiment> experiment = std::nullopt) {
  auto tree = load_ini(path);
  apply_overrides(tree, overrides);
  if (experiment) {
    const auto declared = tree.get_optional<std::string>("experiment.type");
    if (declared && detail::trim(*declared) != to_string(*experiment))
      throw ConfigError("config declares experiment '" + *declared + "' but '" +
                        to_string(*experiment) + "' was requested", {"experiment.type"});
    tree.put("experiment.type", to_string(*experiment));
  }
  return parse_config(tree, path.parent_path());
}

}  // namespace muskat::harness
