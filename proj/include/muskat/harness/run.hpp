#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "muskat/dynamics.hpp"
#include "muskat/harness/config.hpp"
#include "muskat/harness/record.hpp"
#include "muskat/kernels.hpp"
#include "muskat/stability.hpp"

namespace muskat::harness {

/// Grid samples of mean + modes + file values + seeded noise.
inline GridFunction build_initial(const InitialSpec& s, std::size_t n, std::uint64_t seed,
                                  const std::filesystem::path& base_dir = {}) {
  std::vector<double> v(n, s.mean);
  for (const auto& mode : s.modes)
    for (std::size_t j = 0; j < n; ++j) {
      const double x = GridFunction::node(n, j);
      v[j] += mode.amplitude * (mode.cosine ? std::cos(mode.m * x) : std::sin(mode.m * x));
    }
  if (!s.file.empty()) {
    std::filesystem::path path(s.file);
    if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open initial data file " + path.string(), {"initial.file"});
    std::vector<double> values;
    std::string line;
    while (std::getline(is, line)) {
      line = detail::trim(line);
      if (line.empty() || line[0] == '#') continue;
      double x = 0.0;
      if (!detail::parse_double(line, x))
        throw ConfigError("malformed value in " + path.string() + ": " + line, {"initial.file"});
      values.push_back(x);
    }
    if (values.size() != n)
      throw ConfigError("initial data file " + path.string() + " has " + std::to_string(values.size()) +
                        " values, grid has " + std::to_string(n), {"initial.file"});
    for (std::size_t j = 0; j < n; ++j) v[j] += values[j];
  }
  if (s.noise > 0.0) {
    // raw engine output mapped by hand: identical on every standard library
    std::mt19937_64 rng(seed);
    auto uniform = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0; };
    for (std::size_t m = 1; m <= n / 4; ++m) {
      const double a = s.noise * uniform(), b = s.noise * uniform();
      for (std::size_t j = 0; j < n; ++j) {
        const double x = GridFunction::node(n, j);
        v[j] += a * std::cos(static_cast<double>(m) * x) + b * std::sin(static_cast<double>(m) * x);
      }
    }
  }
  return GridFunction(std::move(v));
}

/// Exact solution of v' + (a + b v^2) v = 0 with v(0) = v0 > 0.
inline double scalar_model_exact(double a, double b, double v0, double t) {
  const double w0 = 1.0 / (v0 * v0);
  return 1.0 / std::sqrt((w0 + b / a) * std::exp(2.0 * a * t) - b / a);
}

namespace detail {

inline EvolutionProblem make_problem(const ExperimentConfig& c, const PVRule& rule) {
  return c.problem == ProblemKind::kPe1 ? pe1_problem(c.pe1, rule)
                                        : pe2_problem(c.pe2, rule, SpectralOptions{c.dealias});
}

inline std::vector<double> analytic(const ExperimentConfig& c, int m_max) {
  return c.problem == ProblemKind::kPe1 ? analytic_spectrum_pe1(c.pe1, m_max)
                                        : analytic_spectrum_pe2(c.pe2, m_max);
}

/// "H1.75" for the H^1.75 norm.
inline std::string norm_column(double r) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "H%g", r);
  return buf;
}

inline Json optional_json(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline void run_spectrum(const ExperimentConfig& c, ResultRecord& rec) {
  const PVRule rule(c.quadrature);
  const GridFunction f_star = build_initial(c.initial, c.n, c.seed, c.base_dir);
  const EvolutionProblem prob = make_problem(c, rule);
  const Eigen::MatrixXd j = jacobian(prob.rhs, f_star, JacobianOptions{c.eps, c.zero_mean});
  const SpectrumReport rep = eigen_spectrum(j, c.margin);
  const SpectrumMatch match = match_spectrum(rep, analytic(c, c.m_max));

  Table spec{"spectrum", {"m", "analytic", "numerical_re", "numerical_im", "relative_error"}, {}};
  for (const auto& row : match.rows)
    spec.rows.push_back({static_cast<double>(row.m), row.analytic, row.numerical.real(),
                         row.numerical.imag(), row.relative_error});
  Table eig{"eigenvalues", {"index", "re", "im"}, {}};
  for (Eigen::Index i = 0; i < rep.eigenvalues.size(); ++i)
    eig.rows.push_back({static_cast<double>(i), rep.eigenvalues(i).real(), rep.eigenvalues(i).imag()});
  rec.tables = {spec, eig};
  rec.payload = {{"matrix_size", j.rows()},
                 {"spectral_bound", rep.spectral_bound},
                 {"verdict", to_string(rep.verdict)},
                 {"omega_plus", optional_json(rep.omega_plus)},
                 {"margin", rep.margin},
                 {"m_max", c.m_max},
                 {"max_relative_error", match.max_relative_error}};
}

inline TrajectoryRecord evolve(const ExperimentConfig& c, const GridFunction& f0) {
  const PVRule rule(c.quadrature);
  IntegrateOptions o;
  o.scheme = c.scheme;
  o.dt = c.dt;
  o.t_final = c.t_final;
  o.output_every = c.output_every;
  o.norm_exponents = c.norms;
  if (c.stop_amplitude > 0.0) {
    const double cap = c.stop_amplitude;
    o.stop_when = [cap](double, const GridFunction& f) { return f.max_abs() > cap; };
  }
  return integrate(f0, make_problem(c, rule), o);
}

inline Table trajectory_table(const ExperimentConfig& c, const TrajectoryRecord& traj) {
  Table t{"trajectory", {"t", "mean", "max_abs"}, {}};
  for (double r : c.norms) t.columns.push_back(norm_column(r));
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    std::vector<double> row{traj.times[i], traj.states[i].mean(), traj.states[i].max_abs()};
    for (double r : c.norms) row.push_back(traj.norms.at(r)[i]);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table state_table(const GridFunction& f) {
  Table t{"final_state", {"x", "f"}, {}};
  for (std::size_t j = 0; j < f.size(); ++j) t.rows.push_back({GridFunction::node(f.size(), j), f[j]});
  return t;
}

inline double mean_drift(const TrajectoryRecord& traj) {
  double d = 0.0;
  for (const auto& s : traj.states) d = std::max(d, std::abs(s.mean() - traj.states.front().mean()));
  return d;
}

inline void run_evolve(const ExperimentConfig& c, ResultRecord& rec, bool fit) {
  const GridFunction f0 = build_initial(c.initial, c.n, c.seed, c.base_dir);
  const TrajectoryRecord traj = evolve(c, f0);
  rec.tables = {trajectory_table(c, traj), state_table(traj.final_state())};
  Json finals = Json::object();
  for (double r : c.norms) finals[norm_column(r)] = traj.norms.at(r).back();
  rec.payload = {{"final_time", traj.final_time()},
                 {"reached_t_final", traj.final_time() >= c.t_final},
                 {"stopped_early", traj.stopped_early},
                 {"steps_recorded", traj.times.size()},
                 {"mean_drift", mean_drift(traj)},
                 {"final_norms", finals}};
  if (!fit) return;

  // fit only over samples inside the amplitude cap
  double t_end = std::min(c.window_end, traj.final_time());
  if (c.stop_amplitude > 0.0)
    for (std::size_t i = 0; i < traj.times.size(); ++i)
      if (traj.states[i].max_abs() > c.stop_amplitude) {
        t_end = std::min(t_end, traj.times[i - (i > 0 ? 1 : 0)]);
        break;
      }
  const double predicted = -analytic(c, 1).front();
  Json fits = Json::array();
  Table ft{"fits", {"r", "rate", "r_squared", "samples", "relative_deviation"}, {}};
  for (double r : c.norms) {
    const RateFit f = decay_rate_fit(traj, r, c.window_start, t_end);
    const double dev = std::abs(f.rate - predicted) / std::abs(predicted);
    fits.push_back({{"r", r}, {"rate", f.rate}, {"r_squared", f.r_squared}, {"samples", f.samples},
                    {"relative_deviation", dev}});
    ft.rows.push_back({r, f.rate, f.r_squared, static_cast<double>(f.samples), dev});
  }
  rec.tables.push_back(ft);
  rec.payload["predicted_rate"] = predicted;
  rec.payload["window"] = {c.window_start, t_end};
  rec.payload["fits"] = fits;
}

inline void run_instability(const ExperimentConfig& c, ResultRecord& rec) {
  ProbeOptions o;
  o.n = c.n;
  o.quadrature = c.quadrature;
  o.dt = c.dt;
  o.r = c.probe_norm;
  o.time_cap = c.time_cap;
  o.spectral = SpectralOptions{c.dealias};
  const ProbeReport rep = instability_probe(c.pe2, c.amplitudes, c.radius, o);
  Table t{"escape", {"amplitude", "initial_norm", "escaped", "escape_time", "linear_model_time",
                     "relative_deviation"}, {}};
  double worst = 0.0;
  bool all_escaped = true;
  for (const auto& run : rep.runs) {
    const double model = std::log(c.radius / run.amplitude) / rep.growth_rate;
    const double time = run.escape_time.value_or(c.time_cap);
    const double dev = model > 0.0 ? std::abs(time - model) / model : 0.0;
    if (run.escape_time) worst = std::max(worst, dev);
    all_escaped = all_escaped && run.escape_time.has_value();
    t.rows.push_back({run.amplitude, run.initial_norm, run.escape_time ? 1.0 : 0.0, time, model, dev});
  }
  rec.tables = {t};
  rec.payload = {{"growth_rate", rep.growth_rate},
                 {"radius", rep.radius},
                 {"norm", c.probe_norm},
                 {"all_escaped", all_escaped},
                 {"inconclusive", rep.inconclusive},
                 {"max_relative_deviation", worst}};
}

inline Json picard_json(const PicardReport& r) {
  Json ratios = Json::array();
  for (const auto& q : r.empirical_contraction) ratios.push_back(optional_json(q));
  return {{"iterations", r.iterations}, {"converged", r.converged}, {"defects", r.defects},
          {"empirical_contraction", ratios}};
}

inline Table defects_table(const std::string& name, const PicardReport& r) {
  Table t{name, {"iteration", "defect", "contraction"}, {}};
  for (std::size_t k = 0; k < r.defects.size(); ++k) {
    const double q = k == 0 ? std::numeric_limits<double>::quiet_NaN()
                            : r.empirical_contraction[k - 1].value_or(std::numeric_limits<double>::quiet_NaN());
    t.rows.push_back({static_cast<double>(k), r.defects[k], q});
  }
  return t;
}

inline void run_picard(const ExperimentConfig& c, ResultRecord& rec) {
  auto options = [&](double t_final) {
    PicardOptions o;
    o.t_final = t_final;
    o.intervals = c.intervals;
    o.tol = c.tol;
    o.max_iter = c.max_iter;
    o.mode = c.interpolation;
    o.propagate.max_substep = c.max_substep;
    return o;
  };
  auto zero = [](const Eigen::VectorXd& v) { return Eigen::VectorXd::Zero(v.size()); };

  if (c.problem == ProblemKind::kScalarModel) {
    const double a = c.scalar_a, b = c.scalar_b;
    auto a_of = [a, b](const Eigen::VectorXd& v) { return Eigen::MatrixXd::Constant(1, 1, a + b * v(0) * v(0)); };
    const PicardResult res = picard_lambda(a_of, zero, Eigen::VectorXd::Constant(1, c.scalar_v0), options(c.t_final));
    Table path{"picard_path", {"t", "v", "exact", "error"}, {}};
    double worst = 0.0;
    for (std::size_t j = 0; j < res.path.times.size(); ++j) {
      const double exact = scalar_model_exact(a, b, c.scalar_v0, res.path.times[j]);
      const double err = std::abs(res.path.states[j](0) - exact);
      worst = std::max(worst, err);
      path.rows.push_back({res.path.times[j], res.path.states[j](0), exact, err});
    }
    rec.tables = {path, defects_table("picard_defects", res.report)};
    rec.payload = {{"report", picard_json(res.report)}, {"max_error_vs_exact", worst}};
    return;
  }

  const PVRule rule(c.quadrature);
  const GridFunction f0 = build_initial(c.initial, c.n, c.seed, c.base_dir);
  const Eigen::VectorXd v0 = Eigen::Map<const Eigen::VectorXd>(f0.values().data(), static_cast<Eigen::Index>(c.n));
  const EvolutionProblem prob = pe1_problem(c.pe1, rule);

  auto solve = [&](double t_final, const std::string& suffix, Json& out) {
    const PicardResult res = picard_lambda(pe1_quasilinear_operator(c.pe1, rule), zero, v0, options(t_final));
    IntegrateOptions io;
    io.dt = c.compare_dt;
    io.t_final = t_final;
    io.output_every = static_cast<std::size_t>(-1);
    const GridFunction direct = integrate(f0, prob, io).final_state();
    double err = 0.0;
    for (std::size_t j = 0; j < c.n; ++j)
      err = std::max(err, std::abs(res.path.states.back()(static_cast<Eigen::Index>(j)) - direct[j]));
    out = {{"t_final", t_final}, {"report", picard_json(res.report)}, {"max_abs_error_vs_direct", err}};
    rec.tables.push_back(defects_table("picard_defects" + suffix, res.report));
    return res.report.empirical_contraction.empty() ? std::optional<double>() : res.report.empirical_contraction.front();
  };
  Json full;
  const auto q_full = solve(c.t_final, "", full);
  rec.payload = {{"full", full}};
  if (c.halve) {
    Json half;
    const auto q_half = solve(0.5 * c.t_final, "_half", half);
    rec.payload["half"] = half;
    rec.payload["first_contraction_decreases"] = q_full && q_half && *q_half < *q_full;
  }
}

inline void run_semiflow(const ExperimentConfig& c, ResultRecord& rec) {
  const PVRule rule(c.quadrature);
  const EvolutionProblem prob = make_problem(c, rule);
  const GridFunction f0 = build_initial(c.initial, c.n, c.seed, c.base_dir);
  const double r = c.norms.front();
  const double defect = semiflow_defect(f0, c.semiflow_s, c.semiflow_t, prob, c.scheme, c.dt, r);
  IntegrateOptions o;
  o.scheme = c.scheme;
  o.t_final = c.semiflow_s + c.semiflow_t;
  o.output_every = static_cast<std::size_t>(-1);
  o.dt = c.dt;
  const GridFunction coarse = integrate(f0, prob, o).final_state();
  o.dt = 0.5 * c.dt;
  const GridFunction fine = integrate(f0, prob, o).final_state();
  const double estimate = sobolev_norm(coarse - fine, r);
  rec.payload = {{"r", r},
                 {"defect", defect},
                 {"halving_estimate", estimate},
                 {"ratio", estimate > 0.0 ? Json(defect / estimate) : Json(nullptr)},
                 {"within_10x", defect <= 10.0 * estimate}};
  rec.tables = {Table{"semiflow", {"s", "t", "dt", "defect", "halving_estimate"},
                      {{c.semiflow_s, c.semiflow_t, c.dt, defect, estimate}}}};
}

inline void run_operators(const ExperimentConfig& c, ResultRecord& rec) {
  const PVRule rule(c.quadrature);
  double worst = 0.0;
  if (c.check == OperatorCheck::kQuasilinear) {
    Table t{"quasilinear", {"index", "residual_sup"}, {}};
    for (std::size_t i = 0; i < c.functions.size(); ++i) {
      const GridFunction f = build_initial(c.functions[i], c.n, c.seed, c.base_dir);
      const double res = (phi1_apply(f, f, c.pe1, rule) + pe1_rhs(f, c.pe1, rule)).max_abs();
      worst = std::max(worst, res);
      t.rows.push_back({static_cast<double>(i), res});
    }
    rec.tables = {t};
  } else {
    Table t{"hilbert", {"m", "residual_sup"}, {}};
    const GridFunction flat = GridFunction::zeros(c.n);
    for (int m = 1; m <= c.m_max; ++m) {
      const auto cm = GridFunction::sample(c.n, [m](double x) { return std::cos(m * x); });
      const auto sm = GridFunction::sample(c.n, [m](double x) { return std::sin(m * x); });
      const double res = max_distance(op_B_apply(flat, cm, rule), sm);
      worst = std::max(worst, res);
      t.rows.push_back({static_cast<double>(m), res});
    }
    rec.tables = {t};
  }
  rec.payload = {{"check", c.check == OperatorCheck::kQuasilinear ? "quasilinear" : "hilbert"},
                 {"max_residual", worst}};
}

}  // namespace detail

/// Runs one experiment. Errors from the numerical modules keep their type
/// and gain the experiment name as context.
inline ResultRecord run(const ExperimentConfig& c) {
  ResultRecord rec;
  rec.config = c;
  const auto start = std::chrono::steady_clock::now();
  const std::string context = to_string(c.experiment) + " experiment: ";
  try {
    switch (c.experiment) {
      case Experiment::kSpectrum: detail::run_spectrum(c, rec); break;
      case Experiment::kEvolve: detail::run_evolve(c, rec, false); break;
      case Experiment::kDecay: detail::run_evolve(c, rec, true); break;
      case Experiment::kInstability: detail::run_instability(c, rec); break;
      case Experiment::kPicard: detail::run_picard(c, rec); break;
      case Experiment::kSemiflow: detail::run_semiflow(c, rec); break;
      case Experiment::kOperators: detail::run_operators(c, rec); break;
    }
  } catch (const ConfigError& e) {
    throw ConfigError(context + e.what(), e.fields());
  } catch (const NonConvergenceError& e) {
    throw NonConvergenceError(context + e.what(), e.defects());
  } catch (const IntegrationAborted& e) {
    throw IntegrationAborted(context + e.what(), e.last_valid_time());
  } catch (const TimeStepError& e) {
    throw TimeStepError(context + e.what(), e.t0(), e.t1());
  } catch (const DegeneracyError& e) {
    throw DegeneracyError(context + e.what(), e.condition_estimate());
  } catch (const EvaluationError& e) {
    throw EvaluationError(context + e.what(), e.node());
  } catch (const NumericalError& e) {
    throw NumericalError(context + e.what());
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace muskat::harness
