#pragma once

// Time integration of the discretized Muskat flows and a finite-dimensional
// version of the quasilinear fixed-point construction
//   Lambda(v)(t) = U_{A(v)}(t,0) v0 + int_0^t U_{A(v)}(t,s) f(v(s)) ds.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "muskat/errors.hpp"
#include "muskat/kernels.hpp"
#include "muskat/params.hpp"
#include "muskat/quadrature.hpp"
#include "muskat/torus.hpp"

namespace muskat {

enum class Scheme {
  kExplicitRk4,           ///< classical fourth-order Runge-Kutta
  kImexLinearlyImplicit,  ///< ARS(3,4,3): linearization at 0 implicit, rest explicit
};

/// Autonomous evolution d_t f = rhs(f). linear_symbol(m) is the eigenvalue
/// of the linearization at f = 0 on Fourier mode m; IMEX treats that
/// diagonal part implicitly.
struct EvolutionProblem {
  std::function<GridFunction(const GridFunction&)> rhs;
  std::function<double(int)> linear_symbol;
  Scheme default_scheme = Scheme::kExplicitRk4;
};

inline EvolutionProblem pe1_problem(const MuskatParamsNoST& p, const PVRule& rule) {
  p.validate();
  return {
      [p, rule](const GridFunction& f) { return pe1_rhs(f, p, rule); },
      [p](int m) { return -p.rate_scale() * std::abs(m); },
      Scheme::kExplicitRk4,
  };
}

inline EvolutionProblem pe2_problem(const MuskatParamsST& p, const PVRule& rule,
                                    const SpectralOptions& opts = {}) {
  p.validate();
  return {
      [p, rule, opts](const GridFunction& f) { return pe2_rhs(f, p, rule, opts); },
      [p](int m) {
        const double a = std::abs(m);
        return -(p.k / p.mu_sum()) * (p.sigma * a * a * a + p.theta * a);
      },
      Scheme::kImexLinearlyImplicit,
  };
}

/// Time series of states and their Sobolev norms.
struct TrajectoryRecord {
  std::vector<double> times;
  std::vector<GridFunction> states;
  std::map<double, std::vector<double>> norms;  ///< exponent r -> ||f(t)||_{H^r}
  bool stopped_early = false;

  void append(double t, const GridFunction& f) {
    times.push_back(t);
    states.push_back(f);
    for (auto& [r, series] : norms) series.push_back(sobolev_norm(f, r));
  }

  const GridFunction& final_state() const { return states.back(); }
  double final_time() const { return times.back(); }
};

struct IntegrateOptions {
  Scheme scheme = Scheme::kExplicitRk4;
  double dt = 1e-2;
  double t_final = 1.0;
  std::size_t output_every = 1;         ///< record every k-th step (final state always)
  std::vector<double> norm_exponents;   ///< Sobolev exponents tracked in the record
  /// Optional early exit, checked after every step.
  std::function<bool(double, const GridFunction&)> stop_when;
};

namespace detail {

inline bool all_finite(const GridFunction& f) {
  for (double v : f.values())
    if (!std::isfinite(v)) return false;
  return true;
}

inline GridFunction rk4_step(const EvolutionProblem& prob, const GridFunction& u,
                             double h) {
  const GridFunction k1 = prob.rhs(u);
  const GridFunction k2 = prob.rhs(axpy(u, 0.5 * h, k1));
  const GridFunction k3 = prob.rhs(axpy(u, 0.5 * h, k2));
  const GridFunction k4 = prob.rhs(axpy(u, h, k3));
  std::vector<double> v(u.vector());
  for (std::size_t j = 0; j < v.size(); ++j)
    v[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  return GridFunction(std::move(v));
}

// Ascher-Ruuth-Spiteri (3,4,3), L-stable and stiffly accurate in its
// implicit part. a31, a41 and a42 = a43 are fixed by the row-sum and
// third-order conditions from gamma and the published a32.
struct Ars343 {
  static constexpr double g = 0.435866521508459;
  static constexpr double b1 = -1.5 * g * g + 4.0 * g - 0.25;
  static constexpr double b2 = 1.5 * g * g - 5.0 * g + 1.25;
  static constexpr double c3 = 0.5 * (1.0 + g);
  static constexpr double a32 = 0.3966543747;
  static constexpr double a31 = c3 - a32;
  static constexpr double a42 = (1.0 / 6.0 - b2 * a32 * g) / (g * (g + c3));
  static constexpr double a43 = a42;
  static constexpr double a41 = 1.0 - a42 - a43;
  static constexpr double ai32 = 0.5 * (1.0 - g);
};

inline GridFunction imex_step(const EvolutionProblem& prob, const GridFunction& u,
                              double h) {
  using T = Ars343;
  auto linear = [&](const GridFunction& y) {
    return apply_multiplier(y, [&](int m) { return prob.linear_symbol(m); });
  };
  auto solve = [&](const GridFunction& r) {
    return apply_multiplier(r, [&](int m) { return 1.0 / (1.0 - h * T::g * prob.linear_symbol(m)); });
  };
  auto remainder = [&](const GridFunction& y, const GridFunction& ly) {
    return prob.rhs(y) - ly;
  };

  const GridFunction n1 = remainder(u, linear(u));

  const GridFunction y2 = solve(axpy(u, h * T::g, n1));
  const GridFunction l2 = linear(y2);
  const GridFunction n2 = remainder(y2, l2);

  GridFunction r3 = axpy(u, h * T::a31, n1);
  r3 = axpy(r3, h * T::a32, n2);
  r3 = axpy(r3, h * T::ai32, l2);
  const GridFunction y3 = solve(r3);
  const GridFunction l3 = linear(y3);
  const GridFunction n3 = remainder(y3, l3);

  GridFunction r4 = axpy(u, h * T::a41, n1);
  r4 = axpy(r4, h * T::a42, n2);
  r4 = axpy(r4, h * T::a43, n3);
  r4 = axpy(r4, h * T::b1, l2);
  r4 = axpy(r4, h * T::b2, l3);
  const GridFunction y4 = solve(r4);
  const GridFunction l4 = linear(y4);
  const GridFunction n4 = remainder(y4, l4);

  GridFunction out = axpy(u, h * T::b1, n2 + l2);
  out = axpy(out, h * T::b2, n3 + l3);
  return axpy(out, h * T::g, n4 + l4);
}

}  // namespace detail

/// Advances f0 to opts.t_final with fixed steps of opts.dt (the last step
/// is shortened to land on t_final). Step k ends at time k*dt, so runs that
/// share a step size share their step grid.
inline TrajectoryRecord integrate(const GridFunction& f0, const EvolutionProblem& prob,
                                  const IntegrateOptions& opts) {
  std::vector<std::string> bad;
  if (!(opts.dt > 0.0)) bad.push_back("dt");
  if (!(opts.t_final >= 0.0) || !std::isfinite(opts.t_final)) bad.push_back("t_final");
  if (opts.output_every == 0) bad.push_back("output_every");
  if (!bad.empty()) throw ConfigError("invalid integration options", bad);

  TrajectoryRecord rec;
  for (double r : opts.norm_exponents) rec.norms[r] = {};
  rec.append(0.0, f0);

  GridFunction u = f0;
  double t = 0.0;
  std::size_t step = 0;
  while (t < opts.t_final) {
    const double t_next = std::min(static_cast<double>(step + 1) * opts.dt, opts.t_final);
    const double h = t_next - t;
    try {
      u = opts.scheme == Scheme::kExplicitRk4 ? detail::rk4_step(prob, u, h)
                                              : detail::imex_step(prob, u, h);
    } catch (const EvaluationError& e) {
      throw IntegrationAborted(std::string("integration aborted: ") + e.what(), t);
    } catch (const ConfigError& e) {
      // non-finite values surface as GridFunction invariant violations
      throw IntegrationAborted(std::string("integration aborted: ") + e.what(), t);
    }
    if (!detail::all_finite(u))
      throw IntegrationAborted("integration aborted: non-finite state", t);
    t = t_next;
    ++step;
    const bool stop = opts.stop_when && opts.stop_when(t, u);
    if (stop || step % opts.output_every == 0 || t >= opts.t_final) rec.append(t, u);
    if (stop) {
      rec.stopped_early = t < opts.t_final;
      break;
    }
  }
  return rec;
}

/// ||v(t+s; f0) - v(t; v(s; f0))||_{H^r}, with both routes on the same step size.
inline double semiflow_defect(const GridFunction& f0, double s, double t,
                              const EvolutionProblem& prob, Scheme scheme,
                              double dt, double r) {
  if (!(s >= 0.0) || !(t > 0.0))
    throw ConfigError("semiflow_defect requires s >= 0 and t > 0", {"s", "t"});
  auto advance = [&](const GridFunction& g, double horizon) {
    if (horizon == 0.0) return g;
    IntegrateOptions o;
    o.scheme = scheme;
    o.dt = dt;
    o.t_final = horizon;
    o.output_every = static_cast<std::size_t>(-1);
    return integrate(g, prob, o).final_state();
  };
  const GridFunction direct = advance(f0, s + t);
  const GridFunction composed = advance(advance(f0, s), t);
  return sobolev_norm(direct - composed, r);
}

// ---------------------------------------------------------------------------
// Frozen-coefficient propagators

enum class Interpolation { kPiecewiseConstant, kLinear };

/// Operator path A(t) given at nodes 0 = tau_0 < ... < tau_J = T.
struct PropagatorPath {
  std::vector<double> nodes;
  std::vector<Eigen::MatrixXd> operators;
  Interpolation mode = Interpolation::kLinear;

  void validate() const {
    std::vector<std::string> bad;
    if (nodes.size() < 2) bad.push_back("nodes");
    if (operators.size() != nodes.size()) bad.push_back("operators");
    if (!nodes.empty() && nodes.front() != 0.0) bad.push_back("nodes");
    for (std::size_t j = 1; j < nodes.size(); ++j)
      if (!(nodes[j] > nodes[j - 1])) {
        bad.push_back("nodes");
        break;
      }
    for (const auto& a : operators)
      if (a.rows() != a.cols() || a.rows() != operators.front().rows() || !a.allFinite()) {
        bad.push_back("operators");
        break;
      }
    if (!bad.empty()) throw ConfigError("malformed propagator path", bad);
  }

  /// A(t) for t in segment [tau_j, tau_{j+1}].
  Eigen::MatrixXd at(std::size_t j, double t) const {
    if (mode == Interpolation::kPiecewiseConstant) return operators[j];
    const double theta = (t - nodes[j]) / (nodes[j + 1] - nodes[j]);
    return (1.0 - theta) * operators[j] + theta * operators[j + 1];
  }
};

struct PropagateOptions {
  double max_substep = 1e-2;
};

/// Solves v' + A(t) v = g(t) along the path with the two-stage Gauss-Legendre
/// method (order 4, A-stable), forcing interpolated linearly between nodes.
/// Returns v at every node. An empty forcing means g = 0.
inline std::vector<Eigen::VectorXd> propagate_path(const PropagatorPath& path,
                                                   const std::vector<Eigen::VectorXd>& forcing,
                                                   const Eigen::VectorXd& v0,
                                                   const PropagateOptions& opts = {}) {
  path.validate();
  const Eigen::Index n = path.operators.front().rows();
  if (v0.size() != n) throw ConfigError("initial state has wrong dimension", {"v0"});
  if (!forcing.empty() && forcing.size() != path.nodes.size())
    throw ConfigError("forcing must be sampled on every path node", {"forcing"});
  for (const auto& g : forcing)
    if (g.size() != n) throw ConfigError("forcing has wrong dimension", {"forcing"});
  if (!(opts.max_substep > 0.0)) throw ConfigError("max_substep must be positive", {"max_substep"});

  static const double r3 = std::sqrt(3.0);
  const double c1 = 0.5 - r3 / 6.0, c2 = 0.5 + r3 / 6.0;
  const double a11 = 0.25, a12 = 0.25 - r3 / 6.0, a21 = 0.25 + r3 / 6.0, a22 = 0.25;

  auto g_at = [&](std::size_t j, double t) -> Eigen::VectorXd {
    if (forcing.empty()) return Eigen::VectorXd::Zero(n);
    const double theta = (t - path.nodes[j]) / (path.nodes[j + 1] - path.nodes[j]);
    return (1.0 - theta) * forcing[j] + theta * forcing[j + 1];
  };

  std::vector<Eigen::VectorXd> out{v0};
  Eigen::VectorXd v = v0;
  Eigen::MatrixXd block(2 * n, 2 * n);
  Eigen::VectorXd rhs(2 * n);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t j = 0; j + 1 < path.nodes.size(); ++j) {
    const double t0 = path.nodes[j], t1 = path.nodes[j + 1];
    const auto substeps = static_cast<std::size_t>(std::ceil((t1 - t0) / opts.max_substep - 1e-12));
    const double h = (t1 - t0) / static_cast<double>(std::max<std::size_t>(substeps, 1));
    std::optional<Eigen::PartialPivLU<Eigen::MatrixXd>> lu;
    for (std::size_t k = 0; k < std::max<std::size_t>(substeps, 1); ++k) {
      const double t = t0 + static_cast<double>(k) * h;
      const Eigen::MatrixXd a1 = path.at(j, t + c1 * h);
      const Eigen::MatrixXd a2 = path.at(j, t + c2 * h);
      // K_i + h A_i sum_l a_il K_l = -A_i v + g_i
      if (!lu || path.mode == Interpolation::kLinear) {
        block.topLeftCorner(n, n) = id + h * a11 * a1;
        block.topRightCorner(n, n) = h * a12 * a1;
        block.bottomLeftCorner(n, n) = h * a21 * a2;
        block.bottomRightCorner(n, n) = id + h * a22 * a2;
        lu.emplace(block);
        if (!(lu->rcond() > 1e-14))
          throw TimeStepError("propagate: singular stage system on [" +
                              std::to_string(t0) + ", " + std::to_string(t1) + "]", t0, t1);
      }
      rhs.head(n) = -a1 * v + g_at(j, t + c1 * h);
      rhs.tail(n) = -a2 * v + g_at(j, t + c2 * h);
      const Eigen::VectorXd k12 = lu->solve(rhs);
      v += 0.5 * h * (k12.head(n) + k12.tail(n));
      if (!v.allFinite())
        throw TimeStepError("propagate: non-finite state on [" + std::to_string(t0) +
                            ", " + std::to_string(t1) + "]", t0, t1);
    }
    out.push_back(v);
  }
  return out;
}

inline Eigen::VectorXd propagate(const PropagatorPath& path,
                                 const std::vector<Eigen::VectorXd>& forcing,
                                 const Eigen::VectorXd& v0,
                                 const PropagateOptions& opts = {}) {
  return propagate_path(path, forcing, v0, opts).back();
}

// ---------------------------------------------------------------------------
// Picard iteration on Lambda

struct PicardOptions {
  double t_final = 0.5;
  std::size_t intervals = 50;  ///< J: uniform nodes tau_j = j T / J
  double tol = 1e-10;
  std::size_t max_iter = 50;
  Interpolation mode = Interpolation::kLinear;
  PropagateOptions propagate;
};

struct PicardReport {
  /// Picard steps taken before the defect fell below tol; the final
  /// certifying application of Lambda is not counted.
  std::size_t iterations = 0;
  std::vector<double> defects;  ///< sup over nodes of |v_{k+1} - v_k|_inf
  std::vector<std::optional<double>> empirical_contraction;  ///< defects[k+1] / defects[k]
  bool converged = false;
};

/// Node values of a path-valued iterate.
struct NodePath {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> states;
};

struct PicardResult {
  NodePath path;
  PicardReport report;
};

/// Iterates v_{k+1} = Lambda(v_k) from v_0(t) = v0, with A frozen along v_k
/// at the nodes. Throws NonConvergenceError (with the defect history) after
/// max_iter steps; shrinking t_final is the usual remedy.
template <typename AOf, typename FOf>
PicardResult picard_lambda(AOf&& a_of, FOf&& f_of, const Eigen::VectorXd& v0,
                           const PicardOptions& opts) {
  std::vector<std::string> bad;
  if (!(opts.t_final > 0.0)) bad.push_back("t_final");
  if (!(opts.tol > 0.0)) bad.push_back("tol");
  if (opts.intervals == 0) bad.push_back("intervals");
  if (opts.max_iter == 0) bad.push_back("max_iter");
  if (!bad.empty()) throw ConfigError("invalid Picard options", bad);

  const std::size_t nodes = opts.intervals + 1;
  PropagatorPath path;
  path.mode = opts.mode;
  for (std::size_t j = 0; j < nodes; ++j)
    path.nodes.push_back(opts.t_final * static_cast<double>(j) / static_cast<double>(opts.intervals));

  std::vector<Eigen::VectorXd> current(nodes, v0);
  PicardReport report;
  for (std::size_t k = 0; k < opts.max_iter; ++k) {
    path.operators.clear();
    std::vector<Eigen::VectorXd> forcing;
    for (const auto& v : current) {
      path.operators.push_back(a_of(v));
      forcing.push_back(f_of(v));
    }
    std::vector<Eigen::VectorXd> next = propagate_path(path, forcing, v0, opts.propagate);
    double defect = 0.0;
    for (std::size_t j = 0; j < nodes; ++j)
      defect = std::max(defect, (next[j] - current[j]).cwiseAbs().maxCoeff());
    if (!report.defects.empty()) {
      const double prev = report.defects.back();
      report.empirical_contraction.push_back(prev > 0.0 ? std::optional<double>(defect / prev)
                                                        : std::nullopt);
    }
    report.defects.push_back(defect);
    current = std::move(next);
    if (defect < opts.tol) {
      report.iterations = k;
      report.converged = true;
      return {NodePath{path.nodes, std::move(current)}, std::move(report)};
    }
  }
  throw NonConvergenceError("Picard iteration did not converge in " +
                            std::to_string(opts.max_iter) + " steps", report.defects);
}

/// A(v) = matrix of h -> Phi(v)[h] for the problem without surface tension,
/// so that the flow reads v' + A(v) v = 0.
inline auto pe1_quasilinear_operator(const MuskatParamsNoST& p, const PVRule& rule) {
  return [p, rule](const Eigen::VectorXd& v) {
    return assemble_phi1(GridFunction(std::vector<double>(v.data(), v.data() + v.size())), p, rule);
  };
}

}  // namespace muskat
