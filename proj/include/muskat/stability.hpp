#pragma once

// Linearization spectra at flat equilibria, stability verdicts and
// decay/growth rates measured from trajectories.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "muskat/dynamics.hpp"
#include "muskat/errors.hpp"
#include "muskat/parallel.hpp"
#include "muskat/params.hpp"
#include "muskat/torus.hpp"

namespace muskat {

/// A fit window contained a nonpositive norm, or too few samples.
class WindowError : public NumericalError {
 public:
  explicit WindowError(const std::string& what) : NumericalError(what) {}
};

enum class Verdict { kStable, kUnstable, kMarginal };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::kStable: return "stable";
    case Verdict::kUnstable: return "unstable";
    case Verdict::kMarginal: return "marginal";
  }
  return "?";
}

struct SpectrumReport {
  Eigen::VectorXcd eigenvalues;      ///< sorted by real part, descending
  double spectral_bound = 0.0;       ///< max real part
  Verdict verdict = Verdict::kMarginal;
  std::optional<double> omega_plus;  ///< min real part over Re > margin
  double margin = 1e-8;
};

struct JacobianOptions {
  double eps = 1e-6;       ///< scaled by max|f*| + 1
  bool zero_mean = true;   ///< restrict to mean-free, Nyquist-free modes
};

/// Orthonormal (for <u,v> = mean(u v)) real Fourier basis of the modes
/// 1 <= m < N/2, as columns cos(m x) sqrt 2, sin(m x) sqrt 2.
inline Eigen::MatrixXd zero_mean_basis(std::size_t n) {
  const auto cols = static_cast<Eigen::Index>(n - 2);
  Eigen::MatrixXd q(static_cast<Eigen::Index>(n), cols);
  for (std::size_t m = 1; m < n / 2; ++m)
    for (std::size_t j = 0; j < n; ++j) {
      const double x = GridFunction::node(n, j);
      const auto row = static_cast<Eigen::Index>(j);
      q(row, static_cast<Eigen::Index>(2 * (m - 1))) = std::sqrt(2.0) * std::cos(static_cast<double>(m) * x);
      q(row, static_cast<Eigen::Index>(2 * m - 1)) = std::sqrt(2.0) * std::sin(static_cast<double>(m) * x);
    }
  return q;
}

/// Central-difference Jacobian of rhs at f_star. With zero_mean the matrix
/// is expressed in zero_mean_basis (size N-2), otherwise in grid values
/// (size N, including the constant direction).
template <typename Rhs>
Eigen::MatrixXd jacobian(Rhs&& rhs, const GridFunction& f_star,
                         const JacobianOptions& opts = {}) {
  if (!(opts.eps > 0.0)) throw ConfigError("jacobian: eps must be positive", {"eps"});
  const std::size_t n = f_star.size();
  const double h = opts.eps * (f_star.max_abs() + 1.0);
  const Eigen::MatrixXd basis = opts.zero_mean ? zero_mean_basis(n)
                                               : Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                                           static_cast<Eigen::Index>(n));
  const auto cols = basis.cols();
  Eigen::MatrixXd diff(static_cast<Eigen::Index>(n), cols);
  parallel_for(static_cast<std::size_t>(cols), [&](std::size_t k) {
    std::vector<double> dir(basis.col(static_cast<Eigen::Index>(k)).data(),
                            basis.col(static_cast<Eigen::Index>(k)).data() + n);
    const GridFunction e(std::move(dir));
    const GridFunction plus = rhs(axpy(f_star, h, e));
    const GridFunction minus = rhs(axpy(f_star, -h, e));
    for (std::size_t i = 0; i < n; ++i)
      diff(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (plus[i] - minus[i]) / (2.0 * h);
  });
  if (!diff.allFinite()) throw EvaluationError("jacobian: non-finite entry", 0.0);
  if (!opts.zero_mean) return diff;
  return basis.transpose() * diff / static_cast<double>(n);
}

/// Dense nonsymmetric eigensolve with verdict: stable iff the spectral bound
/// is below -margin, unstable iff some real part exceeds +margin.
inline SpectrumReport eigen_spectrum(const Eigen::MatrixXd& j, double margin = 1e-8) {
  if (j.rows() != j.cols() || j.rows() == 0)
    throw ConfigError("eigen_spectrum: matrix must be square and nonempty", {"J"});
  if (!j.allFinite()) throw ConfigError("eigen_spectrum: matrix has non-finite entries", {"J"});
  if (!(margin >= 0.0)) throw ConfigError("eigen_spectrum: margin must be nonnegative", {"margin"});

  Eigen::EigenSolver<Eigen::MatrixXd> es(j, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success) throw NumericalError("eigen_spectrum: eigensolver did not converge");
  std::vector<std::complex<double>> ev(es.eigenvalues().data(),
                                       es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    return a.real() != b.real() ? a.real() > b.real() : a.imag() > b.imag();
  });

  SpectrumReport rep;
  rep.margin = margin;
  rep.eigenvalues = Eigen::Map<Eigen::VectorXcd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  rep.spectral_bound = ev.front().real();
  for (const auto& l : ev)
    if (l.real() > margin) rep.omega_plus = l.real();  // sorted: last one is the minimum
  if (rep.spectral_bound < -margin)
    rep.verdict = Verdict::kStable;
  else if (rep.omega_plus)
    rep.verdict = Verdict::kUnstable;
  else
    rep.verdict = Verdict::kMarginal;
  return rep;
}

/// {-k delta_rho m / (2 mu) : 1 <= m <= m_max}
inline std::vector<double> analytic_spectrum_pe1(const MuskatParamsNoST& p, int m_max) {
  std::vector<double> out;
  for (int m = 1; m <= m_max; ++m) out.push_back(-p.rate_scale() * m);
  return out;
}

/// {-(sigma k / (mu_- + mu_+)) (m^3 + (theta / sigma) m) : 1 <= m <= m_max}
inline std::vector<double> analytic_spectrum_pe2(const MuskatParamsST& p, int m_max) {
  std::vector<double> out;
  for (int m = 1; m <= m_max; ++m) {
    const double mm = m;
    out.push_back(-(p.k / p.mu_sum()) * (p.sigma * mm * mm * mm + p.theta * mm));
  }
  return out;
}

struct SpectrumMatchRow {
  int m;
  double analytic;
  std::complex<double> numerical;
  double relative_error;
};

struct SpectrumMatch {
  std::vector<SpectrumMatchRow> rows;
  double max_relative_error = 0.0;
};

/// Pairs every analytic value (repeated `multiplicity` times) with the
/// nearest not yet used numerical eigenvalue. Relative error falls back to
/// absolute error for a zero analytic value.
inline SpectrumMatch match_spectrum(const SpectrumReport& rep, const std::vector<double>& analytic,
                                    int multiplicity = 2) {
  const auto count = static_cast<std::size_t>(rep.eigenvalues.size());
  if (analytic.size() * static_cast<std::size_t>(multiplicity) > count)
    throw ConfigError("match_spectrum: more analytic values than eigenvalues", {"m_max"});
  std::vector<bool> used(count, false);
  SpectrumMatch out;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    for (int copy = 0; copy < multiplicity; ++copy) {
      std::size_t best = count;
      double best_dist = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < count; ++k) {
        if (used[k]) continue;
        const double d = std::abs(rep.eigenvalues(static_cast<Eigen::Index>(k)) - analytic[i]);
        if (d < best_dist) {
          best_dist = d;
          best = k;
        }
      }
      used[best] = true;
      const double scale = analytic[i] != 0.0 ? std::abs(analytic[i]) : 1.0;
      SpectrumMatchRow row{static_cast<int>(i + 1), analytic[i],
                           rep.eigenvalues(static_cast<Eigen::Index>(best)), best_dist / scale};
      out.max_relative_error = std::max(out.max_relative_error, row.relative_error);
      out.rows.push_back(row);
    }
  }
  return out;
}

struct RateFit {
  double rate = 0.0;       ///< minus the slope of log ||f(t)||_{H^r}
  double r_squared = 0.0;
  std::size_t samples = 0;
};

/// Least-squares fit of log ||f(t)||_{H^r} over times in [t_a, t_b]. Uses
/// recorded norms when the trajectory tracks r, else recomputes them.
inline RateFit decay_rate_fit(const TrajectoryRecord& traj, double r, double t_a, double t_b) {
  if (!(t_b > t_a)) throw ConfigError("decay_rate_fit: window must have t_b > t_a", {"window"});
  const auto tracked = traj.norms.find(r);
  std::vector<double> t, y;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (traj.times[i] < t_a || traj.times[i] > t_b) continue;
    const double norm = tracked != traj.norms.end() ? tracked->second[i]
                                                    : sobolev_norm(traj.states[i], r);
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw WindowError("decay_rate_fit: nonpositive or non-finite norm at t = " +
                        std::to_string(traj.times[i]));
    t.push_back(traj.times[i]);
    y.push_back(std::log(norm));
  }
  if (t.size() < 2) throw WindowError("decay_rate_fit: fewer than two samples in window");

  const double n = static_cast<double>(t.size());
  double mt = 0, my = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0, sty = 0, syy = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  const double slope = sty / stt;
  RateFit fit;
  fit.rate = -slope;
  fit.r_squared = syy > 0.0 ? sty * sty / (stt * syy) : 1.0;
  fit.samples = t.size();
  return fit;
}

// ---------------------------------------------------------------------------
// Instability probe

struct ProbeOptions {
  std::size_t n = 64;
  std::size_t quadrature = 64;
  double dt = 1e-2;
  double r = 1.0;           ///< norm exponent for the escape test; ||a cos x||_{H^1} = a
  double time_cap = 60.0;
  SpectralOptions spectral;
};

struct ProbeRun {
  double amplitude = 0.0;
  double initial_norm = 0.0;
  std::optional<double> escape_time;  ///< empty when the time cap was hit
};

struct ProbeReport {
  std::vector<ProbeRun> runs;
  double growth_rate = 0.0;   ///< analytic omega_+ of the m = 1 mode
  double radius = 0.0;
  bool inconclusive = false;  ///< the largest amplitude never escaped
};

/// Integrates the surface-tension flow from a cos x for each amplitude
/// until ||f||_{H^r} >= radius or the time cap.
inline ProbeReport instability_probe(const MuskatParamsST& p, const std::vector<double>& amplitudes,
                                     double radius, const ProbeOptions& opts = {}) {
  p.validate();
  std::vector<std::string> bad;
  if (!(p.theta + p.sigma < 0.0)) bad.push_back("theta");
  if (amplitudes.empty()) bad.push_back("amplitudes");
  for (std::size_t i = 0; i < amplitudes.size(); ++i)
    if (!(amplitudes[i] > 0.0) || (i > 0 && !(amplitudes[i] < amplitudes[i - 1]))) {
      bad.push_back("amplitudes");
      break;
    }
  if (!(radius > 0.0)) bad.push_back("radius");
  if (!(opts.time_cap > 0.0)) bad.push_back("time_cap");
  if (!bad.empty())
    throw ConfigError("instability_probe needs theta + sigma < 0, positive decreasing amplitudes, "
                      "positive radius and time cap", bad);

  const PVRule rule(opts.quadrature);
  const EvolutionProblem prob = pe2_problem(p, rule, opts.spectral);
  ProbeReport rep;
  rep.radius = radius;
  rep.growth_rate = analytic_spectrum_pe2(p, 1).front();
  for (double a : amplitudes) {
    const GridFunction f0 = GridFunction::sample(opts.n, [a](double x) { return a * std::cos(x); });
    ProbeRun run{a, sobolev_norm(f0, opts.r), std::nullopt};
    if (run.initial_norm >= radius) {
      run.escape_time = 0.0;
    } else {
      IntegrateOptions io;
      io.scheme = Scheme::kImexLinearlyImplicit;
      io.dt = opts.dt;
      io.t_final = opts.time_cap;
      io.output_every = static_cast<std::size_t>(-1);
      io.stop_when = [&](double, const GridFunction& f) { return sobolev_norm(f, opts.r) >= radius; };
      const TrajectoryRecord rec = integrate(f0, prob, io);
      if (sobolev_norm(rec.final_state(), opts.r) >= radius) run.escape_time = rec.final_time();
    }
    rep.runs.push_back(run);
  }
  rep.inconclusive = !rep.runs.front().escape_time.has_value();
  return rep;
}

}  // namespace muskat
