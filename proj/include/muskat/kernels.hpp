#pragma once

// Nonlocal operators of the periodic Muskat problem.
//
// Every principal-value integral over s in (-pi, pi) is discretized with the
// same half-offset PVRule. Off-grid samples g(x_i - s_j) are read from a
// trigonometric interpolant of g on a fine grid of P = 2 max(N, M) points,
// where every x_i - s_j lands exactly on a node.
//
// With t = tan(s/2), T = tanh((f(x) - f(x-s))/2), and multiplying numerator
// and denominator by cos^2(s/2), all kernels are evaluated through
//   D = sin^2(s/2) + T^2 cos^2(s/2),
// which stays bounded away from zero for s != 0 and avoids tan overflow.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "muskat/errors.hpp"
#include "muskat/parallel.hpp"
#include "muskat/params.hpp"
#include "muskat/quadrature.hpp"
#include "muskat/torus.hpp"

namespace muskat {

/// Geometry of the kernels for a fixed interface f: T and D at every
/// (grid point, quadrature node) pair, plus f' on grid and fine grid.
class KernelTable {
 public:
  KernelTable(const GridFunction& f, const PVRule& rule)
      : n_(f.size()), m_(rule.size()), weight_(rule.weight()) {
    if (!is_power_of_two(m_))
      throw ConfigError("quadrature count M must be a power of two, got " +
                        std::to_string(m_), {"m"});
    p_ = 2 * std::max(n_, m_);
    stride_ = p_ / n_;
    node_step_ = p_ / (2 * m_);

    sn_.resize(m_);
    cs_.resize(m_);
    for (std::size_t j = 0; j < m_; ++j) {
      const double s = rule.node(j);
      sn_[j] = std::sin(0.5 * s);
      cs_[j] = std::cos(0.5 * s);
    }

    f_fine_ = trig_interpolate(f.values(), p_);
    const GridFunction df = derivative(f, 1);
    df_ = df.vector();
    df_fine_ = trig_interpolate(df.values(), p_);

    tanh_.resize(n_ * m_);
    denom_.resize(n_ * m_);
    parallel_for(n_, [&](std::size_t i) {
      const double fx = f_fine_[i * stride_];
      for (std::size_t j = 0; j < m_; ++j) {
        const double t = std::tanh(0.5 * (fx - f_fine_[fine_index(i, j)]));
        tanh_[i * m_ + j] = t;
        denom_[i * m_ + j] = sn_[j] * sn_[j] + t * t * cs_[j] * cs_[j];
      }
    });
  }

  std::size_t n() const { return n_; }
  std::size_t m() const { return m_; }
  std::size_t p() const { return p_; }
  double weight() const { return weight_; }

  /// Fine-grid index of x_i - s_j.
  std::size_t fine_index(std::size_t i, std::size_t j) const {
    // x_i - s_j = (2 pi / P) * (i*stride + P/2 - (2j+1)*node_step)
    const long idx = static_cast<long>(i * stride_ + p_ / 2) -
                     static_cast<long>((2 * j + 1) * node_step_);
    const long p = static_cast<long>(p_);
    return static_cast<std::size_t>(((idx % p) + p) % p);
  }

  double tanh_diff(std::size_t i, std::size_t j) const { return tanh_[i * m_ + j]; }
  double denom(std::size_t i, std::size_t j) const { return denom_[i * m_ + j]; }
  double sin_half(std::size_t j) const { return sn_[j]; }
  double cos_half(std::size_t j) const { return cs_[j]; }
  double df(std::size_t i) const { return df_[i]; }
  double df_shifted(std::size_t i, std::size_t j) const { return df_fine_[fine_index(i, j)]; }

  std::vector<double> fine(const GridFunction& g) const {
    return trig_interpolate(g.values(), p_);
  }

  /// P x N matrix mapping grid values to fine-grid interpolant values.
  Eigen::MatrixXd interpolation_matrix() const {
    std::vector<double> unit(n_, 0.0);
    unit[0] = 1.0;
    return circulant_fine(trig_interpolate(unit, p_));
  }

  /// Builds the P x N matrix whose column k is column0 shifted by k*stride.
  Eigen::MatrixXd circulant_fine(const std::vector<double>& column0) const {
    Eigen::MatrixXd r(p_, n_);
    for (std::size_t k = 0; k < n_; ++k)
      for (std::size_t q = 0; q < p_; ++q)
        r(static_cast<Eigen::Index>((q + k * stride_) % p_), static_cast<Eigen::Index>(k)) = column0[q];
    return r;
  }

 private:
  std::size_t n_;
  std::size_t m_;
  std::size_t p_ = 0;
  std::size_t stride_ = 0;
  std::size_t node_step_ = 0;
  double weight_;
  std::vector<double> sn_, cs_;
  std::vector<double> f_fine_, df_, df_fine_;
  std::vector<double> tanh_, denom_;
};

namespace detail {

inline GridFunction finite_or_throw(std::vector<double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!std::isfinite(v[i]))
      throw EvaluationError(std::string(what) + ": non-finite value at x = " +
                            std::to_string(GridFunction::node(v.size(), i)),
                            GridFunction::node(v.size(), i));
  return GridFunction(std::move(v));
}

// Kernel of the DFDD operator (times cos^2(s/2)).
inline double kernel_a(const KernelTable& kt, std::size_t i, std::size_t j) {
  const double t = kt.tanh_diff(i, j);
  const double sc = kt.sin_half(j) * kt.cos_half(j);
  return (kt.df(i) * sc * (1.0 - t * t) - t) / kt.denom(i, j);
}

// Kernel of the B operator (times cos^2(s/2)).
inline double kernel_b(const KernelTable& kt, std::size_t i, std::size_t j) {
  const double t = kt.tanh_diff(i, j);
  const double sc = kt.sin_half(j) * kt.cos_half(j);
  return (kt.df(i) * t + sc * (1.0 - t * t)) / kt.denom(i, j);
}

// (1/2pi) PV-integral of kernel(x_i, s) * w(x_i - s) at every grid point.
template <typename Kernel>
std::vector<double> apply_kernel(const KernelTable& kt, const GridFunction& w,
                                 Kernel&& kernel, double prefactor) {
  const auto wf = kt.fine(w);
  std::vector<double> out(kt.n());
  parallel_for(kt.n(), [&](std::size_t i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < kt.m(); ++j)
      sum += kernel(kt, i, j) * wf[kt.fine_index(i, j)];
    out[i] = prefactor * kt.weight() * sum;
  });
  return out;
}

// Dense N x N matrix of w -> prefactor * weight * sum_j kernel(i,j) w(x_i - s_j),
// built as (sparse-row quadrature matrix) * (interpolation matrix). Column k
// equals the direct application to the grid basis vector e_k.
template <typename Kernel>
Eigen::MatrixXd assemble_kernel(const KernelTable& kt, Kernel&& kernel,
                                double prefactor) {
  const auto n = static_cast<Eigen::Index>(kt.n());
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(kt.p()));
  parallel_for(kt.n(), [&](std::size_t i) {
    for (std::size_t j = 0; j < kt.m(); ++j)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(kt.fine_index(i, j))) +=
          prefactor * kt.weight() * kernel(kt, i, j);
  });
  return g * kt.interpolation_matrix();
}

}  // namespace detail

/// Right-hand side of the Muskat problem without surface tension:
/// d_t f = pe1_rhs(f).
inline GridFunction pe1_rhs(const GridFunction& f, const MuskatParamsNoST& p,
                            const PVRule& rule) {
  p.validate();
  const KernelTable kt(f, rule);
  const double c = p.k * p.delta_rho / (4.0 * kPi * p.mu);
  std::vector<double> out(kt.n());
  parallel_for(kt.n(), [&](std::size_t i) {
    double first = 0.0;
    double second = 0.0;
    for (std::size_t j = 0; j < kt.m(); ++j) {
      const double t = kt.tanh_diff(i, j);
      const double d = kt.denom(i, j);
      const double dfs = kt.df_shifted(i, j);
      first += dfs * t / d;
      second += dfs * kt.sin_half(j) * kt.cos_half(j) * (1.0 - t * t) / d;
    }
    out[i] = -c * kt.weight() * (kt.df(i) * first + second);
  });
  return detail::finite_or_throw(std::move(out), "pe1_rhs");
}

/// The four-term quasilinear operator h -> Phi(f)[h]; the evolution reads
/// d_t f + Phi(f)[f] = 0.
inline GridFunction phi1_apply(const GridFunction& f, const GridFunction& h,
                               const MuskatParamsNoST& p, const PVRule& rule) {
  p.validate();
  const KernelTable kt(f, rule);
  const double c = p.k * p.delta_rho / (4.0 * kPi * p.mu);
  const GridFunction dh = derivative(h, 1);
  const auto dh_fine = kt.fine(dh);
  std::vector<double> out(kt.n());
  parallel_for(kt.n(), [&](std::size_t i) {
    double t1 = 0.0, t2 = 0.0, t3 = 0.0, t4 = 0.0;
    for (std::size_t j = 0; j < kt.m(); ++j) {
      const double t = kt.tanh_diff(i, j);
      const double d = kt.denom(i, j);
      const double sn = kt.sin_half(j);
      const double cs = kt.cos_half(j);
      const double dfs = kt.df_shifted(i, j);
      const double dhs = dh_fine[kt.fine_index(i, j)];
      t1 += (dh[i] - dhs) * sn * cs / d;
      t2 += (dfs * t * cs * cs + sn * cs) / d;
      t3 += dfs * t * sn * sn / d;
      t4 += dhs * t * t * sn * cs / d;
    }
    out[i] = c * kt.weight() * (-t1 + dh[i] * t2 + dh[i] * t3 - t4);
  });
  return detail::finite_or_throw(std::move(out), "phi1_apply");
}

/// Dense matrix of h -> Phi(f)[h] on the grid.
inline Eigen::MatrixXd assemble_phi1(const GridFunction& f,
                                     const MuskatParamsNoST& p,
                                     const PVRule& rule) {
  p.validate();
  const KernelTable kt(f, rule);
  const double c = p.k * p.delta_rho / (4.0 * kPi * p.mu);
  const auto n = static_cast<Eigen::Index>(kt.n());

  // Phi(f)[h]_i = c w [alpha_i h'_i + sum_j beta_ij h'(x_i - s_j)]
  Eigen::VectorXd alpha(n);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(kt.p()));
  parallel_for(kt.n(), [&](std::size_t i) {
    double a = 0.0;
    for (std::size_t j = 0; j < kt.m(); ++j) {
      const double t = kt.tanh_diff(i, j);
      const double d = kt.denom(i, j);
      const double sn = kt.sin_half(j);
      const double cs = kt.cos_half(j);
      const double dfs = kt.df_shifted(i, j);
      a += (-sn * cs + dfs * t * cs * cs + sn * cs + dfs * t * sn * sn) / d;
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(kt.fine_index(i, j))) +=
          (sn * cs - t * t * sn * cs) / d;
    }
    alpha(static_cast<Eigen::Index>(i)) = a;
  });

  // Grid derivative matrix and its fine-grid interpolant, both circulant.
  std::vector<double> unit(kt.n(), 0.0);
  unit[0] = 1.0;
  const GridFunction d_unit = derivative(GridFunction(unit), 1);
  Eigen::MatrixXd d1(n, n);
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index q = 0; q < n; ++q) d1((q + k) % n, k) = d_unit[static_cast<std::size_t>(q)];
  const Eigen::MatrixXd d1_fine = kt.circulant_fine(trig_interpolate(d_unit.values(), kt.p()));

  return c * kt.weight() * (alpha.asDiagonal() * d1 + g * d1_fine);
}

/// DFDD operator: (1/2pi) PV-integral of the f-dependent kernel against w.
inline GridFunction op_A_apply(const GridFunction& f, const GridFunction& w,
                               const PVRule& rule) {
  const KernelTable kt(f, rule);
  return detail::finite_or_throw(
      detail::apply_kernel(kt, w, detail::kernel_a, 1.0 / kTwoPi), "op_A_apply");
}

/// N x N matrix of the DFDD operator for fixed f.
inline Eigen::MatrixXd assemble_op_A(const GridFunction& f, const PVRule& rule) {
  const KernelTable kt(f, rule);
  return detail::assemble_kernel(kt, detail::kernel_a, 1.0 / kTwoPi);
}

/// B operator: (1/2pi) PV-integral of its kernel against w. At f = 0 this is
/// the periodic Hilbert transform.
inline GridFunction op_B_apply(const GridFunction& f, const GridFunction& w,
                               const PVRule& rule) {
  const KernelTable kt(f, rule);
  return detail::finite_or_throw(
      detail::apply_kernel(kt, w, detail::kernel_b, 1.0 / kTwoPi), "op_B_apply");
}

/// Condition estimates above this are reported as degenerate.
inline constexpr double kMaxConditionEstimate = 1e12;

namespace detail {

/// LU solve that refuses systems whose condition estimate exceeds max_cond.
inline Eigen::VectorXd solve_checked(const Eigen::MatrixXd& system,
                                     const Eigen::VectorXd& b, const char* what,
                                     double max_cond = kMaxConditionEstimate) {
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(system);
  const double rcond = lu.rcond();
  const double cond = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (!(cond <= max_cond))
    throw DegeneracyError(std::string(what) + ": linear system is degenerate "
                          "(condition estimate " + std::to_string(cond) + ")", cond);
  return lu.solve(b);
}

inline GridFunction solve_omega_bar(const KernelTable& kt, const GridFunction& f,
                                    const MuskatParamsST& p,
                                    const SpectralOptions& opts) {
  const GridFunction forcing = (2.0 * p.k / p.mu_sum()) *
      derivative(p.sigma * curvature(f, opts) - p.theta * f, 1);
  if (p.a_mu == 0.0) return forcing;

  const auto n = static_cast<Eigen::Index>(f.size());
  Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) +
      p.a_mu * assemble_kernel(kt, kernel_a, 1.0 / kTwoPi);
  if (!system.allFinite())
    throw EvaluationError("solve_omega_bar: non-finite operator entries", 0.0);
  const Eigen::Map<const Eigen::VectorXd> b(forcing.vector().data(), n);
  const Eigen::VectorXd w = solve_checked(system, b, "solve_omega_bar");
  return finite_or_throw(std::vector<double>(w.data(), w.data() + n),
                         "solve_omega_bar");
}

}  // namespace detail

/// Vortex-sheet strength: solves
///   (I + a_mu A(f)) w = 2k/(mu_- + mu_+) d_x(sigma kappa(f) - theta f)
/// with the assembled DFDD matrix. For a_mu = 0 the forcing is returned as is.
inline GridFunction solve_omega_bar(const GridFunction& f,
                                    const MuskatParamsST& p, const PVRule& rule,
                                    const SpectralOptions& opts = {}) {
  p.validate();
  const KernelTable kt(f, rule);
  return detail::solve_omega_bar(kt, f, p, opts);
}

/// Right-hand side of the Muskat problem with surface tension:
/// d_t f = (1/4pi) PV-integral of the B kernel against omega_bar(f).
inline GridFunction pe2_rhs(const GridFunction& f, const MuskatParamsST& p,
                            const PVRule& rule, const SpectralOptions& opts = {}) {
  p.validate();
  const KernelTable kt(f, rule);
  const GridFunction w = detail::solve_omega_bar(kt, f, p, opts);
  return detail::finite_or_throw(
      detail::apply_kernel(kt, w, detail::kernel_b, 1.0 / (4.0 * kPi)), "pe2_rhs");
}

}  // namespace muskat
