#pragma once

// Periodic spectral calculus on the circle of length 2*pi.
//
// Fourier convention: for a grid function f_j = f(2*pi*j/N),
//   c_m = (1/N) sum_j f_j exp(-i m x_j),   f_j = sum_m c_m exp(i m x_j),
// with wavenumbers m in {-N/2+1, ..., N/2}. Hence cos(m x) has c_{+-m} = 1/2,
// and Parseval reads (1/N) sum_j f_j^2 = sum_m |c_m|^2.
//
// The Nyquist coefficient c_{N/2} represents c * cos(N x / 2). It is split
// evenly between +N/2 and -N/2 when a field is interpolated to a finer grid,
// and it is zeroed by odd-order derivatives and by the Hilbert transform.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "muskat/errors.hpp"
#include "muskat/fft.hpp"

namespace muskat {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

constexpr bool is_power_of_two(std::size_t n) {
  return n > 0 && (n & (n - 1)) == 0;
}

/// Real 2*pi-periodic field sampled at x_j = 2*pi*j/N.
class GridFunction {
 public:
  static constexpr std::size_t kMinSize = 16;

  explicit GridFunction(std::vector<double> values) : values_(std::move(values)) {
    validate();
  }

  static GridFunction zeros(std::size_t n) {
    return GridFunction(std::vector<double>(n, 0.0));
  }

  static GridFunction constant(std::size_t n, double c) {
    return GridFunction(std::vector<double>(n, c));
  }

  /// Samples fn(x) at the grid nodes.
  template <typename Fn>
  static GridFunction sample(std::size_t n, Fn&& fn) {
    std::vector<double> v(n);
    for (std::size_t j = 0; j < n; ++j) v[j] = fn(node(n, j));
    return GridFunction(std::move(v));
  }

  static double node(std::size_t n, std::size_t j) {
    return kTwoPi * static_cast<double>(j) / static_cast<double>(n);
  }

  std::size_t size() const { return values_.size(); }
  double x(std::size_t j) const { return node(size(), j); }
  double operator[](std::size_t j) const { return values_[j]; }
  std::span<const double> values() const { return values_; }
  const std::vector<double>& vector() const { return values_; }

  double mean() const {
    double s = 0.0;
    for (double v : values_) s += v;
    return s / static_cast<double>(size());
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  GridFunction& operator+=(const GridFunction& o) {
    check_same(o);
    for (std::size_t j = 0; j < size(); ++j) values_[j] += o.values_[j];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    check_same(o);
    for (std::size_t j = 0; j < size(); ++j) values_[j] -= o.values_[j];
    return *this;
  }
  GridFunction& operator*=(double a) {
    for (double& v : values_) v *= a;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator*(GridFunction a, double s) { return a *= s; }
  friend GridFunction operator-(GridFunction a) { return a *= -1.0; }

  /// Returns a + s*b.
  friend GridFunction axpy(const GridFunction& a, double s, const GridFunction& b) {
    a.check_same(b);
    std::vector<double> v(a.values_);
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += s * b.values_[j];
    return GridFunction(std::move(v));
  }

  /// Sup-norm distance.
  friend double max_distance(const GridFunction& a, const GridFunction& b) {
    a.check_same(b);
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
      m = std::max(m, std::abs(a.values_[j] - b.values_[j]));
    return m;
  }

 private:
  void validate() const {
    const std::size_t n = values_.size();
    if (n < kMinSize || !is_power_of_two(n))
      throw ConfigError("grid size must be a power of two >= 16, got " +
                        std::to_string(n), {"n"});
    for (std::size_t j = 0; j < n; ++j)
      if (!std::isfinite(values_[j]))
        throw ConfigError("grid value at index " + std::to_string(j) +
                          " is not finite", {"values"});
  }

  void check_same(const GridFunction& o) const {
    if (o.size() != size())
      throw ConfigError("grid size mismatch: " + std::to_string(size()) +
                        " vs " + std::to_string(o.size()), {"n"});
  }

  std::vector<double> values_;
};

/// Complex spectral representation in FFT order (index k holds wavenumber
/// k for k <= N/2 and k - N otherwise).
class FourierCoeffs {
 public:
  FourierCoeffs(std::size_t n, std::vector<std::complex<double>> data)
      : n_(n), data_(std::move(data)) {
    if (data_.size() != n_)
      throw ConfigError("coefficient vector length " +
                        std::to_string(data_.size()) + " does not match n = " +
                        std::to_string(n_), {"n"});
  }

  std::size_t size() const { return n_; }

  /// Wavenumber stored at FFT index k.
  int wavenumber(std::size_t k) const {
    const long kk = static_cast<long>(k);
    const long n = static_cast<long>(n_);
    return static_cast<int>(kk <= n / 2 ? kk : kk - n);
  }

  std::size_t index(int m) const {
    const long n = static_cast<long>(n_);
    return static_cast<std::size_t>(((m % n) + n) % n);
  }

  std::complex<double> coeff(int m) const { return data_[index(m)]; }
  std::complex<double>& coeff(int m) { return data_[index(m)]; }

  std::span<const std::complex<double>> data() const { return data_; }
  std::span<std::complex<double>> data() { return data_; }

 private:
  std::size_t n_;
  std::vector<std::complex<double>> data_;
};

inline FourierCoeffs to_coeffs(const GridFunction& f) {
  const std::size_t n = f.size();
  std::vector<std::complex<double>> in(f.values().begin(), f.values().end());
  auto out = fft::forward(in);
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& c : out) c *= scale;
  return FourierCoeffs(n, std::move(out));
}

/// Inverse of to_coeffs. The imaginary part of the synthesis (nonzero only
/// when Hermitian symmetry is violated) is discarded.
inline GridFunction to_grid(const FourierCoeffs& c) {
  auto out = fft::backward(c.data());
  std::vector<double> v(out.size());
  for (std::size_t j = 0; j < v.size(); ++j) v[j] = out[j].real();
  return GridFunction(std::move(v));
}

/// Applies a Fourier multiplier symbol(m) to f.
template <typename Symbol>
GridFunction apply_multiplier(const GridFunction& f, Symbol&& symbol) {
  FourierCoeffs c = to_coeffs(f);
  for (std::size_t k = 0; k < c.size(); ++k) {
    c.data()[k] *= symbol(c.wavenumber(k));
  }
  return to_grid(c);
}

/// Spectral derivative of order 1, 2 or 3.
inline GridFunction derivative(const GridFunction& f, int order) {
  if (order < 1 || order > 3)
    throw ConfigError("derivative order must be 1, 2 or 3, got " +
                      std::to_string(order), {"order"});
  const int nyquist = static_cast<int>(f.size() / 2);
  return apply_multiplier(f, [&](int m) -> std::complex<double> {
    if (m == nyquist && order % 2 == 1) return 0.0;
    return std::pow(std::complex<double>(0.0, m), order);
  });
}

/// Periodic Hilbert transform, multiplier -i*sgn(m). Mean and Nyquist map to 0.
inline GridFunction hilbert(const GridFunction& f) {
  const int nyquist = static_cast<int>(f.size() / 2);
  return apply_multiplier(f, [&](int m) -> std::complex<double> {
    if (m == 0 || m == nyquist) return 0.0;
    return std::complex<double>(0.0, m > 0 ? -1.0 : 1.0);
  });
}

/// (sum_m (1+m^2)^r |c_m|^2)^(1/2). With this normalization
/// ||cos(m.)||_{H^0} = 1/sqrt(2), matching the mean-square L2 norm.
inline double sobolev_norm(const GridFunction& f, double r) {
  if (r < 0.0) throw ConfigError("Sobolev exponent must be >= 0", {"r"});
  const FourierCoeffs c = to_coeffs(f);
  double sum = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) {
    const double m = c.wavenumber(k);
    sum += std::pow(1.0 + m * m, r) * std::norm(c.data()[k]);
  }
  return std::sqrt(sum);
}

inline GridFunction zero_mean_project(const GridFunction& f) {
  const double mu = f.mean();
  std::vector<double> v(f.vector());
  for (double& x : v) x -= mu;
  return GridFunction(std::move(v));
}

/// Trigonometric interpolation of periodic samples onto a uniform grid of
/// p >= values.size() points.
inline std::vector<double> trig_interpolate(std::span<const double> values,
                                            std::size_t p) {
  const std::size_t n = values.size();
  if (p < n) throw ConfigError("interpolation target smaller than source", {"p"});
  std::vector<std::complex<double>> in(values.begin(), values.end());
  auto c = fft::forward(in);
  const double scale = 1.0 / static_cast<double>(n);
  std::vector<std::complex<double>> fine(p, 0.0);
  const std::size_t half = n / 2;
  fine[0] = c[0] * scale;
  for (std::size_t m = 1; m < half; ++m) {
    fine[m] = c[m] * scale;
    fine[p - m] = c[n - m] * scale;
  }
  if (p == n) {
    fine[half] = c[half] * scale;
  } else {
    fine[half] += 0.5 * c[half] * scale;
    fine[p - half] += 0.5 * c[half] * scale;
  }
  auto out = fft::backward(fine);
  std::vector<double> v(p);
  for (std::size_t j = 0; j < p; ++j) v[j] = out[j].real();
  return v;
}

/// Inverse of trig_interpolate: band-limits samples on a fine grid of size
/// q back to n points by spectral truncation.
inline std::vector<double> spectral_truncate(std::span<const double> fine_values,
                                             std::size_t n) {
  const std::size_t q = fine_values.size();
  std::vector<std::complex<double>> in(fine_values.begin(), fine_values.end());
  auto c = fft::forward(in);
  const double scale = 1.0 / static_cast<double>(q);
  std::vector<std::complex<double>> coarse(n, 0.0);
  const std::size_t half = n / 2;
  coarse[0] = c[0] * scale;
  for (std::size_t m = 1; m < half; ++m) {
    coarse[m] = c[m] * scale;
    coarse[n - m] = c[q - m] * scale;
  }
  coarse[half] = (q == n) ? c[half] * scale : (c[half] + c[q - half]) * scale;
  auto out = fft::backward(coarse);
  std::vector<double> v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = out[j].real();
  return v;
}

/// Toggles for pointwise nonlinear products.
struct SpectralOptions {
  /// Evaluate products on a 3/2-padded grid and truncate back.
  bool dealias = true;
};

/// Curvature f'' (1 + f'^2)^(-3/2) of the graph of f.
inline GridFunction curvature(const GridFunction& f,
                              const SpectralOptions& opts = {}) {
  const GridFunction d1 = derivative(f, 1);
  const GridFunction d2 = derivative(f, 2);
  auto kappa = [](double a, double b) {
    return b * std::pow(1.0 + a * a, -1.5);
  };
  if (!opts.dealias) {
    std::vector<double> v(f.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = kappa(d1[j], d2[j]);
    return GridFunction(std::move(v));
  }
  const std::size_t q = 3 * f.size() / 2;
  const auto a = trig_interpolate(d1.values(), q);
  const auto b = trig_interpolate(d2.values(), q);
  std::vector<double> prod(q);
  for (std::size_t j = 0; j < q; ++j) prod[j] = kappa(a[j], b[j]);
  return GridFunction(spectral_truncate(prod, f.size()));
}

/// Cyclic shift by whole grid steps: result(x_j) = f(x_{j - steps}).
inline GridFunction shift(const GridFunction& f, long steps) {
  const long n = static_cast<long>(f.size());
  std::vector<double> v(f.size());
  for (long j = 0; j < n; ++j) v[j] = f[static_cast<std::size_t>(((j - steps) % n + n) % n)];
  return GridFunction(std::move(v));
}

enum class Problem { kNoSurfaceTension, kSurfaceTension };

/// Sobolev exponent paired with the problem whose phase space it indexes.
class SobolevScale {
 public:
  SobolevScale(double r, Problem problem) : r_(r), problem_(problem) {
    const auto [lo, hi] = valid_range(problem);
    if (!(r > lo && r < hi))
      throw ConfigError("Sobolev exponent " + std::to_string(r) +
                        " outside the open interval (" + std::to_string(lo) +
                        ", " + std::to_string(hi) + ")", {"r"});
  }

  static std::pair<double, double> valid_range(Problem problem) {
    return problem == Problem::kNoSurfaceTension ? std::pair{1.5, 2.0}
                                                 : std::pair{2.0, 3.0};
  }

  double r() const { return r_; }
  Problem problem() const { return problem_; }

 private:
  double r_;
  Problem problem_;
};

}  // namespace muskat
