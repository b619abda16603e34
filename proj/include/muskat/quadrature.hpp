#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "muskat/errors.hpp"
#include "muskat/torus.hpp"

namespace muskat {

/// Half-offset uniform rule on (-pi, pi): s_j = -pi + (j + 1/2) * 2*pi/M.
/// Nodes come in pairs +-s and never hit s = 0, so odd singular parts of an
/// integrand cancel pairwise and the sum realizes a principal value.
class PVRule {
 public:
  explicit PVRule(std::size_t m_points) : m_(m_points) {
    if (m_ < 2 || m_ % 2 != 0)
      throw ConfigError("quadrature count M must be even and >= 2, got " +
                        std::to_string(m_), {"m"});
  }

  std::size_t size() const { return m_; }
  double weight() const { return kTwoPi / static_cast<double>(m_); }
  /// Nodes in the upper half are the exact negatives of the lower half.
  double node(std::size_t j) const {
    if (j >= m_ / 2) return -node(m_ - 1 - j);
    return -kPi + (static_cast<double>(j) + 0.5) * weight();
  }

 private:
  std::size_t m_;
};

/// (2*pi/M) * sum_j integrand(s_j), summed in +-s pairs so that an odd
/// integrand integrates to exactly zero.
template <typename Integrand>
double pv_integrate(Integrand&& integrand, const PVRule& rule) {
  auto eval = [&](std::size_t j) {
    const double s = rule.node(j);
    const double v = integrand(s);
    if (!std::isfinite(v))
      throw EvaluationError("integrand not finite at s = " + std::to_string(s), s);
    return v;
  };
  const std::size_t m = rule.size();
  double sum = 0.0;
  for (std::size_t j = 0; j < m / 2; ++j) sum += eval(j) + eval(m - 1 - j);
  return sum * rule.weight();
}

}  // namespace muskat
