#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "muskat/errors.hpp"

namespace muskat {

/// Constants of the equal-viscosity problem without surface tension.
struct MuskatParamsNoST {
  double k = 1.0;          ///< permeability
  double mu = 1.0;         ///< viscosity
  double delta_rho = 2.0;  ///< g (rho_- - rho_+); positive is Rayleigh-Taylor stable

  void validate() const {
    std::vector<std::string> bad;
    if (!(k > 0.0)) bad.push_back("k");
    if (!(mu > 0.0)) bad.push_back("mu");
    if (!std::isfinite(delta_rho)) bad.push_back("delta_rho");
    if (!bad.empty()) throw ConfigError("invalid parameters: need k > 0, mu > 0, finite delta_rho", bad);
  }

  /// k * delta_rho / (2 mu): decay rate of the first Fourier mode.
  double rate_scale() const { return k * delta_rho / (2.0 * mu); }
};

/// Constants of the problem with surface tension and possibly distinct
/// viscosities.
struct MuskatParamsST {
  double k = 1.0;
  double mu_minus = 1.0;
  double mu_plus = 1.0;
  double sigma = 1.0;  ///< surface tension coefficient
  double theta = 1.0;  ///< g (rho_- - rho_+) + (mu_- - mu_+) V / k
  double a_mu = 0.0;   ///< (mu_- - mu_+) / (mu_- + mu_+)

  static MuskatParamsST make(double k, double mu_minus, double mu_plus,
                             double sigma, double theta) {
    MuskatParamsST p{k, mu_minus, mu_plus, sigma, theta,
                     (mu_minus - mu_plus) / (mu_minus + mu_plus)};
    p.validate();
    return p;
  }

  double mu_sum() const { return mu_minus + mu_plus; }

  void validate() const {
    std::vector<std::string> bad;
    if (!(k > 0.0)) bad.push_back("k");
    if (!(mu_minus >= 0.0)) bad.push_back("mu_minus");
    if (!(mu_plus >= 0.0)) bad.push_back("mu_plus");
    if (!(mu_minus + mu_plus > 0.0)) bad.push_back("mu_minus+mu_plus");
    if (!(sigma > 0.0)) bad.push_back("sigma");
    if (!std::isfinite(theta)) bad.push_back("theta");
    if (!(a_mu > -1.0 && a_mu < 1.0)) bad.push_back("a_mu");
    if (mu_minus + mu_plus > 0.0 &&
        std::abs(a_mu - (mu_minus - mu_plus) / (mu_minus + mu_plus)) > 1e-14)
      bad.push_back("a_mu");
    if (!bad.empty()) throw ConfigError("invalid surface-tension parameters", bad);
  }
};

}  // namespace muskat
