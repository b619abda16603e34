// Spectral bound and verdict of the surface-tension flow at the flat
// interface as theta crosses -sigma.

#include <cstdio>

#include "muskat/kernels.hpp"
#include "muskat/stability.hpp"

int main() {
  using namespace muskat;
  const std::size_t n = 64;
  const PVRule rule(n);
  std::printf("theta,spectral_bound,analytic_m1,verdict\n");
  for (double theta = -1.5; theta <= -0.45; theta += 0.25) {
    const auto p = MuskatParamsST::make(1.0, 1.2, 0.8, 1.0, theta);
    const auto rhs = [&](const GridFunction& f) { return pe2_rhs(f, p, rule); };
    const SpectrumReport rep = eigen_spectrum(jacobian(rhs, GridFunction::zeros(n)));
    std::printf("%.2f,%.12f,%.12f,%s\n", theta, rep.spectral_bound,
                analytic_spectrum_pe2(p, 1).front(), to_string(rep.verdict));
  }
}
