#include "muskat/dynamics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"

namespace muskat {
namespace {

GridFunction cosine(std::size_t n, double a, int m = 1) {
  return GridFunction::sample(n, [a, m](double x) { return a * std::cos(m * x); });
}

double fitted_rate(const TrajectoryRecord& rec, double r, double ta, double tb) {
  std::vector<double> t, y;
  const auto& series = rec.norms.at(r);
  for (std::size_t i = 0; i < rec.times.size(); ++i)
    if (rec.times[i] >= ta && rec.times[i] <= tb) {
      t.push_back(rec.times[i]);
      y.push_back(std::log(series[i]));
    }
  return -oracle::slope(t, y);
}

GridFunction run(const GridFunction& f0, const EvolutionProblem& prob, Scheme s,
                 double dt, double t_final) {
  IntegrateOptions o;
  o.scheme = s;
  o.dt = dt;
  o.t_final = t_final;
  return integrate(f0, prob, o).final_state();
}

EvolutionProblem linear_problem(double rate) {
  return {
      [rate](const GridFunction& f) {
        return apply_multiplier(f, [rate](int m) { return -rate * std::abs(m); });
      },
      [rate](int m) { return -rate * std::abs(m); },
  };
}

TEST(Integrate, ZeroDataStaysZero) {
  const PVRule rule(32);
  const auto z = GridFunction::zeros(32);
  for (Scheme s : {Scheme::kExplicitRk4, Scheme::kImexLinearlyImplicit}) {
    EXPECT_EQ(run(z, pe1_problem({}, rule), s, 0.05, 1.0).max_abs(), 0.0);
    EXPECT_EQ(run(z, pe2_problem(MuskatParamsST::make(1, 1.5, 0.5, 1, 1), rule), s, 0.01, 0.1)
                  .max_abs(), 0.0);
  }
}

TEST(Integrate, RecordLayout) {
  const PVRule rule(32);
  IntegrateOptions o;
  o.dt = 0.1;
  o.t_final = 1.05;
  o.output_every = 3;
  o.norm_exponents = {0.0, 1.75};
  const auto rec = integrate(cosine(32, 0.01), pe1_problem({}, rule), o);
  ASSERT_EQ(rec.times.size(), 5u);  // 0, 0.3, 0.6, 0.9, 1.05
  EXPECT_EQ(rec.times.front(), 0.0);
  EXPECT_DOUBLE_EQ(rec.final_time(), 1.05);
  for (std::size_t i = 1; i < rec.times.size(); ++i) EXPECT_GT(rec.times[i], rec.times[i - 1]);
  for (std::size_t i = 0; i < rec.times.size(); ++i)
    EXPECT_NEAR(rec.norms.at(1.75)[i], sobolev_norm(rec.states[i], 1.75), 1e-12);
}

TEST(Integrate, InvalidOptionsAreConfigErrors) {
  const PVRule rule(16);
  IntegrateOptions o;
  o.dt = 0.0;
  try {
    integrate(cosine(16, 0.1), pe1_problem({}, rule), o);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.fields(), std::vector<std::string>{"dt"});
  }
}

TEST(Integrate, BlowUpReportsLastValidTime) {
  EvolutionProblem riccati{
      [](const GridFunction& f) {
        std::vector<double> v(f.vector());
        for (double& x : v) x = x * x;
        return GridFunction(std::move(v));
      },
      [](int) { return 0.0; },
  };
  IntegrateOptions o;
  o.dt = 1e-2;
  o.t_final = 3.0;
  try {
    integrate(GridFunction::constant(16, 1.0), riccati, o);
    FAIL();
  } catch (const IntegrationAborted& e) {
    EXPECT_GT(e.last_valid_time(), 0.9);
    EXPECT_LT(e.last_valid_time(), 1.1);
  }
}

TEST(Integrate, Pe1DecayRateMatchesSlowestMode) {
  const PVRule rule(64);
  IntegrateOptions o;
  o.dt = 1e-2;
  o.t_final = 4.0;
  o.norm_exponents = {1.75};
  const auto rec = integrate(cosine(64, 0.01), pe1_problem({}, rule), o);
  EXPECT_NEAR(fitted_rate(rec, 1.75, 0.0, 4.0), 1.0, 0.02);
}

TEST(Integrate, Pe2UnstableGrowthRate) {
  const PVRule rule(64);
  const auto p = MuskatParamsST::make(1, 1, 1, 1, -2);
  IntegrateOptions o;
  o.scheme = Scheme::kImexLinearlyImplicit;
  o.dt = 1e-2;
  o.t_final = 20.0;
  o.norm_exponents = {2.5};
  o.stop_when = [](double, const GridFunction& f) { return f.max_abs() > 1e-2; };
  const auto rec = integrate(cosine(64, 1e-4), pe2_problem(p, rule), o);
  EXPECT_TRUE(rec.stopped_early);
  const double growth = -fitted_rate(rec, 2.5, 0.0, rec.final_time());
  EXPECT_GE(growth, 0.45);
  EXPECT_LE(growth, 0.55);
}

TEST(Integrate, MeanIsConserved) {
  const PVRule rule(32);
  const auto f0 = GridFunction::sample(32, [](double x) {
    return 0.3 + 0.05 * std::cos(x) + 0.03 * std::sin(2 * x);
  });
  const auto a = run(f0, pe1_problem({}, rule), Scheme::kExplicitRk4, 1e-2, 1.0);
  EXPECT_LE(std::abs(a.mean() - f0.mean()), 1e-8);
  const auto p = MuskatParamsST::make(1, 1.5, 0.5, 1, 1);
  const auto b = run(f0, pe2_problem(p, rule), Scheme::kImexLinearlyImplicit, 1e-2, 1.0);
  EXPECT_LE(std::abs(b.mean() - f0.mean()), 1e-8);
}

TEST(Integrate, LipschitzDependenceOnData) {
  const PVRule rule(32);
  const auto prob = pe1_problem({}, rule);
  const auto f0 = GridFunction::sample(32, [](double x) {
    return 0.05 * std::cos(x) + 0.02 * std::sin(3 * x);
  });
  const auto base = run(f0, prob, Scheme::kExplicitRk4, 1e-2, 1.0);
  std::vector<double> ratios;
  for (double delta : {1e-3, 5e-4, 2.5e-4}) {
    const auto g = run(f0 + cosine(32, delta), prob, Scheme::kExplicitRk4, 1e-2, 1.0);
    ratios.push_back(sobolev_norm(g - base, 1.75) / delta);
  }
  EXPECT_NEAR(ratios[1] / ratios[0], 1.0, 0.02);
  EXPECT_NEAR(ratios[2] / ratios[1], 1.0, 0.02);
}

TEST(Integrate, DecayIsEventuallyMonotone) {
  const PVRule rule(32);
  IntegrateOptions o;
  o.dt = 2e-2;
  o.t_final = 2.0;
  o.norm_exponents = {1.75};
  const auto rec = integrate(cosine(32, 0.01), pe1_problem({}, rule), o);
  const auto& s = rec.norms.at(1.75);
  for (std::size_t i = 10; i < s.size(); ++i) EXPECT_LT(s[i], s[i - 1]);
}

double observed_order(const GridFunction& f0, const EvolutionProblem& prob, Scheme s,
                      double dt, double t_final) {
  const auto u1 = run(f0, prob, s, dt, t_final);
  const auto u2 = run(f0, prob, s, dt / 2, t_final);
  const auto u4 = run(f0, prob, s, dt / 4, t_final);
  return std::log2(sobolev_norm(u1 - u2, 0.0) / sobolev_norm(u2 - u4, 0.0));
}

TEST(Integrate, Rk4ObservedOrder) {
  const PVRule rule(32);
  const auto f0 = GridFunction::sample(32, [](double x) {
    return 0.2 * std::cos(x) + 0.1 * std::sin(2 * x);
  });
  EXPECT_NEAR(observed_order(f0, pe1_problem({}, rule), Scheme::kExplicitRk4, 0.04, 0.8),
              4.0, 0.3);
}

TEST(Integrate, ImexObservedOrder) {
  const PVRule rule(32);
  const auto f0 = GridFunction::sample(32, [](double x) {
    return 0.2 * std::cos(x) + 0.1 * std::sin(2 * x);
  });
  EXPECT_NEAR(observed_order(f0, pe1_problem({}, rule), Scheme::kImexLinearlyImplicit, 0.04, 0.8),
              3.0, 0.3);
}

TEST(Integrate, ImexTableauOrderConditions) {
  using T = detail::Ars343;
  // both tableaus share the abscissae c = (0, g, c3, 1)
  const double c[4] = {0.0, T::g, T::c3, 1.0};
  const double b[4] = {0.0, T::b1, T::b2, T::g};
  const double ae[4][4] = {{0, 0, 0, 0},
                           {T::g, 0, 0, 0},
                           {T::a31, T::a32, 0, 0},
                           {T::a41, T::a42, T::a43, 0}};
  const double ai[4][4] = {{0, 0, 0, 0},
                           {0, T::g, 0, 0},
                           {0, T::ai32, T::g, 0},
                           {0, T::b1, T::b2, T::g}};
  for (int i = 0; i < 4; ++i) {
    double se = 0, si = 0;
    for (int j = 0; j < 4; ++j) {
      se += ae[i][j];
      si += ai[i][j];
    }
    EXPECT_NEAR(se, c[i], 1e-15);
    EXPECT_NEAR(si, c[i], 1e-15);
  }
  double s0 = 0, s1 = 0, s2 = 0, se = 0, si = 0;
  for (int i = 0; i < 4; ++i) {
    s0 += b[i];
    s1 += b[i] * c[i];
    s2 += b[i] * c[i] * c[i];
    for (int j = 0; j < 4; ++j) {
      se += b[i] * ae[i][j] * c[j];
      si += b[i] * ai[i][j] * c[j];
    }
  }
  EXPECT_NEAR(s0, 1.0, 1e-15);
  EXPECT_NEAR(s1, 0.5, 1e-15);
  EXPECT_NEAR(s2, 1.0 / 3.0, 1e-10);
  // with shared abscissae the coupling conditions reduce to these two
  EXPECT_NEAR(se, 1.0 / 6.0, 1e-10);
  EXPECT_NEAR(si, 1.0 / 6.0, 1e-10);
}

TEST(Propagate, ScalarSemigroup) {
  const double a = 1.3, t_final = 1.0;
  PropagatorPath path{{0.0, t_final}, {a * Eigen::MatrixXd::Identity(3, 3), a * Eigen::MatrixXd::Identity(3, 3)}};
  const Eigen::VectorXd v0 = Eigen::Vector3d(1.0, -2.0, 0.5);
  const Eigen::VectorXd v = propagate(path, {}, v0);
  EXPECT_LT((v - std::exp(-a * t_final) * v0).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Propagate, ConstantForcingMatchesMatrixExponential) {
  Eigen::MatrixXd a(3, 3);
  a << 2.0, 0.5, 0.0, -0.3, 1.0, 0.2, 0.1, 0.0, 3.0;
  const Eigen::VectorXd v0 = Eigen::Vector3d(0.4, -1.0, 2.0);
  const Eigen::VectorXd g = Eigen::Vector3d(1.0, 0.5, -0.25);
  const double t_final = 1.5;
  PropagatorPath path{{0.0, 0.5, 1.5}, {a, a, a}, Interpolation::kPiecewiseConstant};
  const Eigen::VectorXd v = propagate(path, {g, g, g}, v0);
  const Eigen::MatrixXd e = oracle::expm_neg(a, t_final);
  const Eigen::VectorXd exact =
      e * v0 + a.fullPivLu().solve((Eigen::MatrixXd::Identity(3, 3) - e) * g);
  EXPECT_LT((v - exact).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Propagate, TwoSegmentComposition) {
  Eigen::MatrixXd a1(2, 2), a2(2, 2);
  a1 << 1.0, 0.3, -0.3, 2.0;
  a2 << 0.5, -1.0, 1.0, 0.5;
  const Eigen::VectorXd v0 = Eigen::Vector2d(1.0, 1.0);
  PropagatorPath path{{0.0, 0.4, 1.0}, {a1, a2, a2}, Interpolation::kPiecewiseConstant};
  const Eigen::VectorXd v = propagate(path, {}, v0);
  const Eigen::VectorXd exact = oracle::expm_neg(a2, 0.6) * (oracle::expm_neg(a1, 0.4) * v0);
  EXPECT_LT((v - exact).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Propagate, LinearInterpolationInTime) {
  // A(t) = (1 + t) on [0, 1]: v(1) = exp(-3/2) v0
  PropagatorPath path{{0.0, 1.0}, {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 2.0)}};
  const Eigen::VectorXd v = propagate(path, {}, Eigen::VectorXd::Ones(1));
  EXPECT_NEAR(v(0), std::exp(-1.5), 1e-11);
}

TEST(Propagate, MalformedPathIsConfigError) {
  const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(propagate(PropagatorPath{{0.0}, {a}}, {}, Eigen::Vector2d(1, 1)), ConfigError);
  EXPECT_THROW(propagate(PropagatorPath{{0.0, 1.0, 0.5}, {a, a, a}}, {}, Eigen::Vector2d(1, 1)),
               ConfigError);
  EXPECT_THROW(propagate(PropagatorPath{{0.0, 1.0}, {a, a}}, {}, Eigen::Vector3d(1, 1, 1)),
               ConfigError);
}

TEST(Propagate, SingularStageSystemReportsSubinterval) {
  // lambda h = -3 +- i sqrt(3) zeroes the Gauss-Legendre stage determinant
  Eigen::MatrixXd a(2, 2);
  a << -3.0, -std::sqrt(3.0), std::sqrt(3.0), -3.0;
  PropagateOptions o;
  o.max_substep = 1.0;
  try {
    propagate(PropagatorPath{{0.0, 1.0, 2.0}, {a, a, a}, Interpolation::kPiecewiseConstant},
              {}, Eigen::Vector2d(1, 0), o);
    FAIL();
  } catch (const TimeStepError& e) {
    EXPECT_EQ(e.t0(), 0.0);
    EXPECT_EQ(e.t1(), 1.0);
  }
}

TEST(Picard, StateIndependentOperatorConvergesInOneStep) {
  Eigen::MatrixXd a(2, 2);
  a << 1.0, 0.2, 0.0, 0.5;
  const Eigen::VectorXd v0 = Eigen::Vector2d(1.0, -1.0);
  PicardOptions o;
  o.t_final = 1.0;
  o.intervals = 10;
  const auto res = picard_lambda([&](const Eigen::VectorXd&) { return a; },
                                 [](const Eigen::VectorXd& v) { return Eigen::VectorXd::Zero(v.size()); },
                                 v0, o);
  EXPECT_TRUE(res.report.converged);
  EXPECT_EQ(res.report.iterations, 1u);
  PropagatorPath path;
  path.nodes = res.path.times;
  path.operators.assign(path.nodes.size(), a);
  EXPECT_EQ((res.path.states.back() - propagate(path, {}, v0)).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Picard, ScalarModelMatchesExactSolution) {
  PicardOptions o;
  o.t_final = 0.5;
  o.intervals = 1000;  // A is interpolated linearly in t: node error ~ dtau^2
  o.tol = 1e-12;
  o.propagate.max_substep = 5e-4;
  const auto res = picard_lambda(
      [](const Eigen::VectorXd& v) { return Eigen::MatrixXd::Constant(1, 1, 1.0 + v(0) * v(0)); },
      [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); },
      Eigen::VectorXd::Ones(1), o);
  for (std::size_t j = 0; j < res.path.times.size(); ++j)
    EXPECT_NEAR(res.path.states[j](0), oracle::scalar_model(1.0, res.path.times[j]), 1e-7);
  for (const auto& q : res.report.empirical_contraction) {
    ASSERT_TRUE(q.has_value());
    EXPECT_LT(*q, 1.0);
  }
}

TEST(Picard, NonConvergenceCarriesDefects) {
  PicardOptions o;
  o.t_final = 2.0;
  o.intervals = 20;
  o.max_iter = 3;
  o.tol = 1e-14;
  try {
    picard_lambda(
        [](const Eigen::VectorXd& v) { return Eigen::MatrixXd::Constant(1, 1, 1.0 + v(0) * v(0)); },
        [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(1); },
        Eigen::VectorXd::Ones(1), o);
    FAIL();
  } catch (const NonConvergenceError& e) {
    EXPECT_EQ(e.defects().size(), 3u);
  }
}

TEST(Picard, Pe1GalerkinAgreesWithDirectIntegration) {
  const std::size_t n = 64;
  const PVRule rule(n);
  const MuskatParamsNoST p;
  const auto f0 = cosine(n, 0.05);
  const Eigen::VectorXd v0 = Eigen::Map<const Eigen::VectorXd>(f0.values().data(), n);
  auto zero = [](const Eigen::VectorXd& v) { return Eigen::VectorXd::Zero(v.size()); };

  std::vector<double> first_factor;
  for (double t_final : {0.5, 0.25}) {
    PicardOptions o;
    o.t_final = t_final;
    o.intervals = static_cast<std::size_t>(std::lround(t_final / 0.01));
    o.tol = 1e-10;
    const auto res = picard_lambda(pe1_quasilinear_operator(p, rule), zero, v0, o);
    ASSERT_GE(res.report.empirical_contraction.size(), 1u);
    first_factor.push_back(*res.report.empirical_contraction.front());

    const auto direct = run(f0, pe1_problem(p, rule), Scheme::kExplicitRk4, 1e-3, t_final);
    double err = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      err = std::max(err, std::abs(res.path.states.back()(static_cast<Eigen::Index>(j)) - direct[j]));
    EXPECT_LT(err, 1e-5) << t_final;
  }
  EXPECT_LT(first_factor[1], first_factor[0]);
}

TEST(Semiflow, LinearProblemIsExactSemigroup) {
  const auto f0 = GridFunction::sample(32, [](double x) { return std::cos(x) + 0.5 * std::sin(4 * x); });
  for (Scheme s : {Scheme::kExplicitRk4, Scheme::kImexLinearlyImplicit})
    EXPECT_LT(semiflow_defect(f0, 0.3, 0.45, linear_problem(1.0), s, 0.01, 1.75), 1e-10);
}

TEST(Semiflow, ZeroShiftIsExactlyZero) {
  const PVRule rule(32);
  EXPECT_EQ(semiflow_defect(cosine(32, 0.05), 0.0, 0.3, pe1_problem({}, rule),
                            Scheme::kExplicitRk4, 0.01, 1.75), 0.0);
}

TEST(Semiflow, Pe1DefectBelowStepHalvingEstimate) {
  const PVRule rule(32);
  const auto prob = pe1_problem({}, rule);
  const auto f0 = cosine(32, 0.05);
  const double defect = semiflow_defect(f0, 0.5, 0.5, prob, Scheme::kExplicitRk4, 1e-3, 1.75);
  const double estimate = sobolev_norm(
      run(f0, prob, Scheme::kExplicitRk4, 1e-3, 1.0) - run(f0, prob, Scheme::kExplicitRk4, 5e-4, 1.0),
      1.75);
  EXPECT_LE(defect, 10.0 * estimate);
  EXPECT_THROW(semiflow_defect(f0, -0.1, 0.5, prob, Scheme::kExplicitRk4, 1e-3, 1.75), ConfigError);
}

}  // namespace
}  // namespace muskat
