#include "cvpol/stokes.hpp"
#include "cvpol/validation.hpp"
#include "support/fock_oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cvpol;

namespace {

PolarizedBeam make_beam(GaussianState s, double theta, std::size_t h = 0, std::size_t v = 1) {
  return PolarizedBeam(std::make_shared<const GaussianState>(std::move(s)), h, v, theta);
}

PolarizedBeam coherent_beam(double ah, double av, double theta) {
  GaussianState s = displace(vacuum_state(2), 0, 2.0 * ah, 0.0);
  s = displace(s, 1, 2.0 * av, 0.0);
  return make_beam(std::move(s), theta);
}

// Product of single-mode squeezed coherent states, built both ways.
struct ProductBeam {
  double ah, av, vh, psi_h, vv, psi_v, theta;

  PolarizedBeam gaussian() const {
    GaussianState s = squeeze(vacuum_state(2), 0, vh, psi_h);
    s = squeeze(s, 1, vv, psi_v);
    s = displace(s, 0, 2.0 * ah, 0.0);
    s = displace(s, 1, 2.0 * av, 0.0);
    return make_beam(std::move(s), theta);
  }
  fock::TwoMode oracle(int cutoff) const {
    return fock::TwoMode(fock::single_mode(cutoff, ah, vh, psi_h), fock::single_mode(cutoff, av, vv, psi_v));
  }
};

}  // namespace

TEST(StokesMeans, CoherentSubstitution) {
  const auto m = stokes_means(coherent_beam(1.0, 2.0, kPi / 2.0));
  EXPECT_NEAR(m[0], 5.0, 1e-14);
  EXPECT_NEAR(m[1], -3.0, 1e-14);
  EXPECT_NEAR(m[2], 0.0, 1e-14);
  EXPECT_NEAR(m[3], 4.0, 1e-14);
}

TEST(StokesMeans, EqualAmplitudesThetaZero) {
  const auto m = stokes_means(coherent_beam(1.5, 1.5, 0.0));
  EXPECT_NEAR(m[2], 2.0 * 2.25, 1e-14);
  EXPECT_NEAR(m[3], 0.0, 1e-14);
}

TEST(StokesMeans, VacuumExactIsZero) {
  const auto m = stokes_means(make_beam(vacuum_state(2), 0.3), StokesOrder::exact);
  for (double x : m) EXPECT_NEAR(x, 0.0, 1e-15);
}

TEST(StokesMeans, ExactAddsPhotonNumberCorrection) {
  // <a^dag a> = alpha^2 + (V+ + V- - 2) / 4
  const PolarizedBeam b = ProductBeam{1.0, 0.0, 0.25, 0.0, 1.0, 0.0, 0.0}.gaussian();
  const auto m = stokes_means(b, StokesOrder::exact);
  EXPECT_NEAR(m[0], 1.0 + (0.25 + 4.0 - 2.0) / 4.0, 1e-13);
}

TEST(StokesMeans, ConventionViolationThrows) {
  GaussianState s = displace(vacuum_state(2), 0, 2.0, 0.0);
  s = displace(s, 1, 0.0, 2.0);
  EXPECT_THROW(stokes_means(make_beam(s, 0.0)), std::invalid_argument);
}

TEST(StokesMeans, CommonGlobalPhaseAccepted) {
  GaussianState s = displace(vacuum_state(2), 0, 0.0, 2.0);
  s = displace(s, 1, 0.0, 4.0);
  const auto m = stokes_means(make_beam(s, kPi / 2.0));
  EXPECT_NEAR(m[3], 4.0, 1e-12);
}

TEST(StokesLinCov, CoherentPhotonDifference) {
  const Eigen::Matrix4d c = stokes_lin_cov(coherent_beam(1.0, 2.0, kPi / 2.0));
  EXPECT_NEAR(c(1, 1), 5.0, 1e-13);
  EXPECT_NEAR(c(0, 0), 5.0, 1e-13);
  EXPECT_NEAR(c(2, 2), 5.0, 1e-13);
  EXPECT_NEAR(c(3, 3), 5.0, 1e-13);
}

TEST(StokesLinCov, VacuumIsZeroAndFlagged) {
  const PolarizedBeam b = make_beam(vacuum_state(2), 0.0);
  EXPECT_TRUE(stokes_lin_cov(b).isZero());
  EXPECT_TRUE(stokes_stats(b).degenerate);
}

TEST(StokesLinCov, BrightLimitMapsHQuadratures) {
  // theta = pi/2, alpha_V >> alpha_H
  const double ah2 = 1.0;
  const double av2 = 1e4;
  const ProductBeam p{1.0, 100.0, 0.3, 0.0, 0.5, 0.0, kPi / 2.0};
  const Eigen::Matrix4d c = stokes_lin_cov(p.gaussian());
  EXPECT_NEAR(c(2, 2) / av2, 1.0 / 0.3 + ah2 / av2 * 2.0, 1e-9);  // Var X_H-
  EXPECT_NEAR(c(2, 2) / (av2 * (1.0 / 0.3)), 1.0, 1e-3);
  EXPECT_NEAR(c(3, 3) / (av2 * 0.3), 1.0, 1e-3);                  // Var X_H+
  EXPECT_NEAR(c(1, 1), ah2 * 0.3 + av2 * 0.5, 1e-8);
}

TEST(StokesLinCov, IndependentOfVPhaseQuadratureInBrightLimit) {
  const double theta = kPi / 2.0;
  auto beam = [&](double v_phase_noise) {
    GaussianState s = squeeze(vacuum_state(2), 0, 0.4, 0.0);
    s = add_classical_noise(s, 1, kPi / 2.0, v_phase_noise);
    s = displace(s, 0, 2.0, 0.0);
    s = displace(s, 1, 200.0, 0.0);
    return make_beam(s, theta);
  };
  const Eigen::Matrix4d a = stokes_lin_cov(beam(0.0));
  const Eigen::Matrix4d b = stokes_lin_cov(beam(50.0));
  for (int i : {0, 1}) EXPECT_NEAR(a(i, i), b(i, i), 1e-9);
}

TEST(StokesLinCov, GlobalPhaseInvariance) {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 100; ++t) {
    const PolarizedBeam b = random_beam(rng);
    std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
    const double phi = u(rng);
    GaussianState s = phase_shift(phase_shift(b.state(), 0, phi), 1, phi);
    const PolarizedBeam r = make_beam(s, b.theta());
    const auto m0 = stokes_means(b);
    const auto m1 = stokes_means(r);
    const double scale = std::max(1.0, m0[0]);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(m0[i] / scale, m1[i] / scale, 1e-10);
    EXPECT_LT((stokes_lin_cov(b) - stokes_lin_cov(r)).cwiseAbs().maxCoeff() / (scale * scale), 1e-10);
  }
}

TEST(StokesExact, CoherentPoissonian) {
  const PolarizedBeam b = coherent_beam(1.0, 2.0, 0.7);
  EXPECT_NEAR(stokes_exact_var(b, 1), 5.0, 1e-12);
  EXPECT_NEAR(stokes_exact_var(b, 0), 5.0, 1e-12);
}

TEST(StokesExact, VacuumHasNoFluctuations) {
  const PolarizedBeam b = make_beam(vacuum_state(2), 0.4);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(stokes_exact_var(b, i), 0.0, 1e-14);
}

TEST(StokesExact, MatchesFockOracle) {
  const std::vector<ProductBeam> cases{
      {1.0, 0.7, 0.5, 0.3, 1.5, 1.1, 0.9},
      {0.5, 1.2, 2.0, 0.0, 0.6, 0.5, kPi / 2.0},
      {0.0, 1.0, 0.7, 0.2, 1.0, 0.0, 0.0},
  };
  for (const auto& c : cases) {
    const PolarizedBeam b = c.gaussian();
    const fock::TwoMode f = c.oracle(30);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(stokes_means(b, StokesOrder::exact)[i], f.mean(i, c.theta), 1e-8) << "S" << i;
      for (int j = 0; j < 4; ++j)
        EXPECT_NEAR(stokes_exact_cov(b, i, j), f.cov(i, j, c.theta), 1e-7) << "S" << i << " S" << j;
    }
  }
}

TEST(StokesExact, BrightBeamCloseToLinearized) {
  const PolarizedBeam b = ProductBeam{100.0, 100.0, 0.5, 0.4, 2.0, 1.0, 0.6}.gaussian();
  const Eigen::Matrix4d c = stokes_lin_cov(b);
  for (int i = 0; i < 4; ++i) EXPECT_LT(std::abs(stokes_exact_var(b, i) - c(i, i)) / c(i, i), 0.01);
}

TEST(StokesLinearization, BrightRandomBeamsWithinOnePercent) {
  // alpha^2 >= 1e4 keeps the quadratic terms below 1% for variances in [0.1, 10]
  std::mt19937_64 rng(33);
  const CheckResult r = check_linearization(rng, 300, 1e4);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(CorrelationFunctions, ThetaHalfPiUncorrelatedInputs) {
  const auto c = correlation_functions(ProductBeam{1.0, 3.0, 0.3, 0.0, 0.8, 0.0, kPi / 2.0}.gaussian());
  EXPECT_NEAR(c[StokesPair(1, 2).index()], 0.0, 1e-18);
  EXPECT_NEAR(c[StokesPair(2, 3).index()], 0.0, 1e-18);
}

TEST(CorrelationFunctions, EqualAmplitudeVariancesCancelS1S3) {
  GaussianState s = squeeze(vacuum_state(2), 0, 0.4, 0.0);
  s = squeeze(s, 1, 0.4, 0.0);
  s = displace(s, 0, 2.0, 0.0);
  s = displace(s, 1, 6.0, 0.0);
  EXPECT_NEAR(correlation_functions(make_beam(s, 1.0))[StokesPair(1, 3).index()], 0.0, 1e-20);
}

TEST(CorrelationFunctions, ClassicalNoiseOnHAmplitude) {
  GaussianState s = add_classical_noise(vacuum_state(2), 0, 0.0, 100.0);
  s = displace(s, 0, 2.0, 0.0);
  s = displace(s, 1, 2.0 * std::sqrt(30.0), 0.0);
  const auto c = correlation_functions(make_beam(s, kPi / 2.0));
  EXPECT_NEAR(c[StokesPair(1, 3).index()], 4.0 * 1.0 * 30.0 * 100.0 * 100.0, 1e-6);
}

TEST(Commutators, IdentityOnRandomBeams) {
  std::mt19937_64 rng(41);
  const CheckResult r = check_stokes_commutators(rng, 1000);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Commutators, MagnitudesTrackThirdStokesMean) {
  const PolarizedBeam b = coherent_beam(1.0, 2.0, kPi / 2.0);
  const auto c = stokes_commutators(b);
  EXPECT_NEAR(c[StokesPair(1, 2).index()], 8.0, 1e-13);
  EXPECT_NEAR(c[StokesPair(1, 3).index()], 0.0, 1e-13);
  EXPECT_NEAR(c[StokesPair(2, 3).index()], 6.0, 1e-13);
  EXPECT_NEAR(std::abs(linearized_commutator(b, 2, 3)), 6.0, 1e-12);
}

TEST(Uncertainty, RandomBeamsSatisfyRelations) {
  std::mt19937_64 rng(43);
  const CheckResult r = check_stokes_uncertainty(rng, 1000);
  EXPECT_TRUE(r.pass) << r.detail;
}

TEST(PoincareRadius, Vacuum) { EXPECT_NEAR(poincare_radius(make_beam(vacuum_state(2), 0.0)), 0.0, 1e-14); }

TEST(PoincareRadius, CoherentMatchesClosedForm) {
  for (double n : {1.0, 10.0, 100.0}) {
    const PolarizedBeam b = coherent_beam(std::sqrt(0.3 * n), std::sqrt(0.7 * n), 0.4);
    EXPECT_NEAR(poincare_radius(b), std::sqrt(n * n + 3.0 * n), 1e-9);
  }
}

TEST(PoincareRadius, FockOracleAtOnePhoton) {
  const ProductBeam p{std::sqrt(0.5), std::sqrt(0.5), 1.0, 0.0, 1.0, 0.0, 0.2};
  EXPECT_NEAR(p.oracle(40).poincare_radius(p.theta), 2.0, 1e-9);
  EXPECT_NEAR(poincare_radius(p.gaussian()), 2.0, 1e-12);
}

TEST(PoincareRadius, ClassicalLimit) {
  const PolarizedBeam b = coherent_beam(1000.0, 1000.0, 0.0);
  EXPECT_NEAR(poincare_radius(b) / 2e6, 1.0, 1e-5);
}

TEST(NoiseBall, CoherentIsIsotropic) {
  const NoiseBall b = noise_ball(coherent_beam(1.0, 2.0, 0.3));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(b.std_devs(k), std::sqrt(5.0), 1e-12);
  EXPECT_NEAR(b.shot_radius, std::sqrt(5.0), 1e-14);
  EXPECT_FALSE(b.degenerate);
}

TEST(NoiseBall, ZeroMeanIsDegenerate) { EXPECT_TRUE(noise_ball(make_beam(vacuum_state(2), 0.0)).degenerate); }

TEST(NoiseBall, AxesAreOrthonormal) {
  std::mt19937_64 rng(7);
  const NoiseBall b = noise_ball(random_beam(rng));
  EXPECT_TRUE((b.axes.transpose() * b.axes).isIdentity(1e-12));
  EXPECT_LE(b.std_devs(0), b.std_devs(1));
  EXPECT_LE(b.std_devs(1), b.std_devs(2));
}

TEST(StokesPair, LabelsAndThirdIndex) {
  EXPECT_EQ(StokesPair(1, 2).third(), 3);
  EXPECT_EQ(StokesPair(1, 3).third(), 2);
  EXPECT_EQ(StokesPair(2, 3).third(), 1);
  EXPECT_EQ(StokesPair(2, 3).label(), "s2_s3");
}
