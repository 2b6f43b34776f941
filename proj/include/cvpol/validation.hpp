#pragma once

// Randomized self-checks of the library invariants, run by `cvpol validate`
// and reused by the test suite.

#include "cvpol/config.hpp"
#include "cvpol/criteria.hpp"
#include "cvpol/experiment.hpp"
#include "cvpol/gaussian_state.hpp"
#include "cvpol/spectrum.hpp"
#include "cvpol/stokes.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace cvpol {

struct CheckResult {
  std::string name;
  bool pass = false;
  /// Worst observed figure of merit for the check.
  double worst = 0.0;
  std::string detail;
};

struct RandomBeamOptions {
  double alpha_sq_min = 1.0;
  double alpha_sq_max = 1.0e4;
  /// Every input quadrature variance lies in [1/max_variance, max_variance].
  double max_variance = 10.0;
  bool lossy = true;
};

inline double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

/// A random physical two-mode beam: independently squeezed H and V inputs at
/// random angles, optional loss, a random splitter between them, then real
/// mean fields and a random theta.
inline PolarizedBeam random_beam(std::mt19937_64& rng, const RandomBeamOptions& o = {}) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  GaussianState s = vacuum_state(2);
  for (std::size_t m = 0; m < 2; ++m) {
    s = squeeze(s, m, log_uniform(rng, 1.0 / o.max_variance, 1.0), 2.0 * kPi * unit(rng));
    if (o.lossy) s = loss(s, m, 0.5 + 0.5 * unit(rng));
  }
  s = beam_splitter(s, 0, 1, unit(rng), 2.0 * kPi * unit(rng));
  s = displace(s, 0, 2.0 * std::sqrt(log_uniform(rng, o.alpha_sq_min, o.alpha_sq_max)), 0.0);
  s = displace(s, 1, 2.0 * std::sqrt(log_uniform(rng, o.alpha_sq_min, o.alpha_sq_max)), 0.0);
  return PolarizedBeam(std::make_shared<const GaussianState>(std::move(s)), 0, 1, 2.0 * kPi * unit(rng));
}

/// A random circuit of up to `depth` operations on `n_modes` modes.
inline GaussianState random_circuit(std::mt19937_64& rng, std::size_t n_modes, int depth) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n_modes - 1);
  std::uniform_int_distribution<int> op(0, 5);
  GaussianState s = vacuum_state(n_modes);
  for (int d = 0; d < depth; ++d) {
    const std::size_t a = pick(rng);
    switch (op(rng)) {
      case 0: s = squeeze(s, a, log_uniform(rng, 0.05, 20.0), 2.0 * kPi * unit(rng)); break;
      case 1: s = phase_shift(s, a, 2.0 * kPi * unit(rng)); break;
      case 2: s = loss(s, a, unit(rng)); break;
      case 3: s = add_classical_noise(s, a, 2.0 * kPi * unit(rng), 5.0 * unit(rng),
                                      unit(rng) < 0.5 ? std::optional<std::string>("shared") : std::nullopt);
        break;
      case 4: s = displace(s, a, 4.0 * unit(rng) - 2.0, 4.0 * unit(rng) - 2.0); break;
      default:
        if (n_modes > 1) {
          std::size_t b = pick(rng);
          if (b == a) b = (a + 1) % n_modes;
          s = beam_splitter(s, a, b, unit(rng), 2.0 * kPi * unit(rng));
        }
    }
  }
  return s;
}

namespace detail {
inline CheckResult make_check(std::string name, double worst, double limit, std::string unit = "") {
  std::ostringstream os;
  os << "worst " << worst << (unit.empty() ? "" : " " + unit) << " (limit " << limit << ")";
  return {std::move(name), worst <= limit, worst, os.str()};
}
}  // namespace detail

inline CheckResult check_symplectic(std::mt19937_64& rng, int trials) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Matrix omega = symplectic_form(3);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (const Matrix& s : {squeeze_matrix(3, 1, log_uniform(rng, 0.01, 100.0), 2.0 * kPi * unit(rng)),
                            phase_shift_matrix(3, 2, 2.0 * kPi * unit(rng)),
                            beam_splitter_matrix(3, 0, 2, unit(rng), 2.0 * kPi * unit(rng))})
      worst = std::max(worst, (s * omega * s.transpose() - omega).cwiseAbs().maxCoeff());
  }
  return detail::make_check("symplectic invariance", worst, 1e-12);
}

inline CheckResult check_physicality(std::mt19937_64& rng, int circuits) {
  std::uniform_int_distribution<int> depth(1, 20);
  std::uniform_int_distribution<std::size_t> modes(1, 4);
  double worst = 0.0;
  int failures = 0;
  for (int c = 0; c < circuits; ++c) {
    const PhysicalityReport r = physicality_check(random_circuit(rng, modes(rng), depth(rng)));
    worst = std::min(worst, r.worst_eigenvalue);
    if (!r.pass) ++failures;
  }
  std::ostringstream os;
  os << failures << " of " << circuits << " failed; lowest eigenvalue " << worst;
  return {"physicality of random circuits", failures == 0, worst, os.str()};
}

inline CheckResult check_loss_composition(std::mt19937_64& rng, int trials) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const GaussianState s = random_circuit(rng, 2, 8);
    const double e1 = unit(rng);
    const double e2 = unit(rng);
    const GaussianState a = loss(loss(s, 0, e1), 0, e2);
    const GaussianState b = loss(s, 0, e1 * e2);
    worst = std::max({worst, (a.cov() - b.cov()).cwiseAbs().maxCoeff(),
                      (a.mean() - b.mean()).cwiseAbs().maxCoeff()});
  }
  return detail::make_check("loss composition", worst, 1e-12);
}

/// Mixing on a 50/50 splitter at phase pi is its own inverse; a general
/// BS(T, phi) is undone by BS(T, pi) after restoring the phase of mode b.
inline CheckResult check_beam_splitter_inverse(std::mt19937_64& rng, int trials) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const GaussianState s = random_circuit(rng, 2, 8);
    const double tr = unit(rng);
    const double phi = 2.0 * kPi * unit(rng);
    const GaussianState fwd = beam_splitter(s, 0, 1, tr, phi);
    const GaussianState back = phase_shift(beam_splitter(fwd, 0, 1, tr, kPi), 1, kPi - phi);
    const GaussianState twice = beam_splitter(beam_splitter(s, 0, 1, 0.5, kPi), 0, 1, 0.5, kPi);
    worst = std::max({worst, (back.cov() - s.cov()).cwiseAbs().maxCoeff(),
                      (back.mean() - s.mean()).cwiseAbs().maxCoeff(),
                      (twice.cov() - s.cov()).cwiseAbs().maxCoeff(),
                      (twice.mean() - s.mean()).cwiseAbs().maxCoeff()});
  }
  return detail::make_check("beam splitter inverse", worst, 1e-10);
}

/// | |[dS_i, dS_j]| - 2|<S_k>| | relative to <S0>.
inline CheckResult check_stokes_commutators(std::mt19937_64& rng, int beams) {
  double worst = 0.0;
  for (int b = 0; b < beams; ++b) {
    const PolarizedBeam beam = random_beam(rng);
    const auto m = stokes_means(beam);
    for (const StokesPair p : kStokesPairs) {
      const double res = std::abs(std::abs(linearized_commutator(beam, p.i, p.j)) - 2.0 * std::abs(m[p.third()]));
      worst = std::max(worst, res / std::max(1.0, m[0]));
    }
  }
  return detail::make_check("Stokes commutator identity", worst, 1e-9, "relative");
}

/// Var S_i Var S_j - <S_k>^2 - C_ij / 4, relative to <S0>^2 (most negative).
inline CheckResult check_stokes_uncertainty(std::mt19937_64& rng, int beams) {
  double worst = 0.0;
  for (int b = 0; b < beams; ++b) {
    const PolarizedBeam beam = random_beam(rng);
    const auto m = stokes_means(beam);
    const Eigen::Matrix4d c = stokes_lin_cov(beam);
    const auto corr = correlation_functions(beam);
    const double scale = std::max(1.0, m[0] * m[0]);
    for (const StokesPair p : kStokesPairs) {
      const double slack = c(p.i, p.i) * c(p.j, p.j) - m[p.third()] * m[p.third()] - corr[p.index()] / 4.0;
      worst = std::min(worst, slack / scale);
    }
  }
  std::ostringstream os;
  os << "lowest relative slack " << worst << " (limit -1e-06)";
  return {"Stokes uncertainty relations", worst >= -1e-6, worst, os.str()};
}

/// Relative gap between linearized and exact Stokes variances for bright
/// beams with input variances in [0.1, 10].
inline CheckResult check_linearization(std::mt19937_64& rng, int beams, double alpha_sq_min = 100.0) {
  RandomBeamOptions o;
  o.alpha_sq_min = alpha_sq_min;
  o.lossy = false;
  double worst = 0.0;
  for (int b = 0; b < beams; ++b) {
    const PolarizedBeam beam = random_beam(rng, o);
    const Eigen::Matrix4d c = stokes_lin_cov(beam);
    for (int i = 0; i < 4; ++i) {
      const double exact = stokes_exact_var(beam, i);
      worst = std::max(worst, std::abs(exact - c(i, i)) / exact);
    }
  }
  return detail::make_check("linearization accuracy", worst, 0.01, "relative");
}

/// sweep_spectrum versus criteria_from_spectra on the same exported series.
inline CheckResult check_path_equivalence(const ExperimentConfig& cfg) {
  const CriteriaSpectrum direct = sweep_spectrum(cfg);
  MeanFieldParams p{cfg.alpha_h_sq, cfg.alpha_v_sq, cfg.theta_x};
  if (cfg.topology == Topology::three_stokes) {
    const auto hv = three_stokes_intensities(cfg.alpha_sq);
    p = {hv.first, hv.second, cfg.theta_x};
  }
  const CriteriaSpectrum ingested = criteria_from_spectra(merge_and_calibrate({to_spectrum(direct)}), p);
  double worst = 0.0;
  auto compare = [&](const CriterionResult& a, const CriterionResult& b) {
    if (a.status != b.status) worst = INFINITY;
    if (std::isfinite(a.value)) worst = std::max(worst, std::abs(a.value - b.value));
  };
  for (std::size_t k = 0; k < direct.points.size(); ++k)
    for (std::size_t q = 0; q < 3; ++q) {
      compare(direct.points[k].inseparability[q], ingested.points[k].inseparability[q]);
      compare(direct.points[k].epr[q], ingested.points[k].epr[q]);
    }
  return detail::make_check("spectra path equivalence", worst, 1e-9);
}

inline CheckResult check_unity_gain(std::mt19937_64& rng, int trials) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const GaussianState s = random_circuit(rng, 2, 10);
    const BeamPairStats st = quadrature_pair_stats(s, QuadratureRef::plus(0), QuadratureRef::plus(1));
    const SumDiffVariance d = sum_diff_variance(st);
    const double g = d.sign == Sign::plus ? 1.0 : -1.0;
    worst = std::max(worst, std::abs(d.value - gain_variance(st, g)));
  }
  return detail::make_check("unity-gain consistency", worst, 1e-12);
}

inline std::vector<CheckResult> run_validation_suite(unsigned seed = 20030101u) {
  std::mt19937_64 rng(seed);
  std::vector<CheckResult> out;
  out.push_back(check_symplectic(rng, 200));
  out.push_back(check_physicality(rng, 1000));
  out.push_back(check_loss_composition(rng, 200));
  out.push_back(check_beam_splitter_inverse(rng, 200));
  out.push_back(check_stokes_commutators(rng, 1000));
  out.push_back(check_stokes_uncertainty(rng, 1000));
  out.push_back(check_unity_gain(rng, 200));
  ExperimentConfig cfg = ExperimentConfig::measured_setup();
  out.push_back(check_path_equivalence(cfg));
  return out;
}

}  // namespace cvpol
