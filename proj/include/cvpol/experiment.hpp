#pragma once

// Optical circuits for quadrature and polarization entanglement, detection
// losses, the interchangeability audit and frequency sweeps.
//
// Mode layout used by every builder:
//   0: H mode of beam x    1: H mode of beam y
//   2: V mode of beam x    3: V mode of beam y
// Configured amplitudes are the detected mean fields: fluctuations are built
// and degraded first, and the means are set last.

#include "cvpol/criteria.hpp"
#include "cvpol/gaussian_state.hpp"
#include "cvpol/stokes.hpp"

#include <array>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvpol {

inline constexpr std::size_t kHx = 0;
inline constexpr std::size_t kHy = 1;
inline constexpr std::size_t kVx = 2;
inline constexpr std::size_t kVy = 3;
/// Below this alpha_V^2 the dropped second-order terms stop being small.
inline constexpr double kBrightLimitFlux = 100.0;

struct QuadratureVariances {
  double squeezed = 1.0;
  double antisqueezed = 1.0;
};

/// Amplitude squeezer with a Lorentzian cavity response and an optional
/// low-frequency classical noise term A / (f / f0)^2 on both quadratures.
struct SqueezerModel {
  double squeezed_variance = 1.0;
  double antisqueezed_variance = 1.0;
  /// 0 disables the frequency dependence.
  double corner_frequency_hz = 0.0;
  double relaxation_noise = 0.0;
  double relaxation_reference_hz = 1.0e6;

  static SqueezerModel pure(double v) { return {v, 1.0 / v, 0.0, 0.0, 1.0e6}; }

  void validate() const {
    if (!(squeezed_variance > 0.0) || squeezed_variance > 1.0 + 1e-12)
      throw std::invalid_argument("squeezer: squeezed variance must lie in (0, 1]");
    if (antisqueezed_variance < 1.0 - 1e-12)
      throw std::invalid_argument("squeezer: anti-squeezed variance must be >= 1");
    if (squeezed_variance * antisqueezed_variance < 1.0 - 1e-9)
      throw std::invalid_argument("squeezer: squeezed * anti-squeezed variance must be >= 1");
    if (corner_frequency_hz < 0.0 || relaxation_noise < 0.0 || !(relaxation_reference_hz > 0.0))
      throw std::invalid_argument("squeezer: frequency model parameters must be non-negative");
  }

  /// Quadrature variances at sideband frequency f; f <= 0 gives the
  /// reference values without classical noise.
  QuadratureVariances at(double frequency_hz) const {
    QuadratureVariances v{squeezed_variance, antisqueezed_variance};
    if (frequency_hz <= 0.0) return v;
    if (corner_frequency_hz > 0.0) {
      const double x = frequency_hz / corner_frequency_hz;
      const double lorentz = 1.0 / (1.0 + x * x);
      v.squeezed = 1.0 - (1.0 - squeezed_variance) * lorentz;
      v.antisqueezed = 1.0 + (antisqueezed_variance - 1.0) * lorentz;
    }
    if (relaxation_noise > 0.0) {
      const double x = frequency_hz / relaxation_reference_hz;
      const double noise = relaxation_noise / (x * x);
      v.squeezed += noise;
      v.antisqueezed += noise;
    }
    return v;
  }
};

struct Efficiencies {
  /// Interference visibility of the two squeezed beams on the entangling splitter.
  double entangler_mode_matching = 1.0;
  /// Overlap of the entangled H mode with the bright V beam.
  double polarization_overlap = 1.0;
  double propagation = 1.0;
  double detection_mode_matching = 1.0;
  double detector = 1.0;

  void validate() const {
    for (double e : {entangler_mode_matching, polarization_overlap, propagation,
                     detection_mode_matching, detector})
      if (!(e >= 0.0 && e <= 1.0)) throw std::invalid_argument("efficiencies must lie in [0,1]");
  }
};

enum class Topology { polarization_pair, three_stokes };

inline const char* to_string(Topology t) {
  return t == Topology::three_stokes ? "three_stokes" : "polarization_pair";
}

struct ExperimentConfig {
  Topology topology = Topology::polarization_pair;
  /// Two squeezers for polarization_pair (H inputs), four for three_stokes
  /// (H pair, then V pair).
  std::vector<SqueezerModel> squeezers{SqueezerModel::pure(1.0), SqueezerModel::pure(1.0)};
  double mixing_transmittance = 0.5;
  double mixing_phase = kPi / 2.0;
  double alpha_h_sq = 100.0;
  double alpha_v_sq = 3000.0;
  /// Stokes-vector scale for three_stokes: every |<S_i>| equals alpha_sq.
  double alpha_sq = 100.0;
  double theta_x = kPi / 2.0;
  double theta_y = kPi / 2.0;
  Efficiencies efficiencies;
  std::vector<double> frequencies_hz;

  std::size_t required_squeezers() const { return topology == Topology::three_stokes ? 4 : 2; }

  void validate() const {
    if (squeezers.size() != required_squeezers())
      throw std::invalid_argument(std::string("config: ") + to_string(topology) + " needs " +
                                  std::to_string(required_squeezers()) + " squeezers");
    for (const auto& s : squeezers) s.validate();
    efficiencies.validate();
    if (!(mixing_transmittance >= 0.0 && mixing_transmittance <= 1.0))
      throw std::invalid_argument("config: mixing transmittance outside [0,1]");
    if (alpha_h_sq < 0.0 || alpha_v_sq < 0.0 || alpha_sq < 0.0)
      throw std::invalid_argument("config: mean-field intensities must be non-negative");
    for (std::size_t k = 1; k < frequencies_hz.size(); ++k)
      if (!(frequencies_hz[k] > frequencies_hz[k - 1]))
        throw std::invalid_argument("config: frequency grid must be strictly increasing");
  }

  /// Copy with every squeezer replaced by its variances at frequency f.
  ExperimentConfig at_frequency(double frequency_hz) const {
    ExperimentConfig c = *this;
    for (auto& s : c.squeezers) {
      const QuadratureVariances v = s.at(frequency_hz);
      s = SqueezerModel{v.squeezed, v.antisqueezed, 0.0, 0.0, s.relaxation_reference_hz};
    }
    return c;
  }

  /// Polarization-pair geometry: alpha_V^2 = 30 alpha_H^2, theta = pi/2, with
  /// the measured interference, overlap and detection efficiencies.
  static ExperimentConfig measured_setup() {
    ExperimentConfig c;
    SqueezerModel sq{0.38, 4.0, 2.0e7, 0.5, 2.0e6};
    c.squeezers = {sq, sq};
    c.efficiencies.entangler_mode_matching = 0.978;
    c.efficiencies.polarization_overlap = 0.91;
    c.efficiencies.detector = 0.93;
    c.frequencies_hz = uniform_grid(2.0e6, 10.0e6, 21);
    return c;
  }

  /// Lossless polarization pair from two pure squeezers of variance v.
  static ExperimentConfig ideal_pair(double v, double ratio = 30.0, double alpha_h_sq = 100.0) {
    ExperimentConfig c;
    c.squeezers = {SqueezerModel::pure(v), SqueezerModel::pure(v)};
    c.alpha_h_sq = alpha_h_sq;
    c.alpha_v_sq = ratio * alpha_h_sq;
    return c;
  }

  /// Lossless three-Stokes configuration from four pure squeezers.
  static ExperimentConfig ideal_three_stokes(double v, double alpha_sq = 100.0) {
    ExperimentConfig c;
    c.topology = Topology::three_stokes;
    c.squeezers.assign(4, SqueezerModel::pure(v));
    c.alpha_sq = alpha_sq;
    c.theta_x = kPi / 4.0;
    c.theta_y = -kPi / 4.0;
    return c;
  }

  static std::vector<double> uniform_grid(double start, double stop, std::size_t points) {
    std::vector<double> g;
    if (points == 1) return {start};
    for (std::size_t k = 0; k < points; ++k)
      g.push_back(start + (stop - start) * static_cast<double>(k) / static_cast<double>(points - 1));
    return g;
  }
};

/// H and V intensities that put all three Stokes means at alpha_sq.
inline std::pair<double, double> three_stokes_intensities(double alpha_sq) {
  const double r3 = std::sqrt(3.0);
  return {(r3 + 1.0) / 2.0 * alpha_sq, (r3 - 1.0) / 2.0 * alpha_sq};
}

struct PolarizationSetup {
  std::shared_ptr<const GaussianState> state;
  PolarizedBeam beam_x;
  PolarizedBeam beam_y;
};

namespace detail {

/// Prepares an amplitude-squeezed mode: pure squeezing to the squeezed
/// variance, plus classical phase noise for any excess anti-squeezing.
inline GaussianState prepare_squeezer(GaussianState s, std::size_t mode, const SqueezerModel& m) {
  s = squeeze(s, mode, m.squeezed_variance, 0.0);
  const double excess = m.antisqueezed_variance - 1.0 / m.squeezed_variance;
  if (excess > 0.0) s = add_classical_noise(s, mode, kPi / 2.0, excess);
  return s;
}

inline GaussianState entangle_pair(GaussianState s, std::size_t a, std::size_t b,
                                   const SqueezerModel& sa, const SqueezerModel& sb,
                                   const ExperimentConfig& cfg) {
  s = prepare_squeezer(std::move(s), a, sa);
  s = prepare_squeezer(std::move(s), b, sb);
  s = loss(s, a, cfg.efficiencies.entangler_mode_matching);
  s = loss(s, b, cfg.efficiencies.entangler_mode_matching);
  return beam_splitter(s, a, b, cfg.mixing_transmittance, cfg.mixing_phase);
}

}  // namespace detail

/// Loss along each detected path: propagation, then detection mode matching,
/// then detector quantum efficiency.
inline GaussianState apply_detection_chain(const GaussianState& state, const Efficiencies& eff,
                                           const std::vector<std::size_t>& modes) {
  eff.validate();
  GaussianState s = state;
  for (std::size_t m : modes) {
    s = loss(s, m, eff.propagation);
    s = loss(s, m, eff.detection_mode_matching);
    s = loss(s, m, eff.detector);
  }
  return s;
}

inline GaussianState apply_detection_chain(const GaussianState& state, const ExperimentConfig& cfg) {
  std::vector<std::size_t> modes(state.n_modes());
  for (std::size_t m = 0; m < modes.size(); ++m) modes[m] = m;
  return apply_detection_chain(state, cfg.efficiencies, modes);
}

/// Two squeezed beams interfered on the mixing splitter: modes 0 and 1.
inline GaussianState build_quad_entangler(const ExperimentConfig& cfg) {
  if (cfg.squeezers.size() < 2) throw std::invalid_argument("entangler needs two squeezers");
  cfg.efficiencies.validate();
  for (std::size_t k = 0; k < 2; ++k) cfg.squeezers[k].validate();
  return detail::entangle_pair(vacuum_state(2), 0, 1, cfg.squeezers[0], cfg.squeezers[1], cfg);
}

/// Each entangled H beam combined on a PBS with a bright coherent V beam.
inline PolarizationSetup build_polarization_pair(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.topology != Topology::polarization_pair)
    throw std::invalid_argument("build_polarization_pair needs a polarization_pair config");
  GaussianState s = detail::entangle_pair(vacuum_state(4), kHx, kHy, cfg.squeezers[0],
                                          cfg.squeezers[1], cfg);
  s = loss(s, kHx, cfg.efficiencies.polarization_overlap);
  s = loss(s, kHy, cfg.efficiencies.polarization_overlap);
  s = apply_detection_chain(s, cfg);
  const double ah = std::sqrt(cfg.alpha_h_sq);
  const double av = std::sqrt(cfg.alpha_v_sq);
  s = displace(s, kHx, 2.0 * ah, 0.0);
  s = displace(s, kHy, 2.0 * ah, 0.0);
  s = displace(s, kVx, 2.0 * av, 0.0);
  s = displace(s, kVy, 2.0 * av, 0.0);
  auto shared = std::make_shared<const GaussianState>(std::move(s));
  return {shared, PolarizedBeam(shared, kHx, kVx, cfg.theta_x),
          PolarizedBeam(shared, kHy, kVy, cfg.theta_y)};
}

/// Two entangled pairs feeding the H and V inputs of both beams, with
/// intensities chosen so that |<S1>| = |<S2>| = |<S3>| = alpha_sq.
inline PolarizationSetup build_three_stokes(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.topology != Topology::three_stokes)
    throw std::invalid_argument("build_three_stokes needs a three_stokes config");
  GaussianState s = vacuum_state(4);
  s = detail::entangle_pair(std::move(s), kHx, kHy, cfg.squeezers[0], cfg.squeezers[1], cfg);
  s = detail::entangle_pair(std::move(s), kVx, kVy, cfg.squeezers[2], cfg.squeezers[3], cfg);
  for (std::size_t m : {kHx, kHy, kVx, kVy}) s = loss(s, m, cfg.efficiencies.polarization_overlap);
  s = apply_detection_chain(s, cfg);
  const auto [h_sq, v_sq] = three_stokes_intensities(cfg.alpha_sq);
  const double ah = std::sqrt(h_sq);
  const double av = std::sqrt(v_sq);
  s = displace(s, kHx, 2.0 * ah, 0.0);
  s = displace(s, kHy, 2.0 * ah, 0.0);
  s = displace(s, kVx, 2.0 * av, 0.0);
  s = displace(s, kVy, 2.0 * av, 0.0);
  auto shared = std::make_shared<const GaussianState>(std::move(s));
  return {shared, PolarizedBeam(shared, kHx, kVx, cfg.theta_x),
          PolarizedBeam(shared, kHy, kVy, cfg.theta_y)};
}

inline PolarizationSetup build_setup(const ExperimentConfig& cfg) {
  return cfg.topology == Topology::three_stokes ? build_three_stokes(cfg)
                                                : build_polarization_pair(cfg);
}

// ---------------------------------------------------------------------------
// Assumption audit.

struct AuditReport {
  /// ||alpha_{H,x}| - |alpha_{H,y}|| and the V analogue.
  double amplitude_h = 0.0;
  double amplitude_v = 0.0;
  /// Largest mismatch of Var(X+-) between the beams' H (V) inputs.
  double variance_h = 0.0;
  double variance_v = 0.0;
  /// Distance of theta_x -+ theta_y from the nearest multiple of pi.
  double theta_relation = 0.0;
  /// Largest |cov| between any H and any V quadrature.
  double hv_cross_correlation = 0.0;
  /// Largest |cov(X+, X-)| within one input mode.
  double internal_correlation = 0.0;
  /// Relative mismatch of the single-beam correlation functions.
  double corr_function_mismatch = 0.0;
  std::vector<StokesPair> degenerate_pairs;
  bool bright_limit_warning = false;

  double max_residual() const {
    return std::max({amplitude_h, amplitude_v, variance_h, variance_v, theta_relation,
                     hv_cross_correlation, internal_correlation, corr_function_mismatch});
  }
  bool is_degenerate(StokesPair p) const {
    for (auto q : degenerate_pairs)
      if (q == p) return true;
    return false;
  }
};

namespace detail {
inline double distance_to_pi_multiple(double a) { return std::abs(a - kPi * std::round(a / kPi)); }
}  // namespace detail

inline AuditReport assumption_audit(const PolarizedBeam& x, const PolarizedBeam& y) {
  detail::check_same_state(x, y);
  const GaussianState& s = x.state();
  AuditReport r;
  r.amplitude_h = std::abs(x.alpha_h() - y.alpha_h());
  r.amplitude_v = std::abs(x.alpha_v() - y.alpha_v());

  auto var = [&](std::size_t idx) { return s.cov()(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(idx)); };
  auto cov = [&](std::size_t a, std::size_t b) {
    return s.cov()(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
  };
  for (std::size_t q = 0; q < 2; ++q) {
    r.variance_h = std::max(r.variance_h, std::abs(var(2 * x.h_mode() + q) - var(2 * y.h_mode() + q)));
    r.variance_v = std::max(r.variance_v, std::abs(var(2 * x.v_mode() + q) - var(2 * y.v_mode() + q)));
  }
  r.theta_relation = std::min(detail::distance_to_pi_multiple(x.theta() - y.theta()),
                              detail::distance_to_pi_multiple(x.theta() + y.theta()));

  for (std::size_t h : {x.h_mode(), y.h_mode()})
    for (std::size_t v : {x.v_mode(), y.v_mode()})
      for (std::size_t qh = 0; qh < 2; ++qh)
        for (std::size_t qv = 0; qv < 2; ++qv)
          r.hv_cross_correlation = std::max(r.hv_cross_correlation, std::abs(cov(2 * h + qh, 2 * v + qv)));
  for (std::size_t m : {x.h_mode(), y.h_mode(), x.v_mode(), y.v_mode()})
    r.internal_correlation = std::max(r.internal_correlation, std::abs(cov(2 * m, 2 * m + 1)));

  const auto cx = correlation_functions(x);
  const auto cy = correlation_functions(y);
  const double s0 = 0.5 * (stokes_means(x)[0] + stokes_means(y)[0]);
  const double floor = std::pow(kStokesDegeneracyFraction * s0, 2);
  for (std::size_t k = 0; k < 3; ++k) {
    const double big = std::max(cx[k], cy[k]);
    if (big > floor) r.corr_function_mismatch = std::max(r.corr_function_mismatch, std::abs(cx[k] - cy[k]) / big);
  }

  for (const StokesPair p : kStokesPairs) {
    const StokesCommutator c = stokes_commutator(x, y, p);
    if (!(c.magnitude > c.floor)) r.degenerate_pairs.push_back(p);
  }
  r.bright_limit_warning = std::min(x.alpha_v(), y.alpha_v()) * std::min(x.alpha_v(), y.alpha_v()) <
                           kBrightLimitFlux;
  return r;
}

// ---------------------------------------------------------------------------
// Frequency sweeps.

/// Criteria and normalized Stokes statistics at one sideband frequency.
struct StokesPointResult {
  std::array<CriterionResult, 3> inseparability{};
  std::array<CriterionResult, 3> epr{};
  /// D_{x+-y} S_i over the two-beam shot noise 2<S0>.
  std::array<double, 4> sumdiff_norm{};
  /// V_{x|y} S_i over the single-beam shot noise <S0>.
  std::array<double, 4> conditional_norm{};
};

struct CriteriaSpectrum {
  std::vector<double> frequency_hz;
  std::vector<StokesPointResult> points;
};

/// Evaluates every criterion on a built setup.
inline StokesPointResult evaluate_setup(const PolarizationSetup& setup) {
  StokesPointResult p;
  const double s0 = 0.5 * (stokes_means(setup.beam_x)[0] + stokes_means(setup.beam_y)[0]);
  for (int i = 0; i < 4; ++i) {
    const BeamPairStats st = stokes_pair_stats(setup.beam_x, setup.beam_y, i);
    const double sd = sum_diff_variance(st).value;
    const double cv = conditional_variance(st).value;
    p.sumdiff_norm[i] = s0 > kDegenerateFlux ? sd / (2.0 * s0) : std::nan("");
    p.conditional_norm[i] = s0 > kDegenerateFlux ? cv / s0 : std::nan("");
  }
  for (const StokesPair pair : kStokesPairs) {
    p.inseparability[pair.index()] =
        stokes_criterion(setup.beam_x, setup.beam_y, pair, CriterionKind::inseparability);
    p.epr[pair.index()] = stokes_criterion(setup.beam_x, setup.beam_y, pair, CriterionKind::epr);
  }
  return p;
}

/// Runs the full pipeline independently at every grid frequency.
inline CriteriaSpectrum sweep_spectrum(const ExperimentConfig& cfg) {
  cfg.validate();
  CriteriaSpectrum out;
  out.frequency_hz = cfg.frequencies_hz;
  out.points.reserve(cfg.frequencies_hz.size());
  for (double f : cfg.frequencies_hz) out.points.push_back(evaluate_setup(build_setup(cfg.at_frequency(f))));
  return out;
}

}  // namespace cvpol
