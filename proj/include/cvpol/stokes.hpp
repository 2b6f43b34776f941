#pragma once

// Stokes-operator statistics of a polarized beam built from two modes of a
// Gaussian state.
//
// Each Stokes operator is a Weyl-symmetric quadratic form in the beam's local
// quadrature vector x = (X_H+, X_H-, X_V+, X_V-):
//
//   S_i = x^T Q_i x + c_i
//
// with theta entering the S2/S3 forms exactly as in the mode-operator
// definition S2 = a_H^dag a_V e^{i theta} + h.c. and
// S3 = i a_V^dag a_H e^{-i theta} - i a_H^dag a_V e^{i theta}. First-order
// fluctuations are dS_i = 2 mu^T Q_i dx; exact second moments follow from
// Isserlis' theorem with <dx_a dx_b> = G_ab = V_ab + i Omega_ab.

#include "cvpol/gaussian_state.hpp"

#include <array>
#include <complex>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

namespace cvpol {

inline constexpr double kBeamConventionTolerance = 1e-9;
inline constexpr double kDegenerateFlux = 1e-12;

/// Unordered pair of distinct Stokes indices from {1, 2, 3}, stored with i < j.
struct StokesPair {
  int i = 1;
  int j = 2;

  constexpr StokesPair() = default;
  constexpr StokesPair(int a, int b) : i(a < b ? a : b), j(a < b ? b : a) {
    if (i < 1 || j > 3 || i == j) throw std::invalid_argument("Stokes pair must be two of {1,2,3}");
  }
  /// The Stokes operator whose mean sets the commutator [S_i, S_j] = 2i S_k.
  constexpr int third() const { return 6 - i - j; }
  /// Position in the fixed ordering (1,2), (1,3), (2,3).
  constexpr std::size_t index() const { return static_cast<std::size_t>(i + j - 3); }
  std::string label() const { return "s" + std::to_string(i) + "_s" + std::to_string(j); }
  friend constexpr bool operator==(StokesPair, StokesPair) = default;
};

inline constexpr std::array<StokesPair, 3> kStokesPairs{StokesPair{1, 2}, StokesPair{1, 3},
                                                        StokesPair{2, 3}};

enum class StokesOrder { bright_limit, exact };

/// One horizontal and one vertical mode of a shared Gaussian state, plus the
/// H-V phase theta used inside the S2/S3 definitions.
class PolarizedBeam {
 public:
  PolarizedBeam(std::shared_ptr<const GaussianState> state, std::size_t h_mode, std::size_t v_mode,
                double theta)
      : state_(std::move(state)), h_mode_(h_mode), v_mode_(v_mode), theta_(theta) {
    if (!state_) throw std::invalid_argument("PolarizedBeam needs a state");
    state_->check_mode(h_mode_);
    state_->check_mode(v_mode_);
    if (h_mode_ == v_mode_) throw std::invalid_argument("H and V modes must differ");
  }

  const GaussianState& state() const { return *state_; }
  const std::shared_ptr<const GaussianState>& state_ptr() const { return state_; }
  std::size_t h_mode() const { return h_mode_; }
  std::size_t v_mode() const { return v_mode_; }
  double theta() const { return theta_; }

  /// Full-state indices of (X_H+, X_H-, X_V+, X_V-).
  std::array<std::size_t, 4> indices() const {
    return {plus_index(h_mode_), minus_index(h_mode_), plus_index(v_mode_), minus_index(v_mode_)};
  }

  Eigen::Vector4d local_mean() const {
    Eigen::Vector4d m;
    const auto idx = indices();
    for (int a = 0; a < 4; ++a) m(a) = state_->mean()(static_cast<Eigen::Index>(idx[a]));
    return m;
  }

  Eigen::Matrix4d local_cov() const {
    Eigen::Matrix4d c;
    const auto idx = indices();
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        c(a, b) = state_->cov()(static_cast<Eigen::Index>(idx[a]), static_cast<Eigen::Index>(idx[b]));
    return c;
  }

  /// |alpha_H|, |alpha_V|.
  double alpha_h() const { return std::abs(state_->amplitude(h_mode_)); }
  double alpha_v() const { return std::abs(state_->amplitude(v_mode_)); }

 private:
  std::shared_ptr<const GaussianState> state_;
  std::size_t h_mode_;
  std::size_t v_mode_;
  double theta_;
};

/// How far the mean amplitudes are from sharing one phase. Zero when
/// alpha_H and alpha_V are real and non-negative up to a common global phase.
inline double beam_convention_residual(const PolarizedBeam& beam) {
  const auto ah = beam.state().amplitude(beam.h_mode());
  const auto av = beam.state().amplitude(beam.v_mode());
  const auto prod = av * std::conj(ah);
  return std::abs(prod) - prod.real();
}

inline void check_beam_convention(const PolarizedBeam& beam) {
  const double scale = std::max(1.0, beam.alpha_h() * beam.alpha_v());
  if (beam_convention_residual(beam) > kBeamConventionTolerance * scale)
    throw std::invalid_argument(
        "beam convention violated: H and V mean amplitudes must share a phase (theta carries the "
        "relative phase)");
}

struct QuadraticForm {
  Eigen::Matrix4d q;
  double constant = 0.0;
};

/// Local quadratic form of S_index (0..3) on (X_H+, X_H-, X_V+, X_V-).
inline QuadraticForm stokes_form(int index, double theta) {
  QuadraticForm f{Eigen::Matrix4d::Zero(), 0.0};
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  auto set = [&](int a, int b, double v) {
    f.q(a, b) = v;
    f.q(b, a) = v;
  };
  switch (index) {
    case 0:
      f.q.diagonal() << 0.25, 0.25, 0.25, 0.25;
      f.constant = -1.0;
      break;
    case 1:
      f.q.diagonal() << 0.25, 0.25, -0.25, -0.25;
      break;
    case 2:
      // (1/2)[c (h+ v+ + h- v-) - s (h+ v- - h- v+)]
      set(0, 2, 0.25 * c);
      set(1, 3, 0.25 * c);
      set(0, 3, -0.25 * s);
      set(1, 2, 0.25 * s);
      break;
    case 3:
      // (1/2)[s (h+ v+ + h- v-) + c (h+ v- - h- v+)]
      set(0, 2, 0.25 * s);
      set(1, 3, 0.25 * s);
      set(0, 3, 0.25 * c);
      set(1, 2, -0.25 * c);
      break;
    default:
      throw std::invalid_argument("Stokes index must be 0..3");
  }
  return f;
}

/// Rows dS_i / dx over the full phase space of the beam's state.
inline Matrix stokes_jacobian(const PolarizedBeam& beam) {
  Matrix j = Matrix::Zero(4, static_cast<Eigen::Index>(beam.state().dimension()));
  const auto idx = beam.indices();
  const Eigen::Vector4d mu = beam.local_mean();
  for (int i = 0; i < 4; ++i) {
    const Eigen::Vector4d grad = 2.0 * stokes_form(i, beam.theta()).q * mu;
    for (int a = 0; a < 4; ++a) j(i, static_cast<Eigen::Index>(idx[a])) = grad(a);
  }
  return j;
}

inline std::array<double, 4> stokes_means(const PolarizedBeam& beam,
                                          StokesOrder order = StokesOrder::bright_limit) {
  check_beam_convention(beam);
  const Eigen::Vector4d mu = beam.local_mean();
  const Eigen::Matrix4d v = beam.local_cov();
  std::array<double, 4> out{};
  for (int i = 0; i < 4; ++i) {
    const QuadraticForm f = stokes_form(i, beam.theta());
    out[i] = mu.dot(f.q * mu);
    if (order == StokesOrder::exact) out[i] += (f.q * v).trace() + f.constant;
  }
  return out;
}

/// Covariance of the linearized fluctuations dS_0..dS_3.
inline Eigen::Matrix4d stokes_lin_cov(const PolarizedBeam& beam) {
  const Matrix j = stokes_jacobian(beam);
  Eigen::Matrix4d c = j * beam.state().cov() * j.transpose();
  return 0.5 * (c + c.transpose());
}

/// Linearized covariance <dS_i^x dS_j^y> between two beams of one state.
inline Eigen::Matrix4d stokes_cross_cov(const PolarizedBeam& x, const PolarizedBeam& y) {
  if (x.state_ptr() != y.state_ptr())
    throw std::invalid_argument("beams must be views of the same Gaussian state");
  return stokes_jacobian(x) * x.state().cov() * stokes_jacobian(y).transpose();
}

/// c_ij with [dS_i, dS_j] = i c_ij at first order.
inline double linearized_commutator(const PolarizedBeam& beam, int i, int j) {
  const Matrix jac = stokes_jacobian(beam);
  const Matrix omega = symplectic_form(beam.state().n_modes());
  return 2.0 * jac.row(i).dot(omega * jac.row(j).transpose());
}

/// Exact symmetrised covariance of S_i and S_j on the Gaussian state, with no
/// bright-beam assumption.
inline double stokes_exact_cov(const PolarizedBeam& beam, int i, int j) {
  const Eigen::Vector4d mu = beam.local_mean();
  const Eigen::Matrix4d v = beam.local_cov();
  Eigen::Matrix4d omega = Eigen::Matrix4d::Zero();
  omega(0, 1) = 1.0;
  omega(1, 0) = -1.0;
  omega(2, 3) = 1.0;
  omega(3, 2) = -1.0;
  const Eigen::Matrix4cd g = v.cast<std::complex<double>>() +
                             std::complex<double>(0.0, 1.0) * omega.cast<std::complex<double>>();
  const Eigen::Matrix4cd g_bar = g.conjugate();
  const QuadraticForm fi = stokes_form(i, beam.theta());
  const QuadraticForm fj = stokes_form(j, beam.theta());
  const Eigen::Vector4d li = 2.0 * fi.q * mu;
  const Eigen::Vector4d lj = 2.0 * fj.q * mu;
  const std::complex<double> quartic =
      (fi.q.cast<std::complex<double>>() * g * fj.q.cast<std::complex<double>>() * g_bar).trace();
  return li.dot(v * lj) + 2.0 * quartic.real();
}

inline double stokes_exact_var(const PolarizedBeam& beam, int i) {
  if (i < 0 || i > 3) throw std::invalid_argument("Stokes index must be 0..3");
  return stokes_exact_cov(beam, i, i);
}

/// |<dS_i dS_j + dS_j dS_i>|^2 for the pairs (1,2), (1,3), (2,3).
inline std::array<double, 3> correlation_functions(const PolarizedBeam& beam) {
  const Eigen::Matrix4d c = stokes_lin_cov(beam);
  std::array<double, 3> out{};
  for (const StokesPair p : kStokesPairs) {
    const double sym = 2.0 * c(p.i, p.j);
    out[p.index()] = sym * sym;
  }
  return out;
}

/// |[dS_i, dS_j]| = 2 |<S_k>| for the pairs (1,2), (1,3), (2,3).
inline std::array<double, 3> stokes_commutators(const PolarizedBeam& beam) {
  const auto m = stokes_means(beam, StokesOrder::bright_limit);
  std::array<double, 3> out{};
  for (const StokesPair p : kStokesPairs) out[p.index()] = 2.0 * std::abs(m[p.third()]);
  return out;
}

/// <S0^2 + 2 S0>^{1/2}, evaluated exactly.
inline double poincare_radius(const PolarizedBeam& beam) {
  const double s0 = stokes_means(beam, StokesOrder::exact)[0];
  const double second = stokes_exact_var(beam, 0) + s0 * s0;
  return std::sqrt(std::max(0.0, second + 2.0 * s0));
}

struct StokesStats {
  std::array<double, 4> means{};
  Eigen::Matrix4d lin_cov = Eigen::Matrix4d::Zero();
  std::array<double, 3> commutators{};
  std::array<double, 3> corr_funcs{};
  double poincare_radius = 0.0;
  /// Set when the mean flux vanishes and the linearization carries no
  /// information (criteria built on it are unverifiable).
  bool degenerate = false;
};

inline StokesStats stokes_stats(const PolarizedBeam& beam) {
  StokesStats s;
  s.means = stokes_means(beam, StokesOrder::bright_limit);
  s.lin_cov = stokes_lin_cov(beam);
  s.commutators = stokes_commutators(beam);
  s.corr_funcs = correlation_functions(beam);
  s.poincare_radius = poincare_radius(beam);
  s.degenerate = s.means[0] <= kDegenerateFlux;
  return s;
}

// ---------------------------------------------------------------------------
// Poincare-sphere noise balls.

struct NoiseBall {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  /// Columns are the principal axes, ordered by increasing spread.
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();
  Eigen::Vector3d std_devs = Eigen::Vector3d::Zero();
  /// sqrt(<S0>): the coherent-state spread, drawn as the classical limit.
  double shot_radius = 0.0;
  /// Stokes index measured on the partner beam, if this ball is conditional.
  std::optional<int> conditioned_on;
  bool degenerate = false;
};

namespace detail {

inline NoiseBall finish_ball(const Eigen::Vector4d& means, const Eigen::Matrix3d& cov, double s0) {
  NoiseBall b;
  b.mean = means.tail<3>();
  b.cov = 0.5 * (cov + cov.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(b.cov);
  b.axes = solver.eigenvectors();
  for (int k = 0; k < 3; ++k) b.std_devs(k) = std::sqrt(std::max(0.0, solver.eigenvalues()(k)));
  b.shot_radius = std::sqrt(std::max(0.0, s0));
  b.degenerate = s0 <= kDegenerateFlux;
  return b;
}

}  // namespace detail

inline NoiseBall noise_ball(const PolarizedBeam& beam) {
  const auto m = stokes_means(beam);
  const Eigen::Matrix4d c = stokes_lin_cov(beam);
  return detail::finish_ball(Eigen::Vector4d(m[0], m[1], m[2], m[3]), c.block<3, 3>(1, 1), m[0]);
}

/// Noise ball of `beam` after S_k has been measured on `partner` and the
/// optimal linear estimate subtracted.
inline NoiseBall conditional_noise_ball(const PolarizedBeam& beam, const PolarizedBeam& partner,
                                        int k) {
  if (k < 1 || k > 3) throw std::invalid_argument("conditioning Stokes index must be 1..3");
  const auto m = stokes_means(beam);
  const Eigen::Matrix4d cxx = stokes_lin_cov(beam);
  const Eigen::Matrix4d cyy = stokes_lin_cov(partner);
  const Eigen::Matrix4d cxy = stokes_cross_cov(beam, partner);
  Eigen::Matrix3d cov = cxx.block<3, 3>(1, 1);
  const double var_y = cyy(k, k);
  if (var_y > 0.0) {
    const Eigen::Vector3d c = cxy.block<3, 1>(1, k);
    cov -= c * c.transpose() / var_y;
  }
  NoiseBall b = detail::finish_ball(Eigen::Vector4d(m[0], m[1], m[2], m[3]), cov, m[0]);
  b.conditioned_on = k;
  return b;
}

}  // namespace cvpol
