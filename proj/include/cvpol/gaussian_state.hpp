#pragma once

// Multimode Gaussian optical states in shot-noise units.
//
// Quadratures are ordered per mode as (X+, X-), so mode k owns entries 2k and
// 2k+1. With X+ = a + a^dagger and X- = i(a^dagger - a) the vacuum has unit
// variance in every quadrature and [X+, X-] = 2i. The symmetrised covariance
// V and the symplectic form Omega (one [[0,1],[-1,0]] block per mode) satisfy
// <dx_j dx_k> = V_jk + i Omega_jk.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>

namespace cvpol {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSymmetryTolerance = 1e-10;
inline constexpr double kPhysicalityTolerance = 1e-9;

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

constexpr std::size_t plus_index(std::size_t mode) { return 2 * mode; }
constexpr std::size_t minus_index(std::size_t mode) { return 2 * mode + 1; }

/// Wraps an angle into [0, 2pi).
inline double normalize_angle(double angle) {
  double a = std::fmod(angle, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

/// A (possibly rotated) quadrature X^(phi) = a e^{-i phi} + a^dagger e^{i phi}
/// = cos(phi) X+ + sin(phi) X- of one mode.
struct QuadratureRef {
  std::size_t mode = 0;
  double angle = 0.0;

  QuadratureRef() = default;
  QuadratureRef(std::size_t m, double phi) : mode(m), angle(normalize_angle(phi)) {}

  static QuadratureRef plus(std::size_t m) { return {m, 0.0}; }
  static QuadratureRef minus(std::size_t m) { return {m, kPi / 2.0}; }
};

namespace detail {
struct StateAccess;
}

class GaussianState {
 public:
  /// Builds a state from explicit moments. Symmetry is enforced; physicality
  /// is not, so unphysical matrices can still be inspected with
  /// physicality_check.
  static GaussianState from_moments(Vector mean, Matrix cov) {
    if (mean.size() == 0 || mean.size() % 2 != 0)
      throw std::invalid_argument("mean vector length must be a positive even number");
    if (cov.rows() != mean.size() || cov.cols() != mean.size())
      throw std::invalid_argument("covariance shape does not match mean vector");
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance)
      throw std::invalid_argument("covariance matrix is not symmetric");
    Matrix sym = 0.5 * (cov + cov.transpose());
    return GaussianState(std::move(mean), std::move(sym), {});
  }

  std::size_t n_modes() const { return static_cast<std::size_t>(mean_.size() / 2); }
  std::size_t dimension() const { return static_cast<std::size_t>(mean_.size()); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }

  /// Complex amplitude <a> = (<X+> + i<X->)/2 of a mode.
  std::complex<double> amplitude(std::size_t mode) const {
    check_mode(mode);
    return {0.5 * mean_(plus_index(mode)), 0.5 * mean_(minus_index(mode))};
  }

  /// Phase-space footprint of each tagged classical noise source. A tag's
  /// vector g contributes g g^T to the covariance and follows every later
  /// operation, so noise added under the same tag stays perfectly correlated.
  const std::map<std::string, Vector>& noise_sources() const { return tags_; }

  void check_mode(std::size_t mode) const {
    if (mode >= n_modes())
      throw std::invalid_argument("mode index " + std::to_string(mode) + " out of range for " +
                                  std::to_string(n_modes()) + "-mode state");
  }

 private:
  GaussianState(Vector mean, Matrix cov, std::map<std::string, Vector> tags)
      : mean_(std::move(mean)), cov_(std::move(cov)), tags_(std::move(tags)) {}

  Vector mean_;
  Matrix cov_;
  std::map<std::string, Vector> tags_;

  friend struct detail::StateAccess;
};

namespace detail {

struct StateAccess {
  static GaussianState make(Vector mean, Matrix cov, std::map<std::string, Vector> tags) {
    return GaussianState(std::move(mean), std::move(cov), std::move(tags));
  }
};

/// x -> M x + shift on means, M V M^T + added on covariance, M g on tags.
inline GaussianState affine(const GaussianState& state, const Matrix& m, const Matrix& added,
                            const Vector& shift) {
  Vector mean = m * state.mean() + shift;
  Matrix cov = m * state.cov() * m.transpose() + added;
  cov = 0.5 * (cov + cov.transpose());
  std::map<std::string, Vector> tags;
  for (const auto& [name, g] : state.noise_sources()) tags.emplace(name, m * g);
  return StateAccess::make(std::move(mean), std::move(cov), std::move(tags));
}

inline Matrix identity(const GaussianState& s) {
  return Matrix::Identity(s.dimension(), s.dimension());
}
inline Matrix zeros(const GaussianState& s) { return Matrix::Zero(s.dimension(), s.dimension()); }

}  // namespace detail

/// Standard symplectic form for n modes.
inline Matrix symplectic_form(std::size_t n_modes) {
  Matrix omega = Matrix::Zero(2 * n_modes, 2 * n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) {
    omega(plus_index(k), minus_index(k)) = 1.0;
    omega(minus_index(k), plus_index(k)) = -1.0;
  }
  return omega;
}

/// Phase-space row vector selecting the quadrature `q` from the full vector.
inline Vector quadrature_direction(const GaussianState& state, const QuadratureRef& q) {
  state.check_mode(q.mode);
  Vector u = Vector::Zero(state.dimension());
  u(plus_index(q.mode)) = std::cos(q.angle);
  u(minus_index(q.mode)) = std::sin(q.angle);
  return u;
}

// ---------------------------------------------------------------------------
// Symplectic matrices. Each acts on the full 2n-dimensional phase space.

/// Squeezes the quadrature at `angle` by sqrt(v) and its conjugate by 1/sqrt(v).
inline Matrix squeeze_matrix(std::size_t n_modes, std::size_t mode, double squeezed_variance,
                             double angle) {
  if (!(squeezed_variance > 0.0))
    throw std::invalid_argument("squeezed variance must be positive");
  if (mode >= n_modes) throw std::invalid_argument("squeeze: mode index out of range");
  Eigen::Vector2d u(std::cos(angle), std::sin(angle));
  Eigen::Vector2d v(-std::sin(angle), std::cos(angle));
  const double s = std::sqrt(squeezed_variance);
  Eigen::Matrix2d block = s * u * u.transpose() + (1.0 / s) * v * v.transpose();
  Matrix m = Matrix::Identity(2 * n_modes, 2 * n_modes);
  m.block<2, 2>(plus_index(mode), plus_index(mode)) = block;
  return m;
}

/// a -> a e^{i phi}.
inline Matrix phase_shift_matrix(std::size_t n_modes, std::size_t mode, double phi) {
  if (mode >= n_modes) throw std::invalid_argument("phase_shift: mode index out of range");
  Eigen::Matrix2d block;
  block << std::cos(phi), -std::sin(phi), std::sin(phi), std::cos(phi);
  Matrix m = Matrix::Identity(2 * n_modes, 2 * n_modes);
  m.block<2, 2>(plus_index(mode), plus_index(mode)) = block;
  return m;
}

/// Mode b picks up the phase e^{i phi}, then the two modes mix on a lossless
/// splitter with amplitude transmission t = sqrt(T) and reflection r:
///   a_out = t a + r e^{i phi} b,   b_out = -r a + t e^{i phi} b.
/// At T = 1/2 and phi = pi/2 two amplitude-squeezed inputs leave with
/// squeezed X+ difference and X- sum.
inline Matrix beam_splitter_matrix(std::size_t n_modes, std::size_t mode_a, std::size_t mode_b,
                                   double transmittance, double relative_phase) {
  if (mode_a >= n_modes || mode_b >= n_modes)
    throw std::invalid_argument("beam_splitter: mode index out of range");
  if (mode_a == mode_b) throw std::invalid_argument("beam_splitter: modes must be distinct");
  if (!(transmittance >= 0.0 && transmittance <= 1.0))
    throw std::invalid_argument("beam_splitter: transmittance outside [0,1]");
  const double t = std::sqrt(transmittance);
  const double r = std::sqrt(1.0 - transmittance);
  Matrix mix = Matrix::Identity(2 * n_modes, 2 * n_modes);
  for (std::size_t q = 0; q < 2; ++q) {
    const std::size_t ia = 2 * mode_a + q;
    const std::size_t ib = 2 * mode_b + q;
    mix(ia, ia) = t;
    mix(ia, ib) = r;
    mix(ib, ia) = -r;
    mix(ib, ib) = t;
  }
  return mix * phase_shift_matrix(n_modes, mode_b, relative_phase);
}

// ---------------------------------------------------------------------------
// Circuit operations. States are values; each call returns a new state.

inline GaussianState vacuum_state(std::size_t n_modes) {
  if (n_modes == 0) throw std::invalid_argument("vacuum_state needs at least one mode");
  return GaussianState::from_moments(Vector::Zero(2 * n_modes),
                                     Matrix::Identity(2 * n_modes, 2 * n_modes));
}

inline GaussianState displace(const GaussianState& state, std::size_t mode, double amp_plus,
                              double amp_minus) {
  state.check_mode(mode);
  Vector shift = Vector::Zero(state.dimension());
  shift(plus_index(mode)) = amp_plus;
  shift(minus_index(mode)) = amp_minus;
  return detail::affine(state, detail::identity(state), detail::zeros(state), shift);
}

inline GaussianState squeeze(const GaussianState& state, std::size_t mode,
                             double squeezed_variance, double angle) {
  state.check_mode(mode);
  Matrix s = squeeze_matrix(state.n_modes(), mode, squeezed_variance, angle);
  return detail::affine(state, s, detail::zeros(state), Vector::Zero(state.dimension()));
}

inline GaussianState phase_shift(const GaussianState& state, std::size_t mode, double phi) {
  state.check_mode(mode);
  Matrix s = phase_shift_matrix(state.n_modes(), mode, phi);
  return detail::affine(state, s, detail::zeros(state), Vector::Zero(state.dimension()));
}

inline GaussianState beam_splitter(const GaussianState& state, std::size_t mode_a,
                                   std::size_t mode_b, double transmittance,
                                   double relative_phase) {
  state.check_mode(mode_a);
  state.check_mode(mode_b);
  Matrix s = beam_splitter_matrix(state.n_modes(), mode_a, mode_b, transmittance, relative_phase);
  return detail::affine(state, s, detail::zeros(state), Vector::Zero(state.dimension()));
}

/// Pure-loss channel: the mode mixes with vacuum at transmission `efficiency`.
inline GaussianState loss(const GaussianState& state, std::size_t mode, double efficiency) {
  state.check_mode(mode);
  if (!(efficiency >= 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("loss: efficiency outside [0,1]");
  Matrix m = detail::identity(state);
  Matrix added = detail::zeros(state);
  const double s = std::sqrt(efficiency);
  for (std::size_t i : {plus_index(mode), minus_index(mode)}) {
    m(i, i) = s;
    added(i, i) = 1.0 - efficiency;
  }
  return detail::affine(state, m, added, Vector::Zero(state.dimension()));
}

/// Adds classical Gaussian noise of variance `noise_variance` along the
/// quadrature at `angle`. Calls that share a tag draw from one noise source,
/// so their contributions are perfectly correlated.
inline GaussianState add_classical_noise(const GaussianState& state, std::size_t mode, double angle,
                                         double noise_variance,
                                         const std::optional<std::string>& correlation_tag = {}) {
  state.check_mode(mode);
  if (!(noise_variance >= 0.0))
    throw std::invalid_argument("add_classical_noise: variance must be non-negative");
  Vector u = quadrature_direction(state, QuadratureRef(mode, angle)) * std::sqrt(noise_variance);
  auto tags = state.noise_sources();
  Matrix cov = state.cov() + u * u.transpose();
  if (correlation_tag) {
    auto it = tags.find(*correlation_tag);
    if (it == tags.end()) {
      tags.emplace(*correlation_tag, u);
    } else {
      const Vector& g = it->second;
      cov += g * u.transpose() + u * g.transpose();
      it->second = g + u;
    }
  }
  return detail::StateAccess::make(state.mean(), 0.5 * (cov + cov.transpose()), std::move(tags));
}

// ---------------------------------------------------------------------------
// Moments and checks.

struct QuadratureMoments {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double var_a = 0.0;
  double var_b = 0.0;
  double cov_ab = 0.0;
};

inline QuadratureMoments quadrature_moments(const GaussianState& state, const QuadratureRef& a,
                                            const QuadratureRef& b) {
  const Vector ua = quadrature_direction(state, a);
  const Vector ub = quadrature_direction(state, b);
  return {ua.dot(state.mean()), ub.dot(state.mean()), ua.dot(state.cov() * ua),
          ub.dot(state.cov() * ub), ua.dot(state.cov() * ub)};
}

struct PhysicalityReport {
  bool pass = false;
  double worst_eigenvalue = 0.0;
};

/// Smallest eigenvalue of the Hermitian matrix V + i Omega; the state is
/// physical when it is non-negative.
inline PhysicalityReport physicality_check(const GaussianState& state) {
  const Matrix omega = symplectic_form(state.n_modes());
  Eigen::MatrixXcd h = state.cov().cast<std::complex<double>>();
  h += std::complex<double>(0.0, 1.0) * omega.cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
  const double worst = solver.eigenvalues().minCoeff();
  return {worst >= -kPhysicalityTolerance, worst};
}

}  // namespace cvpol
