#pragma once

// Entanglement criteria built on the standard uncertainty relation:
// inseparability (sum and product forms), EPR paradox with optimal gain, and
// the correlation-function variant, for any observable pair and for Stokes
// operators in particular. Every criterion is normalized so that a value
// below 1 demonstrates entanglement.

#include "cvpol/stokes.hpp"

#include <cmath>
#include <limits>
#include <utility>
#include <stdexcept>
#include <string>

namespace cvpol {

/// Commutator denominators below this fraction of <S0> are treated as zero.
inline constexpr double kStokesDegeneracyFraction = 1e-6;
/// Floor for explicitly supplied commutator magnitudes.
inline constexpr double kDefaultCommutatorFloor = 1e-12;

/// Second moments of one observable on subsystems x and y.
struct BeamPairStats {
  double var_x = 0.0;
  double var_y = 0.0;
  double cov_xy = 0.0;

  void validate() const {
    if (!(var_x >= 0.0) || !(var_y >= 0.0))
      throw std::invalid_argument("BeamPairStats: variances must be non-negative");
    if (std::abs(cov_xy) > std::sqrt(var_x * var_y) + 1e-9 * std::max(1.0, var_x + var_y))
      throw std::invalid_argument("BeamPairStats: |cov| exceeds sqrt(var_x var_y)");
  }
};

enum class Sign { plus, minus };
enum class CriterionStatus { entangled, not_demonstrated, unverifiable };
enum class CriterionForm { sum, product, epr, corr };
enum class CriterionKind { inseparability, epr };

inline const char* to_string(CriterionStatus s) {
  switch (s) {
    case CriterionStatus::entangled: return "entangled";
    case CriterionStatus::not_demonstrated: return "not_demonstrated";
    case CriterionStatus::unverifiable: return "unverifiable";
  }
  return "?";
}

inline const char* to_string(CriterionForm f) {
  switch (f) {
    case CriterionForm::sum: return "sum";
    case CriterionForm::product: return "product";
    case CriterionForm::epr: return "epr";
    case CriterionForm::corr: return "corr";
  }
  return "?";
}

struct CriterionDetails {
  Sign sign_a = Sign::minus;
  Sign sign_b = Sign::minus;
  double gain_a = 0.0;
  double gain_b = 0.0;
  double denominator = 0.0;
};

struct CriterionResult {
  /// NaN when unverifiable.
  double value = std::numeric_limits<double>::quiet_NaN();
  double threshold = 1.0;
  CriterionStatus status = CriterionStatus::unverifiable;
  CriterionForm form = CriterionForm::sum;
  CriterionDetails details;
  /// False for the correlation-function variant: its denominator is state
  /// dependent and classical correlated noise can push it below 1.
  bool valid_witness = true;

  bool entangled() const { return status == CriterionStatus::entangled; }
};

struct SumDiffVariance {
  double value = 0.0;
  Sign sign = Sign::minus;
};

/// min <(dO_x +- dO_y)^2>. A tie (cov = 0) reports the difference.
inline SumDiffVariance sum_diff_variance(const BeamPairStats& s) {
  s.validate();
  const double base = s.var_x + s.var_y;
  if (s.cov_xy < 0.0) return {base + 2.0 * s.cov_xy, Sign::plus};
  return {base - 2.0 * s.cov_xy, Sign::minus};
}

/// <(dO_x + g dO_y)^2>.
inline double gain_variance(const BeamPairStats& s, double g) {
  return s.var_x + g * g * s.var_y + 2.0 * g * s.cov_xy;
}

struct ConditionalVariance {
  double value = 0.0;
  double gain = 0.0;
  /// var_y vanished; value falls back to var_x with zero gain.
  bool degenerate = false;
};

/// Variance of O_x after optimal linear inference from O_y.
inline ConditionalVariance conditional_variance(const BeamPairStats& s) {
  s.validate();
  if (!(s.var_y > 0.0)) return {s.var_x, 0.0, true};
  const double v = s.var_x - s.cov_xy * s.cov_xy / s.var_y;
  return {std::max(0.0, v), -s.cov_xy / s.var_y, false};
}

namespace detail {

inline CriterionResult finish(double value, double denominator, double floor, CriterionForm form,
                              CriterionDetails details) {
  CriterionResult r;
  r.form = form;
  details.denominator = denominator;
  r.details = details;
  if (!(denominator > floor) || !std::isfinite(value)) {
    r.status = CriterionStatus::unverifiable;
    r.value = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  r.value = value;
  r.status = value < 1.0 ? CriterionStatus::entangled : CriterionStatus::not_demonstrated;
  return r;
}

}  // namespace detail

/// Inseparability from already-minimized sum/difference variances.
inline CriterionResult inseparability_from_variances(double d_a, double d_b, double commutator_mag,
                                                     CriterionForm form = CriterionForm::sum,
                                                     double floor = kDefaultCommutatorFloor,
                                                     CriterionDetails details = {}) {
  if (commutator_mag < 0.0) throw std::invalid_argument("commutator magnitude must be >= 0");
  if (form == CriterionForm::sum)
    return detail::finish((d_a + d_b) / (2.0 * commutator_mag), commutator_mag, floor, form, details);
  if (form == CriterionForm::product)
    return detail::finish(d_a * d_b / (commutator_mag * commutator_mag), commutator_mag, floor, form,
                          details);
  throw std::invalid_argument("inseparability form must be sum or product");
}

/// Degree of inseparability. Sum form: (D_A + D_B) / (2|[A,B]|); product
/// form: D_A D_B / |[A,B]|^2, with D the minimum sum/difference variance.
inline CriterionResult inseparability(const BeamPairStats& a, const BeamPairStats& b,
                                      double commutator_mag, CriterionForm form = CriterionForm::sum,
                                      double floor = kDefaultCommutatorFloor) {
  const SumDiffVariance da = sum_diff_variance(a);
  const SumDiffVariance db = sum_diff_variance(b);
  CriterionDetails d;
  d.sign_a = da.sign;
  d.sign_b = db.sign;
  d.gain_a = da.sign == Sign::plus ? 1.0 : -1.0;
  d.gain_b = db.sign == Sign::plus ? 1.0 : -1.0;
  return inseparability_from_variances(da.value, db.value, commutator_mag, form, floor, d);
}

/// EPR degree from already-minimized conditional variances.
inline CriterionResult epr_from_conditional(double c_a, double c_b, double commutator_mag,
                                            double floor = kDefaultCommutatorFloor,
                                            CriterionDetails details = {}) {
  if (commutator_mag < 0.0) throw std::invalid_argument("commutator magnitude must be >= 0");
  const double value = 4.0 * c_a * c_b / (commutator_mag * commutator_mag);
  return detail::finish(value, commutator_mag, floor, CriterionForm::epr, details);
}

/// Degree of EPR paradox 4 V_{x|y}(A) V_{x|y}(B) / |[A,B]|^2.
inline CriterionResult epr_degree(const BeamPairStats& a, const BeamPairStats& b,
                                  double commutator_mag, double floor = kDefaultCommutatorFloor) {
  const ConditionalVariance ca = conditional_variance(a);
  const ConditionalVariance cb = conditional_variance(b);
  CriterionDetails d;
  d.gain_a = ca.gain;
  d.gain_b = cb.gain;
  return epr_from_conditional(ca.value, cb.value, commutator_mag, floor, d);
}

/// Second moments of two (possibly rotated) quadratures.
inline BeamPairStats quadrature_pair_stats(const GaussianState& state, const QuadratureRef& x,
                                           const QuadratureRef& y) {
  const QuadratureMoments m = quadrature_moments(state, x, y);
  return {m.var_a, m.var_b, m.cov_ab};
}

/// I(X+, X-) and E(X+, X-) between modes x and y; the quadrature commutator is 2.
inline std::pair<CriterionResult, CriterionResult> quadrature_criteria(const GaussianState& state,
                                                                       std::size_t x, std::size_t y) {
  const BeamPairStats plus = quadrature_pair_stats(state, QuadratureRef::plus(x), QuadratureRef::plus(y));
  const BeamPairStats minus =
      quadrature_pair_stats(state, QuadratureRef::minus(x), QuadratureRef::minus(y));
  return {inseparability(plus, minus, 2.0), epr_degree(plus, minus, 2.0)};
}

// ---------------------------------------------------------------------------
// Stokes-operator criteria on two beams of one joint state.

/// Second moments of S_i between beams x and y, including the cross-beam
/// covariance of the joint state.
inline BeamPairStats stokes_pair_stats(const PolarizedBeam& x, const PolarizedBeam& y, int i) {
  if (i < 0 || i > 3) throw std::invalid_argument("Stokes index must be 0..3");
  const Eigen::Matrix4d cx = stokes_lin_cov(x);
  const Eigen::Matrix4d cy = stokes_lin_cov(y);
  const Eigen::Matrix4d cxy = stokes_cross_cov(x, y);
  return {std::max(0.0, cx(i, i)), std::max(0.0, cy(i, i)), cxy(i, i)};
}

struct StokesCommutator {
  /// 2 |<S_k>|, averaged over the two beams.
  double magnitude = 0.0;
  /// Degeneracy floor: 2 * 1e-6 * <S0> averaged over the beams.
  double floor = 0.0;
};

inline StokesCommutator stokes_commutator(const PolarizedBeam& x, const PolarizedBeam& y,
                                          StokesPair pair) {
  const auto mx = stokes_means(x);
  const auto my = stokes_means(y);
  const int k = pair.third();
  const double mag = std::abs(mx[k]) + std::abs(my[k]);
  const double s0 = 0.5 * (mx[0] + my[0]);
  return {mag, std::max(2.0 * kStokesDegeneracyFraction * s0, kDefaultCommutatorFloor)};
}

namespace detail {
inline void check_same_state(const PolarizedBeam& x, const PolarizedBeam& y) {
  if (x.state_ptr() != y.state_ptr())
    throw std::invalid_argument("beams must be views of the same Gaussian state");
}
}  // namespace detail

/// Inseparability or EPR degree for Stokes operators S_i, S_j of beams x, y.
/// The commutator is 2|<S_k>|; when it is degenerate (theta = m pi for (1,2),
/// theta = (m + 1/2) pi for (1,3), |alpha_H| = |alpha_V| for (2,3), or a
/// vanishing amplitude) the result is unverifiable.
inline CriterionResult stokes_criterion(const PolarizedBeam& x, const PolarizedBeam& y,
                                        StokesPair pair, CriterionKind kind,
                                        CriterionForm form = CriterionForm::sum) {
  detail::check_same_state(x, y);
  const BeamPairStats a = stokes_pair_stats(x, y, pair.i);
  const BeamPairStats b = stokes_pair_stats(x, y, pair.j);
  const StokesCommutator c = stokes_commutator(x, y, pair);
  if (kind == CriterionKind::epr) return epr_degree(a, b, c.magnitude, c.floor);
  return inseparability(a, b, c.magnitude, form, c.floor);
}

/// Inseparability with the correlation function added to the uncertainty
/// bound: (D_i + D_j) / (2 sqrt(|[S_i,S_j]|^2 + C_ij)). Not an entanglement
/// witness; correlated classical noise on separable beams drives it to 0.
inline CriterionResult inseparability_corr(const PolarizedBeam& x, const PolarizedBeam& y,
                                           StokesPair pair) {
  detail::check_same_state(x, y);
  const BeamPairStats a = stokes_pair_stats(x, y, pair.i);
  const BeamPairStats b = stokes_pair_stats(x, y, pair.j);
  const StokesCommutator c = stokes_commutator(x, y, pair);
  const double corr =
      0.5 * (correlation_functions(x)[pair.index()] + correlation_functions(y)[pair.index()]);
  const double bound = std::sqrt(c.magnitude * c.magnitude + corr);
  const SumDiffVariance da = sum_diff_variance(a);
  const SumDiffVariance db = sum_diff_variance(b);
  CriterionDetails d;
  d.sign_a = da.sign;
  d.sign_b = db.sign;
  CriterionResult r =
      detail::finish((da.value + db.value) / (2.0 * bound), bound, c.floor, CriterionForm::corr, d);
  r.valid_witness = false;
  return r;
}

}  // namespace cvpol
